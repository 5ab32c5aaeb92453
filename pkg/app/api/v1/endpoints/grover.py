"""API endpoint for the four-item Grover search."""

from fastapi import APIRouter, Depends, status

from app.api import deps
from app.core.exceptions import SearchFailedError
from app.schemas.experiment import GroverData, GroverOutcomeData, GroverRequest
from app.schemas.response import ErrorResponse, StandardResponse
from app.services.grover_service import GroverService
from app.utils.common import jsonable

router = APIRouter()


@router.post(
    "/",
    status_code=status.HTTP_200_OK,
    response_model=StandardResponse[GroverData],
    summary="Run Grover search",
    description="One marked item ('p,m' or 1-4) or all four, with ideal or pulse-compiled gates.",
    responses={
        400: {"model": ErrorResponse, "description": "Invalid marked item"},
        422: {"model": ErrorResponse, "description": "Readout did not identify the marked item"},
    },
)
async def run_search(
    payload: GroverRequest,
    service: GroverService = Depends(deps.get_grover_service),
):
    """Run the search(es); any unidentified item fails the request."""
    outcomes = await service.run(payload.experiment(), payload.marked, payload.compiled)
    failed = [o for o in outcomes if not o.success]
    if failed:
        raise SearchFailedError(failed[0].error or f"search for {failed[0].marked} failed")
    data = GroverData(outcomes=[GroverOutcomeData.model_validate(jsonable(o.summary())) for o in outcomes])
    return StandardResponse(status="success", data=data)
