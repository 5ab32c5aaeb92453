"""API endpoint for pseudo-pure state preparation."""

from fastapi import APIRouter, Depends, status

from app.api import deps
from app.schemas.experiment import PreparationData, PrepareRequest
from app.schemas.response import ErrorResponse, StandardResponse
from app.services.preparation_service import PreparationService
from app.utils.common import jsonable

router = APIRouter()


@router.post(
    "/",
    status_code=status.HTTP_200_OK,
    response_model=StandardResponse[PreparationData],
    summary="Prepare a pseudo-pure Floquet state",
    description="PASS schedules with profile weights, or a gradient design, with the achieved fidelity.",
    responses={
        400: {"model": ErrorResponse, "description": "Validation error"},
        422: {"model": ErrorResponse, "description": "Solver failure or singular weighting system"},
    },
)
async def prepare_state(
    payload: PrepareRequest,
    service: PreparationService = Depends(deps.get_preparation_service),
):
    run = await service.run(payload.experiment(), payload.p, payload.m, payload.method)
    return StandardResponse(status="success", data=PreparationData.model_validate(jsonable(run.summary())))
