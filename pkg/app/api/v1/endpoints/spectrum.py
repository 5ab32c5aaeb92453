"""API endpoint for Floquet-level readout spectra."""

from fastapi import APIRouter, Depends, status

from app.api import deps
from app.schemas.experiment import SpectrumData, SpectrumRequest
from app.schemas.response import ErrorResponse, StandardResponse
from app.services.spectrum_service import SpectrumService
from app.utils.common import jsonable

router = APIRouter()


@router.post(
    "/",
    status_code=status.HTTP_200_OK,
    response_model=StandardResponse[SpectrumData],
    summary="Compute a readout spectrum",
    description="Single-crystal or powder readout of the pseudo-pure level |pm>.",
    responses={
        400: {"model": ErrorResponse, "description": "Validation error"},
        422: {"model": ErrorResponse, "description": "Mode truncation did not converge"},
    },
)
async def compute_spectrum(
    payload: SpectrumRequest,
    service: SpectrumService = Depends(deps.get_spectrum_service),
):
    """Return sticks, sum of A_n and the K used for the requested level."""
    run = await service.run(payload.experiment(), payload.p, payload.m, payload.mode, payload.broadening_hz)
    return StandardResponse(status="success", data=SpectrumData.model_validate(jsonable(run.summary())))
