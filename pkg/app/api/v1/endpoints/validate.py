"""API endpoint for the validation suite."""

from fastapi import APIRouter, Depends, status

from app.api import deps
from app.schemas.experiment import ValidateRequest, ValidationData
from app.schemas.response import ErrorResponse, StandardResponse
from app.services.validation_service import ValidationService

router = APIRouter()


@router.post(
    "/",
    status_code=status.HTTP_200_OK,
    response_model=StandardResponse[ValidationData],
    summary="Run the validation suite",
    description="Pass/fail per invariant with measured residuals. Failures are reported, not raised.",
    responses={400: {"model": ErrorResponse, "description": "Unknown suite"}},
)
async def run_validation(
    payload: ValidateRequest,
    service: ValidationService = Depends(deps.get_validation_service),
):
    report = await service.run(payload.experiment(), payload.suite, payload.seed)
    message = None if report.passed else "One or more checks failed"
    return StandardResponse(status="success", message=message, data=ValidationData.model_validate(report.as_dict()))
