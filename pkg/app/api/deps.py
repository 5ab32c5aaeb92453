"""Common FastAPI dependencies for the API layer.

Service factories are resolved per request so tests can override them via
app.dependency_overrides.
"""

from app.core.config import settings
from app.services.grover_service import GroverService
from app.services.preparation_service import PreparationService
from app.services.spectrum_service import SpectrumService
from app.services.validation_service import ValidationService


# Service factories

async def get_spectrum_service() -> SpectrumService:
    return SpectrumService(settings.DEFAULT_THREADS)


async def get_preparation_service() -> PreparationService:
    return PreparationService(settings.DEFAULT_THREADS)


async def get_grover_service() -> GroverService:
    return GroverService(settings.DEFAULT_THREADS)


async def get_validation_service() -> ValidationService:
    return ValidationService(settings.DEFAULT_THREADS)
