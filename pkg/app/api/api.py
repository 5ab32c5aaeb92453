"""Top-level API router configuration for the Floquet MAS simulator.

Aggregates endpoint routers under a common APIRouter. Each sub-router is
mounted with a path prefix and tag for OpenAPI grouping.
"""

from fastapi import APIRouter
from app.api.v1.endpoints import grover, prepare, spectrum, validate

api_router = APIRouter()
api_router.include_router(spectrum.router, prefix="/spectrum", tags=["spectrum"])
api_router.include_router(prepare.router, prefix="/prepare", tags=["prepare"])
api_router.include_router(grover.router, prefix="/grover", tags=["grover"])
api_router.include_router(validate.router, prefix="/validate", tags=["validate"])
