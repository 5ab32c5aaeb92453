"""Test configuration and fixtures for the Floquet MAS simulator.

Provides the HTTP client wired to the FastAPI app, the reference parameter
sets and small mode windows shared by the unit suites.
"""

import math
from typing import AsyncGenerator

import pytest
from httpx import AsyncClient, ASGITransport

from app.main import app
from app.models.floquet import ModeTruncation
from app.models.spin import RotorConfig, SpinParams
from app.schemas.config import preset_config


# ============================================================================
# HTTP FIXTURES
# ============================================================================

@pytest.fixture
async def client() -> AsyncGenerator[AsyncClient, None]:
    """Yield an HTTPX AsyncClient wired to the FastAPI app."""
    transport = ASGITransport(app=app)
    async with AsyncClient(transport=transport, base_url="http://test") as ac:
        yield ac


# ============================================================================
# PARAMETER FIXTURES
# ============================================================================

@pytest.fixture
def fig3_config():
    """20 kHz anisotropy, eta 0.5, (alpha, beta) = (30, 60) degrees, 4 kHz MAS."""
    return preset_config("fig3")


@pytest.fixture
def params(fig3_config) -> SpinParams:
    return fig3_config.spin_params()


@pytest.fixture
def rotor(fig3_config) -> RotorConfig:
    return fig3_config.rotor_config()


@pytest.fixture
def shift_free() -> SpinParams:
    return SpinParams()


@pytest.fixture
def slow_rotor() -> RotorConfig:
    return RotorConfig(spinning_speed=2.0 * math.pi * 1000.0)


@pytest.fixture
def small_window() -> ModeTruncation:
    return ModeTruncation(1)


@pytest.fixture
def tmp_out(tmp_path):
    """Fresh artifact directory per test."""
    return tmp_path / "out"
