"""Integration tests for the HTTP API: spectrum, prepare, grover, validate."""

import pytest

QUICK_CONFIG = {
    "spin": {"anisotropy_hz": 20000.0, "eta": 0.5, "euler_deg": [30.0, 60.0, 0.0]},
    "rotor": {"spinning_hz": 4000.0},
    "points": 256,
}


# ============================================================================
# HEALTH
# ============================================================================

@pytest.mark.asyncio
async def test_healthcheck(client):
    response = await client.get("/healthz")
    assert response.status_code == 200
    assert response.json() == {"status": "up"}


# ============================================================================
# SPECTRUM
# ============================================================================

@pytest.mark.asyncio
async def test_spectrum_crystal_success(client):
    response = await client.post("/spectrum/", json={"config": QUICK_CONFIG, "p": 1, "m": 0})
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "success"
    data = body["data"]
    assert data["level"] == [1, 0]
    assert data["converged"] is True
    assert data["truncation_converged"] is True
    assert data["points"] == 256
    assert any(abs(s["frequency_hz"] - 4000.0) < 1e-6 for s in data["sticks"])


@pytest.mark.asyncio
async def test_spectrum_default_preset(client):
    response = await client.post("/spectrum/", json={"p": 0})
    assert response.status_code == 200
    assert response.json()["data"]["mode"] == "crystal"


@pytest.mark.asyncio
async def test_spectrum_mode_index_outside_window(client):
    config = dict(QUICK_CONFIG, truncation=2)
    response = await client.post("/spectrum/", json={"config": config, "p": 1, "m": 7})
    assert response.status_code == 400
    body = response.json()
    assert body["status"] == "fail"
    assert body["errorCode"] == "VALIDATION_ERROR"


@pytest.mark.asyncio
async def test_spectrum_unknown_preset(client):
    response = await client.post("/spectrum/", json={"preset": "tosS", "p": 1})
    assert response.status_code == 400
    assert response.json()["status"] == "fail"


@pytest.mark.asyncio
async def test_spectrum_unknown_config_key(client):
    config = dict(QUICK_CONFIG, spn={})
    response = await client.post("/spectrum/", json={"config": config, "p": 1})
    assert response.status_code == 400
    assert "spn" in response.json()["message"]


@pytest.mark.asyncio
async def test_spectrum_invalid_spin_index(client):
    response = await client.post("/spectrum/", json={"p": 2})
    assert response.status_code == 400


# ============================================================================
# PREPARE
# ============================================================================

@pytest.mark.asyncio
async def test_prepare_gradient(client):
    response = await client.post("/prepare/", json={"config": QUICK_CONFIG, "p": 0, "m": 0})
    assert response.status_code == 200
    data = response.json()["data"]
    assert data["method"] == "gradient"
    assert data["target"] == [0, 0]
    assert data["fidelity"] >= 0.999
    assert data["gradients"]["first"] == {"strength": "0", "duration_periods": "0"}


@pytest.mark.asyncio
async def test_prepare_unknown_method(client):
    response = await client.post("/prepare/", json={"p": 0, "method": "toss"})
    assert response.status_code == 400


# ============================================================================
# GROVER
# ============================================================================

@pytest.mark.asyncio
async def test_grover_single_item(client):
    response = await client.post("/grover/", json={"config": QUICK_CONFIG, "marked": "1"})
    assert response.status_code == 200
    outcomes = response.json()["data"]["outcomes"]
    assert len(outcomes) == 1
    assert outcomes[0]["marked"] == [0, 0]
    assert outcomes[0]["identified"] == [0, 0]
    assert outcomes[0]["success"] is True


@pytest.mark.asyncio
async def test_grover_invalid_marked_item(client):
    response = await client.post("/grover/", json={"config": QUICK_CONFIG, "marked": "5"})
    assert response.status_code == 400
    assert response.json()["errorCode"] == "VALIDATION_ERROR"


@pytest.mark.asyncio
async def test_grover_non_working_level(client):
    response = await client.post("/grover/", json={"config": QUICK_CONFIG, "marked": "0,-1"})
    assert response.status_code == 400


# ============================================================================
# VALIDATE
# ============================================================================

@pytest.mark.asyncio
async def test_validate_unknown_suite(client):
    response = await client.post("/validate/", json={"suite": "weekly"})
    assert response.status_code == 400
    assert response.json()["status"] == "fail"


@pytest.mark.asyncio
async def test_validate_rejects_negative_seed(client):
    response = await client.post("/validate/", json={"seed": -1})
    assert response.status_code == 400


# ============================================================================
# MIDDLEWARE
# ============================================================================

@pytest.mark.asyncio
async def test_request_id_is_echoed(client):
    response = await client.get("/healthz", headers={"X-Request-ID": "run-42"})
    assert response.headers["X-Request-ID"] == "run-42"
    generated = await client.get("/healthz")
    assert len(generated.headers["X-Request-ID"]) == 36
