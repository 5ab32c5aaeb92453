"""Unit tests for powder averaging."""

import numpy as np
import pytest

from app.core.exceptions import ValidationError
from app.models.readout import PowderGrid
from app.schemas.config import preset_config
from app.simulation.powder import (
    powder_fid,
    powder_intensities,
    powder_spectrum,
    powder_truncation,
    uniform_powder_grid,
)
from app.simulation.readout import default_time_grid, extract_sticks, sideband_sticks, spectrum_of


@pytest.fixture
def hmb():
    config = preset_config("hmb")
    return config.spin_params(), config.rotor_config()


def test_grid_size_and_weights():
    grid = uniform_powder_grid(10, 6, 2)
    assert len(grid) == 120
    assert grid.weights.sum() == pytest.approx(1.0)
    cos_beta = np.cos(np.unique(np.round(grid.orientations[:, 1], 12)))
    # equal-area: cos(beta) midpoints are symmetric about zero
    assert cos_beta.sum() == pytest.approx(0.0, abs=1e-12)


def test_empty_grid_is_rejected():
    with pytest.raises(ValidationError):
        uniform_powder_grid(0, 4)


def test_powder_intensities_are_normalized(hmb):
    params, rotor = hmb
    grid = uniform_powder_grid(8, 6)
    K = powder_truncation(params, rotor, grid)
    A = powder_intensities(params, rotor, K, grid, threads=2)
    assert A.sum() == pytest.approx(1.0, abs=1e-7)
    assert np.all(A >= 0.0)


def test_powder_average_does_not_depend_on_thread_count(hmb):
    params, rotor = hmb
    grid = uniform_powder_grid(20, 24)
    A1 = powder_intensities(params, rotor, 6, grid, threads=1)
    A4 = powder_intensities(params, rotor, 6, grid, threads=4)
    assert np.array_equal(A1, A4)


def test_powder_spectrum_is_absorptive(hmb):
    params, rotor = hmb
    result = powder_spectrum(1, 0, params, rotor, grid=uniform_powder_grid(10, 32), check_grid=False)
    assert result.imaginary_residue <= 1e-3
    assert result.grid_change is None
    assert result.orientations == 320


def test_grid_doubling_reports_change(hmb):
    params, rotor = hmb
    result = powder_spectrum(1, 0, params, rotor, grid=uniform_powder_grid(30, 12))
    assert result.grid_change is not None
    assert result.converged == (result.grid_change <= 1e-2)


def test_hmb_shows_two_strong_sidebands(hmb):
    params, rotor = hmb
    K = 4
    A = powder_intensities(params, rotor, K, uniform_powder_grid(50, 24))
    strong = [n for n in range(-K, K + 1) if n != 0 and A[n + K] >= 0.05 * A[K]]
    assert len(strong) >= 2


def test_single_crystallite_is_dispersive(params, rotor):
    # one orientation at one rotor phase: nothing averages the dispersion away
    alpha, beta, gamma = params.euler
    grid = PowderGrid(np.array([[alpha, beta, gamma]]), np.array([1.0]))
    result = powder_spectrum(1, 0, params, rotor, grid=grid, check_grid=False)
    assert result.imaginary_residue > 1e-2


def test_powder_fid_sidebands_follow_averaged_intensities(hmb):
    params, rotor = hmb
    grid = uniform_powder_grid(10, 32)
    K = powder_truncation(params, rotor, grid)
    A = powder_intensities(params, rotor, K, grid)
    t = default_time_grid(rotor, 512)
    fid = powder_fid(params, rotor, grid, t)
    sticks = extract_sticks(spectrum_of(fid), rotor, range(-K, K + 1))
    # exp(-i n w_r t) lands at +n w_r
    measured = np.array([sticks[n].real for n in range(-K, K + 1)])
    assert np.allclose(measured, A, atol=1e-3)


def test_level_readout_moves_the_powder_group(hmb):
    params, rotor = hmb
    grid = uniform_powder_grid(10, 32)
    t = default_time_grid(rotor, 512)
    result = powder_spectrum(0, 1, params, rotor, grid=grid, t_grid=t, check_grid=False)
    sticks = extract_sticks(result.spectrum, rotor, range(-3, 4))
    A = result.intensities
    K = result.K
    # |0 1> reads -A_{j-1} at -j w_r
    assert sticks[-1].real == pytest.approx(-A[K], abs=1e-3)
    assert sticks[-2].real == pytest.approx(-A[K + 1], abs=1e-3)


def test_powder_sticks_are_read_off_the_averaged_spectrum(hmb):
    params, rotor = hmb
    t = default_time_grid(rotor, 512)
    result = powder_spectrum(0, 0, params, rotor, grid=uniform_powder_grid(10, 32), t_grid=t, check_grid=False)
    expected = sideband_sticks(0, 0, params, rotor, result.K, intensities=result.intensities)
    assert [f for f, _ in result.sticks] == pytest.approx([f for f, _ in expected])
    assert np.allclose([a for _, a in result.sticks], [a for _, a in expected], atol=1e-3)
    assert min(a for _, a in result.sticks) < -0.1
