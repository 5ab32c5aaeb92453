"""Unit tests for spectral readout and state identification."""

import numpy as np
import pytest

from app.core.exceptions import AmbiguousReadoutError, ValidationError
from app.models.floquet import FloquetIndex, ModeTruncation
from app.models.labeling import PseudoPureSpec
from app.models.readout import DetectionChannel, FidTrace, ReadoutFrame, Spectrum
from app.models.spin import PulsePhase, RfPulse
from app.simulation.floquet import (
    SPIN_PLUS,
    detection_operator,
    diagonalize,
    evolve,
    expectation,
    floquet_propagator,
)
from app.simulation.readout import (
    _contracted_rows,
    analytic_fid,
    analytic_library,
    exact_crystal_fid,
    default_time_grid,
    extract_sticks,
    identify_state,
    level_density,
    rotor_averaged_fid,
    lorentzian_broaden,
    sideband_sticks,
    simulate_fid,
    spectrum_of,
)
from app.simulation.shift import (
    adaptive_truncation,
    cs_floquet_hamiltonian,
    rf_floquet_propagator,
    sideband_intensities,
)
from app.simulation.state_prep import make_pseudo_pure

WORKING = [(0, 0), (1, 0), (0, 1), (1, 1)]


def test_quadrature_channel_combines_x_and_y(params, rotor):
    K = adaptive_truncation(params, rotor)
    t = default_time_grid(rotor, 256)
    fx = analytic_fid(1, 0, params, rotor, K, DetectionChannel.X, t)
    fy = analytic_fid(1, 0, params, rotor, K, DetectionChannel.Y, t)
    fp = analytic_fid(1, 0, params, rotor, K, DetectionChannel.PLUS, t)
    assert np.allclose(fp.samples, fx.samples + 1j * fy.samples, atol=1e-14)


def test_level_outside_window_is_rejected(params, rotor):
    with pytest.raises(ValidationError):
        analytic_fid(1, 3, params, rotor, 2)
    with pytest.raises(ValidationError):
        sideband_sticks(2, 0, params, rotor, 2)


def test_non_uniform_time_grid_is_rejected(params, rotor):
    t = np.array([0.0, 1e-5, 3e-5, 4e-5])
    with pytest.raises(ValidationError):
        analytic_fid(1, 0, params, rotor, 2, t_grid=t)


def test_sticks_sit_on_rotor_harmonics(params, rotor):
    K = adaptive_truncation(params, rotor)
    sticks = sideband_sticks(1, 0, params, rotor, K)
    freqs = [f for f, _ in sticks]
    for expected in (-4000.0, 0.0, 4000.0):
        assert any(abs(f - expected) < 1e-9 for f in freqs)
    assert sum(a for _, a in sticks) == pytest.approx(1.0, abs=1e-8)


def test_phase_dichotomy_between_spin_states(params, rotor):
    K = adaptive_truncation(params, rotor)
    lower = dict(sideband_sticks(0, 0, params, rotor, K))
    upper = dict(sideband_sticks(1, 0, params, rotor, K))
    for f, a in upper.items():
        assert lower[-f] == pytest.approx(-a, abs=1e-12)


def test_shift_free_readout_is_a_single_line(shift_free, rotor):
    spectrum = spectrum_of(analytic_fid(1, 0, shift_free, rotor, 0))
    peak = spectrum.index_of(0.0)
    assert spectrum.amplitudes[peak] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(np.delete(spectrum.amplitudes, peak))) < 1e-12


def test_spectrum_support_is_the_sideband_set(params, rotor):
    K = adaptive_truncation(params, rotor)
    level = FloquetIndex(0, 1)
    spectrum = spectrum_of(analytic_fid(level.p, level.n, params, rotor, K))
    nu_r = rotor.spinning_speed / (2.0 * np.pi)
    support = {spectrum.index_of(level.epsilon * j * nu_r) for j in range(level.n - K, level.n + K + 1)}
    outside = np.delete(np.abs(spectrum.amplitudes), sorted(support))
    assert float(np.max(outside)) <= 1e-10

    sticks = extract_sticks(spectrum, rotor, range(-K - 1, K))
    A = sideband_intensities(params, rotor, K)
    # p = 0 mirrors the ladder: order j sits at -j nu_r with amplitude -A_{j-m}
    assert sticks[-1].real == pytest.approx(-A[K], abs=1e-10)


ALL_LEVELS = [FloquetIndex(p, n) for n in (-1, 0, 1) for p in (0, 1)]


@pytest.mark.parametrize("level", ALL_LEVELS, ids=lambda lv: f"p{lv.p}m{lv.n}")
def test_simulated_readout_matches_analytic(params, rotor, level):
    K = adaptive_truncation(params, rotor)
    t = default_time_grid(rotor, 64)
    analytic = analytic_fid(level.p, level.n, params, rotor, K, t_grid=t)
    simulated = simulate_fid(level_density(level, ModeTruncation(1)), params, rotor, K, t)
    assert np.max(np.abs(analytic.samples - simulated.samples)) <= 1e-6


def test_lab_readout_does_not_see_the_mode_index(params, rotor):
    K = adaptive_truncation(params, rotor)
    t = default_time_grid(rotor, 64)
    window = ModeTruncation(1)
    reference = analytic_fid(1, 0, params, rotor, K, t_grid=t).samples

    for level in ALL_LEVELS:
        lab = simulate_fid(level_density(level, window), params, rotor, K, t, frame=ReadoutFrame.LAB)
        assert np.max(np.abs(lab.samples - level.epsilon * reference)) <= 1e-6


def test_contracted_rows_agree_with_detection_operator(params, rotor):
    window = ModeTruncation(3)
    w = rotor.spinning_speed
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, window))
    sigma = evolve(
        level_density(FloquetIndex(1, 1), window),
        rf_floquet_propagator(RfPulse.hard(np.pi / 2.0, PulsePhase.PLUS_X), rotor, window),
    )
    times = np.array([0.0, 0.3, 1.7]) * rotor.period
    rows = _contracted_rows(eig, times + 1e-6, times)

    for i, ti in enumerate(times):
        explicit = expectation(
            detection_operator(SPIN_PLUS, ti + 1e-6, window, w),
            evolve(sigma, floquet_propagator(eig, ti)),
        )
        contracted = rows[i, 1] @ sigma.matrix @ rows[i, 0].conj()
        assert contracted == pytest.approx(explicit, abs=1e-10)


def test_readout_depends_on_the_crystallite_orientation(params, rotor):
    K = adaptive_truncation(params, rotor)
    t = default_time_grid(rotor, 64)
    sigma = level_density(FloquetIndex(1, 0), ModeTruncation(1))
    a, b, g = params.euler
    tilted = params.with_euler((a, b + 0.4, g))
    base = simulate_fid(sigma, params, rotor, K, t).samples
    moved = simulate_fid(sigma, tilted, rotor, K, t).samples
    assert np.max(np.abs(base - moved)) > 1e-2


def test_rotor_phase_matters_only_before_averaging(params, rotor):
    K = adaptive_truncation(params, rotor)
    t = default_time_grid(rotor, 64)
    sigma = level_density(FloquetIndex(1, 0), ModeTruncation(1))
    shifted = params.with_rotor_phase(0.4)

    single = simulate_fid(sigma, params, rotor, K, t, n_phases=1).samples
    single_shifted = simulate_fid(sigma, shifted, rotor, K, t, n_phases=1).samples
    assert np.max(np.abs(single - single_shifted)) > 1e-2

    averaged = simulate_fid(sigma, params, rotor, K, t).samples
    averaged_shifted = simulate_fid(sigma, shifted, rotor, K, t).samples
    assert np.max(np.abs(averaged - averaged_shifted)) <= 1e-8


def test_pseudo_pure_background_is_not_read(params, rotor):
    K = adaptive_truncation(params, rotor)
    t = default_time_grid(rotor, 64)
    target = FloquetIndex(0, 1)
    pure = simulate_fid(level_density(target, ModeTruncation(1)), params, rotor, K, t).samples
    mixed = simulate_fid(make_pseudo_pure(PseudoPureSpec(target, 0.5), 1), params, rotor, K, t).samples
    assert np.max(np.abs(mixed - 0.5 * pure)) <= 1e-6


def test_zero_rotor_phases_are_rejected(params, rotor):
    with pytest.raises(ValidationError):
        simulate_fid(level_density(FloquetIndex(1, 0), ModeTruncation(1)), params, rotor, 2, n_phases=0)


def test_identify_state_picks_the_matching_level(params, rotor):
    K = adaptive_truncation(params, rotor)
    t = default_time_grid(rotor, 1024)
    library = analytic_library(WORKING, params, rotor, K, t)
    for key, spectrum in library.items():
        result = identify_state(spectrum, library)
        assert result.index == key
        assert result.margin >= 0.1


def test_identical_references_are_ambiguous(params, rotor):
    K = adaptive_truncation(params, rotor)
    t = default_time_grid(rotor, 256)
    ref = spectrum_of(analytic_fid(1, 0, params, rotor, K, t_grid=t))
    with pytest.raises(AmbiguousReadoutError):
        identify_state(ref, {(1, 0): ref, (1, 1): ref})


def test_empty_spectrum_is_ambiguous():
    spectrum = Spectrum(np.arange(8.0), np.zeros(8))
    with pytest.raises(AmbiguousReadoutError):
        identify_state(spectrum, {(1, 0): Spectrum(np.arange(8.0), np.ones(8))})


def test_lorentzian_broadening_preserves_integral(params, rotor):
    K = adaptive_truncation(params, rotor)
    sticks = spectrum_of(analytic_fid(1, 0, params, rotor, K))
    broad = lorentzian_broaden(sticks, 20.0)
    assert broad.broadening == 20.0
    assert np.sum(broad.amplitudes) == pytest.approx(np.sum(sticks.amplitudes), abs=1e-9)
    assert np.max(np.abs(broad.amplitudes)) < np.max(np.abs(sticks.amplitudes))


def test_negative_broadening_is_rejected():
    fid = FidTrace(1e-4, np.ones(8))
    with pytest.raises(ValidationError):
        spectrum_of(fid, -1.0)


def test_fid_length_must_be_power_of_two():
    with pytest.raises(ValueError):
        FidTrace(1e-4, np.ones(6))


def test_exact_crystal_fid_has_unit_modulus(params, rotor):
    fid = exact_crystal_fid(params, rotor, default_time_grid(rotor, 512))
    assert np.allclose(np.abs(fid.samples), 1.0, atol=1e-12)


def test_shift_free_crystal_fid_is_constant(shift_free, rotor):
    fid = exact_crystal_fid(shift_free, rotor, default_time_grid(rotor, 64))
    assert np.allclose(fid.samples, 1.0)


def test_rotor_averaged_fid_gives_sideband_intensities(params, rotor):
    K = adaptive_truncation(params, rotor)
    A = sideband_intensities(params, rotor, K)
    spectrum = spectrum_of(rotor_averaged_fid(params, rotor))
    sticks = extract_sticks(spectrum, rotor, range(-K, K + 1))
    measured = np.array([sticks[n] for n in range(-K, K + 1)])
    assert np.max(np.abs(measured.imag)) < 1e-6
    # order n sits at +n nu_r with height A_n
    assert np.allclose(measured.real, A, atol=1e-6)


def test_extract_sticks_rejects_orders_outside_the_window(params, rotor):
    spectrum = spectrum_of(analytic_fid(1, 0, params, rotor, 2, t_grid=default_time_grid(rotor, 64)))
    with pytest.raises(ValidationError):
        extract_sticks(spectrum, rotor, [40])
