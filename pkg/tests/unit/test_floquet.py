"""Unit tests for the truncated Floquet space: assembly, diagonalization,
propagators and formalized observables."""

import math

import numpy as np
import pytest
from scipy import linalg

from app.core.exceptions import DimensionMismatchError, ValidationError
from app.models.floquet import FloquetDensity, FloquetIndex, FloquetOperator, ModeTruncation
from app.simulation.floquet import (
    SPIN_HALF_X,
    SPIN_HALF_Z,
    SPIN_PLUS,
    assemble_floquet_hamiltonian,
    contract_propagator,
    detection_operator,
    diagonalize,
    embed_operator,
    evolve,
    floquet_propagator,
    formalize_observable,
    lab_propagator,
    reconstruct_density,
    stepped_propagator_oracle,
)
from app.simulation.shift import (
    cs_floquet_hamiltonian,
    cs_hamiltonian,
    exact_cs_propagator,
    propagator_truncation,
)


def _random_density(truncation: ModeTruncation, seed: int = 7) -> FloquetDensity:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(truncation.dim, truncation.dim)) + 1j * rng.normal(size=(truncation.dim, truncation.dim))
    h = a @ a.conj().T
    return FloquetDensity(h / np.trace(h), truncation)


# ============================================================================
# BASIS
# ============================================================================

def test_flatten_is_mode_major_spin_minor():
    trunc = ModeTruncation(2)
    assert FloquetIndex(0, -2).flatten(trunc) == 0
    assert FloquetIndex(1, -2).flatten(trunc) == 1
    assert FloquetIndex(0, 0).flatten(trunc) == 4
    assert FloquetIndex.unflatten(9, trunc) == FloquetIndex(1, 2)


def test_invalid_indices_are_rejected():
    with pytest.raises(ValueError):
        ModeTruncation(-1)
    with pytest.raises(ValueError):
        FloquetIndex(2, 0)
    with pytest.raises(ValueError):
        FloquetIndex(0, 3).flatten(ModeTruncation(2))


# ============================================================================
# HAMILTONIAN AND EIGENSYSTEM
# ============================================================================

def test_assembly_places_ladder_on_diagonal():
    w = 2.0 * math.pi * 1000.0
    H = assemble_floquet_hamiltonian({0: np.zeros((2, 2))}, w, ModeTruncation(1))
    assert np.allclose(np.diag(H.matrix).real, [-w, -w, 0.0, 0.0, w, w])
    assert H.is_hermitian()


def test_unpaired_fourier_blocks_are_rejected():
    block = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    with pytest.raises(ValidationError):
        assemble_floquet_hamiltonian({0: block, 1: block}, 1.0, ModeTruncation(2))


def test_non_2x2_block_is_rejected():
    with pytest.raises(ValidationError):
        assemble_floquet_hamiltonian({0: np.eye(3)}, 1.0, ModeTruncation(1))


def test_quasienergies_are_traceless(params, rotor):
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, ModeTruncation(8)))
    assert eig.is_traceless()
    w = rotor.spinning_speed
    assert np.all(eig.reduced > -w / 2 - 1e-9)
    assert np.all(eig.reduced <= w / 2 + 1e-9)


def test_folded_eigenvalues_survive_a_mode_relabeling(params, rotor):
    # n -> n + 1 adds w_r to every diagonal block
    H = cs_floquet_hamiltonian(params, rotor, ModeTruncation(8))
    w = rotor.spinning_speed
    shifted = FloquetOperator(H.matrix + w * np.eye(H.dim), H.truncation, w)
    a = diagonalize(H).reduced
    b = diagonalize(shifted).reduced
    for value in a:
        gap = np.abs((value - b + 0.5 * w) % w - 0.5 * w)
        assert float(np.min(gap)) <= 1e-9


def test_non_hermitian_operator_cannot_be_diagonalized():
    trunc = ModeTruncation(1)
    m = np.zeros((trunc.dim, trunc.dim), dtype=complex)
    m[0, 1] = 1.0
    with pytest.raises(ValidationError):
        diagonalize(FloquetOperator(m, trunc, 1.0))


# ============================================================================
# PROPAGATORS
# ============================================================================

def test_lab_propagator_matches_closed_form(params, rotor):
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, propagator_truncation(params, rotor)))
    for frac in (0.0, 0.37, 1.0, 1.61):
        t = frac * rotor.period
        assert np.max(np.abs(lab_propagator(eig, t) - exact_cs_propagator(params, rotor, t))) < 1e-6


def test_lab_propagator_matches_stepped_oracle(params, rotor):
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, propagator_truncation(params, rotor)))
    t = 2.0 * rotor.period
    oracle = stepped_propagator_oracle(lambda s: cs_hamiltonian(params, rotor, s), t, 2 ** 14)
    assert np.max(np.abs(lab_propagator(eig, t) - oracle)) <= 1e-6


def test_larger_windows_change_the_propagator_less(params, rotor):
    t = 0.37 * rotor.period
    U = {K: lab_propagator(diagonalize(cs_floquet_hamiltonian(params, rotor, ModeTruncation(K))), t)
         for K in (6, 10, 14)}
    first = float(np.max(np.abs(U[10] - U[6])))
    second = float(np.max(np.abs(U[14] - U[10])))
    assert second < first


def test_contracted_floquet_propagator_equals_lab_propagator(params, rotor):
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, ModeTruncation(12)))
    t = 0.3 * rotor.period
    assert np.allclose(contract_propagator(floquet_propagator(eig, t), t), lab_propagator(eig, t), atol=1e-10)


def test_stepped_oracle_is_exact_for_constant_hamiltonian():
    H = 3.0 * SPIN_HALF_X + 1.5 * SPIN_HALF_Z
    U = stepped_propagator_oracle(lambda _: H, 0.8, 16)
    assert np.allclose(U, linalg.expm(-1j * H * 0.8), atol=1e-12)


def test_stepped_oracle_needs_a_step():
    with pytest.raises(ValidationError):
        stepped_propagator_oracle(lambda _: SPIN_HALF_Z, 1.0, 0)


def test_negative_time_is_rejected(params, rotor):
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, ModeTruncation(4)))
    with pytest.raises(ValidationError):
        floquet_propagator(eig, -1e-6)


def test_floquet_propagator_is_unitary(params, rotor):
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, ModeTruncation(6)))
    assert floquet_propagator(eig, 0.42 * rotor.period).is_unitary()


# ============================================================================
# OBSERVABLES AND DENSITIES
# ============================================================================

def test_formalize_drops_components_outside_window():
    trunc = ModeTruncation(1)
    kept = formalize_observable({0: SPIN_HALF_Z}, trunc)
    with_far = formalize_observable({0: SPIN_HALF_Z, 3: SPIN_HALF_X}, trunc)
    assert np.array_equal(kept.matrix, with_far.matrix)


def test_formalized_observable_is_block_toeplitz():
    trunc = ModeTruncation(2)
    A = formalize_observable({1: SPIN_PLUS}, trunc)
    assert np.array_equal(A.block(1, 0), SPIN_PLUS)
    assert np.array_equal(A.block(2, 1), SPIN_PLUS)
    assert not np.any(A.block(0, 1))


def test_detection_operator_reproduces_lab_expectation():
    trunc = ModeTruncation(2)
    w = 2.0 * math.pi * 500.0
    sigma = _random_density(trunc)
    for t in (0.0, 1.3e-4, 7.7e-4):
        lab = np.trace(SPIN_PLUS @ reconstruct_density(sigma, t, w))
        floquet = np.trace(detection_operator(SPIN_PLUS, t, trunc, w).matrix @ sigma.matrix)
        assert abs(lab - floquet) < 1e-12


def test_mode_coherence_rotates_with_positive_frequency():
    trunc = ModeTruncation(1)
    w = 2.0 * math.pi * 500.0
    m = np.zeros((trunc.dim, trunc.dim), dtype=complex)
    m[FloquetIndex(1, 1).flatten(trunc), FloquetIndex(1, 0).flatten(trunc)] = 1.0
    sigma = FloquetDensity(m, trunc)
    t = 3.1e-4
    # <1|sigma|0> is read back as exp(+i w t)
    assert reconstruct_density(sigma, t, w)[1, 1] == pytest.approx(np.exp(1j * w * t), abs=1e-14)
    D = detection_operator(np.eye(2), t, trunc, w)
    assert D.element(FloquetIndex(1, 0), FloquetIndex(1, 1)) == pytest.approx(np.exp(1j * w * t), abs=1e-14)


def test_evolve_rejects_dimension_mismatch():
    sigma = _random_density(ModeTruncation(1))
    U = FloquetOperator.identity(ModeTruncation(2), 1.0)
    with pytest.raises(DimensionMismatchError):
        evolve(sigma, U)


def test_evolve_preserves_trace(params, rotor):
    trunc = ModeTruncation(3)
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, trunc))
    sigma = evolve(_random_density(trunc), floquet_propagator(eig, 0.2 * rotor.period))
    assert sigma.is_valid(atol=1e-10)


def test_embedded_unitary_stays_unitary(params, rotor):
    small = ModeTruncation(2)
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, small))
    U = floquet_propagator(eig, 0.1 * rotor.period).matrix
    big = ModeTruncation(4)
    assert FloquetOperator(embed_operator(U, small, big), big, rotor.spinning_speed).is_unitary()
