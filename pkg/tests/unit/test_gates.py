"""Unit tests for Floquet-level gates and the four-item Grover search."""

import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from app.core.exceptions import SolverError, ValidationError
from app.models.floquet import FloquetIndex, ModeTruncation
from app.models.gates import (
    REFERENCE_STATE,
    WORKING_STATES,
    ASLEvent,
    ASLInverseEvent,
    DelayEvent,
    GateBlock,
    GroverInstance,
    PulseEvent,
)
from app.models.labeling import PseudoPureSpec
from app.models.spin import PulsePhase
from app.simulation.floquet import evolve
from app.simulation.gates import (
    basis_expansion,
    compile_block,
    compile_event,
    conditional_flip,
    equal_up_to_phase,
    flip_block,
    grover_operators,
    hadamard_walsh,
    hadamard_walsh_block,
    hadamard_walsh_matrix,
    inversion_about_mean,
    inversion_block,
    layered_events,
    peak_manipulation_basis,
    restrict,
    run_grover,
    state_transfer_unitary,
    synthesize_block,
    window_eigensystem,
)
from app.simulation.readout import default_time_grid
from app.simulation.state_prep import make_pseudo_pure

WINDOW = ModeTruncation(1)


# ============================================================================
# IDEAL GATES
# ============================================================================

def test_hadamard_walsh_is_unitary_and_symmetric():
    H = hadamard_walsh_matrix(4)
    assert np.allclose(H @ H, np.eye(4))
    assert hadamard_walsh().is_unitary()


def test_inversion_about_mean_on_working_levels():
    D = restrict(inversion_about_mean(), WORKING_STATES, WINDOW)
    assert np.allclose(D, 0.5 * np.ones((4, 4)) - np.eye(4))


def test_flip_requires_a_working_state():
    with pytest.raises(ValidationError):
        conditional_flip(REFERENCE_STATE)


def test_grover_instance_uses_one_iteration():
    assert GroverInstance(WORKING_STATES[2]).n_iterations == 1
    with pytest.raises(ValueError):
        GroverInstance(FloquetIndex(1, -1))


@pytest.mark.parametrize("marked", WORKING_STATES)
def test_ideal_iteration_lands_on_marked_level(marked, params, rotor):
    hw, flip, inversion = grover_operators(GroverInstance(marked), params, rotor, compiled=False)
    rho = evolve(make_pseudo_pure(PseudoPureSpec(WORKING_STATES[0]), 1), hw)
    rho = evolve(evolve(rho, flip), inversion)
    assert rho.population(marked) == pytest.approx(1.0, abs=1e-12)


# ============================================================================
# STATE TRANSFER AND OPERATOR BASIS
# ============================================================================

def test_state_transfer_moves_population():
    source, target = FloquetIndex(1, 0), FloquetIndex(0, 1)
    U = state_transfer_unitary(source, target)
    vec = np.zeros(WINDOW.dim)
    vec[source.flatten(WINDOW)] = 1.0
    moved = U.matrix @ vec
    assert abs(moved[target.flatten(WINDOW)]) == pytest.approx(1.0)


def test_transfer_without_operator_is_rejected():
    with pytest.raises(ValidationError):
        state_transfer_unitary(FloquetIndex(0, 0), FloquetIndex(1, 0), prep_ops={})


def test_basis_expands_random_unitaries():
    basis = peak_manipulation_basis(WORKING_STATES + (REFERENCE_STATE,), M=4)
    assert len(basis) == 16
    rng = np.random.default_rng(11)
    for _ in range(5):
        U = unitary_group.rvs(4, random_state=rng)
        _, residual = basis_expansion(U, basis, WORKING_STATES)
        assert residual <= 1e-8


def test_basis_needs_an_extra_level():
    with pytest.raises(ValidationError):
        peak_manipulation_basis(WORKING_STATES, M=4)


def test_single_level_basis_is_a_phase():
    basis = peak_manipulation_basis([FloquetIndex(0, 0)])
    assert len(basis) == 1
    assert basis[0].is_unitary()


# ============================================================================
# COMPILED GATES
# ============================================================================

PHYSICAL_EVENTS = (PulseEvent, ASLEvent, ASLInverseEvent, DelayEvent)


def test_compiled_hadamard_walsh_matches_ideal_up_to_phase(params, rotor):
    block = hadamard_walsh_block(params, rotor)
    compiled = compile_block(block, params, rotor)
    assert compiled.is_unitary()
    assert equal_up_to_phase(hadamard_walsh(), compiled, WORKING_STATES, WINDOW) <= 1e-6


@pytest.mark.parametrize("marked", WORKING_STATES)
def test_compiled_flip_matches_ideal_up_to_phase(marked, params, rotor):
    compiled = compile_block(flip_block(marked, params, rotor), params, rotor)
    assert equal_up_to_phase(conditional_flip(marked), compiled, WORKING_STATES, WINDOW) <= 1e-6


def test_compiled_inversion_matches_ideal_up_to_phase(params, rotor):
    compiled = compile_block(inversion_block(params, rotor), params, rotor)
    assert equal_up_to_phase(inversion_about_mean(), compiled, WORKING_STATES, WINDOW) <= 1e-6


def test_compiled_blocks_use_pulses_asl_and_delays_only(params, rotor):
    blocks = [hadamard_walsh_block(params, rotor)] + [flip_block(s, params, rotor) for s in WORKING_STATES]
    for block in blocks:
        assert block.n_pulses > 0
        assert block.duration_periods > 0.0
        for event in block.events:
            assert isinstance(event, PHYSICAL_EVENTS)
            if isinstance(event, PulseEvent):
                assert event.phase in (PulsePhase.PLUS_X, PulsePhase.MINUS_X)


def test_asl_inverse_undoes_asl(params, rotor):
    assert ASLEvent(0.7).inverse() == ASLInverseEvent(0.7)
    block = GateBlock("asl", (ASLEvent(0.7), ASLEvent(1.3), ASLEvent(1.3).inverse(), ASLEvent(0.7).inverse()))
    U = compile_block(block, params, rotor)
    assert np.allclose(U.matrix, np.eye(WINDOW.dim), atol=1e-9)


def test_delays_without_anisotropy_never_change_the_mode(shift_free, rotor):
    eig = window_eigensystem(shift_free, rotor)
    U = compile_event(DelayEvent(0.37), eig, rotor)
    off_diagonal = U - np.diag(np.diag(U))
    assert np.max(np.abs(off_diagonal)) <= 1e-12


def test_synthesis_fails_without_sideband_couplings(shift_free, rotor):
    with pytest.raises(SolverError) as exc_info:
        synthesize_block("HW", hadamard_walsh_matrix(4), shift_free, rotor, layers=2, restarts=1)
    assert exc_info.value.best_residual > 1e-2


def test_layered_events_choose_phase_and_asl_direction_by_sign():
    events = layered_events(np.array([-0.5, 0.2, -0.3, 0.0, 0.4, 0.1]))
    assert events[0] == PulseEvent(0.5, PulsePhase.MINUS_X)
    assert events[1] == DelayEvent(0.2)
    assert events[2] == ASLInverseEvent(0.3)
    assert events[3] == DelayEvent(0.4)
    assert events[4] == ASLEvent(0.1)


def test_compiled_gates_need_default_working_levels(params, rotor):
    custom = (FloquetIndex(0, -1), FloquetIndex(1, -1), FloquetIndex(0, 0), FloquetIndex(1, 0))
    with pytest.raises(ValidationError):
        grover_operators(GroverInstance(custom[0], custom), params, rotor, compiled=True)


# ============================================================================
# SEARCH WITH READOUT
# ============================================================================

@pytest.mark.parametrize("compiled", [False, True])
def test_search_identifies_every_marked_item(params, rotor, compiled):
    t = default_time_grid(rotor, 256)
    for marked in WORKING_STATES:
        result = run_grover(GroverInstance(marked), params, rotor, compiled=compiled, t_grid=t)
        assert result.success
        assert result.identified == marked.as_tuple()
        assert result.fidelity >= (0.999 if compiled else 1.0 - 1e-12)
        assert result.as_dict()["success"] is True


def test_search_on_shift_free_spin(shift_free, rotor):
    t = default_time_grid(rotor, 128)
    result = run_grover(GroverInstance(WORKING_STATES[3]), shift_free, rotor, t_grid=t)
    assert result.identified == (1, 1)
    assert result.margin >= 0.1
    assert math.isclose(result.fidelity, 1.0, abs_tol=1e-12)
