"""Cross-module validation suite.

Each check computes one measured quantity and compares it with a tolerance.
The report carries no timings, so a fixed config and seed always produce the
same document.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from fastapi.concurrency import run_in_threadpool
from scipy.stats import unitary_group

from app.core.exceptions import FloquetSimError, SingularSystemError, ValidationError
from app.core.logging import get_logger
from app.models.floquet import FloquetIndex, ModeTruncation
from app.models.gates import REFERENCE_STATE, WORKING_STATES, GroverInstance
from app.models.labeling import GradientEvent
from app.models.spin import ProfileKind, RfPulse, RotorConfig, SidebandProfile, SpinParams
from app.schemas.config import ExperimentConfig, preset_config
from app.simulation.floquet import diagonalize, lab_propagator, stepped_propagator_oracle
from app.simulation.gates import basis_expansion, peak_manipulation_basis, run_grover
from app.simulation.powder import grid_for, powder_intensities, powder_spectrum
from app.simulation.readout import (
    analytic_fid,
    default_time_grid,
    identify_state,
    level_density,
    sideband_sticks,
    simulate_fid,
    spectrum_of,
)
from app.simulation.shift import (
    adaptive_truncation,
    cs_floquet_hamiltonian,
    cs_hamiltonian,
    effective_isotropic,
    propagator_truncation,
    sideband_intensities,
)
from app.simulation.state_prep import (
    gradient_pathway_amplitude,
    gradient_selection_survives,
    labeling_window,
    pass_closed_form,
    pass_theta_sweep,
    pitch_set,
    prepare_by_gradient,
    resynthesize,
    simulate_pass_fid,
    solve_profile_weights,
)
from app.utils.common import sig

logger = get_logger("floquetsim.validation")

SUITES = ("fast", "full")
SCHEMA_VERSION = 1
ORACLE_STEPS = 2 ** 14
SIX_LEVELS = tuple(FloquetIndex(p, m) for m in (-1, 0, 1) for p in (0, 1))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: Optional[float]
    tolerance: float
    detail: str = ""

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": None if self.measured is None else sig(self.measured),
            "tolerance": sig(self.tolerance),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ValidationReport:
    suite: str
    seed: int
    checks: Tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "suite": self.suite,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
        }


def _at_most(name: str, measured: float, tol: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(measured <= tol), float(measured), tol, detail)


def _random_params(rng: np.random.Generator) -> SpinParams:
    return SpinParams(
        delta_iso=2.0 * math.pi * rng.uniform(-2e3, 2e3),
        delta_aniso=2.0 * math.pi * rng.uniform(1e3, 20e3),
        eta=float(rng.uniform(0.0, 1.0)),
        euler=tuple(float(a) for a in rng.uniform(0.0, math.pi, size=3)),
    )


# Individual checks

def check_parseval(params: SpinParams, rotor: RotorConfig, K: int) -> CheckResult:
    total = float(np.sum(sideband_intensities(params, rotor, K)))
    return _at_most("parseval", abs(1.0 - total), 1e-8, f"sum A_n = {sig(total)} at K={K}")


def _oracle_difference(params: SpinParams, rotor: RotorConfig) -> float:
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, propagator_truncation(params, rotor)))
    t = 2.0 * rotor.period
    oracle = stepped_propagator_oracle(lambda s: cs_hamiltonian(params, rotor, s), t, ORACLE_STEPS)
    return float(np.max(np.abs(lab_propagator(eig, t) - oracle)))


def check_propagator_oracle(params: SpinParams, rotor: RotorConfig) -> CheckResult:
    return _at_most("propagator_oracle", _oracle_difference(params, rotor), 1e-6, "two rotor periods")


def check_propagator_oracle_random(rotor: RotorConfig, rng: np.random.Generator, draws: int = 20) -> CheckResult:
    worst = max(_oracle_difference(_random_params(rng), rotor) for _ in range(draws))
    return _at_most("propagator_oracle_random", worst, 1e-6, f"{draws} random tensors")


def _readout_difference(params: SpinParams, rotor: RotorConfig, t: np.ndarray) -> float:
    K = adaptive_truncation(params, rotor)
    A = sideband_intensities(params, rotor, K)
    worst = 0.0
    for level in SIX_LEVELS:
        analytic = analytic_fid(level.p, level.n, params, rotor, K, t_grid=t, intensities=A)
        simulated = simulate_fid(level_density(level, ModeTruncation(1)), params, rotor, K, t)
        worst = max(worst, float(np.max(np.abs(analytic.samples - simulated.samples))))
    return worst


def check_readout_equivalence(params: SpinParams, rotor: RotorConfig) -> CheckResult:
    t = default_time_grid(rotor, 256)
    return _at_most("readout_equivalence", _readout_difference(params, rotor, t), 1e-6, "six levels, K = 1 window")


def check_readout_equivalence_random(rotor: RotorConfig, rng: np.random.Generator, draws: int = 10) -> CheckResult:
    t = default_time_grid(rotor, 256)
    worst = max(_readout_difference(_random_params(rng), rotor, t) for _ in range(draws))
    return _at_most("readout_equivalence_random", worst, 1e-6, f"{draws} random tensors")


def check_sideband_support(params: SpinParams, rotor: RotorConfig) -> CheckResult:
    K = adaptive_truncation(params, rotor)
    nu_r = rotor.spinning_speed / (2.0 * math.pi)
    worst = 0.0
    for level in (FloquetIndex(1, 0), FloquetIndex(0, 1)):
        spectrum = spectrum_of(analytic_fid(level.p, level.n, params, rotor, K))
        support = {
            spectrum.index_of(level.epsilon * j * nu_r) for j in range(level.n - K, level.n + K + 1)
        }
        outside = np.delete(np.abs(spectrum.amplitudes), sorted(support))
        worst = max(worst, float(np.max(outside)) if outside.size else 0.0)
    return _at_most("sideband_support", worst, 1e-10)


def check_phase_dichotomy(params: SpinParams, rotor: RotorConfig) -> CheckResult:
    K = adaptive_truncation(params, rotor)
    lower = dict(sideband_sticks(0, 0, params, rotor, K))
    upper = dict(sideband_sticks(1, 0, params, rotor, K))
    worst = max(abs(lower.get(-f, 0.0) + a) for f, a in upper.items())
    return _at_most("phase_dichotomy", worst, 1e-12, "I_0(w) = -I_1(-w)")


def check_powder(params: SpinParams, rotor: RotorConfig, threads: Optional[int]) -> List[CheckResult]:
    grid = grid_for(params)
    result = powder_spectrum(1, 0, params, rotor, grid=grid, threads=threads)
    return [
        _at_most("powder_absorptive", result.imaginary_residue, 1e-3, f"{len(grid)} orientations"),
        _at_most("powder_grid_doubling", result.grid_change or 0.0, 1e-2),
    ]


def check_powder_identification(params: SpinParams, rotor: RotorConfig, threads: Optional[int]) -> CheckResult:
    grid = grid_for(params)
    K = None
    library = {}
    for level in SIX_LEVELS:
        res = powder_spectrum(level.p, level.n, params, rotor, K=K, grid=grid, threads=threads, check_grid=False)
        K = res.K
        library[level.as_tuple()] = res.spectrum
    wrong = sum(identify_state(spec, library).index != key for key, spec in library.items())
    return _at_most("powder_identification", float(wrong), 0.0, "six levels")


def check_hmb_sidebands(threads: Optional[int]) -> CheckResult:
    config = preset_config("hmb")
    params, rotor = config.spin_params(), config.rotor_config()
    K = 4
    A = powder_intensities(params, rotor, K, grid_for(params), threads)
    strong = sum(1 for n in range(-K, K + 1) if n != 0 and A[n + K] >= 0.05 * A[K])
    return CheckResult("hmb_sidebands", strong >= 2, float(strong), 2.0, "sidebands with >= 5% of centerband")


def check_pass_timings(seed: int) -> CheckResult:
    pitches = 2.0 * math.pi * np.arange(16) / 16
    schedules = pass_theta_sweep(1, pitches, seed=seed)
    worst = max(s.residual for s in schedules)
    ordered = all(s.is_ordered for s in schedules)
    return CheckResult("pass_timings", bool(ordered and worst <= 1e-10), worst, 1e-10, "16-value pitch sweep")


def check_profile_weights(params: SpinParams, rotor: RotorConfig) -> CheckResult:
    K = adaptive_truncation(params, rotor)
    K_lab = max(1, labeling_window(sideband_intensities(params, rotor, K)))
    pitches = pitch_set(K_lab)
    t2 = default_time_grid(rotor, 64)
    signals = np.array([pass_closed_form(th, params, rotor, t2, K_lab) for th in pitches])
    target = SidebandProfile({1: 1.0}, ProfileKind.TARGET, K_lab)
    weights = solve_profile_weights(target, pitches, sideband_intensities(params, rotor, K_lab))
    ideal = np.exp(-1j * (effective_isotropic(params, rotor) + rotor.spinning_speed) * t2)
    worst = float(np.max(np.abs(resynthesize(weights, signals) - ideal)))
    return _at_most("profile_weights", worst, 1e-6, f"single sideband +1, K={K_lab}")


def check_pass_simulation(params: SpinParams, rotor: RotorConfig, seed: int) -> CheckResult:
    schedule = pass_theta_sweep(1, [0.25 * math.pi], seed=seed)[0]
    run = simulate_pass_fid(schedule, params, rotor, default_time_grid(rotor, 32))
    return _at_most("pass_simulation", run.deviation, 1e-4)


def check_gradient_predicate(params: SpinParams, rotor: RotorConfig, rng: np.random.Generator,
                             cases: int = 100) -> CheckResult:
    """Predicate against the z-averaged sandwich on random spin-diagonal pathways."""
    window = ModeTruncation(2)
    pulse = RfPulse.hard(0.5 * math.pi)
    mismatches = 0
    checked = 0
    for _ in range(20 * cases):
        if checked == cases:
            break
        p, q = (int(v) for v in rng.integers(0, 2, size=2))
        i, j, n, n2 = (int(v) for v in rng.integers(-2, 3, size=4))
        g1 = GradientEvent(4 * int(rng.integers(0, 3)), Fraction(int(rng.choice([1, 3])), 2))
        g2 = GradientEvent(4 * int(rng.integers(0, 3)), Fraction(int(rng.choice([1, 3])), 2))
        before = (FloquetIndex(q, i), FloquetIndex(q, j))
        after = (FloquetIndex(p, n), FloquetIndex(p, n2))
        try:
            amplitude = gradient_pathway_amplitude(before, after, g1, pulse, g2, params, rotor, window, 256)
        except SingularSystemError:
            continue
        checked += 1
        if gradient_selection_survives(p, q, n - n2, i - j, g1, g2, rotor.spinning_speed):
            mismatches += amplitude < 0.99
        else:
            mismatches += amplitude > 1e-3
    return _at_most("gradient_predicate", float(mismatches + cases - checked), 0.0, f"{checked} simulated pathways")


def check_gradient_fidelity(params: SpinParams, rotor: RotorConfig, threads: Optional[int]) -> CheckResult:
    K = adaptive_truncation(params, rotor)
    prep = prepare_by_gradient(FloquetIndex(0, 0), params, rotor, K, 1024, threads=threads)
    return _at_most("gradient_fidelity", 1.0 - prep.fidelity, 1e-3, "target (0, 0)")


def check_gate_completeness(rng: np.random.Generator, draws: int = 20) -> CheckResult:
    basis = peak_manipulation_basis(WORKING_STATES + (REFERENCE_STATE,), M=4)
    worst = 0.0
    for _ in range(draws):
        U = unitary_group.rvs(4, random_state=rng)
        worst = max(worst, basis_expansion(U, basis, WORKING_STATES)[1])
    return _at_most("gate_completeness", worst, 1e-8, f"{draws} random 4x4 unitaries")


def check_grover(params: SpinParams, rotor: RotorConfig, compiled: bool) -> CheckResult:
    K = max(adaptive_truncation(params, rotor), 1)
    worst = 0.0
    for marked in WORKING_STATES:
        result = run_grover(GroverInstance(marked), params, rotor, K=K, compiled=compiled)
        worst = max(worst, 1.0 - result.fidelity)
    name = "grover_compiled" if compiled else "grover_ideal"
    return _at_most(name, worst, 1e-3 if compiled else 1e-12, "four marked items")


class ValidationService:
    """Runs the fast or full validation suite against one parameter set."""

    def __init__(self, threads: Optional[int] = None):
        self.threads = threads

    def _checks(self, config: ExperimentConfig, suite: str, seed: int) -> List[Tuple[str, Callable[[], Any]]]:
        params, rotor = config.spin_params(), config.rotor_config()
        rng = np.random.default_rng(seed)
        checks: List[Tuple[str, Callable[[], Any]]] = [
            ("parseval", lambda: check_parseval(params, rotor, config.resolve_K(params, rotor))),
            ("propagator_oracle", lambda: check_propagator_oracle(params, rotor)),
            ("readout_equivalence", lambda: check_readout_equivalence(params, rotor)),
            ("sideband_support", lambda: check_sideband_support(params, rotor)),
            ("phase_dichotomy", lambda: check_phase_dichotomy(params, rotor)),
            ("powder", lambda: check_powder(params, rotor, self.threads)),
            ("hmb_sidebands", lambda: check_hmb_sidebands(self.threads)),
            ("pass_timings", lambda: check_pass_timings(seed)),
            ("profile_weights", lambda: check_profile_weights(params, rotor)),
            ("gradient_predicate", lambda: check_gradient_predicate(params, rotor, rng)),
            ("gradient_fidelity", lambda: check_gradient_fidelity(params, rotor, self.threads)),
            ("gate_completeness", lambda: check_gate_completeness(rng)),
            ("grover_ideal", lambda: check_grover(params, rotor, compiled=False)),
            ("grover_compiled", lambda: check_grover(params, rotor, compiled=True)),
        ]
        if suite == "full":
            checks += [
                ("propagator_oracle_random", lambda: check_propagator_oracle_random(rotor, rng)),
                ("readout_equivalence_random", lambda: check_readout_equivalence_random(rotor, rng)),
                ("pass_simulation", lambda: check_pass_simulation(params, rotor, seed)),
                ("powder_identification", lambda: check_powder_identification(params, rotor, self.threads)),
            ]
        return checks

    def compute(self, config: Optional[ExperimentConfig] = None, suite: str = "fast",
                seed: Optional[int] = None) -> ValidationReport:
        """Run a suite; a check that raises is recorded as failed with the error message."""
        if suite not in SUITES:
            raise ValidationError(f"suite must be one of {', '.join(SUITES)}")
        config = config or preset_config("fig3")
        seed = config.seed if seed is None else seed
        results: List[CheckResult] = []
        for name, check in self._checks(config, suite, seed):
            try:
                outcome = check()
            except FloquetSimError as exc:
                outcome = CheckResult(name, False, None, 0.0, f"{type(exc).__name__}: {exc}")
            results.extend(outcome if isinstance(outcome, list) else [outcome])
        report = ValidationReport(suite, seed, tuple(results))
        failed = [c.name for c in report.checks if not c.passed]
        if failed:
            logger.warning(
                "Validation checks failed: " + ", ".join(failed),
                extra={"event": "validate", "command": suite},
            )
        logger.info("Validation suite finished", extra={"event": "validate", "command": suite})
        return report

    async def run(self, config: Optional[ExperimentConfig] = None, suite: str = "fast",
                  seed: Optional[int] = None) -> ValidationReport:
        return await run_in_threadpool(self.compute, config, suite, seed)
