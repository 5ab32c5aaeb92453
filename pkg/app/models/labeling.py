"""State-labeling value types: pseudo-pure targets, PASS schedules, profile
weights and gradient events."""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from app.models.floquet import FloquetDensity, FloquetIndex
from app.models.spin import SidebandProfile

PASS_PULSES = 5
PASS_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class PseudoPureSpec:
    """Target |pm> and polarization alpha of a pseudo-pure Floquet state."""

    target: FloquetIndex
    purity: float = 1.0
    n_spins: int = 1

    def __post_init__(self):
        if not -1.0 <= self.purity <= 1.0:
            raise ValueError("purity alpha must lie in [-1, 1]")
        if self.n_spins != 1:
            raise ValueError("only single-spin systems are supported")


@dataclass(frozen=True)
class PassSchedule:
    """Five pi-pulse positions, as rotor phases, for one PASS pitch.

    Attributes:
        pitch: Theta in [0, 2*pi).
        positions: theta_1 < ... < theta_5 inside (0, 2*pi).
        block_phase: theta_T, the rotor-phase length of the pulse block.
        n_sidebands: Sideband orders the schedule was solved for.
        residual: Largest absolute constraint residual.
    """

    pitch: float
    positions: Tuple[float, ...]
    block_phase: float
    n_sidebands: int
    residual: float

    def __post_init__(self):
        if len(self.positions) != PASS_PULSES:
            raise ValueError(f"a PASS schedule has exactly {PASS_PULSES} pulses")
        object.__setattr__(self, "positions", tuple(float(x) for x in self.positions))

    @property
    def is_ordered(self) -> bool:
        p = np.asarray(self.positions)
        return bool(np.all(np.diff(p) > 0.0) and p[0] > 0.0 and p[-1] < self.block_phase)

    @property
    def within_tolerance(self) -> bool:
        return self.residual <= PASS_RESIDUAL_TOL

    def pulse_times(self, spinning_speed: float) -> np.ndarray:
        return np.asarray(self.positions) / spinning_speed

    def as_dict(self) -> dict:
        return {
            "pitch": self.pitch,
            "positions": list(self.positions),
            "block_phase": self.block_phase,
            "n_sidebands": self.n_sidebands,
            "residual": self.residual,
        }


@dataclass(frozen=True, eq=False)
class ProfileWeights:
    """Solution x of the pitch-weighting system A x = Delta.

    Attributes:
        x: Weight per pitch value.
        pitches: Pitch values Theta_j the weights apply to.
        target: Requested sideband profile.
        residual: max |A x - Delta|.
        condition: Condition number of A.
        unphysical: True when some x_j is not a real number in [-1, 1], so it
            cannot be realized as sin(theta_x).
    """

    x: np.ndarray
    pitches: np.ndarray
    target: SidebandProfile
    residual: float
    condition: float
    unphysical: bool = False

    def as_dict(self) -> dict:
        return {
            "pitches": [float(t) for t in self.pitches],
            "x_re": [float(v) for v in np.real(self.x)],
            "x_im": [float(v) for v in np.imag(self.x)],
            "residual": self.residual,
            "condition": self.condition,
            "unphysical": self.unphysical,
        }


@dataclass(frozen=True)
class GradientEvent:
    """Pulsed field gradient.

    Strength is normalized so that one unit over one rotor period winds the
    mode-1 phase by 2*pi across the sample z in [-1/2, 1/2]. Both values are
    kept as exact fractions so pathway selection can be decided exactly.

    Attributes:
        strength: Normalized gradient G_z.
        duration: Length t_G in rotor periods.
    """

    strength: Fraction = field(default=Fraction(0))
    duration: Fraction = field(default=Fraction(0))

    def __post_init__(self):
        object.__setattr__(self, "strength", Fraction(self.strength))
        object.__setattr__(self, "duration", Fraction(self.duration))
        if self.duration < 0:
            raise ValueError("gradient duration must be non-negative")

    @property
    def winding(self) -> Fraction:
        return self.strength * self.duration

    def seconds(self, spinning_speed: float) -> float:
        return float(self.duration) * 2.0 * np.pi / spinning_speed

    def as_dict(self) -> dict:
        return {"strength": str(self.strength), "duration_periods": str(self.duration)}


@dataclass(frozen=True)
class GradientDesign:
    """Gradient pair chosen to keep one pathway and suppress the rest."""

    first: GradientEvent
    second: GradientEvent
    target: Tuple[int, int]
    note: Optional[str] = None


@dataclass(frozen=True, eq=False)
class PassFid:
    """PASS signal from the closed form and from the pulse-sequence simulation."""

    t2: np.ndarray
    closed_form: np.ndarray
    simulated: np.ndarray
    deviation: float
    flagged: bool


@dataclass(frozen=True, eq=False)
class GradientPreparation:
    """Outcome of gradient labeling of one target level."""

    density: FloquetDensity
    fidelity: float
    design: GradientDesign
    z_samples: int
