"""Gate-block events and Grover search instances."""

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from app.models.floquet import FloquetDensity, FloquetIndex
from app.models.readout import Spectrum
from app.models.spin import PulsePhase

WORKING_STATES: Tuple[FloquetIndex, ...] = (
    FloquetIndex(0, 0),
    FloquetIndex(1, 0),
    FloquetIndex(0, 1),
    FloquetIndex(1, 1),
)
REFERENCE_STATE = FloquetIndex(0, -1)
GATE_WINDOW_K = 1


@dataclass(frozen=True)
class PulseEvent:
    """Hard RF pulse of angle `flip`; the shift is neglected while it lasts."""

    flip: float
    phase: PulsePhase = PulsePhase.PLUS_X

    def __post_init__(self):
        if self.flip <= 0.0:
            raise ValueError("pulse flip angle must be positive")


@dataclass(frozen=True)
class ASLEvent:
    """Mode-dependent phase shift exp(-i n Theta), the [ASL] block."""

    pitch: float

    def inverse(self) -> "ASLInverseEvent":
        return ASLInverseEvent(self.pitch)


@dataclass(frozen=True)
class ASLInverseEvent:
    pitch: float

    def inverse(self) -> ASLEvent:
        return ASLEvent(self.pitch)


@dataclass(frozen=True)
class DelayEvent:
    """Free evolution under the chemical shift for `periods` rotor periods (fractional allowed)."""

    periods: float

    def __post_init__(self):
        if self.periods < 0.0:
            raise ValueError("delay must be non-negative")


GateEvent = Union[PulseEvent, ASLEvent, ASLInverseEvent, DelayEvent]


@dataclass(frozen=True)
class GateBlock:
    """Named, ordered event list; the first event acts first."""

    name: str
    events: Tuple[GateEvent, ...]

    def then(self, other: "GateBlock", name: Optional[str] = None) -> "GateBlock":
        return GateBlock(name or f"{self.name};{other.name}", self.events + other.events)

    @property
    def n_pulses(self) -> int:
        return sum(isinstance(e, PulseEvent) for e in self.events)

    @property
    def duration_periods(self) -> float:
        return float(sum(e.periods for e in self.events if isinstance(e, DelayEvent)))


@dataclass(frozen=True)
class GroverInstance:
    """Search over the four working states for one marked item."""

    marked: FloquetIndex
    working_states: Tuple[FloquetIndex, ...] = WORKING_STATES
    iterations: Optional[int] = None

    def __post_init__(self):
        if self.marked not in self.working_states:
            raise ValueError(f"marked state {self.marked.as_tuple()} is not a working state")

    @property
    def n_items(self) -> int:
        return len(self.working_states)

    @property
    def n_iterations(self) -> int:
        if self.iterations is not None:
            return self.iterations
        # floor((pi/4) sqrt(N)); exactly one rotation to the marked item at N = 4
        return max(1, math.floor(math.pi / 4.0 * math.sqrt(self.n_items)))


@dataclass(frozen=True, eq=False)
class GroverResult:
    """Final state, readout and identification of one search."""

    marked: FloquetIndex
    identified: Tuple[int, int]
    fidelity: float
    margin: float
    compiled: bool
    density: FloquetDensity
    spectrum: Spectrum

    @property
    def success(self) -> bool:
        return self.identified == self.marked.as_tuple()

    def as_dict(self) -> dict:
        return {
            "marked": list(self.marked.as_tuple()),
            "identified": list(self.identified),
            "fidelity": self.fidelity,
            "margin": self.margin,
            "compiled": self.compiled,
            "success": self.success,
        }
