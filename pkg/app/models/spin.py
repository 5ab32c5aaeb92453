"""Chemical-shift, rotor and RF pulse parameter types.

All angular quantities are radians and all frequencies rad/s; conversion
from Hz, ppm and degrees happens once, in app.schemas.config.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

MAGIC_ANGLE = math.acos(1.0 / math.sqrt(3.0))


@dataclass(frozen=True)
class SpinParams:
    """Chemical-shift tensor and its orientation in the rotor frame.

    Attributes:
        delta_iso: Isotropic shift plus RF offset (rad/s).
        delta_aniso: Anisotropy, delta = sigma_0 - sigma_33 (rad/s, >= 0).
        eta: Asymmetry in [0, 1].
        euler: Tensor-to-rotor Euler angles (alpha, beta, gamma).
    """

    delta_iso: float = 0.0
    delta_aniso: float = 0.0
    eta: float = 0.0
    euler: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("asymmetry eta must lie in [0, 1]")
        if self.delta_aniso < 0.0:
            raise ValueError("anisotropy must be non-negative for sigma_11 >= sigma_22 >= sigma_33")
        object.__setattr__(self, "euler", tuple(float(a) for a in self.euler))

    @property
    def alpha(self) -> float:
        return self.euler[0]

    @property
    def beta(self) -> float:
        return self.euler[1]

    @property
    def gamma(self) -> float:
        return self.euler[2]

    def principal_values(self) -> Tuple[float, float, float]:
        """Return (sigma_11, sigma_22, sigma_33), sorted descending."""
        d0, d, eta = self.delta_iso, self.delta_aniso, self.eta
        return (d0 + 0.5 * d * (1.0 + eta), d0 + 0.5 * d * (1.0 - eta), d0 - d)

    @classmethod
    def from_principal_values(
        cls,
        sigma_11: float,
        sigma_22: float,
        sigma_33: float,
        euler: Tuple[float, float, float] = (0.0, 0.0, 0.0),
    ) -> "SpinParams":
        if not sigma_11 >= sigma_22 >= sigma_33:
            raise ValueError("principal values must satisfy sigma_11 >= sigma_22 >= sigma_33")
        d0 = (sigma_11 + sigma_22 + sigma_33) / 3.0
        d = d0 - sigma_33
        eta = (sigma_11 - sigma_22) / d if d > 0.0 else 0.0
        return cls(delta_iso=d0, delta_aniso=d, eta=eta, euler=euler)

    def with_euler(self, euler: Tuple[float, float, float]) -> "SpinParams":
        return replace(self, euler=tuple(euler))

    def with_rotor_phase(self, phase: float) -> "SpinParams":
        """Shift the rotor phase; alpha enters only as a rotor-phase offset."""
        a, b, g = self.euler
        return replace(self, euler=(a + phase, b, g))

    def isotropic_only(self) -> "SpinParams":
        return replace(self, delta_aniso=0.0, eta=0.0)


@dataclass(frozen=True)
class RotorConfig:
    """Spinning speed (rad/s) and rotor tilt (rad)."""

    spinning_speed: float
    angle: float = MAGIC_ANGLE

    def __post_init__(self):
        if self.spinning_speed <= 0.0:
            raise ValueError("spinning speed must be positive")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.spinning_speed

    @property
    def p2(self) -> float:
        c = math.cos(self.angle)
        # exact zero at the magic angle
        if abs(self.angle - MAGIC_ANGLE) < 1e-15:
            return 0.0
        return 0.5 * (3.0 * c * c - 1.0)


@dataclass(frozen=True)
class OrientationCoefficients:
    """Dimensionless cos/sin amplitudes of the first and second rotor harmonics.

    Multiplied by (sqrt(3)/2) * delta they give the time-dependent part of the
    chemical-shift frequency.
    """

    C1: float
    S1: float
    C2: float
    S2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.C1, self.S1, self.C2, self.S2])


class PulsePhase(str, Enum):
    PLUS_X = "+x"
    MINUS_X = "-x"
    PLUS_Y = "+y"
    MINUS_Y = "-y"

    @property
    def angle(self) -> float:
        return {
            PulsePhase.PLUS_X: 0.0,
            PulsePhase.PLUS_Y: 0.5 * math.pi,
            PulsePhase.MINUS_X: math.pi,
            PulsePhase.MINUS_Y: 1.5 * math.pi,
        }[self]


HARD_PULSE_WIDTH = 1e-9


@dataclass(frozen=True)
class RfPulse:
    """Rectangular RF pulse, H_rf = -w1 (cos(phi) I_x + sin(phi) I_y).

    Attributes:
        omega1: Field strength (rad/s).
        width: Pulse length t_p (s).
        phase: One of +x, -x, +y, -y.
    """

    omega1: float
    width: float
    phase: PulsePhase = PulsePhase.PLUS_X

    def __post_init__(self):
        if self.width < 0.0 or self.omega1 < 0.0:
            raise ValueError("pulse width and field strength must be non-negative")
        if not 0.0 <= self.flip_angle < 2.0 * math.pi + 1e-12:
            raise ValueError("flip angle must lie in [0, 2*pi)")
        object.__setattr__(self, "phase", PulsePhase(self.phase))

    @property
    def flip_angle(self) -> float:
        return self.omega1 * self.width

    @classmethod
    def from_flip(cls, flip: float, width: float, phase: PulsePhase = PulsePhase.PLUS_X) -> "RfPulse":
        if width <= 0.0:
            raise ValueError("pulse width must be positive")
        return cls(omega1=flip / width, width=width, phase=phase)

    @classmethod
    def hard(cls, flip: float, phase: PulsePhase = PulsePhase.PLUS_X) -> "RfPulse":
        """Near-ideal pulse, short enough for the repeated-block form."""
        return cls.from_flip(flip, HARD_PULSE_WIDTH, phase)


class ProfileKind(str, Enum):
    FIELD = "field"
    INTENSITY = "intensity"
    TARGET = "target"


@dataclass(frozen=True, eq=False)
class SidebandProfile:
    """Sideband index n -> amplitude.

    Attributes:
        amplitudes: Mapping n -> complex value for |n| <= K.
        kind: F_n field amplitudes, A_n intensities or a target profile.
        K: Largest retained |n|.
        total: Sum of A_n for intensity profiles.
        converged: Whether the Parseval sum reached tolerance.
    """

    amplitudes: Dict[int, complex]
    kind: ProfileKind
    K: int
    total: float = 0.0
    converged: bool = True
    fields: Optional[Dict[int, complex]] = field(default=None)

    def __getitem__(self, n: int) -> complex:
        return self.amplitudes.get(n, 0.0)

    def indices(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def as_array(self) -> np.ndarray:
        return np.array([self.amplitudes.get(int(n), 0.0) for n in self.indices()])

    def real_array(self) -> np.ndarray:
        return np.real(self.as_array())
