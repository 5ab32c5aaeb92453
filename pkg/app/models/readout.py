"""Readout value types: FID traces, spectra, powder grids and identifications."""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np


class DetectionChannel(str, Enum):
    X = "x"
    Y = "y"
    PLUS = "+"


class ReadoutFrame(str, Enum):
    """Frame a simulated readout is reported in.

    LAB is the detected I_+ signal. LEVEL refers each populated level |pm> to
    its mode-ladder frame so that m sets the sideband group.
    """

    LAB = "lab"
    LEVEL = "level"


@dataclass(frozen=True, eq=False)
class FidTrace:
    """Uniformly sampled free induction decay starting at t = 0.

    Attributes:
        dwell: Sampling interval (s).
        samples: Complex signal values.
        detection: Channel the signal was detected on.
    """

    dwell: float
    samples: np.ndarray
    detection: DetectionChannel = DetectionChannel.PLUS

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        n = s.size
        if n == 0 or n & (n - 1):
            raise ValueError(f"FID length must be a power of two, got {n}")
        if self.dwell <= 0.0:
            raise ValueError("dwell must be positive")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "detection", DetectionChannel(self.detection))

    @property
    def times(self) -> np.ndarray:
        return self.dwell * np.arange(self.samples.size)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Discrete spectrum on an fftshifted frequency axis.

    Attributes:
        frequencies: Bin centres (Hz), ascending.
        amplitudes: Complex bin values; a unit-amplitude coherence gives a
            unit stick.
        broadening: Lorentzian FWHM (Hz) applied, 0 for sticks.
    """

    frequencies: np.ndarray
    amplitudes: np.ndarray
    broadening: float = 0.0

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        a = np.asarray(self.amplitudes, dtype=complex)
        if f.shape != a.shape:
            raise ValueError("frequency and amplitude arrays differ in shape")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "amplitudes", a)

    @property
    def bins(self) -> List[Tuple[float, complex]]:
        return list(zip(self.frequencies.tolist(), self.amplitudes.tolist()))

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def index_of(self, frequency: float) -> int:
        return int(np.argmin(np.abs(self.frequencies - frequency)))

    def value_at(self, frequency: float) -> complex:
        return complex(self.amplitudes[self.index_of(frequency)])


@dataclass(frozen=True, eq=False)
class PowderGrid:
    """Crystallite orientations (alpha, beta, gamma) with normalized weights."""

    orientations: np.ndarray
    weights: np.ndarray
    scheme: str = "uniform-equal-area"

    def __post_init__(self):
        o = np.asarray(self.orientations, dtype=float).reshape(-1, 3)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (o.shape[0],):
            raise ValueError("one weight per orientation is required")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("powder weights must sum to 1")
        object.__setattr__(self, "orientations", o)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.orientations.shape[0]


@dataclass(frozen=True)
class StateIdentification:
    """Best library match for a readout spectrum.

    Attributes:
        index: (p, m) of the best match.
        score: Normalized correlation with the best entry.
        runner_up: Score of the second-best entry.
        margin: (score - runner_up) / (1 - runner_up); 1 for an exact match.
    """

    index: Tuple[int, int]
    score: float
    runner_up: float
    margin: float


@dataclass(frozen=True, eq=False)
class PowderSpectrum:
    """Powder-averaged readout with its phasing and convergence diagnostics."""

    spectrum: Spectrum
    intensities: np.ndarray
    K: int
    phase: float
    imaginary_residue: float
    grid_change: Optional[float] = None
    converged: bool = True
    orientations: int = 0
    fid: Optional[FidTrace] = None
    sticks: List[Tuple[float, float]] = field(default_factory=list)
