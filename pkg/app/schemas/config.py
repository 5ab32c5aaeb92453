"""Experiment configuration files.

An experiment is described by a JSON document with nested sections. Values
at this boundary are in Hz, ppm and degrees; they are converted once to the
rad/s and radian units used by the simulation.
"""

import json
import math
import re
from pathlib import Path
from typing import Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from app.core.exceptions import ConfigError
from app.models.spin import MAGIC_ANGLE, RotorConfig, SpinParams
from app.simulation.readout import DEFAULT_BROADENING_HZ, DEFAULT_POINTS, default_time_grid
from app.simulation.shift import adaptive_truncation

MAGIC_ANGLE_DEG = math.degrees(MAGIC_ANGLE)
# printed values such as 54.7356 mean the magic angle
MAGIC_ANGLE_TOL_DEG = 1e-3


class SpinSection(BaseModel):
    """Chemical-shift tensor. Shifts are given either in Hz or in ppm."""

    model_config = ConfigDict(extra="forbid")

    isotropic_hz: Optional[float] = Field(default=None, example=0.0)
    isotropic_ppm: Optional[float] = Field(default=None, example=None)
    anisotropy_hz: Optional[float] = Field(default=None, example=20000.0)
    anisotropy_ppm: Optional[float] = Field(default=None, example=None)
    eta: float = Field(default=0.0, ge=0.0, le=1.0, example=0.5)
    euler_deg: Tuple[float, float, float] = Field(default=(0.0, 0.0, 0.0), example=(30.0, 60.0, 0.0))
    spectrometer_mhz: Optional[float] = Field(default=None, gt=0.0, example=50.3)

    @model_validator(mode="after")
    def _one_unit_per_shift(self):
        for name in ("isotropic", "anisotropy"):
            hz, ppm = getattr(self, f"{name}_hz"), getattr(self, f"{name}_ppm")
            if hz is not None and ppm is not None:
                raise ValueError(f"give {name}_hz or {name}_ppm, not both")
            if ppm is not None and self.spectrometer_mhz is None:
                raise ValueError(f"{name}_ppm requires spectrometer_mhz")
        return self

    def _hz(self, name: str) -> float:
        hz, ppm = getattr(self, f"{name}_hz"), getattr(self, f"{name}_ppm")
        if ppm is not None:
            return ppm * self.spectrometer_mhz
        return hz or 0.0

    @property
    def isotropic(self) -> float:
        return self._hz("isotropic")

    @property
    def anisotropy(self) -> float:
        return self._hz("anisotropy")


class RotorSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spinning_hz: float = Field(..., gt=0.0, example=4000.0)
    angle_deg: float = Field(default=54.7356, gt=0.0, lt=180.0, example=54.7356)


class PowderSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_beta: int = Field(default=50, ge=1, example=50)
    n_alpha: int = Field(default=24, ge=1, example=24)
    n_gamma: Optional[int] = Field(default=None, ge=1, example=None)
    broadening_hz: float = Field(default=DEFAULT_BROADENING_HZ, ge=0.0, example=20.0)


class ExperimentConfig(BaseModel):
    """Complete experiment description.

    Attributes:
        spin: Shift tensor and its orientation.
        rotor: Spinning speed and axis angle.
        truncation: Mode order K, or "auto" for the adaptive choice.
        powder: Orientation grid and line broadening.
        points: FID length, a power of two.
        output: Artifact directory used when --out is not given.
        seed: Seed for the stochastic checks.
    """

    model_config = ConfigDict(extra="forbid")

    spin: SpinSection = Field(default_factory=SpinSection)
    rotor: RotorSection
    truncation: Union[int, Literal["auto"]] = Field(default="auto", example="auto")
    powder: PowderSection = Field(default_factory=PowderSection)
    points: int = Field(default=DEFAULT_POINTS, example=4096)
    output: Optional[str] = Field(default=None, example="runs/fig3")
    seed: int = Field(default=0, ge=0, example=0)

    @field_validator("truncation")
    @classmethod
    def _non_negative(cls, v):
        if isinstance(v, int) and v < 0:
            raise ValueError("truncation must be a non-negative integer or 'auto'")
        return v

    @field_validator("points")
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if v < 2 or v & (v - 1):
            raise ValueError("points must be a power of two")
        return v

    def spin_params(self) -> SpinParams:
        return SpinParams(
            delta_iso=2.0 * math.pi * self.spin.isotropic,
            delta_aniso=2.0 * math.pi * self.spin.anisotropy,
            eta=self.spin.eta,
            euler=tuple(math.radians(a) for a in self.spin.euler_deg),
        )

    def rotor_config(self) -> RotorConfig:
        angle = self.rotor.angle_deg
        if abs(angle - MAGIC_ANGLE_DEG) <= MAGIC_ANGLE_TOL_DEG:
            rad = MAGIC_ANGLE
        else:
            rad = math.radians(angle)
        return RotorConfig(spinning_speed=2.0 * math.pi * self.rotor.spinning_hz, angle=rad)

    def resolve_K(self, params: Optional[SpinParams] = None, rotor: Optional[RotorConfig] = None) -> int:
        """Fixed K, or the adaptive one for the configured crystal."""
        if self.truncation != "auto":
            return int(self.truncation)
        return adaptive_truncation(params or self.spin_params(), rotor or self.rotor_config())

    def time_grid(self, rotor: Optional[RotorConfig] = None):
        return default_time_grid(rotor or self.rotor_config(), self.points)


def _line_of_key(text: str, key: str) -> Optional[int]:
    """1-based line of the first occurrence of "key": in the raw text."""
    match = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def _document_path(raw, loc) -> list:
    """Prefix of an error location made of keys present in the document.

    Union member tags and list positions are not keys and end the walk; an
    unknown or missing key is kept as the last element.
    """
    path = []
    node = raw
    for part in loc:
        if not isinstance(part, str) or not isinstance(node, dict):
            break
        path.append(part)
        if part not in node:
            break
        node = node[part]
    return path


def parse_experiment_config(text: str) -> ExperimentConfig:
    """Validate a JSON config document.

    Raises:
        ConfigError: Naming the offending key and its line.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    try:
        return ExperimentConfig.model_validate(raw)
    except PydanticValidationError as exc:
        err = exc.errors()[0]
        loc = _document_path(raw, err["loc"])
        key = ".".join(loc) or None
        line = None
        for part in reversed(loc):
            line = _line_of_key(text, part)
            if line is not None:
                break
        where = f" (line {line})" if line is not None else ""
        raise ConfigError(f"{key or 'config'}: {err['msg']}{where}", key=key, line=line) from exc


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from exc
    return parse_experiment_config(text)


def dump_experiment_config(config: ExperimentConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True)


PRESETS = {
    "fig3": {
        "spin": {"anisotropy_hz": 20000.0, "eta": 0.5, "euler_deg": [30.0, 60.0, 0.0]},
        "rotor": {"spinning_hz": 4000.0},
    },
    "hmb": {
        "spin": {"anisotropy_ppm": 100.0, "eta": 0.0, "spectrometer_mhz": 50.3},
        "rotor": {"spinning_hz": 5000.0},
    },
}


def preset_config(name: str = "fig3") -> ExperimentConfig:
    """Built-in parameter sets: "fig3" (20 kHz CSA, 4 kHz MAS) and "hmb" (100 ppm at 50.3 MHz, 5 kHz MAS)."""
    try:
        return ExperimentConfig.model_validate(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset '{name}'", key="preset") from None
