"""Pydantic schemas for experiment requests and response payloads.

Requests carry either an inline experiment configuration or the name of a
built-in preset. Response payloads are wrapped in StandardResponse by the
API layer.
"""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.config import PRESETS, ExperimentConfig, preset_config


class ExperimentRequest(BaseModel):
    """Common fields: an inline config or a preset name (default fig3)."""

    model_config = ConfigDict(extra="forbid")

    preset: Optional[str] = Field(default=None, example="fig3")
    config: Optional[ExperimentConfig] = None

    @field_validator("preset")
    @classmethod
    def validate_preset(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in PRESETS:
            raise ValueError(f"preset must be one of {', '.join(sorted(PRESETS))}")
        return v

    def experiment(self) -> ExperimentConfig:
        if self.config is not None:
            return self.config
        return preset_config(self.preset or "fig3")


class SpectrumRequest(ExperimentRequest):
    p: int = Field(..., ge=0, le=1, example=1)
    m: int = Field(default=0, example=0)
    mode: Literal["crystal", "powder"] = Field(default="crystal", example="crystal")
    broadening_hz: Optional[float] = Field(default=None, ge=0.0, example=None)


class PrepareRequest(ExperimentRequest):
    p: int = Field(..., ge=0, le=1, example=0)
    m: int = Field(default=0, example=0)
    method: Literal["pass", "gradient"] = Field(default="gradient", example="gradient")


class GroverRequest(ExperimentRequest):
    marked: str = Field(default="all", example="3")
    compiled: bool = Field(default=False, example=False)


class ValidateRequest(ExperimentRequest):
    suite: Literal["fast", "full"] = Field(default="fast", example="fast")
    seed: Optional[int] = Field(default=None, ge=0, example=0)


# Responses
class Stick(BaseModel):
    frequency_hz: float = Field(..., example=4000.0)
    amplitude: float = Field(..., example=0.21)


class SpectrumData(BaseModel):
    """Stick list and convergence figures of one readout."""
    level: List[int] = Field(..., example=[1, 0])
    mode: str = Field(..., example="crystal")
    K: int = Field(..., example=6)
    sum_an: float = Field(..., example=0.999999999)
    converged: bool
    truncation_converged: bool = True
    points: int = Field(..., example=4096)
    dwell_s: float
    broadening_hz: float = 0.0
    sticks: List[Stick]
    orientations: Optional[int] = None
    phase_rad: Optional[float] = None
    imaginary_residue: Optional[float] = None
    grid_change: Optional[float] = None
    grid_converged: Optional[bool] = None


class PreparationData(BaseModel):
    target: List[int] = Field(..., example=[0, 0])
    method: str = Field(..., example="gradient")
    K: int
    fidelity: float = Field(..., example=0.9999)
    schedules: Optional[List[Dict[str, Any]]] = None
    weights: Optional[Dict[str, Any]] = None
    simulation_deviation: Optional[float] = None
    closed_form_fidelity: Optional[float] = None
    z_samples: Optional[int] = None
    gradients: Optional[Dict[str, Any]] = None


class GroverOutcomeData(BaseModel):
    marked: List[int] = Field(..., example=[0, 1])
    identified: Optional[List[int]] = Field(default=None, example=[0, 1])
    fidelity: Optional[float] = None
    margin: Optional[float] = None
    compiled: Optional[bool] = None
    success: bool
    error: Optional[str] = None


class GroverData(BaseModel):
    outcomes: List[GroverOutcomeData]


class CheckData(BaseModel):
    name: str
    passed: bool
    measured: Optional[str] = None
    tolerance: str
    detail: str = ""


class ValidationData(BaseModel):
    schema_version: int = 1
    suite: str
    seed: int
    passed: bool
    checks: List[CheckData]
