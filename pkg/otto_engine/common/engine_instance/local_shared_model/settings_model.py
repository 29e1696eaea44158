import os
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

ENV_PREFIX = "OTTO_"


class EngineSettings(BaseModel):
    """Numerical knobs shared by the solvers. Defaults follow the documented tolerances."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    stability_tolerance: float = Field(default=1e-12, ge=0)
    residual_tolerance: float = Field(default=1e-10, gt=0)
    commutator_tolerance: float = Field(default=1e-6, gt=0)
    singular_condition: float = Field(default=1e14, gt=1)
    degeneracy_threshold: float = Field(default=1e-12, ge=0)
    energy_imag_tolerance: float = Field(default=1e-10, gt=0)
    rtol: float = Field(default=1e-10, gt=0)
    atol: float = Field(default=1e-10, gt=0)
    ramp_step_factor: Optional[float] = Field(default=0.01, gt=0)
    ramp_method: str = "DOP853"
    trajectory_samples: int = Field(default=2000, ge=0)
    closure_tolerance: float = Field(default=1e-6, gt=0)
    hierarchy_margin: float = Field(default=3.0, gt=0)

    @classmethod
    def from_env(cls, environ=None) -> "EngineSettings":
        environ = os.environ if environ is None else environ
        overrides = {}
        for name in cls.model_fields:
            raw = environ.get(f"{ENV_PREFIX}{name.upper()}")
            if raw is None:
                continue
            if raw.strip().lower() in ("none", ""):
                overrides[name] = None
            else:
                overrides[name] = raw.strip()
        return cls.model_validate(overrides)


DEFAULT_SETTINGS = EngineSettings()
