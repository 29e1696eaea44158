import logging
import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from otto_engine.common.engine_instance.engine_services.shared.helper_method import helper_method

log = logging.getLogger("MODEL")

DOUBLED_RATES = ("kappa_c", "kappa_1", "kappa_2", "gamma")


class SystemParams(BaseModel):
    """
    Physical constants of the linearized optomechanical system.

    Rates are amplitude decay rates and all quantities are in units of the
    mechanical frequency, which therefore stays 1.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    omega_m: float = 1.0
    kappa_c: float = Field(gt=0)
    kappa_1: Optional[float] = Field(default=None, gt=0)
    kappa_2: Optional[float] = Field(default=None, gt=0)
    gamma: float = Field(gt=0)
    g_coupling: float = Field(ge=0)
    n_th: float = Field(ge=0)

    @model_validator(mode="before")
    @classmethod
    def _ingest(cls, data):
        data = helper_method.halve_doubled_keys(data, DOUBLED_RATES)
        if isinstance(data, dict) and data.get("kappa_c") is not None:
            half = float(data["kappa_c"]) / 2.0
            if data.get("kappa_1") is None and data.get("kappa_2") is None:
                data["kappa_1"] = half
                data["kappa_2"] = half
            elif data.get("kappa_1") is None:
                data["kappa_1"] = float(data["kappa_c"]) - float(data["kappa_2"])
            elif data.get("kappa_2") is None:
                data["kappa_2"] = float(data["kappa_c"]) - float(data["kappa_1"])
        return data

    @model_validator(mode="after")
    def _check(self):
        if self.omega_m != 1.0:
            raise ValueError("omega_m sets the unit of every rate and must be 1")
        if not math.isclose(self.kappa_1 + self.kappa_2, self.kappa_c, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(f"kappa_1 + kappa_2 = {self.kappa_1 + self.kappa_2} differs from kappa_c = {self.kappa_c}")
        if self.gamma > 0.1 * self.omega_m:
            log.warning(f"gamma = {self.gamma} is not small compared with omega_m")
        return self


class FeedbackConfig(BaseModel):
    """Feedback gain and the effective cavity bath it produces."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gain: float
    eta_d: float = Field(gt=0, le=1)
    kappa_fb: float = Field(gt=0)
    n_opt_fb: float = Field(ge=0)

    def parametric_strength(self, params: SystemParams) -> float:
        return params.kappa_c - self.kappa_fb
