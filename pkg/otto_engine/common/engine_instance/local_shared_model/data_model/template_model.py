import re
from typing import Dict, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from otto_engine.common.engine_instance.engine_services.shared.helper_method import helper_method
from otto_engine.common.engine_instance.local_shared_model.rule_model import Variant

DURATION_RATES = ("kappa_fb", "gamma", "kappa_c", "g_coupling")
_DURATION_PATTERN = re.compile(r"^\s*([0-9.eE+-]+)\s*/\s*([a-z_]+)\s*$")

Duration = Union[float, str]


def parse_duration(value: Duration, rates: Dict[str, float]) -> float:
    """Numbers pass through; "20/gamma" becomes 20 divided by the named rate."""
    if not isinstance(value, str):
        return float(value)
    match = _DURATION_PATTERN.match(value)
    if match is None:
        raise ValueError(f"duration '{value}' is neither a number nor '<factor>/<rate>'")
    factor, rate = float(match.group(1)), match.group(2)
    if rate not in rates:
        raise ValueError(f"duration '{value}' refers to unknown rate '{rate}'")
    if rates[rate] <= 0:
        raise ValueError(f"duration '{value}' divides by non-positive {rate} = {rates[rate]}")
    return factor / rates[rate]


class FeedbackSpec(BaseModel):
    """Feedback block as written in a run file: exactly one of gain or kappa_fb."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gain: Optional[float] = None
    kappa_fb: Optional[float] = Field(default=None, gt=0)
    eta_d: float = Field(default=0.6, gt=0, le=1)

    @model_validator(mode="before")
    @classmethod
    def _ingest(cls, data):
        return helper_method.halve_doubled_keys(data, ("kappa_fb",))

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.gain is None) == (self.kappa_fb is None):
            raise ValueError("give exactly one of 'gain' or 'kappa_fb'")
        return self


class ScheduleSpec(BaseModel):
    """Stroke protocol template; durations may be expressed relative to a rate."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta_i: float
    delta_f: float
    tau1: Duration
    tau2: Duration
    tau3: Optional[Duration] = None
    tau4: Duration
    variant: Variant = Variant.LOWER

    @field_validator("tau1", "tau2", "tau3", "tau4")
    @classmethod
    def _check_duration(cls, value):
        if value is None:
            return value
        if isinstance(value, str):
            match = _DURATION_PATTERN.match(value)
            if match is None or match.group(2) not in DURATION_RATES:
                raise ValueError(f"expected a number or '<factor>/<rate>' with rate in {DURATION_RATES}")
            if float(match.group(1)) <= 0:
                raise ValueError("duration factor must be positive")
            return value
        if value <= 0:
            raise ValueError("stroke durations must be positive")
        return value

    @model_validator(mode="after")
    def _check_order(self):
        if not self.delta_i < self.delta_f < 0:
            raise ValueError(f"expected delta_i < delta_f < 0, got delta_i={self.delta_i}, delta_f={self.delta_f}")
        return self

    def durations(self, rates: Dict[str, float]) -> Tuple[float, float, float, float]:
        tau1 = parse_duration(self.tau1, rates)
        tau3 = tau1 if self.tau3 is None else parse_duration(self.tau3, rates)
        return tau1, parse_duration(self.tau2, rates), tau3, parse_duration(self.tau4, rates)
