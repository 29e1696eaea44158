try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from otto_engine.common.engine_instance.local_shared_model.data_model.sweep_model import SweepBlock, SweepSpec
from otto_engine.common.engine_instance.local_shared_model.data_model.system_model import SystemParams
from otto_engine.common.engine_instance.local_shared_model.data_model.template_model import FeedbackSpec, ScheduleSpec
from otto_engine.common.engine_instance.local_shared_model.error_model import ConfigError

OutputFormat = Literal["csv", "json", "matrix"]


class PointSpec(BaseModel):
    """Single detuning for steady/polariton reports plus the spectrum scan range."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta_p: Optional[float] = None
    scan_start: float = -3.0
    scan_stop: float = -0.02
    scan_points: int = Field(default=300, ge=2)

    @model_validator(mode="after")
    def _check(self):
        if self.delta_p is not None and self.delta_p >= 0:
            raise ValueError("delta_p must be red detuned (negative)")
        return self


class OutputSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: str = "out"
    formats: Tuple[OutputFormat, ...] = ("csv", "json")
    samples_per_stroke: Optional[int] = Field(default=None, ge=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    system: SystemParams
    feedback: FeedbackSpec
    schedule: Optional[ScheduleSpec] = None
    point: PointSpec = PointSpec()
    sweep: Optional[SweepBlock] = None
    output: OutputSpec = OutputSpec()

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(Path(path), "rb") as handle:
            data = tomllib.load(handle)
        return cls.model_validate(data)

    def require_schedule(self) -> ScheduleSpec:
        if self.schedule is None:
            raise ConfigError("this command needs a [schedule] block")
        return self.schedule

    def point_detuning(self) -> float:
        if self.point.delta_p is not None:
            return self.point.delta_p
        if self.schedule is not None:
            return self.schedule.delta_i
        raise ConfigError("give [point] delta_p or a [schedule] block")

    def sweep_spec(self) -> SweepSpec:
        if self.sweep is None:
            raise ConfigError("this command needs a [sweep] block")
        return SweepSpec(axes=self.sweep.axes, method=self.sweep.method, system=self.system,
                         feedback=self.feedback, schedule=self.require_schedule())
