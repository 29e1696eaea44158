from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from otto_engine.common.engine_instance.local_shared_model.data_model.system_model import SystemParams
from otto_engine.common.engine_instance.local_shared_model.data_model.template_model import FeedbackSpec, ScheduleSpec
from otto_engine.common.engine_instance.local_shared_model.rule_model import CellStatus, CycleMethod, Spacing

AxisName = Literal["delta_f", "delta_i", "g_coupling", "kappa_fb", "gain", "eta_d",
                   "tau1", "tau2", "tau4", "n_th", "gamma"]

DEFAULT_POINTS = {CycleMethod.NODE_ESTIMATE: 41, CycleMethod.FULL_DYNAMICS: 21}


class SweepAxis(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: AxisName
    start: float
    stop: float
    points: Optional[int] = Field(default=None, ge=1)
    spacing: Spacing = Spacing.LINEAR

    @model_validator(mode="after")
    def _check(self):
        if self.spacing is Spacing.LOG and (self.start == 0 or self.stop == 0 or (self.start > 0) != (self.stop > 0)):
            raise ValueError("log spacing needs a nonzero range of one sign")
        if (self.points is None or self.points > 1) and self.start == self.stop:
            raise ValueError("axis range is empty")
        return self

    def values(self, method: CycleMethod) -> np.ndarray:
        count = self.points or DEFAULT_POINTS[method]
        if self.spacing is Spacing.LOG:
            return np.geomspace(self.start, self.stop, count)
        return np.linspace(self.start, self.stop, count)


class SweepBlock(BaseModel):
    """The [sweep] block of a run file."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: CycleMethod = CycleMethod.NODE_ESTIMATE
    axes: Tuple[SweepAxis, SweepAxis]

    @model_validator(mode="after")
    def _distinct(self):
        if self.axes[0].name == self.axes[1].name:
            raise ValueError("the two sweep axes must differ")
        if {self.axes[0].name, self.axes[1].name} == {"gain", "kappa_fb"}:
            raise ValueError("gain and kappa_fb describe the same knob; sweep only one")
        return self


class SweepSpec(BaseModel):
    """Two swept axes plus the fixed configuration every cell starts from."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    axes: Tuple[SweepAxis, SweepAxis]
    method: CycleMethod
    system: SystemParams
    feedback: FeedbackSpec
    schedule: ScheduleSpec

    def grid(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.axes[0].values(self.method), self.axes[1].values(self.method)


@dataclass(frozen=True)
class SweepCell:
    i: int
    j: int
    x: float
    y: float
    status: CellStatus
    hamiltonian_stable: bool
    dynamically_stable: bool
    efficiency: Optional[float] = None
    work_total: Optional[float] = None
    heat_absorbed: Optional[float] = None
    functional: Optional[bool] = None
    estimate_efficiency: Optional[float] = None
    estimate_work_total: Optional[float] = None
    estimate_heat_absorbed: Optional[float] = None
    message: str = ""


@dataclass(frozen=True, eq=False)
class SweepResult:
    axis_names: Tuple[str, str]
    x_values: np.ndarray
    y_values: np.ndarray
    method: CycleMethod
    cells: List[SweepCell]
    best_efficiency: Optional[Tuple[int, int]]
    best_work: Optional[Tuple[int, int]]

    def cell(self, i: int, j: int) -> SweepCell:
        return self.cells[i * len(self.y_values) + j]

    def field(self, name: str) -> np.ndarray:
        """Grid of one cell attribute, NaN where the cell has no value."""
        grid = np.full((len(self.x_values), len(self.y_values)), np.nan)
        for cell in self.cells:
            value = getattr(cell, name)
            if value is not None:
                grid[cell.i, cell.j] = float(value)
        return grid


@dataclass(frozen=True, eq=False)
class SliceProfile:
    fixed_axis: str
    fixed_value: float
    axis: str
    values: np.ndarray
    efficiency: np.ndarray
    work_total: np.ndarray
    heat_absorbed: np.ndarray
    status: List[CellStatus]
    estimate_efficiency: np.ndarray
    estimate_work_total: np.ndarray
