from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from otto_engine.common.engine_instance.local_shared_model.data_model.matrix_model import CorrelationMatrix
from otto_engine.common.engine_instance.local_shared_model.rule_model import CycleMethod, StrokeKind, StrokeRole, Variant

STROKE_KINDS = (StrokeKind.ADIABAT, StrokeKind.ISOCHORE, StrokeKind.ADIABAT, StrokeKind.ISOCHORE)


class StrokeSchedule(BaseModel):
    """
    Piecewise-linear detuning protocol.

    Stroke 1 ramps delta_i -> delta_f, stroke 2 holds delta_f, stroke 3 ramps
    back and stroke 4 holds delta_i.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta_i: float
    delta_f: float
    tau: Tuple[float, float, float, float]
    variant: Variant = Variant.LOWER

    @field_validator("tau")
    @classmethod
    def _positive(cls, value):
        if any(t <= 0 for t in value):
            raise ValueError(f"stroke durations must be positive, got {value}")
        return value

    @model_validator(mode="after")
    def _order(self):
        if not self.delta_i < self.delta_f < 0:
            raise ValueError(f"expected delta_i < delta_f < 0, got delta_i={self.delta_i}, delta_f={self.delta_f}")
        return self

    @property
    def boundaries(self) -> Tuple[float, float, float, float, float]:
        t1 = self.tau[0]
        t2 = t1 + self.tau[1]
        t3 = t2 + self.tau[2]
        return 0.0, t1, t2, t3, t3 + self.tau[3]

    @property
    def period(self) -> float:
        return self.boundaries[-1]

    def stroke_slope(self, stroke: int) -> float:
        """dDelta/dt inside stroke 1..4."""
        if stroke == 1:
            return (self.delta_f - self.delta_i) / self.tau[0]
        if stroke == 3:
            return (self.delta_i - self.delta_f) / self.tau[2]
        return 0.0


@dataclass(frozen=True)
class StrokeRecord:
    index: int
    kind: StrokeKind
    role: StrokeRole
    delta_u: float
    heat: float
    work: float
    closure_residual: float


@dataclass(frozen=True)
class CycleNode:
    """Polariton frequency and population at one corner of the cycle."""

    index: int
    detuning: float
    frequency: float
    population: float

    @property
    def energy(self) -> float:
        return self.frequency * self.population


@dataclass(frozen=True, eq=False)
class Trajectory:
    time: np.ndarray
    detuning: np.ndarray
    n_photon: np.ndarray
    n_phonon: np.ndarray
    n_upper: np.ndarray
    n_lower: np.ndarray
    energy: np.ndarray
    heat: np.ndarray
    work: np.ndarray

    COLUMNS = ("t", "delta_p", "n_photon", "n_phonon", "n_upper", "n_lower", "energy", "heat", "work")

    def columns(self) -> Dict[str, np.ndarray]:
        values = (self.time, self.detuning, self.n_photon, self.n_phonon, self.n_upper,
                  self.n_lower, self.energy, self.heat, self.work)
        return dict(zip(self.COLUMNS, values))


@dataclass(frozen=True, eq=False)
class CycleLedger:
    method: CycleMethod
    variant: Variant
    strokes: Tuple[StrokeRecord, ...]
    work_total: float
    heat_absorbed: float
    efficiency: float
    absorbing_stroke: int
    nodes: Tuple[CycleNode, ...] = ()
    trajectory: Optional[Trajectory] = None
    final_state: Optional[CorrelationMatrix] = None

    @property
    def functional(self) -> bool:
        """Engine mode means net work done by the system with heat taken in."""
        return bool(self.work_total < 0 and self.heat_absorbed > 0)

    @property
    def work_extracted(self) -> float:
        return -self.work_total

    @property
    def delta_u_total(self) -> float:
        return sum(s.delta_u for s in self.strokes)

    @property
    def heat_net(self) -> float:
        return sum(s.heat for s in self.strokes)


@dataclass(frozen=True)
class HierarchyCheck:
    satisfied: bool
    margins: Dict[str, float]
    occupancy_ok: bool
    required_margin: float


@dataclass(frozen=True, eq=False)
class LimitCycleResult:
    ledgers: List[CycleLedger] = field(default_factory=list)
    converged: bool = False

    @property
    def final(self) -> CycleLedger:
        return self.ledgers[-1]
