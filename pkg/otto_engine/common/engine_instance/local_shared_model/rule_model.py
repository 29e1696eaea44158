from enum import Enum, auto


class Variant(Enum):
    LOWER = "lower"
    UPPER = "upper"


class CycleMethod(Enum):
    NODE_ESTIMATE = "node-estimate"
    FULL_DYNAMICS = "full-dynamics"


class Spacing(Enum):
    LINEAR = "linear"
    LOG = "log"


class CellStatus(Enum):
    OK = "ok"
    UNSTABLE = "unstable"
    FAILED = "failed"


class StrokeKind(Enum):
    ADIABAT = "adiabat"
    ISOCHORE = "isochore"


class StrokeRole(Enum):
    WORK = "work"
    ABSORBED = "absorbed"
    REJECTED = "rejected"


class Propagation(Enum):
    AUTO = auto()
    EXPONENTIAL = auto()
    RUNGE_KUTTA = auto()


class HeatIntegrand(Enum):
    # dissipators with (kappa_fb, n_opt_fb) and (gamma, n_th)
    LINDBLAD = auto()
    # bare kappa_c rates, including the omega_m*gamma*kappa_c phonon term
    BARE_CAVITY = auto()


class CacheCommand(Enum):
    S_GET = 1
    S_SET = 2
