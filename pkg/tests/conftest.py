import pytest

from otto_engine.common.engine_instance.local_shared_model.data_model.cycle_model import StrokeSchedule
from otto_engine.common.engine_instance.local_shared_model.data_model.system_model import SystemParams
from otto_engine.common.engine_instance.local_shared_model.rule_model import Variant
from optomech_otto.scripts.model import feedback_from_kappa_fb, no_feedback

KAPPA_C = 0.05
GAMMA = 5e-5
N_TH = 300.0
KAPPA_FB = 0.0075


@pytest.fixture
def baseline_params():
    """2kappa_c = 0.1, 2gamma = 1e-4, n_th = 300, G = 0.05."""
    return SystemParams(kappa_c=KAPPA_C, gamma=GAMMA, g_coupling=0.05, n_th=N_TH)


@pytest.fixture
def baseline_feedback(baseline_params):
    return feedback_from_kappa_fb(baseline_params, KAPPA_FB)


@pytest.fixture
def cycle_params():
    return SystemParams(kappa_c=KAPPA_C, gamma=GAMMA, g_coupling=0.2, n_th=N_TH)


@pytest.fixture
def cycle_feedback(cycle_params):
    return feedback_from_kappa_fb(cycle_params, KAPPA_FB)


@pytest.fixture
def cycle_feedback_off(cycle_params):
    return no_feedback(cycle_params)


@pytest.fixture
def cycle_schedule():
    return StrokeSchedule(delta_i=-3.0, delta_f=-0.3, tau=(35.0, 135.0, 35.0, 20.0 / GAMMA), variant=Variant.LOWER)


@pytest.fixture
def decoupled_params():
    return SystemParams(kappa_c=KAPPA_C, gamma=GAMMA, g_coupling=0.0, n_th=N_TH)


@pytest.fixture(autouse=True)
def _no_redis(monkeypatch):
    monkeypatch.delenv("OTTO_REDIS_URL", raising=False)
    monkeypatch.delenv("OTTO_WORKERS", raising=False)
