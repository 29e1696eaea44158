# model.py
# Effective feedback model and the matrix builders of the linearized dynamics.
# Units: hbar = 1, omega_m = 1. Ordering (a, b, a+, b+).

import logging
import math

import numpy as np

from otto_engine.common.engine_instance.local_shared_model.data_model.matrix_model import DriftMatrix, HamiltonianMatrix, NoiseMatrix
from otto_engine.common.engine_instance.local_shared_model.data_model.system_model import FeedbackConfig, SystemParams
from otto_engine.common.engine_instance.local_shared_model.data_model.template_model import FeedbackSpec
from otto_engine.common.engine_instance.local_shared_model.error_model import FeedbackUnstable, InvalidEfficiency
from otto_engine.common.engine_instance.engine_services.shared.helper_method import helper_method

log = logging.getLogger("MODEL")

# --------- Config ----------
DEFAULT_ETA_D = 0.6


# --------- Feedback mapping ----------
def _check_mirrors(kappa_c: float, kappa_1: float, kappa_2: float, eta_d: float) -> None:
    if not 0.0 < eta_d <= 1.0:
        raise InvalidEfficiency(f"eta_d must lie in (0, 1], got {eta_d}")
    if min(kappa_c, kappa_1, kappa_2) <= 0:
        raise ValueError("cavity decay rates must be positive")
    if not math.isclose(kappa_1 + kappa_2, kappa_c, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(f"kappa_1 + kappa_2 must equal kappa_c, got {kappa_1} + {kappa_2} != {kappa_c}")


def effective_feedback(kappa_c: float, kappa_1: float, kappa_2: float, gain: float,
                       eta_d: float = DEFAULT_ETA_D) -> tuple[float, float]:
    """
    Map the feedback gain onto the effective cavity bath.

    Returns
    -------
    (kappa_fb, n_opt_fb)
        Feedback-modified cavity decay and the occupancy of the effective optical bath.
    """
    _check_mirrors(kappa_c, kappa_1, kappa_2, eta_d)
    kappa_fb = kappa_c - 2.0 * gain * math.sqrt(eta_d * kappa_1 * kappa_2)
    if kappa_fb <= 0:
        raise FeedbackUnstable(f"gain {gain} drives kappa_fb to {kappa_fb}; feedback loop is unstable")
    n_opt_fb = (kappa_c - kappa_fb) ** 2 / (eta_d * kappa_c * kappa_fb)
    return kappa_fb, n_opt_fb


def invert_feedback(kappa_c: float, kappa_fb: float, kappa_1: float, kappa_2: float,
                    eta_d: float = DEFAULT_ETA_D) -> float:
    if kappa_fb <= 0:
        raise FeedbackUnstable(f"kappa_fb must be positive, got {kappa_fb}")
    _check_mirrors(kappa_c, kappa_1, kappa_2, eta_d)
    return (kappa_c - kappa_fb) / (2.0 * math.sqrt(eta_d * kappa_1 * kappa_2))


def kappa_fb_for_occupancy(kappa_c: float, n_opt_fb: float, eta_d: float = DEFAULT_ETA_D) -> float:
    """Smaller root of (kappa_c - x)^2 = n eta_d kappa_c x, i.e. the narrowing branch."""
    if n_opt_fb < 0:
        raise ValueError("occupancy must be non-negative")
    half_sum = kappa_c + 0.5 * n_opt_fb * eta_d * kappa_c
    return kappa_c ** 2 / (half_sum + math.sqrt(half_sum ** 2 - kappa_c ** 2))


def feedback_from_gain(params: SystemParams, gain: float, eta_d: float = DEFAULT_ETA_D) -> FeedbackConfig:
    kappa_fb, n_opt_fb = effective_feedback(params.kappa_c, params.kappa_1, params.kappa_2, gain, eta_d)
    if kappa_fb > params.kappa_c:
        log.warning(f"negative gain {gain}: kappa_fb = {kappa_fb} exceeds kappa_c, feedback broadens the cavity")
    return FeedbackConfig(gain=gain, eta_d=eta_d, kappa_fb=kappa_fb, n_opt_fb=n_opt_fb)


def feedback_from_kappa_fb(params: SystemParams, kappa_fb: float, eta_d: float = DEFAULT_ETA_D) -> FeedbackConfig:
    gain = invert_feedback(params.kappa_c, kappa_fb, params.kappa_1, params.kappa_2, eta_d)
    if kappa_fb > params.kappa_c:
        log.warning(f"kappa_fb = {kappa_fb} exceeds kappa_c, feedback broadens the cavity")
    # keep the requested kappa_fb verbatim instead of re-deriving it from the gain
    n_opt_fb = (params.kappa_c - kappa_fb) ** 2 / (eta_d * params.kappa_c * kappa_fb)
    return FeedbackConfig(gain=gain, eta_d=eta_d, kappa_fb=kappa_fb, n_opt_fb=n_opt_fb)


def resolve_feedback(params: SystemParams, spec: FeedbackSpec) -> FeedbackConfig:
    if spec.kappa_fb is not None:
        return feedback_from_kappa_fb(params, spec.kappa_fb, spec.eta_d)
    return feedback_from_gain(params, spec.gain, spec.eta_d)


def no_feedback(params: SystemParams, eta_d: float = DEFAULT_ETA_D) -> FeedbackConfig:
    return feedback_from_gain(params, 0.0, eta_d)


# --------- Matrix builders ----------
def build_drift(params: SystemParams, feedback: FeedbackConfig, delta_p: float) -> DriftMatrix:
    kappa_fb = feedback.kappa_fb
    squeeze = params.kappa_c - feedback.kappa_fb
    g = params.g_coupling
    entries = -np.array(
        [[kappa_fb - 1j * delta_p, 1j * g, -squeeze, 1j * g],
         [1j * g, params.gamma + 1j * params.omega_m, 1j * g, 0.0],
         [-squeeze, -1j * g, kappa_fb + 1j * delta_p, -1j * g],
         [-1j * g, 0.0, -1j * g, params.gamma - 1j * params.omega_m]],
        dtype=complex)
    return DriftMatrix(entries=helper_method.frozen(entries), detuning=float(delta_p))


def build_noise(params: SystemParams, feedback: FeedbackConfig) -> NoiseMatrix:
    entries = np.zeros((4, 4), dtype=complex)
    entries[0, 2] = 2.0 * feedback.kappa_fb * (feedback.n_opt_fb + 1.0)
    entries[2, 0] = 2.0 * feedback.kappa_fb * feedback.n_opt_fb
    entries[1, 3] = 2.0 * params.gamma * (params.n_th + 1.0)
    entries[3, 1] = 2.0 * params.gamma * params.n_th
    return NoiseMatrix(entries=helper_method.frozen(entries))


def build_hamiltonian(params: SystemParams, feedback: FeedbackConfig, delta_p: float) -> HamiltonianMatrix:
    """Symmetric H with H_fb = v^T H v + const; the coherent part of the drift is -2i (I H)."""
    squeeze = params.kappa_c - feedback.kappa_fb
    g = params.g_coupling
    w = params.omega_m
    entries = 0.5 * np.array(
        [[-1j * squeeze, g, -delta_p, g],
         [g, 0.0, g, w],
         [-delta_p, g, 1j * squeeze, g],
         [g, w, g, 0.0]],
        dtype=complex)
    return HamiltonianMatrix(entries=helper_method.frozen(entries), detuning=float(delta_p))


def stability_boundary(params: SystemParams, feedback: FeedbackConfig) -> float:
    """Critical detuning: the lower polariton is real positive only below it."""
    g2 = params.g_coupling ** 2
    squeeze = params.kappa_c - feedback.kappa_fb
    w = params.omega_m
    return -2.0 * g2 / w - math.sqrt(4.0 * g2 ** 2 / w ** 2 + squeeze ** 2)
