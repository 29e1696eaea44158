"""
Normal modes of the coupled cavity-mechanics system.

The quadratic Hamiltonian H_fb = v^T H v generates v' = -2i (I H) v, so the
polariton operators follow from the eigenproblem (I H) T = T D with
D = diag(w_A, w_B, -w_A, -w_B) / 2. Columns of T are fixed to unit symplectic
norm and a deterministic phase, which makes T I T^T = I and G T G = T*.
"""

import logging
from typing import Iterable, Optional

import numpy as np
import scipy.linalg

from otto_engine.common.engine_instance.engine_services.shared.helper_method import helper_method
from otto_engine.common.engine_instance.local_shared_model.data_model.matrix_model import CorrelationMatrix, PolaritonBasis, PolaritonSpectrum, PolaritonState
from otto_engine.common.engine_instance.local_shared_model.data_model.system_model import FeedbackConfig, SystemParams
from otto_engine.common.engine_instance.local_shared_model.error_model import DegenerateSpectrum, UnstableRegion
from otto_engine.common.engine_instance.local_shared_model.settings_model import DEFAULT_SETTINGS, EngineSettings
from optomech_otto.scripts.model import build_hamiltonian, stability_boundary

log = logging.getLogger("POLARITON")


def polariton_frequencies(params: SystemParams, feedback: FeedbackConfig, delta_p: float) -> tuple[float, float]:
    """Closed-form upper and lower polariton frequencies."""
    squeeze = params.kappa_c - feedback.kappa_fb
    w = params.omega_m
    shifted = delta_p ** 2 - squeeze ** 2
    inner = (shifted - w ** 2) ** 2 - 16.0 * params.g_coupling ** 2 * delta_p * w
    if inner < 0:
        raise UnstableRegion(f"complex polariton frequencies at delta_p={delta_p}")
    root = np.sqrt(inner)
    upper_sq = 0.5 * (shifted + w ** 2 + root)
    lower_sq = 0.5 * (shifted + w ** 2 - root)
    if lower_sq <= 0 or delta_p >= stability_boundary(params, feedback):
        raise UnstableRegion(f"lower polariton is not real positive at delta_p={delta_p} (omega_B^2={lower_sq:.3e})")
    return float(np.sqrt(upper_sq)), float(np.sqrt(lower_sq))


def _normalised_mode(vector: np.ndarray, form: np.ndarray, exchange: np.ndarray, delta_p: float) -> np.ndarray:
    norm = vector @ form @ (exchange @ np.conj(vector))
    if norm.real <= 0:
        raise UnstableRegion(f"positive-frequency mode has non-positive symplectic norm at delta_p={delta_p}")
    vector = vector / np.sqrt(norm.real)
    pivot = int(np.argmax(np.abs(vector)))
    return vector * np.exp(-1j * np.angle(vector[pivot]))


def polariton_basis(params: SystemParams, feedback: FeedbackConfig, delta_p: float,
                    settings: Optional[EngineSettings] = None) -> PolaritonBasis:
    settings = settings or DEFAULT_SETTINGS
    omega_a, omega_b = polariton_frequencies(params, feedback, delta_p)
    if omega_a - omega_b < settings.degeneracy_threshold:
        raise DegenerateSpectrum(f"omega_A - omega_B = {omega_a - omega_b:.3e} at delta_p={delta_p}")

    form = helper_method.symplectic_form()
    exchange = helper_method.exchange_matrix()
    hamiltonian = build_hamiltonian(params, feedback, delta_p).entries
    values, vectors = scipy.linalg.eig(form @ hamiltonian)
    order = np.argsort(-values.real)

    upper = _normalised_mode(vectors[:, order[0]], form, exchange, delta_p)
    lower = _normalised_mode(vectors[:, order[1]], form, exchange, delta_p)
    transform = np.column_stack([upper, lower, exchange @ np.conj(upper), exchange @ np.conj(lower)])
    eigenvalues = np.array([values[order[0]], values[order[1]], -values[order[0]], -values[order[1]]])

    return PolaritonBasis(
        transform=helper_method.frozen(transform),
        omega_a=omega_a,
        omega_b=omega_b,
        detuning=float(delta_p),
        eigenvalues=helper_method.frozen(eigenvalues),
    )


def to_polariton(state: CorrelationMatrix, basis: PolaritonBasis) -> PolaritonState:
    inverse = basis.inverse
    correlations = inverse @ state.entries @ inverse.T
    return PolaritonState(
        n_upper=float(correlations[2, 0].real),
        n_lower=float(correlations[3, 1].real),
        correlations=helper_method.frozen(correlations),
    )


def from_polariton(state: PolaritonState, basis: PolaritonBasis) -> CorrelationMatrix:
    t = basis.transform
    return CorrelationMatrix.of(t @ state.correlations @ t.T)


def polariton_spectrum(params: SystemParams, feedback: FeedbackConfig, deltas: Iterable[float]) -> PolaritonSpectrum:
    deltas = np.asarray(list(deltas), dtype=float)
    omega_a = np.full(deltas.shape, np.nan)
    omega_b = np.full(deltas.shape, np.nan)
    stable = np.zeros(deltas.shape, dtype=bool)
    for k, delta in enumerate(deltas):
        try:
            omega_a[k], omega_b[k] = polariton_frequencies(params, feedback, float(delta))
            stable[k] = True
        except UnstableRegion:
            continue
    log.info(f"spectrum over {len(deltas)} detunings, {int(stable.sum())} stable")
    return PolaritonSpectrum(detunings=deltas, omega_a=omega_a, omega_b=omega_b, hamiltonian_stable=stable)
