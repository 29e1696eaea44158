import logging
from typing import Optional

import numpy as np
import scipy.linalg

from otto_engine.common.engine_instance.engine_services.shared.helper_method import helper_method
from otto_engine.common.engine_instance.local_shared_model.data_model.matrix_model import CorrelationMatrix, DriftMatrix, NoiseMatrix, StabilityReport
from otto_engine.common.engine_instance.local_shared_model.data_model.system_model import FeedbackConfig, SystemParams
from otto_engine.common.engine_instance.local_shared_model.error_model import SingularSystem, Unstable
from otto_engine.common.engine_instance.local_shared_model.settings_model import DEFAULT_SETTINGS, EngineSettings
from optomech_otto.scripts.model import stability_boundary

log = logging.getLogger("LYAPUNOV")


class LyapunovSolver:
    """Factorised super-operator L(C) = M C + C M^T for one drift matrix."""

    def __init__(self, drift: np.ndarray, settings: EngineSettings = DEFAULT_SETTINGS):
        self.drift = np.asarray(drift, dtype=complex)
        operator = helper_method.lyapunov_operator(self.drift)
        condition = np.linalg.cond(operator)
        if not np.isfinite(condition) or condition > settings.singular_condition:
            raise SingularSystem(f"Lyapunov operator is numerically singular (condition number {condition:.3e})")
        self._operator = operator
        self._factor = scipy.linalg.lu_factor(operator)

    def apply(self, correlations: np.ndarray) -> np.ndarray:
        return self.drift @ correlations + correlations @ self.drift.T

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Return X with M X + X M^T = rhs, refined once against the residual."""
        flat = np.asarray(rhs, dtype=complex).reshape(-1)
        solution = scipy.linalg.lu_solve(self._factor, flat)
        correction = scipy.linalg.lu_solve(self._factor, flat - self._operator @ solution)
        return (solution + correction).reshape(rhs.shape)


def max_real_eigenvalue(drift: DriftMatrix) -> float:
    return float(np.max(np.linalg.eigvals(drift.entries).real))


def lyapunov_residual(drift: DriftMatrix, noise: NoiseMatrix, state: CorrelationMatrix) -> float:
    """Backward error of M C + C M^T + N = 0, relative to the size of its terms."""
    m = drift.entries
    c = state.entries
    residual = m @ c + c @ m.T + noise.entries
    scale = max(helper_method.max_abs(noise.entries), helper_method.max_abs(m) * helper_method.max_abs(c)) or 1.0
    return helper_method.max_abs(residual) / scale


def steady_state(drift: DriftMatrix, noise: NoiseMatrix,
                 settings: Optional[EngineSettings] = None) -> CorrelationMatrix:
    """Stationary correlations C_ss = -L^{-1} N of a dynamically stable drift."""
    settings = settings or DEFAULT_SETTINGS
    leading = max_real_eigenvalue(drift)
    if leading >= -settings.stability_tolerance:
        raise Unstable(f"drift at delta_p={drift.detuning} has an eigenvalue with real part {leading:.3e}")

    solver = LyapunovSolver(drift.entries, settings)
    raw = solver.solve(-np.asarray(noise.entries))
    # C and E C^dagger E solve the same equation; averaging removes rounding asymmetry only
    state = CorrelationMatrix.of(0.5 * (raw + helper_method.correlation_image(raw)))

    residual = lyapunov_residual(drift, noise, state)
    if residual > settings.residual_tolerance:
        raise SingularSystem(f"Lyapunov residual {residual:.3e} above {settings.residual_tolerance:.1e} "
                             f"at delta_p={drift.detuning}")
    scale = max(1.0, helper_method.max_abs(state.entries))
    commutator = state.commutator_residual()
    if commutator > settings.commutator_tolerance * scale:
        raise SingularSystem(f"commutator entries off by {commutator:.3e} at delta_p={drift.detuning}")
    log.debug(f"steady state at delta_p={drift.detuning}: residual {residual:.1e}, commutator {commutator:.1e}")
    return state


def classify_stability(drift: DriftMatrix, params: SystemParams, feedback: FeedbackConfig, delta_p: float,
                       settings: Optional[EngineSettings] = None) -> StabilityReport:
    settings = settings or DEFAULT_SETTINGS
    boundary = stability_boundary(params, feedback)
    leading = max_real_eigenvalue(drift)
    return StabilityReport(
        hamiltonian_stable=bool(delta_p < boundary),
        dynamically_stable=bool(leading < -settings.stability_tolerance),
        max_real_eigenvalue=leading,
        boundary_detuning=boundary,
    )
