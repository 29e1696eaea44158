# thermo.py
# Otto-cycle simulation: detuning protocol, correlation-matrix propagation,
# internal energy, heat and work, per-stroke ledgers and efficiency.

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from otto_engine.common.engine_instance.local_shared_model.data_model.cycle_model import (
    STROKE_KINDS, CycleLedger, CycleNode, HierarchyCheck, LimitCycleResult, StrokeRecord, StrokeSchedule, Trajectory)
from otto_engine.common.engine_instance.local_shared_model.data_model.matrix_model import CorrelationMatrix
from otto_engine.common.engine_instance.local_shared_model.data_model.system_model import FeedbackConfig, SystemParams
from otto_engine.common.engine_instance.local_shared_model.data_model.template_model import ScheduleSpec
from otto_engine.common.engine_instance.local_shared_model.error_model import (
    DegenerateSpectrum, NonRealEnergy, OutOfRange, StepFailure, Unstable, UnstableRegion)
from otto_engine.common.engine_instance.local_shared_model.rule_model import (
    CycleMethod, HeatIntegrand, Propagation, StrokeKind, StrokeRole, Variant)
from otto_engine.common.engine_instance.local_shared_model.settings_model import DEFAULT_SETTINGS, EngineSettings
from optomech_otto.scripts.lyapunov import LyapunovSolver, classify_stability, steady_state
from optomech_otto.scripts.model import build_drift, build_noise, no_feedback
from optomech_otto.scripts.polariton import polariton_basis, to_polariton

log = logging.getLogger("THERMO")

# d(drift)/d(delta_p): only the two cavity diagonal slots depend on the detuning
_DETUNING_SHIFT = np.diag([1j, 0.0, -1j, 0.0])


# --------- Schedule ----------
def resolve_schedule(spec: ScheduleSpec, params: SystemParams, feedback: FeedbackConfig) -> StrokeSchedule:
    rates = {"kappa_fb": feedback.kappa_fb, "gamma": params.gamma,
             "kappa_c": params.kappa_c, "g_coupling": params.g_coupling}
    return StrokeSchedule(delta_i=spec.delta_i, delta_f=spec.delta_f,
                          tau=spec.durations(rates), variant=spec.variant)


def detuning_at(schedule: StrokeSchedule, t: float) -> float:
    _, b1, b2, b3, b4 = schedule.boundaries
    slack = 1e-12 * b4
    if t < -slack or t > b4 + slack:
        raise OutOfRange(f"t={t} outside the cycle [0, {b4}]")
    t = min(max(t, 0.0), b4)
    if t < b1:
        return schedule.delta_i + (schedule.delta_f - schedule.delta_i) * t / schedule.tau[0]
    if t < b2:
        return schedule.delta_f
    if t < b3:
        return schedule.delta_f + (schedule.delta_i - schedule.delta_f) * (t - b2) / schedule.tau[2]
    return schedule.delta_i


# --------- Energetics ----------
def _energy_value(c: np.ndarray, params: SystemParams, feedback: FeedbackConfig, delta_p: float) -> complex:
    squeeze = params.kappa_c - feedback.kappa_fb
    cross = c[1, 0] + c[1, 2] + c[3, 0] + c[3, 2]
    return (-delta_p * c[2, 0] + params.omega_m * c[3, 1] + params.g_coupling * cross
            - 0.5j * squeeze * (c[0, 0] - c[2, 2]))


def internal_energy(state: CorrelationMatrix, params: SystemParams, feedback: FeedbackConfig, delta_p: float,
                    settings: Optional[EngineSettings] = None) -> float:
    settings = settings or DEFAULT_SETTINGS
    value = _energy_value(state.entries, params, feedback, delta_p)
    scale = max(1.0, abs(value), float(np.max(np.abs(state.entries))))
    if abs(value.imag) > settings.energy_imag_tolerance * scale:
        raise NonRealEnergy(f"internal energy has imaginary part {value.imag:.3e}")
    return float(value.real)


def work_rate(state: CorrelationMatrix, d_delta_dt: float) -> float:
    if d_delta_dt == 0:
        return 0.0
    return -d_delta_dt * state.n_photon


def _heat_flux(c: np.ndarray, params: SystemParams, feedback: FeedbackConfig, delta_p: float,
               integrand: HeatIntegrand = HeatIntegrand.LINDBLAD) -> complex:
    squeeze = params.kappa_c - feedback.kappa_fb
    cross = c[1, 0] + c[1, 2] + c[3, 0] + c[3, 2]
    gamma, w, g = params.gamma, params.omega_m, params.g_coupling
    if integrand is HeatIntegrand.LINDBLAD:
        rate = feedback.kappa_fb
        phonon = 2.0 * gamma * w * (params.n_th - c[3, 1])
    else:
        rate = params.kappa_c
        phonon = 2.0 * w * gamma * params.n_th - 2.0 * w * gamma * params.kappa_c * c[3, 1]
    return (phonon + 2.0 * rate * delta_p * (c[2, 0] - feedback.n_opt_fb)
            - (rate + gamma) * g * cross + 1j * rate * squeeze * (c[0, 0] - c[2, 2]))


def heat_rate(state: CorrelationMatrix, params: SystemParams, feedback: FeedbackConfig, delta_p: float,
              integrand: HeatIntegrand = HeatIntegrand.LINDBLAD) -> float:
    """Tr[D(rho) H_fb]: energy flowing in from the two baths."""
    return float(_heat_flux(state.entries, params, feedback, delta_p, integrand).real)


# --------- Propagation ----------
@dataclass
class _Segment:
    end: np.ndarray
    heat: float
    work: float
    times: np.ndarray
    states: np.ndarray
    heat_path: np.ndarray
    work_path: np.ndarray


def _exponential_segment(c0, params, feedback, delta, t_start, t_end, samples, settings, integrand) -> _Segment:
    """C(t) = C_ss + e^{M t}(C0 - C_ss)e^{M^T t}; heat from the closed-form time integral of C."""
    drift = build_drift(params, feedback, delta)
    noise = build_noise(params, feedback)
    stationary = steady_state(drift, noise, settings).entries
    solver = LyapunovSolver(drift.entries, settings)
    offset = c0 - stationary
    stationary_flux = _heat_flux(stationary, params, feedback, delta, integrand).real
    source_flux = _heat_flux(np.zeros((4, 4), dtype=complex), params, feedback, delta, integrand).real

    def evolve(dt: float) -> np.ndarray:
        propagator = scipy.linalg.expm(drift.entries * dt)
        return stationary + propagator @ offset @ propagator.T

    def heat_until(c_t: np.ndarray, dt: float) -> float:
        # int_0^dt (C - C_ss) ds = Y with M Y + Y M^T = C(dt) - C0
        integral = solver.solve(c_t - c0)
        return stationary_flux * dt + _heat_flux(integral, params, feedback, delta, integrand).real - source_flux

    end = evolve(t_end - t_start)
    heat = heat_until(end, t_end - t_start)

    times = np.linspace(t_start, t_end, samples) if samples else np.empty(0)
    states = np.empty((len(times), 4, 4), dtype=complex)
    heat_path = np.zeros(len(times))
    for k, t in enumerate(times):
        states[k] = evolve(t - t_start) if k < len(times) - 1 else end
        heat_path[k] = heat_until(states[k], t - t_start) if k < len(times) - 1 else heat
    return _Segment(end, heat, 0.0, times, states, heat_path, np.zeros(len(times)))


def _runge_kutta_segment(c0, params, feedback, schedule, stroke, t_start, t_end, samples, settings,
                         integrand) -> _Segment:
    """Adaptive RK on the detuning ramp with heat and work carried as two extra ODE components."""
    slope = schedule.stroke_slope(stroke)
    delta_start = detuning_at(schedule, t_start)
    base = build_drift(params, feedback, 0.0).entries
    noise = build_noise(params, feedback).entries

    def rhs(t, y):
        c = y[:16].reshape(4, 4)
        delta = delta_start + slope * (t - t_start)
        m = base + delta * _DETUNING_SHIFT
        out = np.empty(18, dtype=complex)
        out[:16] = (m @ c + c @ m.T + noise).reshape(-1)
        out[16] = _heat_flux(c, params, feedback, delta, integrand)
        out[17] = -slope * c[2, 0]
        return out

    y0 = np.concatenate([np.asarray(c0, dtype=complex).reshape(-1), np.zeros(2, dtype=complex)])
    scale = max(1.0, float(np.max(np.abs(c0))))
    if settings.ramp_step_factor is None:
        max_step = np.inf
    else:
        max_step = settings.ramp_step_factor / max(abs(schedule.delta_i), params.omega_m, params.g_coupling)
    t_eval = np.linspace(t_start, t_end, samples) if samples else None

    solution = solve_ivp(rhs, (t_start, t_end), y0, method=settings.ramp_method, t_eval=t_eval,
                         rtol=settings.rtol, atol=settings.atol * scale, max_step=max_step)
    if not solution.success:
        raise StepFailure(f"ramp integration failed on stroke {stroke}: {solution.message}")

    end = solution.y[:, -1]
    if samples:
        states = solution.y[:16].T.reshape(-1, 4, 4)
        heat_path = solution.y[16].real
        work_path = solution.y[17].real
        times = solution.t
    else:
        states = np.empty((0, 4, 4), dtype=complex)
        heat_path = work_path = times = np.empty(0)
    return _Segment(end[:16].reshape(4, 4), float(end[16].real), float(end[17].real),
                    times, states, heat_path, work_path)


def _run_segment(c0, params, feedback, schedule, stroke, t_start, t_end, method, samples, settings,
                 integrand=HeatIntegrand.LINDBLAD) -> _Segment:
    ramp = STROKE_KINDS[stroke - 1] is StrokeKind.ADIABAT
    if method is Propagation.EXPONENTIAL and ramp:
        raise ValueError("exponential propagation needs a constant detuning segment")
    if ramp or method is Propagation.RUNGE_KUTTA:
        return _runge_kutta_segment(c0, params, feedback, schedule, stroke, t_start, t_end, samples, settings, integrand)
    delta = detuning_at(schedule, t_start)
    return _exponential_segment(c0, params, feedback, delta, t_start, t_end, samples, settings, integrand)


def propagate(state: CorrelationMatrix, params: SystemParams, feedback: FeedbackConfig, schedule: StrokeSchedule,
              t0: float, t1: float, method: Propagation = Propagation.AUTO,
              settings: Optional[EngineSettings] = None) -> CorrelationMatrix:
    """Evolve C from t0 to t1, splitting the interval at stroke boundaries."""
    settings = settings or DEFAULT_SETTINGS
    if not t0 < t1:
        raise ValueError(f"need t0 < t1, got {t0} and {t1}")
    bounds = schedule.boundaries
    if t0 < 0 or t1 > bounds[-1] * (1 + 1e-12):
        raise OutOfRange(f"[{t0}, {t1}] is not inside the cycle [0, {bounds[-1]}]")

    c = np.asarray(state.entries)
    for stroke in range(1, 5):
        start, stop = max(t0, bounds[stroke - 1]), min(t1, bounds[stroke])
        if stop <= start:
            continue
        c = _run_segment(c, params, feedback, schedule, stroke, start, stop, method, 0, settings).end
    return CorrelationMatrix.of(c)


# --------- Ledgers ----------
def _ledger(method, variant, deltas_u, heats, works, residuals, nodes=(), trajectory=None, final_state=None) -> CycleLedger:
    absorbing = 2 if heats[1] > heats[3] else 4
    work_total = works[0] + works[2]
    heat_absorbed = heats[absorbing - 1]
    # eta is only defined for an engine: net work out and heat in; anything else extracts nothing
    if work_total < 0 and heat_absorbed > 0:
        efficiency = -work_total / heat_absorbed
    else:
        efficiency = 0.0

    strokes = []
    for k in range(4):
        kind = STROKE_KINDS[k]
        if kind is StrokeKind.ADIABAT:
            role = StrokeRole.WORK
        else:
            role = StrokeRole.ABSORBED if k + 1 == absorbing else StrokeRole.REJECTED
        strokes.append(StrokeRecord(index=k + 1, kind=kind, role=role, delta_u=deltas_u[k], heat=heats[k],
                                    work=works[k], closure_residual=residuals[k]))

    ledger = CycleLedger(method=method, variant=variant, strokes=tuple(strokes), work_total=work_total,
                         heat_absorbed=heat_absorbed, efficiency=efficiency, absorbing_stroke=absorbing,
                         nodes=tuple(nodes), trajectory=trajectory, final_state=final_state)
    if not ledger.functional:
        log.info(f"engine not functional: W_tot = {work_total:.6g}, Q_abs = {heat_absorbed:.6g}")
    return ledger


def _ledger_from_energies(method, variant, energies, nodes) -> CycleLedger:
    e1, e2, e3, e4 = energies
    deltas_u = [e2 - e1, e3 - e2, e4 - e3, e1 - e4]
    heats = [0.0, deltas_u[1], 0.0, deltas_u[3]]
    works = [deltas_u[0], 0.0, deltas_u[2], 0.0]
    return _ledger(method, variant, deltas_u, heats, works, [0.0] * 4, nodes)


def _polariton_populations(states, deltas, params, feedback, settings):
    upper = np.full(len(states), np.nan)
    lower = np.full(len(states), np.nan)
    cached_delta, basis = None, None
    for k, (c, delta) in enumerate(zip(states, deltas)):
        if delta != cached_delta:
            cached_delta = delta
            try:
                basis = polariton_basis(params, feedback, float(delta), settings)
            except (UnstableRegion, DegenerateSpectrum):
                basis = None
        if basis is None:
            continue
        populations = to_polariton(CorrelationMatrix(c), basis)
        upper[k], lower[k] = populations.n_upper, populations.n_lower
    return upper, lower


def _trajectory(pieces: List[_Segment], schedule, params, feedback, settings) -> Trajectory:
    times, states, heat, work = [], [], [], []
    heat_offset = work_offset = 0.0
    for k, piece in enumerate(pieces):
        first = 0 if k == 0 else 1
        times.append(piece.times[first:])
        states.append(piece.states[first:])
        heat.append(piece.heat_path[first:] + heat_offset)
        work.append(piece.work_path[first:] + work_offset)
        heat_offset += piece.heat
        work_offset += piece.work

    time = np.concatenate(times)
    state = np.concatenate(states)
    detuning = np.array([detuning_at(schedule, t) for t in time])
    energy = np.array([_energy_value(c, params, feedback, d).real for c, d in zip(state, detuning)])
    upper, lower = _polariton_populations(state, detuning, params, feedback, settings)
    return Trajectory(time=time, detuning=detuning, n_photon=state[:, 2, 0].real.copy(),
                      n_phonon=state[:, 3, 1].real.copy(), n_upper=upper, n_lower=lower,
                      energy=energy, heat=np.concatenate(heat), work=np.concatenate(work))


def _require_stable(params, feedback, schedule, settings) -> None:
    for delta in (schedule.delta_i, schedule.delta_f):
        report = classify_stability(build_drift(params, feedback, delta), params, feedback, delta, settings)
        if not report.dynamically_stable:
            raise Unstable(f"drift is unstable at delta_p={delta} (max Re = {report.max_real_eigenvalue:.3e})")


def run_cycle(params: SystemParams, feedback: FeedbackConfig, schedule: StrokeSchedule, *,
              initial: Optional[CorrelationMatrix] = None, samples_per_stroke: Optional[int] = None,
              integrand: HeatIntegrand = HeatIntegrand.LINDBLAD,
              settings: Optional[EngineSettings] = None) -> CycleLedger:
    """Full-dynamics cycle starting, by default, from the steady state at delta_i."""
    settings = settings or DEFAULT_SETTINGS
    samples = settings.trajectory_samples if samples_per_stroke is None else samples_per_stroke
    _require_stable(params, feedback, schedule, settings)
    if initial is None:
        initial = steady_state(build_drift(params, feedback, schedule.delta_i), build_noise(params, feedback), settings)

    bounds = schedule.boundaries
    c = np.asarray(initial.entries)
    deltas_u, heats, works, residuals, pieces = [], [], [], [], []
    for stroke in range(1, 5):
        start, stop = bounds[stroke - 1], bounds[stroke]
        u_start = internal_energy(CorrelationMatrix(c), params, feedback, detuning_at(schedule, start), settings)
        piece = _run_segment(c, params, feedback, schedule, stroke, start, stop, Propagation.AUTO, samples,
                             settings, integrand)
        u_end = internal_energy(CorrelationMatrix(piece.end), params, feedback, detuning_at(schedule, stop), settings)

        delta_u = u_end - u_start
        work = piece.work if STROKE_KINDS[stroke - 1] is StrokeKind.ADIABAT else 0.0
        residual = abs(delta_u - piece.heat - work)
        if residual > settings.closure_tolerance * max(abs(delta_u), abs(piece.heat), abs(work), 1.0):
            log.warning(f"stroke {stroke}: first-law residual {residual:.3e} (dU={delta_u:.6g}, Q={piece.heat:.6g}, W={work:.6g})")
        deltas_u.append(delta_u)
        heats.append(piece.heat)
        works.append(work)
        residuals.append(residual)
        pieces.append(piece)
        c = piece.end

    trajectory = _trajectory(pieces, schedule, params, feedback, settings) if samples else None
    ledger = _ledger(CycleMethod.FULL_DYNAMICS, schedule.variant, deltas_u, heats, works, residuals,
                     trajectory=trajectory, final_state=CorrelationMatrix.of(c))
    log.info(f"cycle done: W_tot={ledger.work_total:.6g}, Q_abs={ledger.heat_absorbed:.6g}, eta={ledger.efficiency:.6g}")
    return ledger


def run_limit_cycle(params: SystemParams, feedback: FeedbackConfig, schedule: StrokeSchedule, *,
                    max_cycles: int = 5, tolerance: float = 1e-4, samples_per_stroke: int = 0,
                    settings: Optional[EngineSettings] = None) -> LimitCycleResult:
    """Repeat the cycle from its own end state until the energy drift per cycle is negligible."""
    ledgers: List[CycleLedger] = []
    state = None
    for count in range(1, max_cycles + 1):
        ledger = run_cycle(params, feedback, schedule, initial=state, samples_per_stroke=samples_per_stroke,
                           settings=settings)
        ledgers.append(ledger)
        state = ledger.final_state
        if abs(ledger.delta_u_total) <= tolerance * abs(ledger.work_total):
            log.info(f"limit cycle reached after {count} cycle(s)")
            return LimitCycleResult(ledgers=ledgers, converged=True)
    log.warning(f"no limit cycle within {max_cycles} cycles")
    return LimitCycleResult(ledgers=ledgers, converged=False)


def compare_feedback_off(params: SystemParams, feedback: FeedbackConfig, schedule: StrokeSchedule, *,
                         samples_per_stroke: int = 0,
                         settings: Optional[EngineSettings] = None) -> tuple[CycleLedger, CycleLedger]:
    """Run the same resolved schedule with the configured feedback and with gain 0."""
    with_feedback = run_cycle(params, feedback, schedule, samples_per_stroke=samples_per_stroke, settings=settings)
    without = run_cycle(params, no_feedback(params, feedback.eta_d), schedule,
                        samples_per_stroke=samples_per_stroke, settings=settings)
    log.info(f"feedback on: W_tot={with_feedback.work_total:.6g}, off: W_tot={without.work_total:.6g}")
    return with_feedback, without


def estimate_cycle(params: SystemParams, feedback: FeedbackConfig, delta_i: float, delta_f: float,
                   variant: Variant = Variant.LOWER, settings: Optional[EngineSettings] = None) -> CycleLedger:
    """
    Node estimate from stationary polariton populations.

    The tracked polariton (B for the lower variant, A for the upper one) keeps
    its population across the adiabats and fully thermalizes on the isochores.
    """
    settings = settings or DEFAULT_SETTINGS
    noise = build_noise(params, feedback)

    def node(delta: float) -> tuple[float, float]:
        basis = polariton_basis(params, feedback, delta, settings)
        populations = to_polariton(steady_state(build_drift(params, feedback, delta), noise, settings), basis)
        if variant is Variant.LOWER:
            return basis.omega_b, populations.n_lower
        return basis.omega_a, populations.n_upper

    omega_i, n_i = node(delta_i)
    omega_f, n_f = node(delta_f)
    nodes = (CycleNode(1, delta_i, omega_i, n_i), CycleNode(2, delta_f, omega_f, n_i),
             CycleNode(3, delta_f, omega_f, n_f), CycleNode(4, delta_i, omega_i, n_f))
    return _ledger_from_energies(CycleMethod.NODE_ESTIMATE, variant, [n.energy for n in nodes], nodes)


def ideal_cycle(params: SystemParams, feedback: FeedbackConfig, delta_i: float, delta_f: float,
                variant: Variant = Variant.LOWER) -> CycleLedger:
    """Uncoupled-mode ledger with perfect adiabats and complete thermalization."""
    w, d_i, d_f = params.omega_m, abs(delta_i), abs(delta_f)
    if not d_f < w < d_i:
        raise ValueError(f"ideal cycle needs |delta_f| < omega_m < |delta_i|, got {d_f}, {w}, {d_i}")
    hot, cold = params.n_th, feedback.n_opt_fb
    if variant is Variant.LOWER:
        upper = [(d_i, cold), (w, cold), (w, cold), (d_i, cold)]
        lower = [(w, hot), (d_f, hot), (d_f, cold), (w, cold)]
        tracked = lower
    else:
        upper = [(d_i, cold), (w, cold), (w, hot), (d_i, hot)]
        lower = [(w, hot), (d_f, hot), (d_f, hot), (w, hot)]
        tracked = upper
    energies = [a[0] * a[1] + b[0] * b[1] for a, b in zip(upper, lower)]
    deltas = (delta_i, delta_f, delta_f, delta_i)
    nodes = [CycleNode(k + 1, deltas[k], tracked[k][0], tracked[k][1]) for k in range(4)]
    return _ledger_from_energies(CycleMethod.NODE_ESTIMATE, variant, energies, nodes)


def check_hierarchy(params: SystemParams, feedback: FeedbackConfig, schedule: StrokeSchedule,
                    margin: Optional[float] = None) -> HierarchyCheck:
    margin = DEFAULT_SETTINGS.hierarchy_margin if margin is None else margin
    tau1, tau2, tau3, tau4 = schedule.tau
    g, kappa, gamma = params.g_coupling, feedback.kappa_fb, params.gamma
    margins = {"tau1*G": tau1 * g, "tau3*G": tau3 * g}
    if schedule.variant is Variant.LOWER:
        margins.update({"1/(kappa_fb*tau1)": 1.0 / (kappa * tau1), "1/(kappa_fb*tau3)": 1.0 / (kappa * tau3),
                        "tau2*kappa_fb": tau2 * kappa, "1/(gamma*tau2)": 1.0 / (gamma * tau2),
                        "tau4*gamma": tau4 * gamma})
        occupancy_ok = feedback.n_opt_fb < params.n_th
    else:
        margins.update({"1/(gamma*tau1)": 1.0 / (gamma * tau1), "1/(gamma*tau3)": 1.0 / (gamma * tau3),
                        "tau2*gamma": tau2 * gamma, "1/(kappa_fb*tau2)": 1.0 / (kappa * tau2),
                        "tau4*kappa_fb": tau4 * kappa})
        occupancy_ok = feedback.n_opt_fb > params.n_th
    satisfied = occupancy_ok and all(value >= margin for value in margins.values())
    return HierarchyCheck(satisfied=satisfied, margins=margins, occupancy_ok=occupancy_ok, required_margin=margin)
