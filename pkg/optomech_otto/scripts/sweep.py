import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Tuple

import numpy as np
from tqdm import tqdm

from otto_engine.common.engine_instance.engine_services.cache_manager.cell_cache import cell_cache
from otto_engine.common.engine_instance.engine_services.shared.helper_method import helper_method
from otto_engine.common.engine_instance.local_shared_model.data_model.sweep_model import SliceProfile, SweepCell, SweepResult, SweepSpec
from otto_engine.common.engine_instance.local_shared_model.data_model.system_model import SystemParams
from otto_engine.common.engine_instance.local_shared_model.data_model.template_model import FeedbackSpec, ScheduleSpec
from otto_engine.common.engine_instance.local_shared_model.error_model import FeedbackUnstable, OffGrid, OttoEngineError, StabilityError
from otto_engine.common.engine_instance.local_shared_model.rule_model import CacheCommand, CellStatus, CycleMethod
from otto_engine.common.engine_instance.local_shared_model.settings_model import DEFAULT_SETTINGS, EngineSettings
from optomech_otto.scripts.lyapunov import classify_stability
from optomech_otto.scripts.model import build_drift, resolve_feedback
from optomech_otto.scripts.thermo import estimate_cycle, resolve_schedule, run_cycle

log = logging.getLogger("SWEEP")

# --------- Config ----------
WORKERS_ENV = "OTTO_WORKERS"
CACHE_NAMESPACE = "OTTO:cell"
CACHE_EXPIRY = 7 * 24 * 3600

_SYSTEM_AXES = ("g_coupling", "n_th", "gamma")
_SCHEDULE_AXES = ("delta_f", "delta_i", "tau1", "tau2", "tau4")


def default_workers() -> int:
    raw = os.getenv(WORKERS_ENV, "").strip()
    return max(1, int(raw)) if raw else 1


# --------- Cells ----------
def cell_config(spec: SweepSpec, x: float, y: float) -> Tuple[SystemParams, FeedbackSpec, ScheduleSpec]:
    """Substitute the two axis values into the fixed configuration."""
    system = spec.system.model_dump()
    feedback = spec.feedback.model_dump()
    schedule = spec.schedule.model_dump()
    for axis, value in zip(spec.axes, (x, y)):
        name = axis.name
        if name in _SYSTEM_AXES:
            system[name] = value
        elif name == "kappa_fb":
            feedback.update(kappa_fb=value, gain=None)
        elif name == "gain":
            feedback.update(gain=value, kappa_fb=None)
        elif name == "eta_d":
            feedback["eta_d"] = value
        elif name == "tau1":
            schedule.update(tau1=value, tau3=value)
        elif name in _SCHEDULE_AXES:
            schedule[name] = value
    return (SystemParams.model_validate(system), FeedbackSpec.model_validate(feedback),
            ScheduleSpec.model_validate(schedule))


def evaluate_cell(spec: SweepSpec, i: int, j: int, settings: Optional[EngineSettings] = None) -> SweepCell:
    """Run one grid cell in isolation; errors end up in the cell status, never raised."""
    settings = settings or DEFAULT_SETTINGS
    xs, ys = spec.grid()
    x, y = float(xs[i]), float(ys[j])

    try:
        params, feedback_spec, schedule_spec = cell_config(spec, x, y)
        feedback = resolve_feedback(params, feedback_spec)
    except FeedbackUnstable as ex:
        return SweepCell(i, j, x, y, CellStatus.UNSTABLE, False, False, message=str(ex))
    except (OttoEngineError, ValueError) as ex:
        return SweepCell(i, j, x, y, CellStatus.FAILED, False, False, message=str(ex))

    reports = [classify_stability(build_drift(params, feedback, delta), params, feedback, delta, settings)
               for delta in (schedule_spec.delta_i, schedule_spec.delta_f)]
    hamiltonian_stable = all(r.hamiltonian_stable for r in reports)
    dynamically_stable = all(r.dynamically_stable for r in reports)
    if not (hamiltonian_stable and dynamically_stable):
        return SweepCell(i, j, x, y, CellStatus.UNSTABLE, hamiltonian_stable, dynamically_stable,
                         message="outside the stable region")

    estimate, message = None, ""
    try:
        estimate = estimate_cycle(params, feedback, schedule_spec.delta_i, schedule_spec.delta_f,
                                  schedule_spec.variant, settings)
    except OttoEngineError as ex:
        message = f"node estimate: {ex}"
        if spec.method is CycleMethod.NODE_ESTIMATE:
            status = CellStatus.UNSTABLE if isinstance(ex, StabilityError) else CellStatus.FAILED
            return SweepCell(i, j, x, y, status, hamiltonian_stable, dynamically_stable, message=message)

    if spec.method is CycleMethod.NODE_ESTIMATE:
        return SweepCell(i, j, x, y, CellStatus.OK, hamiltonian_stable, dynamically_stable,
                         efficiency=estimate.efficiency, work_total=estimate.work_total,
                         heat_absorbed=estimate.heat_absorbed, functional=estimate.functional)

    try:
        schedule = resolve_schedule(schedule_spec, params, feedback)
        ledger = run_cycle(params, feedback, schedule, samples_per_stroke=0, settings=settings)
    except StabilityError as ex:
        return SweepCell(i, j, x, y, CellStatus.UNSTABLE, hamiltonian_stable, dynamically_stable, message=str(ex))
    except (OttoEngineError, ValueError, FloatingPointError) as ex:
        return SweepCell(i, j, x, y, CellStatus.FAILED, hamiltonian_stable, dynamically_stable, message=str(ex))

    return SweepCell(i, j, x, y, CellStatus.OK, hamiltonian_stable, dynamically_stable,
                     efficiency=ledger.efficiency, work_total=ledger.work_total,
                     heat_absorbed=ledger.heat_absorbed, functional=ledger.functional,
                     estimate_efficiency=None if estimate is None else estimate.efficiency,
                     estimate_work_total=None if estimate is None else estimate.work_total,
                     estimate_heat_absorbed=None if estimate is None else estimate.heat_absorbed,
                     message=message)


def _evaluate_job(job) -> SweepCell:
    spec, i, j, settings = job
    return evaluate_cell(spec, i, j, settings)


# --------- Cache ----------
def _cell_key(spec: SweepSpec, x: float, y: float, settings: EngineSettings) -> str:
    payload = {
        "method": spec.method,
        "system": spec.system,
        "feedback": spec.feedback,
        "schedule": spec.schedule,
        "axes": [[spec.axes[0].name, x], [spec.axes[1].name, y]],
        "settings": settings,
    }
    return helper_method.cache_key(CACHE_NAMESPACE, payload)


def _dump_cell(cell: SweepCell) -> str:
    # json keeps NaN and full float precision
    return json.dumps({**dataclasses.asdict(cell), "status": cell.status.value})


def _load_cell(text: str) -> SweepCell:
    data = json.loads(text)
    data["status"] = CellStatus(data["status"])
    return SweepCell(**data)


# --------- Driver ----------
def _argmax(cells, score) -> Optional[Tuple[int, int]]:
    best, best_value = None, -math.inf
    for cell in cells:
        if cell.status is not CellStatus.OK or not cell.functional:
            continue
        value = score(cell)
        if value is not None and math.isfinite(value) and value > best_value:
            best, best_value = (cell.i, cell.j), value
    return best


def run_sweep(spec: SweepSpec, workers: Optional[int] = None, cache: Optional[cell_cache] = None,
              settings: Optional[EngineSettings] = None, progress: bool = True) -> SweepResult:
    settings = settings or DEFAULT_SETTINGS
    workers = default_workers() if workers is None else max(1, workers)
    xs, ys = spec.grid()
    indices = [(i, j) for i in range(len(xs)) for j in range(len(ys))]
    cells = [None] * len(indices)
    keys = [None] * len(indices)

    pending = []
    for n, (i, j) in enumerate(indices):
        if cache is not None:
            keys[n] = _cell_key(spec, float(xs[i]), float(ys[j]), settings)
            stored = cache.invoke_trigger(CacheCommand.S_GET, [keys[n], None])
            if stored:
                cells[n] = dataclasses.replace(_load_cell(stored), i=i, j=j)
                continue
        pending.append(n)

    log.info(f"{spec.method.value} sweep {spec.axes[0].name} x {spec.axes[1].name}: "
             f"{len(xs)}x{len(ys)} cells, {len(indices) - len(pending)} cached, {workers} worker(s)")

    jobs = [(spec, indices[n][0], indices[n][1], settings) for n in pending]
    bar = tqdm(total=len(jobs), desc="sweep", unit="cell", disable=not progress)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for n, cell in zip(pending, pool.map(_evaluate_job, jobs)):
                cells[n] = cell
                bar.update(1)
    else:
        for n, job in zip(pending, jobs):
            cells[n] = _evaluate_job(job)
            bar.update(1)
    bar.close()

    if cache is not None:
        for n in pending:
            cache.invoke_trigger(CacheCommand.S_SET, [keys[n], _dump_cell(cells[n]), CACHE_EXPIRY])

    counts = {status: sum(c.status is status for c in cells) for status in CellStatus}
    log.info(", ".join(f"{status.value}={count}" for status, count in counts.items()))

    return SweepResult(
        axis_names=(spec.axes[0].name, spec.axes[1].name),
        x_values=xs,
        y_values=ys,
        method=spec.method,
        cells=cells,
        best_efficiency=_argmax(cells, lambda c: c.efficiency),
        best_work=_argmax(cells, lambda c: -c.work_total),
    )


# --------- Slices ----------
def _grid_index(values: np.ndarray, value: float, axis: str) -> int:
    scale = max(1.0, float(np.max(np.abs(values))))
    hits = np.flatnonzero(np.isclose(values, value, rtol=1e-9, atol=1e-12 * scale))
    if hits.size == 0:
        raise OffGrid(f"{axis}={value} is not a grid value")
    return int(hits[0])


def extract_slice(result: SweepResult, axis: str, value: float) -> SliceProfile:
    """Hold `axis` at the grid value `value` and return the profile along the other axis."""
    if axis not in result.axis_names:
        raise OffGrid(f"'{axis}' is not one of the swept axes {result.axis_names}")

    if axis == result.axis_names[0]:
        index = _grid_index(result.x_values, value, axis)
        cells = [result.cell(index, j) for j in range(len(result.y_values))]
        other, values, fixed = result.axis_names[1], result.y_values, result.x_values[index]
    else:
        index = _grid_index(result.y_values, value, axis)
        cells = [result.cell(i, index) for i in range(len(result.x_values))]
        other, values, fixed = result.axis_names[0], result.x_values, result.y_values[index]

    def column(name):
        return np.array([np.nan if getattr(c, name) is None else float(getattr(c, name)) for c in cells])

    return SliceProfile(
        fixed_axis=axis,
        fixed_value=float(fixed),
        axis=other,
        values=np.asarray(values, dtype=float),
        efficiency=column("efficiency"),
        work_total=column("work_total"),
        heat_absorbed=column("heat_absorbed"),
        status=[c.status for c in cells],
        estimate_efficiency=column("estimate_efficiency"),
        estimate_work_total=column("estimate_work_total"),
    )
