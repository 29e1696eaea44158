# cli.py
# Subcommands steady | polariton | cycle | sweep | check on top of a TOML run file.
# Exit codes: 0 success, 1 runtime/instability, 2 configuration.

import argparse
import dataclasses
import json
import logging
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from abc import ABC
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from otto_engine.command_runner import CommandRunner
from otto_engine.common.engine_instance.engine_services.cache_manager.cell_cache import configured_cache
from otto_engine.common.engine_instance.engine_services.shared.helper_method import helper_method
from otto_engine.common.engine_instance.local_interface_model.command.command_interface import command_interface
from otto_engine.common.engine_instance.local_shared_model.data_model.config_model import RunConfig
from otto_engine.common.engine_instance.local_shared_model.data_model.cycle_model import CycleLedger
from otto_engine.common.engine_instance.local_shared_model.error_model import (
    ConfigError, DegenerateSpectrum, FeedbackUnstable, OttoEngineError, Unstable, UnstableRegion)
from otto_engine.common.engine_instance.local_shared_model.rule_model import CellStatus
from otto_engine.common.engine_instance.local_shared_model.settings_model import DEFAULT_SETTINGS, EngineSettings
from otto_engine.common.run_signature import TOOL_NAME, run_signature
from otto_engine.runtime_manager import init_runtime
from optomech_otto.scripts.lyapunov import classify_stability, steady_state
from optomech_otto.scripts.model import build_drift, build_noise, resolve_feedback, stability_boundary
from optomech_otto.scripts.polariton import polariton_basis, polariton_spectrum, to_polariton
from optomech_otto.scripts.sweep import default_workers, run_sweep
from optomech_otto.scripts.thermo import (
    check_hierarchy, compare_feedback_off, estimate_cycle, ideal_cycle, resolve_schedule, run_cycle)

log = logging.getLogger("CLI")

# --------- Config ----------
SCHEMA_VERSION = 1
FORMATS = ("csv", "json", "matrix")
FLOAT_FORMAT = "%.17g"
SUBCOMMANDS = ("steady", "polariton", "cycle", "sweep", "check")

CONFIG_ERRORS = (ValidationError, ConfigError, FeedbackUnstable, tomllib.TOMLDecodeError, FileNotFoundError)


def parse_formats(text: str) -> tuple:
    formats = tuple(item.strip() for item in text.split(",") if item.strip())
    unknown = [item for item in formats if item not in FORMATS]
    if unknown or not formats:
        raise ConfigError(f"--format expects a comma list of {FORMATS}, got '{text}'")
    return formats


# --------- Summaries ----------
def _ledger_summary(ledger: Optional[CycleLedger]) -> Optional[Dict]:
    if ledger is None:
        return None
    return {
        "method": ledger.method,
        "variant": ledger.variant,
        "work_total": ledger.work_total,
        "work_extracted": ledger.work_extracted,
        "heat_absorbed": ledger.heat_absorbed,
        "efficiency": ledger.efficiency,
        "absorbing_stroke": ledger.absorbing_stroke,
        "functional": ledger.functional,
        "delta_u_total": ledger.delta_u_total,
        "heat_net": ledger.heat_net,
        "strokes": list(ledger.strokes),
        "nodes": list(ledger.nodes),
    }


def _polariton_summary(params, feedback, delta_p, state, settings) -> Dict:
    try:
        basis = polariton_basis(params, feedback, delta_p, settings)
    except (UnstableRegion, DegenerateSpectrum) as ex:
        return {"available": False, "reason": str(ex)}
    populations = to_polariton(state, basis) if state is not None else None
    return {
        "available": True,
        "omega_a": basis.omega_a,
        "omega_b": basis.omega_b,
        "n_upper": None if populations is None else populations.n_upper,
        "n_lower": None if populations is None else populations.n_lower,
    }


# --------- Commands ----------
class _command(command_interface, ABC):
    _name = ""

    def __init__(self, config: RunConfig, out_dir, formats: Iterable[str], settings: EngineSettings = DEFAULT_SETTINGS):
        self._config = config
        self._out_dir = Path(out_dir)
        self._formats = tuple(formats)
        self._settings = settings
        self._written: List[Path] = []

    @property
    def name(self) -> str:
        return self._name

    @property
    def out_dir(self) -> Path:
        return self._out_dir

    @property
    def written(self) -> List[Path]:
        return self._written

    def _physics(self):
        params = self._config.system
        return params, resolve_feedback(params, self._config.feedback)

    def _write_csv(self, filename: str, frame: pd.DataFrame) -> None:
        if "csv" not in self._formats:
            return
        path = self._out_dir / filename
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        self._written.append(path)

    def _write_matrix(self, filename: str, grid: np.ndarray, header: str = "") -> None:
        if "matrix" not in self._formats:
            return
        path = self._out_dir / filename
        np.savetxt(path, grid, fmt=FLOAT_FORMAT, header=header)
        self._written.append(path)

    def _summary(self, payload: Dict) -> Dict:
        body = helper_method.to_jsonable({
            "schema_version": SCHEMA_VERSION,
            "generator": run_signature(self._name),
            "command": self._name,
            **payload,
        })
        if "json" in self._formats:
            path = self._out_dir / f"{self._name}.json"
            path.write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
            self._written.append(path)
        return body


class _steady(_command):
    _name = "steady"

    def run(self) -> Dict:
        params, feedback = self._physics()
        delta = self._config.point_detuning()
        drift = build_drift(params, feedback, delta)
        report = classify_stability(drift, params, feedback, delta, self._settings)
        if not report.dynamically_stable:
            raise Unstable(f"no steady state at delta_p={delta}: max Re(eig) = {report.max_real_eigenvalue:.3e}")
        state = steady_state(drift, build_noise(params, feedback), self._settings)

        c = state.entries
        self._write_csv("steady_state.csv", pd.DataFrame(
            [{"row": r, "col": k, "real": c[r, k].real, "imag": c[r, k].imag} for r in range(4) for k in range(4)]))
        self._write_matrix("steady_state_real.dat", c.real)
        self._write_matrix("steady_state_imag.dat", c.imag)

        return self._summary({
            "delta_p": delta,
            "system": params,
            "feedback": feedback,
            "populations": {"n_photon": state.n_photon, "n_phonon": state.n_phonon},
            "polariton": _polariton_summary(params, feedback, delta, state, self._settings),
            "stability": {**dataclasses.asdict(report), "stable": report.stable},
            "invariants": {"commutator": state.commutator_residual(), "conjugation": state.conjugation_residual()},
        })


class _polariton(_command):
    _name = "polariton"

    def run(self) -> Dict:
        params, feedback = self._physics()
        point = self._config.point
        spectrum = polariton_spectrum(params, feedback, np.linspace(point.scan_start, point.scan_stop, point.scan_points))
        self._write_csv("polariton_spectrum.csv", pd.DataFrame({
            "delta_p": spectrum.detunings,
            "omega_a": spectrum.omega_a,
            "omega_b": spectrum.omega_b,
            "hamiltonian_stable": spectrum.hamiltonian_stable,
        }))

        try:
            delta = self._config.point_detuning()
        except ConfigError:
            delta = None
        basis_summary = None
        if delta is not None:
            basis_summary = _polariton_summary(params, feedback, delta, None, self._settings)
            if basis_summary["available"]:
                basis = polariton_basis(params, feedback, delta, self._settings)
                basis_summary["transform"] = basis.transform
                self._write_matrix("polariton_transform_real.dat", basis.transform.real)
                self._write_matrix("polariton_transform_imag.dat", basis.transform.imag)

        return self._summary({
            "system": params,
            "feedback": feedback,
            "boundary_detuning": stability_boundary(params, feedback),
            "scan": {"start": point.scan_start, "stop": point.scan_stop, "points": point.scan_points,
                     "stable_points": int(spectrum.hamiltonian_stable.sum())},
            "delta_p": delta,
            "basis": basis_summary,
        })


class _cycle(_command):
    _name = "cycle"

    def __init__(self, *args, compare_off: bool = False, **kwargs):
        super().__init__(*args, **kwargs)
        self._compare_off = compare_off

    def _write_trajectory(self, filename: str, ledger: CycleLedger) -> None:
        if ledger.trajectory is not None:
            self._write_csv(filename, pd.DataFrame(ledger.trajectory.columns()))

    def run(self) -> Dict:
        params, feedback = self._physics()
        schedule = resolve_schedule(self._config.require_schedule(), params, feedback)
        hierarchy = check_hierarchy(params, feedback, schedule, self._settings.hierarchy_margin)
        if not hierarchy.satisfied:
            short = [name for name, value in hierarchy.margins.items() if value < hierarchy.required_margin]
            log.warning(f"time-scale hierarchy not satisfied (occupancy ok: {hierarchy.occupancy_ok}; short: {short})")

        samples = self._config.output.samples_per_stroke
        if samples is None:
            samples = self._settings.trajectory_samples
        off = None
        if self._compare_off:
            ledger, off = compare_feedback_off(params, feedback, schedule, samples_per_stroke=samples,
                                               settings=self._settings)
        else:
            ledger = run_cycle(params, feedback, schedule, samples_per_stroke=samples, settings=self._settings)

        try:
            estimate = estimate_cycle(params, feedback, schedule.delta_i, schedule.delta_f, schedule.variant,
                                      self._settings)
        except OttoEngineError as ex:
            log.info(f"node estimate unavailable: {ex}")
            estimate = None

        self._write_trajectory("trajectory.csv", ledger)
        if off is not None:
            self._write_trajectory("trajectory_feedback_off.csv", off)
        self._write_csv("strokes.csv", pd.DataFrame([{
            "stroke": s.index, "kind": s.kind.value, "role": s.role.value, "delta_u": s.delta_u,
            "heat": s.heat, "work": s.work, "closure_residual": s.closure_residual} for s in ledger.strokes]))

        comparison = None
        if off is not None:
            comparison = {
                "ledger": _ledger_summary(off),
                "work_gain": abs(ledger.work_total) - abs(off.work_total),
                "efficiency_gain": ledger.efficiency - off.efficiency,
                "feedback_helps": bool(ledger.functional and abs(ledger.work_total) > abs(off.work_total)
                                       and ledger.efficiency > off.efficiency),
            }
        return self._summary({
            "system": params,
            "feedback": feedback,
            "schedule": schedule,
            "ledger": _ledger_summary(ledger),
            "hierarchy": hierarchy,
            "node_estimate": _ledger_summary(estimate),
            "feedback_off": comparison,
        })


class _sweep(_command):
    _name = "sweep"

    def __init__(self, *args, workers: Optional[int] = None, **kwargs):
        super().__init__(*args, **kwargs)
        self._workers = workers

    def run(self) -> Dict:
        spec = self._config.sweep_spec()
        result = run_sweep(spec, workers=self._workers, cache=configured_cache(), settings=self._settings)
        x_name, y_name = result.axis_names

        rows = []
        for cell in result.cells:
            rows.append({
                x_name: cell.x,
                y_name: cell.y,
                "efficiency": cell.efficiency,
                "work_total": cell.work_total,
                "heat_absorbed": cell.heat_absorbed,
                "functional": cell.functional,
                "status": cell.status.value,
                "hamiltonian_stable": cell.hamiltonian_stable,
                "dynamically_stable": cell.dynamically_stable,
                "estimate_efficiency": cell.estimate_efficiency,
                "estimate_work_total": cell.estimate_work_total,
                "estimate_heat_absorbed": cell.estimate_heat_absorbed,
                "message": cell.message,
            })
        self._write_csv("sweep.csv", pd.DataFrame(rows))
        for field in ("efficiency", "work_total", "heat_absorbed"):
            self._write_matrix(f"sweep_{field}.dat", result.field(field), header=f"rows: {x_name}, columns: {y_name}")

        def best(index):
            if index is None:
                return None
            cell = result.cell(*index)
            return {"i": cell.i, "j": cell.j, x_name: cell.x, y_name: cell.y, "efficiency": cell.efficiency,
                    "work_total": cell.work_total, "heat_absorbed": cell.heat_absorbed}

        return self._summary({
            "method": result.method,
            "axes": {"x": {"name": x_name, "values": result.x_values},
                     "y": {"name": y_name, "values": result.y_values}},
            "counts": {status.value: sum(c.status is status for c in result.cells) for status in CellStatus},
            "best_efficiency": best(result.best_efficiency),
            "best_work": best(result.best_work),
        })


class _check(_command):
    _name = "check"

    def run(self) -> Dict:
        params, feedback = self._physics()
        schedule = resolve_schedule(self._config.require_schedule(), params, feedback)
        stability = {}
        for label, delta in (("delta_i", schedule.delta_i), ("delta_f", schedule.delta_f)):
            report = classify_stability(build_drift(params, feedback, delta), params, feedback, delta, self._settings)
            stability[label] = {**dataclasses.asdict(report), "stable": report.stable}
        hierarchy = check_hierarchy(params, feedback, schedule, self._settings.hierarchy_margin)
        try:
            ideal = ideal_cycle(params, feedback, schedule.delta_i, schedule.delta_f, schedule.variant).efficiency
        except ValueError:
            ideal = None
        log.info(f"hierarchy satisfied: {hierarchy.satisfied}")
        return self._summary({
            "valid": True,
            "system": params,
            "feedback": feedback,
            "schedule": schedule,
            "stability": stability,
            "hierarchy": hierarchy,
            "ideal_efficiency": ideal,
        })


# --------- Entry points ----------
def _execute(command: command_interface) -> List[Path]:
    CommandRunner(model=command).run()
    return command.written


def cmd_steady(config: RunConfig, out_dir, formats=FORMATS[:2], settings: EngineSettings = DEFAULT_SETTINGS) -> List[Path]:
    return _execute(_steady(config, out_dir, formats, settings))


def cmd_polariton(config: RunConfig, out_dir, formats=FORMATS[:2], settings: EngineSettings = DEFAULT_SETTINGS) -> List[Path]:
    return _execute(_polariton(config, out_dir, formats, settings))


def cmd_cycle(config: RunConfig, out_dir, formats=FORMATS[:2], settings: EngineSettings = DEFAULT_SETTINGS,
              compare_off: bool = False) -> List[Path]:
    return _execute(_cycle(config, out_dir, formats, settings, compare_off=compare_off))


def cmd_sweep(config: RunConfig, out_dir, formats=FORMATS[:2], settings: EngineSettings = DEFAULT_SETTINGS,
              workers: Optional[int] = None) -> List[Path]:
    return _execute(_sweep(config, out_dir, formats, settings, workers=workers))


def cmd_check(config: RunConfig, out_dir, formats=FORMATS[:2], settings: EngineSettings = DEFAULT_SETTINGS) -> List[Path]:
    return _execute(_check(config, out_dir, formats, settings))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="Feedback-controlled optomechanical Otto engine")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub = commands.add_parser(name)
        sub.add_argument("--config", required=True, help="TOML run file")
        sub.add_argument("--out", default=None, help="output directory (default: [output] directory)")
        sub.add_argument("--threads", type=int, default=None, help="sweep worker processes")
        sub.add_argument("--format", default=None, help="comma list of csv,json,matrix")
        if name == "cycle":
            sub.add_argument("--compare-off", action="store_true", help="also run the schedule with gain 0")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = init_runtime()
        config = RunConfig.load(args.config)
        formats = parse_formats(args.format) if args.format else config.output.formats
        out_dir = Path(args.out) if args.out else Path(config.output.directory)

        if args.command == "steady":
            cmd_steady(config, out_dir, formats, settings)
        elif args.command == "polariton":
            cmd_polariton(config, out_dir, formats, settings)
        elif args.command == "cycle":
            cmd_cycle(config, out_dir, formats, settings, compare_off=args.compare_off)
        elif args.command == "sweep":
            workers = args.threads if args.threads is not None else default_workers()
            cmd_sweep(config, out_dir, formats, settings, workers=workers)
        else:
            cmd_check(config, out_dir, formats, settings)
    except CONFIG_ERRORS as ex:
        log.error(f"configuration error: {ex}")
        print(f"{TOOL_NAME}: configuration error: {ex}", file=sys.stderr)
        return 2
    except OttoEngineError as ex:
        log.error(f"{type(ex).__name__}: {ex}")
        print(f"{TOOL_NAME}: {type(ex).__name__}: {ex}", file=sys.stderr)
        return 1
    return 0
