from optomech_otto.scripts.lyapunov import LyapunovSolver, classify_stability, steady_state
from optomech_otto.scripts.model import (
    build_drift, build_hamiltonian, build_noise, effective_feedback, invert_feedback, kappa_fb_for_occupancy,
    resolve_feedback)
from optomech_otto.scripts.polariton import from_polariton, polariton_basis, polariton_spectrum, to_polariton
from optomech_otto.scripts.sweep import evaluate_cell, extract_slice, run_sweep
from optomech_otto.scripts.thermo import (
    check_hierarchy, estimate_cycle, heat_rate, ideal_cycle, internal_energy, propagate, run_cycle, run_limit_cycle,
    work_rate)

__all__ = [
    "LyapunovSolver", "classify_stability", "steady_state",
    "build_drift", "build_hamiltonian", "build_noise", "effective_feedback", "invert_feedback",
    "kappa_fb_for_occupancy", "resolve_feedback",
    "from_polariton", "polariton_basis", "polariton_spectrum", "to_polariton",
    "evaluate_cell", "extract_slice", "run_sweep",
    "check_hierarchy", "estimate_cycle", "heat_rate", "ideal_cycle", "internal_energy", "propagate", "run_cycle",
    "run_limit_cycle", "work_rate",
]
