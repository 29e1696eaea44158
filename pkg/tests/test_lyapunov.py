import numpy as np
import pytest

from otto_engine.common.engine_instance.engine_services.shared.helper_method import helper_method
from otto_engine.common.engine_instance.local_shared_model.data_model.system_model import SystemParams
from otto_engine.common.engine_instance.local_shared_model.error_model import SingularSystem, Unstable
from optomech_otto.scripts.lyapunov import (
    LyapunovSolver, classify_stability, lyapunov_residual, max_real_eigenvalue, steady_state)
from optomech_otto.scripts.model import (
    build_drift, build_noise, feedback_from_kappa_fb, no_feedback, stability_boundary)


def _steady(params, feedback, delta):
    return steady_state(build_drift(params, feedback, delta), build_noise(params, feedback))


def test_random_stable_configurations_have_small_residual():
    rng = np.random.default_rng(20240611)
    checked = 0
    for _ in range(100):
        params = SystemParams(kappa_c=rng.uniform(0.01, 0.1), gamma=10 ** rng.uniform(-5, -3),
                              g_coupling=rng.uniform(0.0, 0.1), n_th=rng.uniform(0.0, 1000.0))
        feedback = feedback_from_kappa_fb(params, params.kappa_c * rng.uniform(0.1, 1.0))
        delta = rng.uniform(-3.0, -0.3)
        drift = build_drift(params, feedback, delta)
        if not classify_stability(drift, params, feedback, delta).stable:
            continue
        noise = build_noise(params, feedback)
        state = steady_state(drift, noise)
        assert lyapunov_residual(drift, noise, state) <= 1e-10
        assert state.commutator_residual() <= 1e-10 * max(1.0, np.max(np.abs(state.entries)))
        assert state.conjugation_residual() <= 1e-12 * max(1.0, np.max(np.abs(state.entries)))
        checked += 1
    assert checked >= 50


@pytest.mark.parametrize("delta", [-3.0, -1.0, -0.4])
def test_decoupled_thermal_equilibrium(decoupled_params, delta):
    state = _steady(decoupled_params, no_feedback(decoupled_params), delta)
    assert state.n_photon == pytest.approx(0.0, abs=1e-10)
    assert state.n_phonon == pytest.approx(300.0, rel=1e-10)
    cross = [state.entries[i, j] for i in (0, 2) for j in (1, 3)]
    assert np.max(np.abs(cross)) < 1e-10


def test_decoupled_cavity_with_feedback_matches_single_mode_solution(decoupled_params):
    feedback = feedback_from_kappa_fb(decoupled_params, 0.0075)
    delta = -3.0
    squeeze = decoupled_params.kappa_c - feedback.kappa_fb
    ratio = squeeze ** 2 / (feedback.kappa_fb ** 2 + delta ** 2)
    photons = (feedback.n_opt_fb + ratio / 2) / (1 - ratio)
    pairs = squeeze * (2 * photons + 1) / (2 * (feedback.kappa_fb - 1j * delta))

    state = _steady(decoupled_params, feedback, delta)
    assert state.n_photon == pytest.approx(photons, rel=1e-10)
    assert state.entries[0, 0] == pytest.approx(pairs, rel=1e-9)
    assert state.n_phonon == pytest.approx(300.0, rel=1e-10)
    # the squeezing correction is small at large detuning
    assert state.n_photon == pytest.approx(feedback.n_opt_fb, rel=1e-3)


def test_baseline_weak_hybridisation(baseline_params, baseline_feedback):
    state = _steady(baseline_params, baseline_feedback, -3.0)
    # weak sideband cooling and heating by the optical bath at large detuning
    assert state.n_phonon == pytest.approx(300.0, rel=0.07)
    assert state.n_phonon == pytest.approx(281.08, rel=2e-4)
    assert state.n_photon == pytest.approx(8.247, rel=2e-4)
    assert state.n_photon == pytest.approx(baseline_feedback.n_opt_fb, rel=0.03)


def test_steady_state_keeps_the_operator_algebra(baseline_params, baseline_feedback):
    state = _steady(baseline_params, baseline_feedback, -3.0)
    c = state.entries
    np.testing.assert_allclose(helper_method.correlation_image(c), c, atol=1e-12 * np.max(np.abs(c)))
    assert c[0, 2] - c[2, 0] == pytest.approx(1.0, abs=1e-7)
    assert c[1, 3] - c[3, 1] == pytest.approx(1.0, abs=1e-7)
    assert abs(c[2, 0].imag) < 1e-12 and abs(c[3, 1].imag) < 1e-12


def test_inaccurate_solution_is_rejected(baseline_params, baseline_feedback, monkeypatch):
    exact = LyapunovSolver.solve

    def shifted(self, rhs):
        return exact(self, rhs) + 0.5 * np.eye(4)

    monkeypatch.setattr(LyapunovSolver, "solve", shifted)
    with pytest.raises(SingularSystem, match="residual"):
        _steady(baseline_params, baseline_feedback, -3.0)


def test_coupling_cools_the_mirror_in_the_resolved_sideband_regime():
    phonons = []
    for g in (0.0, 0.005, 0.01, 0.02):
        params = SystemParams(kappa_c=0.05, gamma=5e-5, g_coupling=g, n_th=300)
        phonons.append(_steady(params, no_feedback(params), -1.0).n_phonon)
    assert phonons[0] == pytest.approx(300.0, rel=1e-10)
    assert all(a > b for a, b in zip(phonons, phonons[1:]))


def test_cooling_grows_towards_the_red_sideband():
    params = SystemParams(kappa_c=0.05, gamma=5e-5, g_coupling=0.01, n_th=300)
    phonons = [_steady(params, no_feedback(params), delta).n_phonon for delta in (-3.0, -2.0, -1.5, -1.0)]
    assert phonons[0] < 300.0
    assert all(a > b for a, b in zip(phonons, phonons[1:]))


def test_steady_state_against_dense_solve(baseline_params, baseline_feedback):
    drift = build_drift(baseline_params, baseline_feedback, -2.0)
    noise = build_noise(baseline_params, baseline_feedback)
    m = drift.entries
    operator = np.zeros((16, 16), dtype=complex)
    for k in range(16):
        basis = np.zeros(16, dtype=complex)
        basis[k] = 1.0
        c = basis.reshape(4, 4)
        operator[:, k] = (m @ c + c @ m.T).reshape(-1)
    dense = np.linalg.solve(operator, -noise.entries.reshape(-1)).reshape(4, 4)
    np.testing.assert_allclose(steady_state(drift, noise).entries, dense, rtol=1e-8, atol=1e-8)


def test_unstable_drift_raises(decoupled_params):
    feedback = feedback_from_kappa_fb(decoupled_params, 0.0075)
    drift = build_drift(decoupled_params, feedback, -0.001)
    assert max_real_eigenvalue(drift) > 0
    with pytest.raises(Unstable):
        steady_state(drift, build_noise(decoupled_params, feedback))


def test_singular_operator_is_reported():
    with pytest.raises(SingularSystem):
        LyapunovSolver(np.zeros((4, 4)))


def test_solver_inverts_the_operator(baseline_params, baseline_feedback):
    drift = build_drift(baseline_params, baseline_feedback, -1.5).entries
    solver = LyapunovSolver(drift)
    rhs = np.arange(16, dtype=float).reshape(4, 4) + 1j
    np.testing.assert_allclose(solver.apply(solver.solve(rhs)), rhs, atol=1e-9)


def test_classify_stability_follows_the_boundary(baseline_params, baseline_feedback):
    boundary = stability_boundary(baseline_params, baseline_feedback)
    inside = classify_stability(build_drift(baseline_params, baseline_feedback, boundary - 0.05),
                                baseline_params, baseline_feedback, boundary - 0.05)
    assert inside.stable
    assert inside.boundary_detuning == pytest.approx(boundary)

    outside = classify_stability(build_drift(baseline_params, baseline_feedback, boundary + 0.02),
                                 baseline_params, baseline_feedback, boundary + 0.02)
    assert not outside.hamiltonian_stable
    assert not outside.stable
