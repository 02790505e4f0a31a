import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm, solve_continuous_lyapunov

from qdoptomech.covariance import (CovarianceState, default_initial_covariance, diffusion_matrix, drift_matrices,
                                   drift_matrix, fluctuation_energies, integrate_covariance, integrate_lyapunov,
                                   phonon_number, write_covariance_csv, write_energies_csv)
from qdoptomech.errors import GridMismatchError, InstabilityError
from qdoptomech.meanfield import integrate_meanfield
from qdoptomech.model import MeanFieldState

from .conftest import base_params
from .oracles import quadrature_jacobian

TAU = 2 * math.pi
S2 = math.sqrt(2)


@pytest.fixture(scope="module")
def fig2_run():
    p = base_params()
    traj = integrate_meanfield(p, t_end=10 * TAU, dt=TAU / 2000)
    return p, traj, integrate_covariance(p, default_initial_covariance(p), traj)


def random_draw(rng):
    p = base_params(delta_c=rng.uniform(-3, 3), delta_0=rng.uniform(0, 2), omega_e=rng.uniform(0.5, 3),
                    G=rng.uniform(0, 0.2), g0=rng.uniform(0, 0.6), kappa_a=rng.uniform(0.05, 1),
                    kappa_d=rng.uniform(0.05, 1), gamma_m=rng.uniform(0, 0.1), N=rng.uniform(-1, 1),
                    omega_m=rng.uniform(0.5, 2))
    mean = MeanFieldState(rng.normal(), rng.normal(), complex(*rng.normal(size=2)), complex(*rng.normal(size=2)))
    return p, mean, rng.uniform(0, 20)


def test_drift_structure(fig2_params):
    D = drift_matrix(MeanFieldState(0.7, 0.1, 1 + 2j, 0j), 1.3, fig2_params)
    assert D[0, 1] == 1.0 and D[1, 0] == -1.0
    assert D[2, 2] == D[3, 3] == -0.1
    assert D[4, 4] == D[5, 5] == -0.2
    F1 = 1.0 - 0.01 * 0.7
    assert D[2, 3] == pytest.approx(F1) and D[3, 2] == pytest.approx(-F1)


def test_drift_without_mean_fields_is_block_diagonal(fig2_params):
    D = drift_matrix(MeanFieldState(0.0, 0.0, 0j, 0j), 0.0, fig2_params)
    assert not D[:2, 2:].any() and not D[2:, :2].any()
    assert D[2, 5] == 0.3 and D[3, 4] == -0.3 and D[4, 3] == -0.3 and D[5, 2] == 0.3
    assert D[4, 5] == 0 and D[5, 4] == 0  # detuning vanishes at t = 0


def test_drift_optomechanical_entries(fig2_params):
    D = drift_matrix(MeanFieldState(0.0, 0.0, 1 + 0j, 0j), 0.0, fig2_params)
    assert D[1, 2] == pytest.approx(S2 * 0.01, abs=1e-16)
    assert D[3, 0] == pytest.approx(S2 * 0.01, abs=1e-16)
    assert D[2, 0] == 0.0


def test_drift_matches_finite_difference_jacobian():
    rng = np.random.default_rng(7)
    for _ in range(20):
        p, mean, t = random_draw(rng)
        np.testing.assert_allclose(drift_matrix(mean, t, p), quadrature_jacobian(p, mean, t), atol=1e-6)


def test_vectorised_drift_matches_pointwise(fig2_run):
    p, traj, _ = fig2_run
    stack = drift_matrices(traj, p)
    for k in (0, 17, 5000, len(traj) - 1):
        np.testing.assert_array_equal(stack[k], drift_matrix(traj.state(k), traj.times[k], p))


def test_diffusion_entries():
    assert diffusion_matrix(base_params())[1, 1] == pytest.approx(0.01)
    N = diffusion_matrix(base_params(n_b=2.0))
    assert N[1, 1] == pytest.approx(0.05)
    np.testing.assert_array_equal(np.diag(N), [0, 0.05, 0.1, 0.1, 0.2, 0.2])
    assert not (N - np.diag(np.diag(N))).any()


def _constant(D, n_steps):
    return np.repeat(D[None], 2 * n_steps + 1, axis=0)


def test_ornstein_uhlenbeck_fixed_point():
    kappa, n = 0.3, 0.8
    D = -kappa * np.eye(6)
    out = integrate_lyapunov(_constant(D, 20000), n * np.eye(6), 0.5 * np.eye(6), 0.01)
    np.testing.assert_allclose(out.V[-1], n / (2 * kappa) * np.eye(6), atol=1e-8)


def test_zero_dynamics_keep_covariance():
    V0 = np.diag([2.5, 2.5, 0.5, 0.5, 0.5, 0.5])
    out = integrate_lyapunov(_constant(np.zeros((6, 6)), 100), np.zeros((6, 6)), V0, 0.1)
    assert all(np.array_equal(V, V0) for V in out.V)


def test_toy_lyapunov_against_closed_form():
    # damped oscillator coupled to a third decaying coordinate
    D = np.array([[0.0, 1.0, 0.0], [-1.0, -0.1, 0.2], [0.0, -0.3, -0.5]])
    Nt = np.diag([0.0, 0.3, 0.5])
    V0 = np.diag([1.0, 0.5, 2.0])
    h, n = 0.01, 10000
    out = integrate_lyapunov(_constant(D, n), Nt, V0, h)
    V_inf = solve_continuous_lyapunov(D, -Nt)
    for k in (1000, 5000, n):
        E = expm(D * k * h)
        exact = E @ (V0 - V_inf) @ E.T + V_inf
        np.testing.assert_allclose(out.V[k], exact, atol=1e-8)


def test_thermal_detailed_balance():
    gamma, n_b = 0.5, 2.0
    p = base_params(G=0.0, g0=0.0, gamma_m=gamma, n_b=n_b)
    traj = integrate_meanfield(p, t_end=20 / gamma, dt=TAU / 1000)
    V0 = CovarianceState(0.5 * np.eye(6))
    series = integrate_covariance(p, V0, traj)
    k10 = np.searchsorted(series.times, 10 / gamma)
    # closed-form mirror block: thermal fixed point plus the decaying vacuum offset
    Dm = np.array([[0.0, 1.0], [-1.0, -gamma]])
    E = expm(Dm * series.times[k10])
    thermal = (n_b + 0.5) * np.eye(2)
    exact = E @ (0.5 * np.eye(2) - thermal) @ E.T + thermal
    np.testing.assert_allclose(series.V[k10][:2, :2], exact, atol=1e-8)
    np.testing.assert_allclose(np.diag(series.V[-1])[:2], n_b + 0.5, atol=1e-6)
    assert series.V[-1][0, 1] == pytest.approx(0.0, abs=1e-6)


def test_symmetry_and_positivity(fig2_run):
    _, _, series = fig2_run
    V = series.V
    assert np.abs(V - np.swapaxes(V, 1, 2)).max() < 1e-9
    assert (np.diagonal(V, axis1=1, axis2=2) >= 0).all()
    assert np.isfinite(V).all()


def test_covariance_grid_is_twice_the_mean_field_step(fig2_run):
    _, traj, series = fig2_run
    np.testing.assert_allclose(series.times, traj.times[::2], rtol=0, atol=1e-12)


def test_step_halving_is_fourth_order():
    p = base_params(n_b=2.0, G=0.05)
    finals = []
    for steps in (1000, 2000, 4000):
        traj = integrate_meanfield(p, t_end=3 * TAU, dt=TAU / steps)
        finals.append(integrate_covariance(p, default_initial_covariance(p), traj).V[-1])
    ratio = np.abs(finals[0] - finals[1]).max() / np.abs(finals[1] - finals[2]).max()
    assert 12 < ratio < 20


def test_prefix_integration(fig2_run):
    p, traj, series = fig2_run
    part = integrate_covariance(p, default_initial_covariance(p), traj, t_end=traj.times[4000])
    assert np.array_equal(part.V, series.V[:2001])


def test_grid_mismatch_errors(fig2_run):
    p, traj, _ = fig2_run
    with pytest.raises(GridMismatchError, match="grid mismatch"):
        integrate_covariance(p, default_initial_covariance(p, t=1.0), traj)
    with pytest.raises(GridMismatchError):
        integrate_covariance(p, default_initial_covariance(p), traj, t_end=traj.times[3])
    with pytest.raises(GridMismatchError):
        integrate_covariance(p, default_initial_covariance(p), traj, t_end=11 * TAU)


def test_asymmetric_start_rejected(fig2_run):
    p, traj, _ = fig2_run
    V = np.eye(6)
    V[0, 1] = 0.3
    with pytest.raises(ValueError):
        integrate_covariance(p, CovarianceState(V), traj)


def test_instability_bound(fig2_run):
    p, traj, _ = fig2_run
    with pytest.raises(InstabilityError) as info:
        integrate_covariance(p, default_initial_covariance(p), traj, bound=0.6)
    assert info.value.time > 0


def test_energy_readouts():
    assert fluctuation_energies(0.5 * np.eye(6)) == (0.5, 0.5, 0.5)
    thermal = np.diag([2.5, 2.5, 0.5, 0.5, 0.5, 0.5])
    assert fluctuation_energies(thermal)[0] == 2.5
    assert fluctuation_energies(thermal, vacuum_subtracted=True)[1:] == (0.0, 0.0)
    assert phonon_number(0.5 * np.eye(6)) == 0.0
    assert phonon_number(thermal) == 2.0


@given(st.lists(st.floats(0, 10), min_size=6, max_size=6))
def test_energies_on_stacks(diag):
    V = np.stack([np.diag(diag), 0.5 * np.eye(6)])
    m, c, x = fluctuation_energies(V)
    assert m[0] == diag[0] and c[0] == pytest.approx((diag[2] + diag[3]) / 2)
    assert x[1] == 0.5


def test_csv_exports(fig2_run, tmp_path):
    _, _, series = fig2_run
    write_covariance_csv(series, tmp_path / "v.csv", stride=1000)
    write_energies_csv(series, tmp_path / "e.csv", stride=1000)
    with open(tmp_path / "v.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert len(rows[0]) == 22 and rows[0][:3] == ["t", "V11", "V12"] and rows[0][-1] == "V66"
    assert float(rows[-1][1]) == series.V[10000][0, 0]
    with open(tmp_path / "e.csv", newline="", encoding="utf-8") as fh:
        assert next(csv.reader(fh)) == ["t", "mirror", "cavity", "exciton", "phonon_number"]
