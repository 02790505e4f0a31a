"""Linearised fluctuations: drift matrix, Lyapunov evolution, energies.

Quadrature ordering is ``(dq, dp, dx, dy, dv, dw)``: mirror, cavity
(``x = (a + a^dag)/sqrt2``, ``y = (a - a^dag)/(i sqrt2)``) and QD.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, InstabilityError
from .meanfield import MeanFieldTrajectory
from .model import MeanFieldState, SystemParams, qd_detuning

SQRT2 = np.sqrt(2.0)
COVARIANCE_BOUND = 1e9
MODES = {"mirror": (0, 1), "cavity": (2, 3), "qd": (4, 5)}


@dataclass(frozen=True)
class CovarianceState:
    V: np.ndarray
    t: float = 0.0


@dataclass
class CovarianceSeries:
    """Covariance matrices ``V[k]`` at ``times[k]``."""

    times: np.ndarray
    V: np.ndarray

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k) -> CovarianceState:
        return CovarianceState(self.V[k], float(self.times[k]))


def _drift_arrays(q, a, t, params):
    """Drift matrices for broadcastable arrays of ``<q>``, ``<a>`` and time."""
    q, a, t = np.broadcast_arrays(np.asarray(q, float), np.asarray(a, complex), np.asarray(t, float))
    G, g0, N = params.G, params.g0, params.N
    F1 = params.delta_c - G * q
    MN = qd_detuning(t, params) * N
    D = np.zeros(q.shape + (6, 6))
    D[..., 0, 1] = params.omega_m
    D[..., 1, 0] = -params.omega_m
    D[..., 1, 1] = -params.gamma_m
    D[..., 1, 2] = SQRT2 * G * a.real
    D[..., 1, 3] = SQRT2 * G * a.imag
    D[..., 2, 0] = -SQRT2 * G * a.imag
    D[..., 2, 2] = -params.kappa_a
    D[..., 2, 3] = F1
    D[..., 2, 5] = g0
    D[..., 3, 0] = SQRT2 * G * a.real
    D[..., 3, 2] = -F1
    D[..., 3, 3] = -params.kappa_a
    D[..., 3, 4] = -g0
    D[..., 4, 3] = -g0 * N
    D[..., 4, 4] = -params.kappa_d
    D[..., 4, 5] = -MN
    D[..., 5, 2] = g0 * N
    D[..., 5, 4] = MN
    D[..., 5, 5] = -params.kappa_d
    return D


def drift_matrix(mean: MeanFieldState, t: float, params: SystemParams) -> np.ndarray:
    """6x6 drift matrix of the fluctuations around the mean fields at ``t``."""
    return _drift_arrays(mean.q, mean.a, t, params)


def drift_matrices(traj: MeanFieldTrajectory, params: SystemParams) -> np.ndarray:
    """Drift matrix at every sample of ``traj``, shape ``(len(traj), 6, 6)``."""
    return _drift_arrays(traj.q, traj.a, traj.times, params)


def diffusion_matrix(params: SystemParams) -> np.ndarray:
    return np.diag(
        [
            0.0,
            params.gamma_m * (2 * params.n_b + 1),
            params.kappa_a,
            params.kappa_a,
            params.kappa_d,
            params.kappa_d,
        ]
    )


def default_initial_covariance(params: SystemParams, t: float = 0.0) -> CovarianceState:
    """Thermal mirror at the bath occupation, cavity and QD in vacuum."""
    th = params.n_b + 0.5
    return CovarianceState(np.diag([th, th, 0.5, 0.5, 0.5, 0.5]), t)


def integrate_lyapunov(drifts: np.ndarray, diffusion: np.ndarray, V0: np.ndarray, h: float, t0: float = 0.0,
                       bound: float = COVARIANCE_BOUND) -> CovarianceSeries:
    """RK4 for ``dV/dt = D V + V D^T + N`` with a tabulated drift.

    ``drifts[2k]``, ``drifts[2k+1]`` and ``drifts[2k+2]`` are the drift at the
    start, midpoint and end of step ``k``; the step is ``h``. The result is
    symmetrised after each step.
    """
    if drifts.shape[0] % 2 != 1:
        raise GridMismatchError("drift table must have an odd number of half-step samples")
    n = (drifts.shape[0] - 1) // 2
    dim = V0.shape[0]
    out = np.empty((n + 1, dim, dim))
    V = 0.5 * (V0 + V0.T)
    out[0] = V
    Nt = diffusion
    h2, h6 = 0.5 * h, h / 6.0
    for k in range(n):
        D1, D2, D3 = drifts[2 * k], drifts[2 * k + 1], drifts[2 * k + 2]
        X = D1 @ V
        k1 = X + X.T + Nt
        X = D2 @ (V + h2 * k1)
        k2 = X + X.T + Nt
        X = D2 @ (V + h2 * k2)
        k3 = X + X.T + Nt
        X = D3 @ (V + h * k3)
        k4 = X + X.T + Nt
        V = V + h6 * (k1 + 2.0 * (k2 + k3) + k4)
        V = 0.5 * (V + V.T)
        if not np.abs(V).max() <= bound:
            raise InstabilityError("covariance entry exceeds bound", t0 + (k + 1) * h)
        out[k + 1] = V
    return CovarianceSeries(t0 + h * np.arange(n + 1), out)


def integrate_covariance(params: SystemParams, V0: CovarianceState, mean_traj: MeanFieldTrajectory,
                         t_end: float = None, *, bound: float = COVARIANCE_BOUND) -> CovarianceSeries:
    """Evolve the correlation matrix alongside a stored mean-field run.

    The covariance step is twice the mean-field step, so that the RK4
    midpoints fall on stored mean-field samples and the drift never has to
    be interpolated. ``V0.t`` must be the first sample time of ``mean_traj``.
    """
    if not np.allclose(V0.V, V0.V.T, atol=1e-9, rtol=0):
        raise ValueError("initial covariance is not symmetric")
    t0 = float(mean_traj.times[0])
    if abs(V0.t - t0) > 1e-9 * max(1.0, abs(t0)):
        raise GridMismatchError(f"V0 is at t={V0.t}, mean-field run starts at t={t0}")
    last = len(mean_traj) - 1
    if t_end is None:
        n_half = last - (last % 2)
    else:
        ratio = (t_end - t0) / mean_traj.dt
        n_half = round(ratio)
        if abs(ratio - n_half) > 1e-6 or n_half % 2 or n_half > last or n_half < 2:
            raise GridMismatchError(f"t_end={t_end} is not an even step on the mean-field grid within its span")
    drifts = drift_matrices(mean_traj, params)[: n_half + 1]
    return integrate_lyapunov(drifts, diffusion_matrix(params), np.asarray(V0.V, float),
                              2.0 * mean_traj.dt, t0, bound)


def fluctuation_energies(V, vacuum_subtracted: bool = False):
    """``(mirror, cavity, exciton)`` fluctuation energies.

    Mirror is ``V11``, cavity ``(V33 + V44)/2`` and exciton ``(V55 + V66)/2``.
    Works on a single matrix or a stack. With ``vacuum_subtracted`` the
    vacuum 1/2 is removed from cavity and exciton, giving occupations.
    """
    V = getattr(V, "V", V)
    V = np.asarray(V)
    mirror = V[..., 0, 0]
    cavity = 0.5 * (V[..., 2, 2] + V[..., 3, 3])
    exciton = 0.5 * (V[..., 4, 4] + V[..., 5, 5])
    if vacuum_subtracted:
        cavity = cavity - 0.5
        exciton = exciton - 0.5
    return mirror, cavity, exciton


def phonon_number(V):
    V = np.asarray(getattr(V, "V", V))
    return 0.5 * (V[..., 0, 0] + V[..., 1, 1]) - 0.5


def write_covariance_csv(series: CovarianceSeries, path, stride: int = 1) -> None:
    iu = np.triu_indices(6)
    header = ["t"] + [f"V{i + 1}{j + 1}" for i, j in zip(*iu)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(0, len(series), stride):
            w.writerow([repr(float(series.times[k]))] + [repr(float(x)) for x in series.V[k][iu]])


def write_energies_csv(series: CovarianceSeries, path, stride: int = 1) -> None:
    mirror, cavity, exciton = fluctuation_energies(series.V)
    phonons = phonon_number(series.V)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mirror", "cavity", "exciton", "phonon_number"])
        for k in range(0, len(series), stride):
            w.writerow([repr(float(x)) for x in (series.times[k], mirror[k], cavity[k], exciton[k], phonons[k])])
