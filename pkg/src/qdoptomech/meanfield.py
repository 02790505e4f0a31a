"""Nonlinear mean-field dynamics and their periodic steady state."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IncommensurateStepError, InstabilityError
from .model import ZERO_STATE, MeanFieldState, SystemParams, drive_amplitude, qd_detuning

INSTABILITY_BOUND = 1e6
COMPONENTS = ("q", "p", "a", "sigma")


def meanfield_rhs(state: MeanFieldState, t: float, params: SystemParams) -> MeanFieldState:
    """Time derivative of the mean fields, returned as a ``MeanFieldState``."""
    q, p, a, s = state.as_tuple()
    E = drive_amplitude(t, params)
    detuning = qd_detuning(t, params)
    N = params.N
    return MeanFieldState(
        q=params.omega_m * p,
        p=-params.omega_m * q + params.G * abs(a) ** 2 - params.gamma_m * p,
        a=(-1j * params.delta_c - params.kappa_a) * a + 1j * params.G * a * q + E - 1j * params.g0 * s,
        sigma=-(params.kappa_d - 1j * detuning * N) * s + 1j * params.g0 * a * N,
    )


@dataclass
class MeanFieldTrajectory:
    """Uniformly sampled mean-field solution.

    ``times[k] == (start_step + k) * dt`` exactly, so trajectories that are
    continued from one another line up bit for bit.
    """

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    a: np.ndarray
    sigma: np.ndarray
    dt: float
    start_step: int = 0

    def __len__(self):
        return len(self.times)

    def state(self, k: int) -> MeanFieldState:
        return MeanFieldState(float(self.q[k]), float(self.p[k]), complex(self.a[k]), complex(self.sigma[k]))

    @property
    def states(self):
        return [self.state(k) for k in range(len(self))]

    @property
    def final(self) -> MeanFieldState:
        return self.state(-1)

    def component(self, name: str) -> np.ndarray:
        """Stored column by name; ``abs_a`` and ``abs_sigma`` are derived."""
        if name.startswith("abs_"):
            return np.abs(getattr(self, name[4:]))
        return getattr(self, name)

    def index_of(self, t: float) -> int:
        """Sample index of time ``t``, which must lie on the grid."""
        k = round(t / self.dt) - self.start_step
        if not 0 <= k < len(self) or abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise IndexError(f"t={t} is not a sample of this trajectory")
        return k

    def steps_per(self, period: float) -> int:
        return _commensurate(period, self.dt)

    def concat(self, other: "MeanFieldTrajectory") -> "MeanFieldTrajectory":
        """Join a continuation whose first sample repeats our last one."""
        if other.dt != self.dt or other.start_step != self.start_step + len(self) - 1:
            raise ValueError("trajectories are not contiguous")
        return MeanFieldTrajectory(
            times=np.concatenate([self.times, other.times[1:]]),
            q=np.concatenate([self.q, other.q[1:]]),
            p=np.concatenate([self.p, other.p[1:]]),
            a=np.concatenate([self.a, other.a[1:]]),
            sigma=np.concatenate([self.sigma, other.sigma[1:]]),
            dt=self.dt,
            start_step=self.start_step,
        )


def _commensurate(period: float, dt: float) -> int:
    ratio = period / dt
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-9 * max(1.0, ratio):
        raise IncommensurateStepError(f"period/dt = {ratio!r} is not an integer")
    return k


def integrate_meanfield(
    params: SystemParams,
    initial: MeanFieldState = ZERO_STATE,
    t_end: float = None,
    dt: float = None,
    *,
    start_step: int = 0,
    bound: float = INSTABILITY_BOUND,
) -> MeanFieldTrajectory:
    """Classical RK4 with a fixed step from ``start_step * dt`` to ``t_end``.

    ``t_end`` is an absolute time; the trajectory holds every step including
    both end points. Any component exceeding ``bound`` (or turning NaN)
    raises ``InstabilityError``.
    """
    if dt is None or dt <= 0:
        raise ValueError("dt must be positive")
    t0 = start_step * dt
    if t_end is None or t_end - t0 < dt * (1 - 1e-9):
        raise ValueError("t_end must exceed the start time by at least one step")
    if params.Omega > 0 and dt > params.tau / 1000 * (1 + 1e-12):
        raise ValueError(f"dt={dt} is coarser than tau/1000")
    n = math.ceil((t_end - t0) / dt - 1e-9)

    wm, G, gm = params.omega_m, params.G, params.gamma_m
    E0, eps, Om = params.E0, params.eps, params.Omega
    half_d0, we, N = 0.5 * params.delta_0, params.omega_e, params.N
    cav = -1j * params.delta_c - params.kappa_a
    ig0 = 1j * params.g0
    ig0N = ig0 * N
    kd = params.kappa_d
    cos = math.cos

    def f(t, q, p, a, s):
        E = E0 + eps * cos(Om * t)
        det = half_d0 * (1.0 - cos(we * t))
        return (
            wm * p,
            -wm * q + G * (a.real * a.real + a.imag * a.imag) - gm * p,
            cav * a + 1j * G * a * q + E - ig0 * s,
            (-kd + 1j * det * N) * s + ig0N * a,
        )

    qs = np.empty(n + 1)
    ps = np.empty(n + 1)
    as_ = np.empty(n + 1, dtype=complex)
    ss = np.empty(n + 1, dtype=complex)
    q, p, a, s = float(initial.q), float(initial.p), complex(initial.a), complex(initial.sigma)
    qs[0], ps[0], as_[0], ss[0] = q, p, a, s
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for k in range(n):
        i = start_step + k
        t = i * dt
        tm = (i + 0.5) * dt
        k1q, k1p, k1a, k1s = f(t, q, p, a, s)
        k2q, k2p, k2a, k2s = f(tm, q + h2 * k1q, p + h2 * k1p, a + h2 * k1a, s + h2 * k1s)
        k3q, k3p, k3a, k3s = f(tm, q + h2 * k2q, p + h2 * k2p, a + h2 * k2a, s + h2 * k2s)
        k4q, k4p, k4a, k4s = f((i + 1) * dt, q + dt * k3q, p + dt * k3p, a + dt * k3a, s + dt * k3s)
        q = q + h6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        p = p + h6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        a = a + h6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        s = s + h6 * (k1s + 2 * k2s + 2 * k3s + k4s)
        # written as negations so that NaN also trips the check
        if not (abs(q) <= bound and abs(p) <= bound and abs(a) <= bound and abs(s) <= bound):
            raise InstabilityError("mean-field component exceeds bound", (i + 1) * dt)
        qs[k + 1], ps[k + 1], as_[k + 1], ss[k + 1] = q, p, a, s

    times = (start_step + np.arange(n + 1)) * dt
    return MeanFieldTrajectory(times, qs, ps, as_, ss, dt, start_step)


def continue_trajectory(traj: MeanFieldTrajectory, params: SystemParams, t_end: float, **kwargs) -> MeanFieldTrajectory:
    """Integrate onward from the last sample of ``traj``."""
    return integrate_meanfield(
        params, traj.final, t_end, traj.dt, start_step=traj.start_step + len(traj) - 1, **kwargs
    )


def periodicity_gap(traj: MeanFieldTrajectory, tau: float, components=COMPONENTS) -> np.ndarray:
    """``max_c |c(t + tau) - c(t)|`` for every sample whose shift is stored."""
    k = traj.steps_per(tau)
    if len(traj) <= k:
        return np.empty(0)
    gap = np.zeros(len(traj) - k)
    for name in components:
        x = traj.component(name)
        gap = np.maximum(gap, np.abs(x[k:] - x[:-k]))
    return gap


def detect_limit_cycle(traj: MeanFieldTrajectory, tau: float, tol: float, components=COMPONENTS):
    """Earliest sample time after which the trajectory repeats with period ``tau``.

    Returns ``t*`` such that ``|c(t + tau) - c(t)| < tol`` for every listed
    component and every later sample, or ``None`` when no such time exists.
    At least one full period of comparisons must follow ``t*``.
    """
    k = traj.steps_per(tau)
    if len(traj) < 2 * k + 1:
        raise ValueError("trajectory must span at least two periods")
    gap = periodicity_gap(traj, tau, components)
    bad = np.flatnonzero(~(gap < tol))
    first = 0 if bad.size == 0 else bad[-1] + 1
    if len(gap) - first < k:
        return None
    return float(traj.times[first])


def last_periods(traj: MeanFieldTrajectory, tau: float, periods: int = 5) -> slice:
    """Slice of the final ``periods`` modulation periods (one end point kept)."""
    k = traj.steps_per(tau) * periods
    if len(traj) < k + 1:
        raise ValueError("trajectory shorter than the requested window")
    return slice(len(traj) - k - 1, len(traj) - 1)


def long_time_average(values: np.ndarray, traj: MeanFieldTrajectory, tau: float, periods: int = 5) -> float:
    return float(np.mean(values[last_periods(traj, tau, periods)]))


def steady_displacement_qs(params: SystemParams, sigma_ss_mag2: float) -> float:
    """Few-mode estimate of the steady mirror displacement.

    ``sigma_ss_mag2`` is the long-time average of ``|<sigma>|^2``, taken from
    a numerical run by the caller.
    """
    if params.g0 == 0 or params.N == 0:
        raise ZeroDivisionError("division by zero: g0 and N must be nonzero")
    chi = params.G / params.omega_m
    C = params.eps**2 / (2.0 * params.Omega**2) if params.eps else 0.0
    N2 = params.N**2
    return chi * sigma_ss_mag2 / (params.g0**2 * N2) * (params.delta_0**2 * N2 / 4.0 + params.kappa_d**2) + chi * C
