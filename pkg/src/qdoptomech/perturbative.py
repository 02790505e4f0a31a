"""Double expansion of the periodic mean fields in harmonics and powers of G.

The asymptotic solution is written as

    <O>(t) = sum_j sum_n O[n, j] exp(i n Omega t) G**j,   O in {q, p, a, sigma}

and the coefficients are filled order by order in ``j``. Three recursions
are available:

``"harmonic"`` (default)
    Harmonic balance of the mean-field equations. The QD detuning enters
    through all of its Fourier components, so each order solves a small
    linear system that couples neighbouring harmonics of ``sigma``.
``"consistent"``
    Per-harmonic closed form with the detuning replaced by its mean
    ``N delta_0 / 2`` at every order.
``"literal"``
    Closed forms with no detuning at zeroth order, ``(n Omega - delta_0)``
    at higher order and mixed ``kappa_a`` / ``kappa_d`` brackets. Kept for
    comparison only; it disagrees with the integrator by about 20 %.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import NonRealReconstructionError, ResonanceError
from .model import MeanFieldState, SystemParams

VARIABLES = ("q", "p", "a", "sigma")
VARIANTS = ("harmonic", "consistent", "literal")
DEFAULT_VARIANT = "harmonic"
RESONANCE_TOL = 1e-12


@dataclass
class FourierExpansion:
    """Coefficient table ``coeffs[var][j, n + n_max]``."""

    n_max: int
    j_max: int
    Omega: float
    variant: str = DEFAULT_VARIANT
    coeffs: dict = field(default_factory=dict)
    filled: int = -1  # highest order computed so far

    def __post_init__(self):
        shape = (self.j_max + 1, 2 * self.n_max + 1)
        for var in VARIABLES:
            self.coeffs.setdefault(var, np.zeros(shape, dtype=complex))

    @property
    def harmonics(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def coeff(self, var: str, n: int, j: int) -> complex:
        if abs(n) > self.n_max or not 0 <= j <= self.j_max:
            return 0j
        return complex(self.coeffs[var][j, n + self.n_max])

    def entries(self):
        """Yield ``(var, n, j, value)`` for the whole table."""
        for var in VARIABLES:
            for j in range(self.j_max + 1):
                for n in self.harmonics:
                    yield var, int(n), j, complex(self.coeffs[var][j, n + self.n_max])


def fourier_drive_coeffs(params: SystemParams, n_max: int = 3) -> dict:
    """Fourier coefficients ``E_n`` of ``E0 + eps cos(Omega t)``."""
    out = {n: 0.0 for n in range(-n_max, n_max + 1)}
    out[0] = params.E0
    if n_max >= 1:
        out[1] = out[-1] = params.eps / 2.0
    return out


def fourier_detuning_coeffs(params: SystemParams, n_max: int = 3) -> dict:
    """Fourier coefficients of ``delta_0 (1 - cos(Omega t)) / 2``.

    Assumes the QD is modulated at the drive frequency.
    """
    _check_common_frequency(params)
    out = {n: 0.0 for n in range(-n_max, n_max + 1)}
    out[0] = params.delta_0 / 2.0
    if n_max >= 1:
        out[1] = out[-1] = -params.delta_0 / 4.0
    return out


def _check_common_frequency(params):
    if params.delta_0 != 0 and params.omega_e != params.Omega:
        raise ValueError("the Fourier expansion needs omega_e == Omega when delta_0 != 0")


def _as_array(coeffs: dict, n_max: int) -> np.ndarray:
    return np.array([coeffs[n] for n in range(-n_max, n_max + 1)], dtype=complex)


def _truncated_conv(x, y, n_max):
    """``sum_m x[m] y[n - m]`` for |n| <= n_max, out-of-range terms dropped."""
    return np.convolve(x, y)[n_max : 3 * n_max + 1]


def _truncated_corr(x, y, n_max):
    """``sum_m conj(x[m]) y[n + m]`` for |n| <= n_max."""
    return _truncated_conv(np.conj(x[::-1]), y, n_max)


def _check_den(den, ns, what):
    bad = np.flatnonzero(np.abs(den) < RESONANCE_TOL)
    if bad.size:
        n = int(ns[bad[0]])
        raise ResonanceError(f"{what} vanishes at harmonic n={n}", n)


def _cavity_den(params, ns):
    return params.kappa_a + 1j * (params.delta_c + ns * params.Omega)


def _harmonic_system(params, n_max):
    """Matrix of the coupled (a, sigma) harmonic-balance equations."""
    ns = np.arange(-n_max, n_max + 1)
    K = len(ns)
    det = _as_array(fourier_detuning_coeffs(params, n_max), n_max)
    g0, N = params.g0, params.N
    M = np.zeros((2 * K, 2 * K), dtype=complex)
    M[:K, :K] = np.diag(_cavity_den(params, ns))
    M[:K, K:] = 1j * g0 * np.eye(K)
    M[K:, :K] = -1j * g0 * N * np.eye(K)
    sig = np.diag(1j * ns * params.Omega + params.kappa_d)
    for r in range(K):
        for c in range(K):
            d = r - c
            if abs(d) <= n_max:
                sig[r, c] -= 1j * N * det[d + n_max]
    M[K:, K:] = sig
    smallest = np.linalg.svd(M, compute_uv=False)[-1]
    if smallest < RESONANCE_TOL:
        raise ResonanceError("harmonic-balance matrix is singular")
    return M


def _solve_order(params, src, n_max, variant, order):
    """Return ``(a_n, sigma_n)`` for one order given the cavity source."""
    ns = np.arange(-n_max, n_max + 1)
    g0, N, Om = params.g0, params.N, params.Omega
    cav = _cavity_den(params, ns)
    if variant == "harmonic":
        M = _harmonic_system(params, n_max)
        x = np.linalg.solve(M, np.concatenate([src, np.zeros_like(src)]))
        return x[: len(ns)], x[len(ns) :]
    if variant == "consistent":
        d = 1j * (ns * Om - N * params.delta_0 / 2.0) + params.kappa_d
        den = cav * d - g0**2 * N
        _check_den(den, ns, "cavity-QD denominator")
        a = src * d / den
        return a, 1j * g0 * N * src / den
    if variant == "literal":
        if order == 0:
            src = src[::-1]  # E_{-n}
            d = 1j * ns * Om + params.kappa_d
            den = cav * d - g0**2 * N
            _check_den(den, ns, "cavity-QD denominator")
            return src * d / den, src * 1j * g0 * N / den
        shifted = 1j * (ns * Om - params.delta_0)
        den = cav * (shifted + params.kappa_d) - g0**2 * N
        _check_den(den, ns, "cavity-QD denominator")
        conv = src / 1j  # bare convolution sum
        a = 1j * conv * cav * (shifted + params.kappa_a) / den
        sigma = -g0 * N * conv * cav / den
        return a, sigma
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def zeroth_order_coeffs(
    params: SystemParams, n_max: int = 3, j_max: int = 4, variant: str = DEFAULT_VARIANT
) -> FourierExpansion:
    """New expansion with the G-independent order filled in."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    _check_common_frequency(params)
    exp = FourierExpansion(n_max=n_max, j_max=j_max, Omega=params.Omega, variant=variant)
    src = _as_array(fourier_drive_coeffs(params, n_max), n_max)
    a, sigma = _solve_order(params, src, n_max, variant, 0)
    exp.coeffs["a"][0] = a
    exp.coeffs["sigma"][0] = sigma
    exp.filled = 0
    return exp


def higher_order_coeffs(expansion: FourierExpansion, params: SystemParams) -> FourierExpansion:
    """Fill orders ``1..j_max`` in place and return the expansion.

    The coefficients never involve ``G`` itself; it only appears as the
    weight ``G**j`` in ``reconstruct``.
    """
    if expansion.filled < 0:
        raise ValueError("zeroth order must be filled first")
    n_max = expansion.n_max
    ns = expansion.harmonics
    Om, wm = params.Omega, params.omega_m
    mech = wm**2 - (ns * Om) ** 2 + 1j * params.gamma_m * ns * Om
    _check_den(mech, ns, "mechanical denominator")
    Q, P, A, S = (expansion.coeffs[v] for v in VARIABLES)
    for j in range(max(1, expansion.filled + 1), expansion.j_max + 1):
        intensity = sum(_truncated_corr(A[k], A[j - k - 1], n_max) for k in range(j))
        Q[j] = wm * intensity / mech
        P[j] = 1j * ns * Om * Q[j] / wm
        src = 1j * sum(_truncated_conv(A[k], Q[j - k - 1], n_max) for k in range(j))
        A[j], S[j] = _solve_order(params, src, n_max, expansion.variant, j)
        expansion.filled = j
    return expansion


def expand(params: SystemParams, n_max: int = 3, j_max: int = 4, variant: str = DEFAULT_VARIANT) -> FourierExpansion:
    return higher_order_coeffs(zeroth_order_coeffs(params, n_max, j_max, variant), params)


def reconstruct_series(expansion: FourierExpansion, G: float, t, j_max: int = None) -> dict:
    """Evaluate the truncated double sum at the times ``t`` (array-friendly).

    Returns a dict of arrays; ``q`` and ``p`` are real.
    """
    j_top = expansion.j_max if j_max is None else min(j_max, expansion.j_max)
    if j_top > expansion.filled:
        raise ValueError(f"orders above {expansion.filled} are not filled")
    t = np.asarray(t, dtype=float)
    phases = np.exp(1j * np.multiply.outer(t, expansion.harmonics * expansion.Omega))
    weights = G ** np.arange(j_top + 1)
    out = {}
    for var in VARIABLES:
        c = weights @ expansion.coeffs[var][: j_top + 1]
        out[var] = phases @ c
    for var in ("q", "p"):
        residue = np.max(np.abs(out[var].imag), initial=0.0)
        if residue > 1e-8:
            raise NonRealReconstructionError(f"non-real mechanical reconstruction: |Im {var}| = {residue:.3g}")
        out[var] = out[var].real
    return out


def reconstruct(expansion: FourierExpansion, G: float, t: float, j_max: int = None) -> MeanFieldState:
    r = reconstruct_series(expansion, G, np.array([t]), j_max)
    return MeanFieldState(float(r["q"][0]), float(r["p"][0]), complex(r["a"][0]), complex(r["sigma"][0]))


def write_coefficients_csv(expansion: FourierExpansion, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["variable", "n", "j", "re", "im"])
        for var, n, j, value in expansion.entries():
            w.writerow([var, n, j, repr(value.real), repr(value.imag)])
