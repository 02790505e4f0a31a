"""Two-mode logarithmic negativity of the fluctuation covariance matrix."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .covariance import MODES, CovarianceSeries, fluctuation_energies, phonon_number
from .errors import SimulationError, UnphysicalStateError

CLAMP = 1e-9
PAIRS = {"E_md": ("mirror", "qd"), "E_cd": ("cavity", "qd"), "E_cm": ("cavity", "mirror")}
SYMPLECTIC_FORM = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class TwoModeCovariance:
    """Blocks of a two-mode covariance matrix ``[[X, Z], [Z^T, Y]]``."""

    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.X, self.Z], [self.Z.T, self.Y]])

    def violations(self):
        out = []
        if np.linalg.det(self.X) < -CLAMP:
            out.append("det X < 0")
        if np.linalg.det(self.Y) < -CLAMP:
            out.append("det Y < 0")
        return out


def _mode_index(mode):
    try:
        return MODES[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}; expected one of {sorted(MODES)}") from None


def extract_two_mode(V, mode_a: str, mode_b: str) -> TwoModeCovariance:
    """Cut the 4x4 covariance of two modes out of the full 6x6 matrix."""
    if mode_a == mode_b:
        raise ValueError("identical modes")
    V = np.asarray(getattr(V, "V", V))
    ia, ib = list(_mode_index(mode_a)), list(_mode_index(mode_b))
    X = V[np.ix_(ia, ia)]
    Y = V[np.ix_(ib, ib)]
    Z = V[np.ix_(ia, ib)]
    return TwoModeCovariance(X.copy(), Y.copy(), Z.copy())


def _det2(M):
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


def _nu_minus(X, Y, Z, full):
    sigma = _det2(X) + _det2(Y) - 2.0 * _det2(Z)
    disc = sigma**2 - 4.0 * np.linalg.det(full)
    bad = disc < -CLAMP
    nu2 = 0.5 * (sigma - np.sqrt(np.maximum(disc, 0.0)))
    bad |= ~(nu2 > 0)
    return np.sqrt(np.where(bad, np.nan, nu2)), bad


def smallest_symplectic_eigenvalue(tm: TwoModeCovariance) -> float:
    """Closed-form smallest symplectic eigenvalue of the partial transpose."""
    nu, bad = _nu_minus(tm.X, tm.Y, tm.Z, tm.matrix)
    if bad:
        raise UnphysicalStateError("partial transpose has no real symplectic spectrum")
    return float(nu)


def log_negativity(tm: TwoModeCovariance) -> float:
    """``max(0, -ln(2 nu_minus))``."""
    nu = smallest_symplectic_eigenvalue(tm)
    return float(max(0.0, -np.log(2.0 * nu)))


def symplectic_oracle(tm: TwoModeCovariance) -> np.ndarray:
    """Both symplectic eigenvalues of the partial transpose, ascending.

    Computed from the spectrum of ``i Omega V~`` with mode B's momentum
    flipped; independent of the determinant formula.
    """
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    Vt = flip @ tm.matrix @ flip
    try:
        ev = np.linalg.eigvals(1j * SYMPLECTIC_FORM @ Vt)
    except np.linalg.LinAlgError as exc:
        raise SimulationError(f"non-convergent eigensolve: {exc}") from exc
    mags = np.sort(np.abs(ev))
    return np.array([mags[0:2].mean(), mags[2:4].mean()])


def log_negativity_stack(V: np.ndarray, mode_a: str, mode_b: str, times=None) -> np.ndarray:
    """Vectorised ``log_negativity`` over a stack of 6x6 matrices."""
    if mode_a == mode_b:
        raise ValueError("identical modes")
    idx = list(_mode_index(mode_a)) + list(_mode_index(mode_b))
    full = V[..., idx, :][..., :, idx]
    full = 0.5 * (full + np.swapaxes(full, -1, -2))
    X, Z, Y = full[..., :2, :2], full[..., :2, 2:], full[..., 2:, 2:]
    nu, bad = _nu_minus(X, Y, Z, full)
    if np.any(bad):
        k = int(np.flatnonzero(np.atleast_1d(bad))[0])
        t = None if times is None else float(times[k])
        raise UnphysicalStateError(f"{mode_a}-{mode_b} partial transpose has no real symplectic spectrum", t)
    return np.maximum(0.0, -np.log(2.0 * nu))


@dataclass(frozen=True)
class EntanglementReport:
    t: float
    E_md: float
    E_cd: float
    E_cm: float
    energies: tuple
    phonons: float


@dataclass
class EntanglementSeries:
    """Column-wise storage; iterating yields ``EntanglementReport`` rows."""

    t: np.ndarray
    E_md: np.ndarray
    E_cd: np.ndarray
    E_cm: np.ndarray
    mirror: np.ndarray
    cavity: np.ndarray
    exciton: np.ndarray
    phonons: np.ndarray

    COLUMNS = ("t", "E_md", "E_cd", "E_cm", "mirror_energy", "cavity_energy", "exciton_energy", "phonons")

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k) -> EntanglementReport:
        return EntanglementReport(
            float(self.t[k]), float(self.E_md[k]), float(self.E_cd[k]), float(self.E_cm[k]),
            (float(self.mirror[k]), float(self.cavity[k]), float(self.exciton[k])), float(self.phonons[k]),
        )

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def column(self, name: str) -> np.ndarray:
        aliases = {"mirror_energy": "mirror", "cavity_energy": "cavity", "exciton_energy": "exciton",
                   "phonon_number": "phonons"}
        return getattr(self, aliases.get(name, name))


def entanglement_timeseries(series: CovarianceSeries) -> EntanglementSeries:
    if len(series) == 0:
        raise ValueError("empty covariance sequence")
    E = {name: log_negativity_stack(series.V, *pair, times=series.times) for name, pair in PAIRS.items()}
    mirror, cavity, exciton = fluctuation_energies(series.V)
    return EntanglementSeries(series.times, E["E_md"], E["E_cd"], E["E_cm"], mirror, cavity, exciton,
                              phonon_number(series.V))


def write_entanglement_csv(ent: EntanglementSeries, path, stride: int = 1) -> None:
    cols = [ent.column(c) for c in EntanglementSeries.COLUMNS]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(EntanglementSeries.COLUMNS)
        for k in range(0, len(ent), stride):
            w.writerow([repr(float(c[k])) for c in cols])
