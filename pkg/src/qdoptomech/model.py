"""Physical parameters, modulation waveforms and validation.

Every quantity is dimensionless, measured in units of the mechanical
frequency ``omega_m`` (which is therefore 1 in all built-in scenarios).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

PARAM_FIELDS = (
    "omega_m",
    "delta_c",
    "delta_0",
    "omega_e",
    "Omega",
    "E0",
    "eps",
    "G",
    "g0",
    "kappa_a",
    "kappa_d",
    "gamma_m",
    "N",
    "n_b",
)


@dataclass(frozen=True, kw_only=True)
class SystemParams:
    """Rates, couplings and modulation settings of the hybrid system.

    Attributes
    ----------
    delta_c : cavity-laser detuning.
    delta_0 : maximum QD detuning; the QD detuning sweeps ``[0, delta_0]``.
    omega_e : QD modulation frequency.
    Omega : drive-amplitude modulation frequency.
    E0, eps : constant drive amplitude and its modulation depth.
    G : optomechanical coupling.
    g0 : QD-cavity coupling.
    kappa_a, kappa_d, gamma_m : cavity, QD and mechanical damping.
    N : population inversion, held fixed.
    n_b : thermal occupation of the mechanical bath.
    omega_m : mechanical frequency (the unit).
    """

    delta_c: float
    delta_0: float
    omega_e: float
    Omega: float
    E0: float
    eps: float
    G: float
    g0: float
    kappa_a: float
    kappa_d: float
    gamma_m: float
    N: float
    n_b: float
    omega_m: float = 1.0

    @property
    def tau(self) -> float:
        """Drive modulation period ``2 pi / Omega``."""
        return 2.0 * math.pi / self.Omega

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "SystemParams":
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class MeanFieldState:
    """Mean values at one instant: real mirror ``q, p``, complex ``a, sigma``."""

    q: float
    p: float
    a: complex
    sigma: complex

    def as_tuple(self):
        return (self.q, self.p, self.a, self.sigma)

    def is_finite(self) -> bool:
        return all(np.isfinite(v) for v in self.as_tuple())


ZERO_STATE = MeanFieldState(0.0, 0.0, 0j, 0j)


def drive_amplitude(t, params: SystemParams):
    """``E0 + eps cos(Omega t)``; ``t`` may be a scalar or an array."""
    return params.E0 + params.eps * np.cos(params.Omega * t)


def qd_detuning(t, params: SystemParams):
    """``delta_0 (1 - cos(omega_e t)) / 2``, always inside ``[0, delta_0]``."""
    return 0.5 * params.delta_0 * (1.0 - np.cos(params.omega_e * t))


def validate(params: SystemParams) -> SystemParams:
    """Return ``params`` unchanged if every invariant holds.

    Raises
    ------
    ParameterError
        Listing every violated invariant, not just the first.
    """
    problems = []
    for name in PARAM_FIELDS:
        if not math.isfinite(getattr(params, name)):
            problems.append(f"non-finite value for {name}")
    if params.omega_m <= 0:
        problems.append("non-positive mechanical frequency")
    if params.kappa_a <= 0:
        problems.append("non-positive cavity decay")
    if params.kappa_d <= 0:
        problems.append("non-positive QD decay")
    if params.gamma_m < 0:
        problems.append("negative mechanical damping")
    if params.eps != 0 and params.Omega <= 0:
        problems.append("non-positive drive modulation frequency")
    if params.delta_0 != 0 and params.omega_e <= 0:
        problems.append("non-positive QD modulation frequency")
    if not -1.0 <= params.N <= 1.0:
        problems.append("inversion out of range")
    if params.n_b < 0:
        problems.append("negative thermal occupation")
    if problems:
        raise ParameterError(problems)
    return params
