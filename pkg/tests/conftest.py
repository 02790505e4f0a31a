import math
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from qdoptomech.model import SystemParams

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


def base_params(**changes) -> SystemParams:
    values = dict(delta_c=1.0, delta_0=1.0, omega_e=1.0, Omega=1.0, E0=1.0, eps=0.6, G=0.01, g0=0.3,
                  kappa_a=0.1, kappa_d=0.2, gamma_m=0.01, N=1.0, n_b=0.0)
    values.update(changes)
    return SystemParams(**values)


@pytest.fixture
def fig2_params():
    return base_params()


@pytest.fixture
def tau():
    return 2 * math.pi
