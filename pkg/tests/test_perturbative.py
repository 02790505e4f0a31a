import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdoptomech.errors import NonRealReconstructionError, ResonanceError
from qdoptomech.meanfield import integrate_meanfield, meanfield_rhs
from qdoptomech.model import drive_amplitude, qd_detuning
from qdoptomech.perturbative import (VARIANTS, expand, fourier_detuning_coeffs, fourier_drive_coeffs,
                                     reconstruct, reconstruct_series, write_coefficients_csv,
                                     zeroth_order_coeffs)

from .conftest import base_params

TAU = 2 * math.pi


@pytest.fixture(scope="module")
def fig2_cycle():
    """Numerical limit cycle of the fig2 set: last period of a 300-period run."""
    p = base_params()
    traj = integrate_meanfield(p, t_end=300 * TAU, dt=TAU / 1000)
    w = slice(len(traj) - 1001, len(traj) - 1)
    return p, traj.times[w], traj.q[w], traj.a[w]


def test_drive_coefficients():
    c = fourier_drive_coeffs(base_params())
    assert c == {-3: 0.0, -2: 0.0, -1: 0.3, 0: 1.0, 1: 0.3, 2: 0.0, 3: 0.0}
    assert [n for n, v in fourier_drive_coeffs(base_params(eps=0.0)).items() if v] == [0]


def test_detuning_coefficients():
    c = fourier_detuning_coeffs(base_params())
    assert c == {-3: 0.0, -2: 0.0, -1: -0.25, 0: 0.5, 1: -0.25, 2: 0.0, 3: 0.0}
    assert not any(fourier_detuning_coeffs(base_params(delta_0=0.0)).values())


def test_detuning_needs_common_frequency():
    with pytest.raises(ValueError):
        fourier_detuning_coeffs(base_params(omega_e=2.0))


def test_coefficients_resynthesise_waveforms():
    p = base_params(E0=0.7, eps=0.45, delta_0=1.3)
    t = np.random.default_rng(1).uniform(-50, 50, 100)
    for coeffs, direct in ((fourier_drive_coeffs(p), drive_amplitude(t, p)),
                           (fourier_detuning_coeffs(p), qd_detuning(t, p))):
        series = sum(v * np.exp(1j * n * p.Omega * t) for n, v in coeffs.items())
        np.testing.assert_allclose(series, direct, atol=1e-12)


def test_zeroth_order_literal_value():
    e = zeroth_order_coeffs(base_params(), variant="literal")
    assert e.coeff("a", 0, 0) == pytest.approx(0.2 / (-0.07 + 0.2j), abs=1e-13)


def test_zeroth_order_agrees_without_detuning():
    p = base_params(delta_0=0.0)
    values = [zeroth_order_coeffs(p, variant=v).coeff("a", 0, 0) for v in VARIANTS]
    np.testing.assert_allclose(values, 0.2 / (-0.07 + 0.2j), atol=1e-13)


@pytest.mark.parametrize("variant", VARIANTS)
def test_zeroth_order_without_qd(variant):
    p = base_params(g0=0.0)
    e = zeroth_order_coeffs(p, variant=variant)
    for n in range(-3, 4):
        drive = {0: 1.0, 1: 0.3, -1: 0.3}.get(n, 0.0)
        assert e.coeff("a", n, 0) == pytest.approx(drive / (0.1 + 1j * (1 + n)), abs=1e-13)
        assert e.coeff("sigma", n, 0) == 0


@pytest.mark.parametrize("variant", VARIANTS)
def test_zeroth_order_mechanics_and_high_harmonics(variant):
    e = zeroth_order_coeffs(base_params(delta_0=0.0), variant=variant)
    assert not e.coeffs["q"][0].any() and not e.coeffs["p"][0].any()
    for n in (-3, -2, 2, 3):
        assert e.coeff("a", n, 0) == 0 and e.coeff("sigma", n, 0) == 0


@pytest.mark.parametrize("eps", [0.0, 0.6])
def test_zeroth_order_is_the_uncoupled_limit_cycle(eps):
    # with G = 0 the cavity and QD obey a linear periodic system; harmonic
    # balance converges spectrally to its numerically integrated limit cycle
    p = base_params(G=0.0, eps=eps)
    traj = integrate_meanfield(p, t_end=80 * TAU, dt=TAU / 1000)
    w = slice(len(traj) - 1001, len(traj) - 1)
    rec = reconstruct_series(zeroth_order_coeffs(p, n_max=8), 0.0, traj.times[w], j_max=0)
    assert np.abs(rec["a"] - traj.a[w]).max() < 1e-8
    assert np.abs(rec["sigma"] - traj.sigma[w]).max() < 1e-8


@pytest.mark.parametrize("variant", VARIANTS)
def test_mechanical_coefficient_relations(variant):
    e = expand(base_params(), variant=variant)
    ns = e.harmonics
    np.testing.assert_allclose(e.coeffs["p"], 1j * ns * 1.0 * e.coeffs["q"], rtol=0, atol=1e-15)
    q = e.coeffs["q"]
    np.testing.assert_allclose(q[:, ::-1], np.conj(q), rtol=0, atol=1e-10 * np.abs(q).max())


@given(G=st.floats(1e-4, 0.05))
def test_coefficients_do_not_depend_on_G(G):
    a = expand(base_params())
    b = expand(base_params(G=G))
    for var in a.coeffs:
        assert np.array_equal(a.coeffs[var], b.coeffs[var])


def test_zero_coupling_keeps_only_zeroth_order():
    e = expand(base_params())
    t = np.linspace(0, TAU, 17)
    full = reconstruct_series(e, 0.0, t)
    j0 = reconstruct_series(e, 1.0, t, j_max=0)
    for var in ("a", "sigma"):
        np.testing.assert_array_equal(full[var], j0[var])
    assert not full["q"].any()


@given(t=st.floats(-100, 100))
def test_reconstruction_is_periodic(t):
    e = expand(base_params())
    a, b = reconstruct(e, 0.01, t), reconstruct(e, 0.01, t + TAU)
    assert a.q == pytest.approx(b.q, abs=1e-9)
    assert a.a == pytest.approx(b.a, abs=1e-9)


def test_unmodulated_expansion_is_the_fixed_point():
    p = base_params(eps=0.0, delta_0=0.0)
    e = expand(p)
    assert all(c == 0 for _, n, _, c in e.entries() if n != 0)
    state = reconstruct(e, p.G, 0.7)
    d = meanfield_rhs(state, 0.7, p)
    # truncation at j = 4 leaves an O(G^5)-sized residual
    assert max(abs(d.q), abs(d.p), abs(d.a), abs(d.sigma)) < 1e-8


def test_mechanical_resonance_detected():
    with pytest.raises(ResonanceError, match="resonant denominator") as info:
        expand(base_params(gamma_m=0.0))
    assert abs(info.value.n) == 1


@pytest.mark.parametrize("variant", ["consistent", "literal"])
def test_cavity_qd_resonance_detected(variant):
    p = base_params(delta_c=0.0, delta_0=0.0, g0=math.sqrt(0.02))
    with pytest.raises(ResonanceError) as info:
        zeroth_order_coeffs(p, variant=variant)
    assert info.value.n == 0


def test_harmonic_system_resonance_detected():
    with pytest.raises(ResonanceError):
        zeroth_order_coeffs(base_params(delta_c=0.0, delta_0=0.0, g0=math.sqrt(0.02)))


def test_non_real_mechanics_rejected():
    e = expand(base_params())
    e.coeffs["q"][1, 4] += 1e-3j
    with pytest.raises(NonRealReconstructionError, match="non-real mechanical reconstruction"):
        reconstruct(e, 1.0, 0.0)


def test_unknown_variant():
    with pytest.raises(ValueError):
        expand(base_params(), variant="other")


def _errors(cycle, j_max, variant="harmonic"):
    p, t, q, a = cycle
    rec = reconstruct_series(expand(p, variant=variant), p.G, t, j_max=j_max)
    return np.abs(rec["a"] - a).max(), np.abs(rec["q"] - q).max()


def test_refinement_is_monotone(fig2_cycle):
    errs = [_errors(fig2_cycle, j) for j in range(1, 5)]
    for (a0, q0), (a1, q1) in zip(errs, errs[1:]):
        assert a1 <= a0 and q1 <= q0


def test_default_variant_beats_alternatives(fig2_cycle):
    _, _, q, a = fig2_cycle
    diameter = np.abs(a[:, None] - a[None, :]).max()
    scores = {v: max(e / s for e, s in zip(_errors(fig2_cycle, 4, v), (diameter, np.ptp(q)))) for v in VARIANTS}
    assert min(scores, key=scores.get) == "harmonic"
    assert scores["harmonic"] < 0.05


def test_coefficient_csv(tmp_path):
    e = expand(base_params())
    path = tmp_path / "c.csv"
    write_coefficients_csv(e, path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["variable", "n", "j", "re", "im"]
    assert len(rows) == 1 + 4 * 5 * 7
    var, n, j, re, im = rows[1 + 2 * 35 + 0 * 7 + 4]  # a, j=0, n=1
    assert complex(float(re), float(im)) == e.coeff("a", 1, 0)
