from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from bubbleglue import geometry as g
from bubbleglue.geometry import CutoffSpec, QuadratureSpec, SpherePoint

finite = st.floats(-50, 50, allow_nan=False)
complexes = st.builds(complex, finite, finite).filter(lambda z: z == 0 or abs(z) > 1e-150)


# --------------------------------------------------------------------------
# charts
# --------------------------------------------------------------------------

def test_embed_examples():
    np.testing.assert_allclose(g.embed(SpherePoint.north(0)), [0, 0, 1])
    np.testing.assert_allclose(g.embed(SpherePoint.south(0)), [0, 0, -1])
    np.testing.assert_allclose(g.embed(SpherePoint.north(1)), [1, 0, 0], atol=1e-15)
    assert SpherePoint.infinity().is_infinity


@settings(max_examples=200)
@given(complexes)
def test_chart_round_trip(z):
    p = SpherePoint.north(z)
    assert np.linalg.norm(p.embed()) == pytest.approx(1.0, abs=1e-14)
    if z != 0:
        s = p.to_chart("south")
        np.testing.assert_allclose(s.embed(), p.embed(), atol=1e-12)
        assert abs(s.to_chart("north").coordinate - z) <= 1e-12 * max(1.0, abs(z))
    assert np.all(np.isfinite(g.q_S(1e200 * (z or 1))))
    back = g.q_N_inv(p.embed())
    assert abs(back - z) <= 1e-10 * max(1.0, abs(z)) ** 2


def test_chart_errors():
    with pytest.raises(ValueError, match="pole"):
        SpherePoint.infinity().north_coordinate()
    with pytest.raises(ValueError):
        SpherePoint("east", 0)
    with pytest.raises(ValueError):
        SpherePoint.north(complex(math.inf, 0))


def test_phi_examples():
    assert g.phi(0, 0.3 - 2j) == 0.3 - 2j
    assert g.phi(2 + 1j, 2 + 1j) == 0
    assert g.phi(1, 3j) == -1 + 3j
    assert g.phi(1, SpherePoint.south(0.5)) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="pole"):
        g.phi(0, SpherePoint.infinity())


def test_phi_is_holomorphic():
    from bubbleglue.gluing import fd_wirtinger

    z = np.exp(np.linspace(-2, 2, 9))[:, None] * np.exp(1j * np.linspace(0, 6, 7))[None, :]
    d, db = fd_wirtinger(lambda w: w - (0.3 + 0.4j), z, 1e-3)
    assert np.max(np.abs(db)) < 1e-12
    np.testing.assert_allclose(d, 1.0, atol=1e-12)


# --------------------------------------------------------------------------
# cutoffs
# --------------------------------------------------------------------------

def test_beta_branches():
    assert g.beta(0.5) == 0.0
    assert g.beta(1.0) == 0.0
    assert g.beta(3.0) == 1.0
    assert g.beta(1.5) == pytest.approx(0.5)
    t = np.linspace(0, 3, 3001)
    b = g.beta(t)
    assert np.all(np.diff(b) >= 0)
    inside = (t > 1) & (t < 2)
    # e^{-1/s} underflows within 1.5e-3 of the ends
    assert np.all(g.beta_deriv(t)[(t > 1.002) & (t < 1.998)] > 0)
    assert np.all(g.beta_deriv(t)[~inside] == 0)


def test_beta_derivatives_match_differences():
    t = np.linspace(1.05, 1.95, 19)
    h = 1e-5
    np.testing.assert_allclose(g.beta_deriv(t), (g.beta(t + h) - g.beta(t - h)) / (2 * h), rtol=1e-6, atol=1e-9)
    np.testing.assert_allclose(g.beta_deriv2(t), (g.beta_deriv(t + h) - g.beta_deriv(t - h)) / (2 * h), rtol=1e-5, atol=1e-7)


def test_beta_r_support_and_constant():
    spec = CutoffSpec("beta_r", r=0.04)
    assert spec.support() == pytest.approx((0.2, 0.4))
    t = np.linspace(0, 1, 10001)
    d = g.eval_cutoff_deriv(spec, t)
    assert np.all(d[(t < 0.2) | (t > 0.4)] == 0)
    assert np.max(np.abs(d)) <= g.C_BETA / math.sqrt(0.04)
    for r in (1e-6, 1e-2, 1.0):
        tt = np.linspace(math.sqrt(r), 2 * math.sqrt(r), 2001)
        d2 = g.beta_deriv2(tt / math.sqrt(r)) / r
        assert np.max(np.abs(d2)) <= g.C_BETA / r * (1 + 1e-12)


def test_cutoff_errors():
    with pytest.raises(ValueError):
        g.eval_cutoff(CutoffSpec("beta"), -1.0)
    with pytest.raises(ValueError):
        CutoffSpec("beta_r", r=0)
    with pytest.raises(ValueError):
        CutoffSpec("beta_ms", eps=-1)
    with pytest.raises(ValueError):
        g.ms_cutoff_energy(0.0)


@pytest.mark.parametrize("eps", [0.5, 0.1, 0.01])
def test_ms_cutoff_shape(eps):
    spec = CutoffSpec("beta_ms", eps=eps)
    lo = math.exp(-1 / eps)
    assert spec.support() == pytest.approx((lo, 1.0))
    assert g.eval_cutoff(spec, 1.0) == 1.0
    assert g.eval_cutoff(spec, 5.0) == 1.0
    assert g.eval_cutoff(spec, lo) == 0.0
    assert g.eval_cutoff(spec, 0.0) == 0.0
    r = np.exp(np.linspace(-1 / eps, 0, 4001))
    v = g.eval_cutoff(spec, r)
    assert np.all(np.diff(v) >= -1e-12)
    # value and slope agree: the slope integrates to the rise over the ramp
    tau = np.linspace(-1 / eps - 0.1, 0.1, 200001)
    val, slope = g.ms_cutoff_profile(eps, tau)
    assert trapezoid(slope, tau) == pytest.approx(1.0, abs=1e-6)
    mid = (tau > -1 / eps + 0.05) & (tau < -0.05)
    np.testing.assert_allclose(np.gradient(val, tau)[mid], slope[mid], atol=1e-4)


@pytest.mark.parametrize("eps", [0.5, 0.1, 0.01, 0.001])
def test_ms_cutoff_energy_bound(eps):
    value = g.ms_cutoff_energy(eps)
    exact = g.ms_cutoff_energy_exact(eps)
    assert value <= 8 * eps
    assert abs(value - exact) < 0.01 * 8 * eps
    # the rounded ramp costs a little more than the plain ramp's 2 pi eps
    assert 2 * math.pi * eps <= exact <= 2 * math.pi * eps * 1.01


def test_ms_energy_gauss_agrees():
    q = QuadratureSpec(256, 8, "gauss")
    assert g.ms_cutoff_energy(0.1, q) == pytest.approx(g.ms_cutoff_energy_exact(0.1), rel=1e-6)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(1, 4)
    with pytest.raises(ValueError):
        QuadratureSpec(8, 4, "simpson")
    x, w = g.radial_rule(QuadratureSpec(64, 1, "gauss"), [0.0, 0.5, 2.0])
    assert np.sum(w) == pytest.approx(2.0)
    assert np.sum(w * x**3) == pytest.approx(4.0)
