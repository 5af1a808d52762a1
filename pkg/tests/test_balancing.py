from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from bubbleglue import balancing as bl
from bubbleglue.bubbles import BubbleError, BubbleMap, RationalMap
from bubbleglue.fixtures import FIXTURES, load_fixture
from bubbleglue.geometry import QuadratureSpec, beta, beta_deriv
from bubbleglue.projective import fs_distance

IDENTITY = RationalMap.from_lists([[0, 1], [1, 0]])


def random_map(rng, n, d):
    return RationalMap(rng.normal(size=(n + 1, d + 1)) + 1j * rng.normal(size=(n + 1, d + 1)))


def identity_radial(weight):
    # the identity has density 1/(pi (1+r^2)^2); integrate over the plane radially
    f = lambda r: weight(r) * 2 * r / (1 + r * r) ** 2
    return sum(integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13)[0] for a, b in ((0, 1), (1, 2), (2, np.inf)))


def test_identity_moments_against_radial_oracle():
    m = bl.moments(IDENTITY)
    assert m["energy"] == pytest.approx(1.0, abs=1e-12)
    assert abs(m["psi_tilde"]) < 1e-12
    assert m["psi3"] == pytest.approx(identity_radial(lambda r: float(beta(r))), abs=1e-11)
    assert bl.psi3_r_derivative(IDENTITY) == pytest.approx(identity_radial(lambda r: float(beta_deriv(r)) * r), abs=1e-11)


def test_translated_identity_centre_of_mass():
    c = 0.7 - 1.2j
    u = IDENTITY.compose_affine(1.0, -c)  # z - c
    assert bl.psi_tilde(u) == pytest.approx(c, abs=1e-11)


def test_fixed_rule_agrees_on_a_tame_map():
    q = QuadratureSpec(512, 64, "gauss")
    u = RationalMap.from_lists([[1, 0, 1j], [0, 2, 0.3]])
    a, b = bl.moments(u), bl.moments(u, q)
    assert a["energy"] == pytest.approx(b["energy"], abs=1e-8)
    assert a["psi_tilde"] == pytest.approx(b["psi_tilde"], abs=1e-8)
    assert a["psi3"] == pytest.approx(b["psi3"], abs=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.integers(1, 3))
def test_translation_dilation_law(seed, n, d):
    rng = np.random.default_rng(seed)
    u = random_map(rng, n, d)
    c, r = complex(*rng.normal(size=2)), float(rng.uniform(-0.5, 1.0))
    assert bl.translation_dilation_residual(u, c, r)["relative"] < 1e-6


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_psi3_derivative_and_c_jacobian(seed, d):
    u = random_map(np.random.default_rng(seed), 1, d)
    assert bl.psi3_derivative_check(u)["relative"] < 1e-4
    assert bl.psi_tilde_c_jacobian(u)["relative"] < 1e-5


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 6.0))
def test_rotation_invariance(seed, theta):
    u = random_map(np.random.default_rng(seed), 1, 2)
    rot = u.compose_affine(cmath.exp(-1j * theta), 0)
    a, b = bl.moments(u), bl.moments(rot)
    assert b["psi3"] == pytest.approx(a["psi3"], abs=1e-10)
    assert b["energy"] == pytest.approx(a["energy"], abs=1e-10)
    assert b["psi_tilde"] == pytest.approx(cmath.exp(1j * theta) * a["psi_tilde"], abs=1e-10)


def test_mark_contributions():
    base = {0: IDENTITY}
    far = BubbleMap.build({0: None}, {}, base, [(1, 0, 2.5)])
    near = BubbleMap.build({0: None}, {}, base, [(1, 0, 0.5)])
    s_far, s_near = bl.balance_functionals(far, 0), bl.balance_functionals(near, 0)
    assert s_far.psi3 - s_near.psi3 == pytest.approx(1.0, abs=1e-12)
    assert s_far.psi_tilde - s_near.psi_tilde == pytest.approx(2.0, abs=1e-12)
    assert s_near.psi3 == pytest.approx(bl.psi3(IDENTITY) - 0.5, abs=1e-12)
    with pytest.raises(BubbleError):
        bl.balance_functionals(far, 5)


@pytest.mark.parametrize("name", FIXTURES)
def test_balance_solve_round_trip(name):
    b = load_fixture(name)
    out, info = bl.balance_solve(b)
    for i in info:
        assert bl.balance_functionals(out, i).residual < 1e-9
    # node and mark values are unchanged by the action
    assert bl.balance_solve(out)[1] == {i: {"c": 0j, "r": 0.0, "iterations": 0, "residual": pytest.approx(0, abs=1e-9)} for i in info}
    shifted = bl.group_action(out, {i: (0.1 + 0.05j, 0.2, 0.0) for i in info})
    again, _ = bl.balance_solve(shifted)
    for i in info:
        assert bl.balance_functionals(again, i).residual < 1e-9
        # the balanced representative is unique for theta fixed
        z = np.exp(np.linspace(-1, 1, 7)) * np.exp(1j * np.linspace(0, 6, 7))
        assert np.max(fs_distance(again.map_of[i].lift(z), out.map_of[i].lift(z))) < 1e-7


def test_group_action_keeps_node_values():
    b = load_fixture("star")
    moved = bl.group_action(b, {0: (0.3, 0.5, 1.0)})
    for h in b.tree.children(0):
        np.testing.assert_allclose(moved.map_of[0].lift(moved.x[h]) / b.map_of[0].lift(b.x[h]),
                                   (moved.map_of[0].lift(moved.x[h]) / b.map_of[0].lift(b.x[h]))[0], atol=1e-12)
    with pytest.raises(BubbleError):
        bl.group_action(b, {0: (0, -1.0, 0)})
    with pytest.raises(BubbleError):
        bl.group_action(b, {9: (0, 0.0, 0)})


def test_balance_solve_reports_non_convergence():
    with pytest.raises(bl.BalanceError):
        bl.balance_solve(load_fixture("chain_n1"), max_iter=1, tol=1e-14)
    assert math.isfinite(bl.balance_functionals(load_fixture("chain_n1"), 1).residual)
