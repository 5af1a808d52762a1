from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bubbleglue import gluing as gl
from bubbleglue.bubbles import BubbleMap, RationalMap
from bubbleglue.fixtures import FIXTURES, load_fixture
from bubbleglue.gluing import GluingError, GluingParameter
from bubbleglue.projective import fs_distance

ROOT = RationalMap.from_lists([[0, 1], [1, 0]])
CHILD = RationalMap.from_lists([[1, 0], [0, 1]])


def chain_with_mark(y: complex) -> BubbleMap:
    return BubbleMap.build({0: None, 1: 0}, {1: 0}, {0: ROOT, 1: CHILD}, [(0, 1, y)])


def random_neck(rng):
    x = complex(*rng.uniform(-0.5, 0.5, 2))
    v = 10 ** rng.uniform(-6, -2) * np.exp(2j * np.pi * rng.uniform())
    return x, complex(v)


def ring(x, v, t, m=64, phase=0.1):
    return x + t * math.sqrt(abs(v)) * np.exp(1j * (phase + 2 * np.pi * np.arange(m) / m))


# --------------------------------------------------------------------------
# the local stretch
# --------------------------------------------------------------------------

def test_stretch_examples():
    on, p = gl.local_stretch(0, 0.01, 0.25)
    assert not on and p.north_coordinate() == 0.25
    # 0.15 < 2 * 0.1 lies on the middle branch, where beta(1.5) = 1/2
    on, p = gl.local_stretch(0, 0.01, 0.15)
    assert not on and p.north_coordinate() == pytest.approx(0.075, rel=1e-14)
    on, p = gl.local_stretch(0.3, 1e-4, 0.3 + 0.02j)
    assert not on and p.north_coordinate() == 0.3 + 0.02j
    # a quarter of the neck radius: the cutoff factor is exactly zero
    v = 1e-4 * (0.6 + 0.8j)
    z = 0.25 * math.sqrt(abs(v)) * np.exp(0.7j)
    on, p = gl.local_stretch(0, v, z)
    assert on and p.chart == "south"
    assert p.coordinate == pytest.approx(np.conj(v / z), rel=1e-14)
    on, p = gl.local_stretch(0.2, v, 0.2)
    assert on and p.north_coordinate() == 0
    with pytest.raises(GluingError):
        gl.local_stretch(0, 0, 0.1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_stretch_branches_agree_on_circles(seed):
    rng = np.random.default_rng(seed)
    x, v = random_neck(rng)
    eps = 1e-3
    # at t = 1/2 and t = 2 both sides use formulas that agree there
    for t in (0.5, 2.0):
        _, lo = gl.stretch_arrays(x, v, ring(x, v, t * (1 - eps)))
        _, hi = gl.stretch_arrays(x, v, ring(x, v, t * (1 + eps)))
        if t == 2.0:
            np.testing.assert_allclose(lo, ring(x, v, t * (1 - eps)), atol=1e-12)
            np.testing.assert_allclose(hi, ring(x, v, t * (1 + eps)), atol=0)
        else:
            np.testing.assert_allclose(lo * (1 - eps) ** -1, hi * (1 + eps) ** -1, rtol=1e-12)
    # at t = 1 the circle collapses onto the node: bubble points run to infinity
    on_in, w_in = gl.stretch_arrays(x, v, ring(x, v, 1 - eps))
    on_out, w_out = gl.stretch_arrays(x, v, ring(x, v, 1 + eps))
    assert on_in.all() and not on_out.any()
    assert np.min(np.abs(w_in)) > 1e100
    assert np.max(np.abs(w_out - x)) < 1e-100


def test_closed_form_vanishes_off_the_neck():
    x, v = 0.1j, 1e-4j
    for t in (0.1, 0.49, 2.0, 3.0):
        assert np.all(gl.dbar_closed_form(x, v, ring(x, v, t)) == 0)
    assert np.all(gl.dbar_closed_form(x, v, ring(x, v, 0.75)) != 0)


def test_dbar_local_outside_annuli():
    rng = np.random.default_rng(4)
    for _ in range(10):
        x, v = random_neck(rng)
        for t in (0.2, 0.45, 2.2, 5.0):
            for z in ring(x, v, t, m=4, phase=rng.uniform(0, 6)):
                assert gl.dbar_local(x, v, z)["relative"] < 1e-8


def test_dbar_local_matches_closed_form_on_neck():
    rng = np.random.default_rng(5)
    for _ in range(10):
        x, v = random_neck(rng)
        for t in np.concatenate([rng.uniform(0.55, 0.95, 3), rng.uniform(1.05, 1.95, 3)]):
            z = ring(x, v, t, m=1, phase=rng.uniform(0, 6))[0]
            # beta's high derivatives grow at the ends of A^+: a finer stencil there
            res = gl.dbar_local(x, v, z, None if t < 1 else 1e-4 * math.sqrt(abs(v)))
            assert abs(res["dbar"] - res["closed_form"]) <= 1e-4 * abs(res["closed_form"])
            assert res["on_bubble"] == (t < 1)


def test_dbar_local_resolution_error():
    with pytest.raises(GluingError, match="resolution"):
        gl.dbar_local(0, 1e-4, 0.015, h_fd=1e-3)
    with pytest.raises(GluingError, match="crosses"):
        gl.dbar_local(0, 1e-4, 0.01 + 1e-7, h_fd=1e-5)


def test_dq_sup_is_uniform_in_the_neck_size():
    vals = [gl.dq_norm_sup(0.1 + 0.2j, v * (0.6 + 0.8j), samples=256) for v in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)]
    assert max(vals) / min(vals) < 1.1
    assert max(vals) < 10


# --------------------------------------------------------------------------
# q_upsilon and the glued curve
# --------------------------------------------------------------------------

@pytest.mark.parametrize("name", FIXTURES)
def test_zero_parameter_is_identity(name):
    b = load_fixture(name)
    gp = GluingParameter.make(b, {})
    assert gp.kept == tuple(sorted(b.tree.elements)) and gp.size == 0
    z = np.array([0.3 + 0.1j, -2, 1e3j])
    comp, w = gl.glued_points(gp, b.tree.root, z)
    assert np.all(comp == b.tree.root) and np.all(w == z)
    gc = gl.build_glued(gp)
    assert gc.curve == b.curve
    assert gc.annuli == ()
    sample = gl.preglue_map(gp)
    np.testing.assert_allclose(sample(b.tree.root, z), b.map_of[b.tree.root].lift(z))


def test_chain_marks_are_pulled_back_exactly():
    y = 0.3 + 0.2j
    b = chain_with_mark(y)
    v = 1e-4 * np.exp(0.4j)
    gp = GluingParameter.make(b, {1: v})
    gc = gl.build_glued(gp)
    assert gp.kept == (0,) and gc.curve.tree.elements == (0,)
    (label, comp, y_new), = gc.curve.marks
    assert (label, comp) == (0, 0)
    # deep inside the neck the stretch is z -> (z - x)/v
    assert y_new == pytest.approx(v * y, rel=1e-14)
    c, w = gl.glued_points(gp, 0, np.array([y_new]))
    assert c[0] == 1 and w[0] == pytest.approx(y, rel=1e-12)
    val = gl.preglue_map(gp)(0, np.array([y_new]))[0]
    assert fs_distance(val, CHILD.lift(y)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0, 2 * math.pi), st.floats(-6, -3))
def test_pull_back_inverts_glued_points(rad, arg, logv):
    b = chain_with_mark(1.0)
    v = 10**logv * np.exp(0.3j)
    gp = GluingParameter.make(b, {1: v})
    s = math.sqrt(abs(v))
    # bubble points with |w| up to 3/s reach the cutoff region A^-
    w = rad / s * np.exp(1j * arg)
    i, z = gl.pull_back(gp, 1, w)
    assert i == 0 and abs(z) < s
    c, back = gl.glued_points(gp, 0, np.array([z]))
    assert c[0] == 1
    assert abs(back[0] - w) <= 1e-9 * abs(w)


def test_star_orderings_agree():
    b = load_fixture("star")
    gp = GluingParameter.make(b, {1: 1e-4 * (0.6 + 0.8j), 2: 5e-5j})
    rng = np.random.default_rng(0)
    pts = []
    for h in (1, 2):
        s = gp.neck_scale(h)
        t = rng.uniform(0.05, 3.0, 200)
        pts.append(b.x[h] + s * t * np.exp(2j * np.pi * rng.uniform(size=t.size)))
    z = np.concatenate(pts + [rng.normal(size=50) + 1j * rng.normal(size=50)])
    c1, w1 = gl.glued_points(gp, 0, z, order=(0, 1, 2))
    c2, w2 = gl.glued_points(gp, 0, z, order=(0, 2, 1))
    assert np.array_equal(c1, c2)
    np.testing.assert_allclose(w1, w2, rtol=1e-12, atol=0)
    g1 = gl.build_glued(gp, order=(0, 1, 2))
    g2 = gl.build_glued(gp, order=(0, 2, 1))
    assert g1.curve == g2.curve
    with pytest.raises(GluingError, match="before its parent"):
        gl.glued_points(gp, 0, z, order=(1, 0, 2))
    with pytest.raises(GluingError, match="exactly once"):
        gl.glued_points(gp, 0, z, order=(0, 1))


def test_chain3_partial_gluing():
    b = load_fixture("chain3")
    gp = GluingParameter.make(b, {2: 1e-5})
    assert gp.kept == (0, 1) and gp.glued == (2,) and gp.istar(2) == 1
    gc = gl.build_glued(gp)
    assert gc.curve.tree.parent_map == {0: None, 1: 0}
    (a,) = gc.annuli
    assert a.component == 1 and a.kept_component == 1
    assert (a.inner, a.middle, a.outer) == pytest.approx((0.5 * 10**-2.5, 10**-2.5, 2 * 10**-2.5))
    both = GluingParameter.make(b, {1: 1e-5, 2: 1e-5})
    assert both.istar(2) == 0
    with pytest.raises(GluingError, match="not kept"):
        gl.glued_points(both, 1, np.array([0.1]))


def test_preglued_map_is_continuous_across_the_neck():
    b = load_fixture("chain_n2")
    v = 1e-4 * np.exp(1.1j)
    gp = GluingParameter.make(b, {1: v})
    sample = gl.preglue_map(gp)
    for t in (0.5, 1.0, 2.0):
        lo = sample(0, ring(0, v, t * (1 - 1e-6)))
        hi = sample(0, ring(0, v, t * (1 + 1e-6)))
        assert np.max(fs_distance(lo, hi)) < 1e-5
    # the neck midpoint sits within a |v|^(1/2)-Lipschitz ball of the node value
    node = b.map_of[0].lift(np.array([b.x[1]]))[0]
    mid = sample(0, ring(0, v, 1.0 + 1e-9))
    assert np.max(fs_distance(mid, node)) < 10 * math.sqrt(abs(v))


def test_dbar_qupsilon_on_fixtures():
    for name, size in (("chain_n1", 1e-4), ("star", 1e-4), ("chain3", 1e-5)):
        b = load_fixture(name)
        gp = GluingParameter.make(b, {h: size for h in sorted(set(b.tree.elements) - {0})})
        rng = np.random.default_rng(1)
        for a in gl.annuli(gp):
            if a.component != a.kept_component:
                continue
            s = a.middle
            off = np.concatenate([rng.uniform(0.1, 0.45, 8), rng.uniform(2.2, 4, 8)])
            z = a.center + off * s * np.exp(2j * np.pi * rng.uniform(size=off.size))
            assert np.max(gl.dbar_qupsilon(gp, a.kept_component, z)["relative"]) < 1e-8
            neck = a.center + rng.uniform(0.55, 0.95, 8) * s * np.exp(2j * np.pi * rng.uniform(size=8))
            res = gl.dbar_qupsilon(gp, a.kept_component, neck)
            exact = gl.dbar_closed_form(a.center, gp.vmap[a.node], neck)
            np.testing.assert_allclose(res["dbar"], exact, rtol=1e-4)
    with pytest.raises(GluingError, match="resolution"):
        gl.dbar_qupsilon(GluingParameter.make(load_fixture("chain_n1"), {1: 1e-4}), 0, 0.5, h_fd=1e-3)


# --------------------------------------------------------------------------
# admissibility
# --------------------------------------------------------------------------

def test_admissibility_messages():
    b = load_fixture("star")
    with pytest.raises(GluingError, match=r"16\(\|I\|\+\|M\|\) delta\^\(1/2\) < r_C"):
        gl.build_glued(GluingParameter.make(b, {1: 1e-3, 2: 1e-3}))
    gp = GluingParameter.make(b, {1: 1e-4})
    assert gp.check_admissible() == pytest.approx((1 / 48) ** 2)
    with pytest.raises(GluingError, match="non-nodes"):
        GluingParameter.make(b, {0: 1e-4})
    with pytest.raises(GluingError, match="delta_T"):
        GluingParameter.make(load_fixture("chain_n1"), {1: 0.02}).check_admissible(delta=1.0)
    assert gl.delta_T(load_fixture("chain_n1")) == 0.25
