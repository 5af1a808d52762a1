from __future__ import annotations

import numpy as np
import pytest

from bubbleglue import solver as sv
from bubbleglue.analysis import GridSpec
from bubbleglue.fixtures import load_fixture
from bubbleglue.gluing import GluingParameter

SPEC = GridSpec(ds=0.05, n_theta=32)


@pytest.fixture(scope="module")
def problem():
    gp = GluingParameter.make(load_fixture("chain_n1"), {1: 1e-3})
    return sv.build_problem(gp, SPEC)


def random_coords(prob, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    m = prob.A.shape[1]
    return scale * (rng.normal(size=m) + 1j * rng.normal(size=m))


def test_linearisation_matches_difference_quotient(problem):
    a = random_coords(problem, 0)
    a /= np.max(np.abs(a))
    f0 = problem.dbar(np.zeros_like(a))
    Aa = problem.A @ a
    for h in (1e-6, 1e-6j):
        fd = (problem.dbar(h * a) - problem.dbar(-h * a)) / (2 * h)
        assert np.max(np.abs(fd - Aa)) < 1e-6 * max(1.0, np.max(np.abs(Aa)))
    assert np.max(np.abs(problem.N(1e-6 * a, f0))) < 1e-9


def test_right_inverse(problem):
    eta = np.random.default_rng(1).normal(size=problem.A.shape[0]) + 0j
    a = problem.solve(eta)
    assert np.linalg.norm(problem.A @ a - eta) < 1e-8 * np.linalg.norm(eta)
    assert problem.kernel_defect(a) < 1e-8
    # the pushed-forward kernel is nearly annihilated by A
    G = problem.Gamma
    assert G.shape[1] == sv.index_half_glued(problem.surface.param.base)
    rel = np.linalg.norm(problem.A @ G, axis=0) / np.sqrt(np.sum(problem.W[:, None] * np.abs(G) ** 2, axis=0))
    assert np.max(rel) < 1.0


def test_matched_kernel_dimension():
    for name in ("chain_n1", "chain_n2", "star", "chain_d3", "mark"):
        b = load_fixture(name)
        tuples, _ = sv.matched_kernel(b)
        k = next(iter(tuples.values())).shape[0]
        assert k == sv.index_half_glued(b)


def test_picard_converges(problem):
    st = sv.picard_correct(problem.surface.param, problem=problem)
    assert st.terminal_contraction <= 0.9
    assert st.norms["eta"] <= 2 * st.norms["alpha"]
    assert st.norms["true_ratio"] <= 1e-2
    assert st.norms["dbar_final"] < 1e-6 * st.norms["dbar_initial"]
    assert st.norms["kernel_defect"] < 1e-8
    assert st.to_json()["iterations"] == st.iterations


def test_quadratic_remainder(problem):
    r = sv.quadratic_term_check(problem.surface.param, problem=problem, pairs=3)
    assert all(4 / 1.2 <= h <= 4 * 1.2 for h in r["halving_ratios"])
    assert r["identical_pair"] == 0.0
    assert np.isfinite(r["C"]) and r["C"] > 0


def test_zero_parameter_needs_no_correction():
    st = sv.picard_correct(GluingParameter.make(load_fixture("chain_n1"), {1: 0}))
    assert st.iterations == 0 and st.norms["alpha"] == 0.0


def test_contraction_error_is_raised(problem):
    with pytest.raises(sv.ContractionError):
        sv.picard_correct(problem.surface.param, problem=problem, max_contraction=1e-12)
    with pytest.raises(sv.ContractionError):
        sv.picard_correct(problem.surface.param, problem=problem, max_iter=1, tol=1e-15)
