"""Quick property checks of every module, run on the shipped fixtures."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import balancing, convergence, geometry, gluing, kernel, solver, trees
from .analysis import GridSpec, check_pregluing_estimates, check_sobolev_c0
from .bubbles import BubbleMap, RationalMap
from .fixtures import load_fixture

__all__ = ["Check", "CHECKS", "run_selftest"]


@dataclass
class Check:
    name: str
    topic: str
    run: Callable[[np.random.Generator], tuple[bool, str]]


def _cutoff(rng):
    vals = {eps: geometry.ms_cutoff_energy(eps) for eps in (0.5, 0.1, 0.01, 0.001)}
    ok = all(v <= 8 * eps for eps, v in vals.items())
    return ok, "max E/(8 eps) = %.3f" % max(v / (8 * e) for e, v in vals.items())


def _neck(rng):
    worst_out = worst_cf = 0.0
    for _ in range(4):
        v = 10 ** rng.uniform(-6, -2) * np.exp(2j * np.pi * rng.uniform())
        s = math.sqrt(abs(v))
        for t, tag in ((0.3, "out"), (0.75, "minus"), (3.0, "out")):
            z = s * t * np.exp(2j * np.pi * rng.uniform())
            r = gluing.dbar_local(0j, v, z)
            if tag == "out":
                worst_out = max(worst_out, r["relative"])
            else:
                cf = r["closed_form"]
                worst_cf = max(worst_cf, abs(r["dbar"] - cf) / abs(cf))
    return worst_out < 1e-8 and worst_cf < 1e-4, f"off-annulus {worst_out:.1e}, closed form {worst_cf:.1e}"


def _balance(rng):
    u = RationalMap(rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3)))
    a = balancing.translation_dilation_residual(u, 0.3 - 0.2j, 0.25)["relative"]
    b = balancing.psi3_derivative_check(u)["relative"]
    return a < 1e-6 and b < 1e-4, f"translation law {a:.1e}, r-derivative {b:.1e}"


def _kernel(rng):
    bad = []
    for n in (1, 2):
        for d in (1, 2, 3):
            u = RationalMap(rng.normal(size=(n + 1, d + 1)) + 1j * rng.normal(size=(n + 1, d + 1)))
            kb = kernel.kernel_basis(u)
            if kb.dim != (n + 1) * (d + 1) - 1 or kernel.check_kernel(kb, samples=40) > 1e-6:
                bad.append((n, d))
    return not bad, "all dimensions (n+1)(d+1)-1" if not bad else f"failures {bad}"


def _trees(rng):
    shapes = []
    for n in range(1, 6):
        seen = set()
        for t in trees.enumerate_trees(n):
            for h in t.elements:
                if h != t.root and t.parent_map[h] not in t.ancestors(h):
                    return False, f"parent not an ancestor in {t.parent_map}"
            seen.add(trees.canonical_form(trees.BubbleType(t, (), tuple((e, 1) for e in t.elements))))
        shapes.append(len(seen))
    return shapes == [1, 1, 2, 4, 9], "rooted tree shapes " + ", ".join(map(str, shapes))


def _pregluing(rng):
    b = load_fixture("chain_n1")
    ratios = [check_pregluing_estimates(gluing.GluingParameter.make(b, {1: v}))["ratio"] for v in (1e-3, 1e-5)]
    return max(ratios) / min(ratios) < 3, "ratios " + ", ".join(f"{r:.3f}" for r in ratios)


def _sobolev(rng):
    b = load_fixture("chain_n1")
    vals = [check_sobolev_c0(gluing.GluingParameter.make(b, {1: v}), trials=10)["max_ratio"] for v in (1e-3, 1e-5)]
    return max(vals) / min(vals) < 3, "ratios " + ", ".join(f"{r:.3f}" for r in vals)


def _picard(rng):
    st = solver.picard_correct(gluing.GluingParameter.make(load_fixture("chain_n1"), {1: 1e-3}))
    ok = st.terminal_contraction <= 0.9 and st.norms["eta"] <= 2 * st.norms["alpha"] and st.norms["true_ratio"] <= 1e-2
    return ok, f"{st.iterations} steps, factor {st.terminal_contraction:.1e}, residual ratio {st.norms['true_ratio']:.1e}"


def _quadratic(rng):
    r = solver.quadratic_term_check(gluing.GluingParameter.make(load_fixture("chain_n1"), {1: 1e-3}), pairs=2)
    ok = all(4 / 1.2 <= h <= 4 * 1.2 for h in r["halving_ratios"])
    return ok, "halving ratios " + ", ".join(f"{h:.3f}" for h in r["halving_ratios"])


def _converge(rng):
    b = load_fixture("mark")
    seq, wit = [], []
    for k in range(10, 14):
        e = 2.0**-k
        seq.append(BubbleMap.build({0: None}, {}, {0: RationalMap.from_lists([[0, 1], [e, 0]])}, [(1, 0, 1.0)]))
        wit.append(convergence.Witness({1: e}))
    cert = convergence.converge_check(b, seq, wit, spec=GridSpec(ds=0.05, n_theta=32), refine=False)
    return cert.verdict["converges"], "sup distances " + ", ".join(f"{s:.2e}" for s in cert.sup_distances)


CHECKS = [
    Check("cutoff energy bound", "geometry", _cutoff),
    Check("neck holomorphicity and dbar formula", "gluing", _neck),
    Check("balancing identities", "balancing", _balance),
    Check("kernel dimension", "kernel", _kernel),
    Check("tree enumeration", "trees", _trees),
    Check("pregluing estimate", "analysis", _pregluing),
    Check("uniform C0 bound", "analysis", _sobolev),
    Check("Picard contraction", "solver", _picard),
    Check("quadratic remainder", "solver", _quadratic),
    Check("Gromov convergence", "convergence", _converge),
]


def run_selftest(seed: int = 0, echo: Callable[[str], None] | None = print) -> dict:
    """Run every check; returns ``{"passed": bool, "checks": [...]}`` and prints a scoreboard."""
    rng = np.random.default_rng(seed)
    out = []
    for c in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = c.run(rng)
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        dt = time.perf_counter() - t0
        out.append({"name": c.name, "topic": c.topic, "passed": bool(ok), "detail": detail})
        if echo:
            echo(f"{'PASS' if ok else 'FAIL'}  {c.topic:<12} {c.name:<38} {detail}  ({dt:.1f}s)")
    passed = all(r["passed"] for r in out)
    if echo:
        echo(f"{sum(r['passed'] for r in out)}/{len(out)} checks passed")
    return {"passed": passed, "checks": out}
