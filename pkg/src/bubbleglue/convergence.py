"""Gromov convergence certificates and neck-sweep experiments.

A sequence ``b_k`` converges to ``b*`` when, for witnesses ``(C_k, v_k)``
with ``C_k -> C*`` and ``16 |v_k| < r_{C_k}^2``, the maps ``b_k`` live on the
glued curves ``C_k(v_k)``, carry their marks, and
``sup_z d(u_{b*}(q_{v_k}(z)), u_{b_k}(z)) -> 0``.  The checker measures
every one of these quantities for supplied witnesses; it does not search.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .analysis import GluedSurface, GridSpec, build_metric_and_weight, check_pregluing_estimates
from .bubbles import BubbleError, BubbleMap, injectivity_radius_curve
from .gluing import GluingError, GluingParameter, lift_any, pull_back
from .projective import fs_distance
from .solver import SolverError, build_problem, picard_correct

__all__ = [
    "Witness",
    "SampledMap",
    "ConvergenceCertificate",
    "converge_check",
    "corrected_family",
    "neck_sweep",
    "SWEEP_COLUMNS",
]


@dataclass(frozen=True)
class Witness:
    """Curve data ``C_k`` (node and mark positions) and neck parameters ``v_k``."""

    v: Mapping[int, complex]
    x: Mapping[int, complex] = field(default_factory=dict)
    y: Mapping[int, complex] = field(default_factory=dict)

    def param(self, b_star: BubbleMap) -> GluingParameter:
        base = b_star.with_data(x=dict(self.x), y=dict(self.y)) if (self.x or self.y) else b_star
        return GluingParameter.make(base, dict(self.v))


@dataclass
class SampledMap:
    """A map on a glued surface given by its lifts at the grid nodes of ``spec``."""

    lifts: dict[int, np.ndarray]
    spec: GridSpec
    marks: tuple[tuple[int, int, complex], ...] = ()


@dataclass
class ConvergenceCertificate:
    sizes: list[float]
    sup_distances: list[float]
    curve_errors: list[float]
    mark_errors: list[float]
    admissible: list[bool]
    ev_distances: list[float]
    verdict: dict

    def to_json(self) -> dict:
        def clean(xs):
            return [x if math.isfinite(x) else None for x in xs]
        return {
            "sizes": self.sizes,
            "sup_distances": clean(self.sup_distances),
            "curve_errors": clean(self.curve_errors),
            "mark_errors": clean(self.mark_errors),
            "admissible": self.admissible,
            "ev_distances": clean(self.ev_distances),
            "verdict": self.verdict,
        }


def _glued_marks(gp: GluingParameter) -> dict[int, tuple[int, complex]]:
    return {l: pull_back(gp, j, y) for l, j, y in gp.base.curve.marks}


def _sup_bubble(surface: GluedSurface, bk: BubbleMap) -> tuple[float, float]:
    maps = bk.map_of
    worst = ev = 0.0
    root = surface.param.base.tree.root
    for i, g in surface.grids.items():
        if i not in maps:
            raise BubbleError(f"sequence map lacks kept component {i}")
        Ub = lift_any(maps[i], g.z)
        d = fs_distance(g.U, Ub)
        worst = max(worst, float(np.max(d)))
        if i == root:
            ev = _far_value(g, d)
    return worst, ev


def _far_value(g, d: np.ndarray) -> float:
    """The distance on the ring reaching furthest towards ``z = infinity``."""
    k = int(np.argmax(np.max(np.abs(g.z), axis=1)))
    return float(np.max(d[k]))


def _sup_sampled(surface: GluedSurface, sm: SampledMap) -> tuple[float, float]:
    worst = ev = 0.0
    root = surface.param.base.tree.root
    for i, g in surface.grids.items():
        L = sm.lifts.get(i)
        if L is None or L.shape != g.U.shape:
            raise BubbleError(f"sampled map does not match the grid of component {i}")
        d = fs_distance(g.U, L)
        worst = max(worst, float(np.max(d)))
        if i == root:
            ev = _far_value(g, d)
    return worst, ev


def _decreasing(xs: Sequence[float], slack: float = 1e-12) -> bool:
    return all(b <= a * (1 + 1e-9) + slack for a, b in zip(xs, xs[1:]))


def _tends_to_zero(xs: Sequence[float], tol: float) -> bool:
    if not xs:
        return True
    if max(xs) <= tol:
        return True
    return _decreasing(xs, tol) and xs[-1] <= 0.1 * max(xs)


def converge_check(b_star: BubbleMap, sequence: Sequence[BubbleMap | SampledMap], witnesses: Sequence[Witness],
                   spec: GridSpec | None = None, mark_tol: float = 1e-6, refine: bool = True) -> ConvergenceCertificate:
    """Measure the convergence conditions along the sequence.

    Sup distances of explicit bubble maps are evaluated on the glued grid and
    refined until two successive grids agree to 1%.  Raises
    :class:`GluingError` for inadmissible witnesses.
    """
    if len(sequence) != len(witnesses):
        raise ValueError("one witness per sequence element is required")
    spec = spec or GridSpec(ds=0.05, n_theta=64)
    sizes, sups, curves, marks, adm, evs = [], [], [], [], [], []
    star_y = b_star.curve.mark_position
    for bk, wk in zip(sequence, witnesses):
        gp = wk.param(b_star)
        rC = injectivity_radius_curve(gp.base.curve)
        ok = all(16 * abs(z) < rC**2 for z in gp.vmap.values())
        if not ok:
            raise GluingError(f"witness violates 16|v_k| < r_C^2 (r_C = {rC:.3e}, |v| = {gp.size:.3e})")
        adm.append(ok)
        sizes.append(gp.size)
        cerr = max([abs(gp.base.x[h] - b_star.x[h]) for h in b_star.x] + [abs(gp.base.curve.mark_position[l] - star_y[l]) for l in star_y] + [0.0])
        curves.append(float(cerr))
        if isinstance(bk, SampledMap):
            surface = build_metric_and_weight(gp, bk.spec, check=False)
            s, ev = _sup_sampled(surface, bk)
            mk = bk.marks
        else:
            sp = spec
            surface = build_metric_and_weight(gp, sp, check=False)
            s, ev = _sup_bubble(surface, bk)
            for _ in range(3 if refine else 0):
                sp = sp.refined()
                s2, ev = _sup_bubble(build_metric_and_weight(gp, sp, check=False), bk)
                done = abs(s2 - s) <= 0.01 * max(s2, 1e-300)
                s = max(s, s2)
                if done:
                    break
            mk = bk.curve.marks
        sups.append(s)
        evs.append(ev)
        glued = _glued_marks(gp)
        merr = 0.0
        given = {l: (j, y) for l, j, y in mk}
        for l, (j, y) in glued.items():
            if l not in given or given[l][0] != j:
                merr = math.inf
                break
            merr = max(merr, abs(given[l][1] - y))
        marks.append(float(merr))
    verdict = {
        "admissible": all(adm),
        "sup_decreasing": _decreasing(sups),
        "curve_converges": _tends_to_zero(curves, mark_tol),
        "marks_converge": _tends_to_zero(marks, mark_tol),
    }
    verdict["converges"] = all(verdict.values())
    return ConvergenceCertificate(sizes, sups, curves, marks, adm, evs, verdict)


def corrected_family(b_star: BubbleMap, sizes: Sequence[float], p: float = 3.0, spec: GridSpec | None = None,
                     directions: Mapping[int, complex] | None = None) -> tuple[list[SampledMap], list[Witness], list]:
    """Glue-and-correct ``b_star`` at each size; the pipeline emits its own witnesses."""
    spec = spec or GridSpec()
    seq, wit, states = [], [], []
    for sz in sizes:
        v = _necks(b_star, sz, directions)
        gp = GluingParameter.make(b_star, v)
        st = picard_correct(gp, p, spec=spec)
        lifts = st.corrected_lift() if st.problem is not None else {i: g.U for i, g in build_metric_and_weight(gp, spec).grids.items()}
        glued = _glued_marks(gp)
        seq.append(SampledMap(lifts, spec, tuple((l, j, y) for l, (j, y) in glued.items())))
        wit.append(Witness(v))
        states.append(st)
    return seq, wit, states


def _necks(b: BubbleMap, size: float, directions: Mapping[int, complex] | None) -> dict[int, complex]:
    """Split ``size`` evenly across the glued nodes (all non-root components by default)."""
    hat = sorted(set(b.tree.elements) - {b.tree.root})
    dirs = {h: 1.0 + 0j for h in hat} if directions is None else {int(h): complex(d) for h, d in directions.items()}
    if not dirs:
        return {}
    per = size / len(dirs)
    return {h: per * d / abs(d) for h, d in dirs.items()}


SWEEP_COLUMNS = [
    "index", "size", "p", "dbar_norm", "dbar_ratio", "du_C0", "alpha_norm", "eta_norm", "eta_ratio",
    "xi_C0", "iterations", "terminal_contraction", "true_ratio", "runtime_s", "error",
]


def neck_sweep(b: BubbleMap, schedule: Sequence[float], p: float = 3.0, spec: GridSpec | None = None,
               directions: Mapping[int, complex] | None = None) -> list[dict]:
    """One row per schedule entry; a failing row records its error and the sweep continues."""
    spec = spec or GridSpec()
    rows = []
    for k, sz in enumerate(schedule):
        row = {c: "" for c in SWEEP_COLUMNS}
        row.update(index=k, size=float(sz), p=p)
        t0 = time.perf_counter()
        try:
            gp = GluingParameter.make(b, _necks(b, sz, directions))
            surface = build_metric_and_weight(gp, spec)
            est = check_pregluing_estimates(gp, p, surface=surface)
            st = picard_correct(gp, p, problem=build_problem(gp, surface=surface))
            row.update(
                dbar_norm=est["dbar_norm"], dbar_ratio=est["ratio"], du_C0=est["du_C0"],
                alpha_norm=st.norms["alpha"], eta_norm=st.norms["eta"],
                eta_ratio=st.norms["eta"] / sz ** (1.0 / p) if sz > 0 else 0.0,
                xi_C0=st.norms["xi_c0"], iterations=st.iterations,
                terminal_contraction=st.terminal_contraction, true_ratio=st.norms["true_ratio"],
            )
        except (GluingError, BubbleError, SolverError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        row["runtime_s"] = time.perf_counter() - t0
        rows.append(row)
    return rows
