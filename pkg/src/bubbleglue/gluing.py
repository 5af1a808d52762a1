"""The basic gluing construction on trees of spheres.

A gluing parameter attaches a complex number ``v_h`` to every non-root
node.  For ``v_h != 0`` the disk ``|z - x_h| < 2|v_h|^{1/2}`` on the parent
component is stretched over the sphere ``h``; the stretch is holomorphic
except on the two annuli ``A^-`` (ratio ``[1/2, 1]``) and ``A^+`` (ratio
``[1, 2]``), where the ratio is ``|z - x_h| / |v_h|^{1/2}``.

Points are handled as ``(component, coordinate)`` pairs in north-chart
coordinates; a coordinate may be ``inf``.  On the bubble side we also use
``sigma = 1/w``, the holomorphic coordinate centred at the node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import optimize

from . import trees
from .bubbles import BubbleMap, GeometricBubbleTree, MarkedCurve, injectivity_radius_curve, max_admissible_delta
from .geometry import SpherePoint, beta, beta_deriv

__all__ = [
    "GluingError",
    "GluingParameter",
    "Annulus",
    "GluedCurve",
    "delta_T",
    "local_stretch",
    "stretch_arrays",
    "dbar_closed_form",
    "fd_wirtinger",
    "dbar_local",
    "dbar_qupsilon",
    "dq_norm_sup",
    "glued_points",
    "build_glued",
    "preglue_map",
    "pull_back",
]

FD_RESOLUTION = 1e-2  # largest admissible FD step in units of |v|^{1/2}


class GluingError(ValueError):
    """Inadmissible gluing data or an unresolvable request."""


def delta_T(b: BubbleMap) -> float:
    """Scale at which the weights blend back to 1: ``min(1/4, r_C/4)``."""
    return min(0.25, injectivity_radius_curve(b.curve) / 4.0)


@dataclass(frozen=True)
class GluingParameter:
    base: BubbleMap
    v: tuple[tuple[int, complex], ...]

    def __post_init__(self) -> None:
        hat = trees.hat(self.base.tree)
        given = {int(h): complex(z) for h, z in self.v}
        extra = set(given) - hat
        if extra:
            raise GluingError(f"neck parameters given for non-nodes {sorted(extra)}")
        full = {h: given.get(h, 0j) for h in hat}
        object.__setattr__(self, "v", tuple(sorted(full.items())))

    @classmethod
    def make(cls, base: BubbleMap, v: Mapping[int, complex]) -> "GluingParameter":
        return cls(base, tuple(v.items()))

    @property
    def vmap(self) -> dict[int, complex]:
        return dict(self.v)

    @property
    def size(self) -> float:
        """``|upsilon| = sum |v_h|``."""
        return float(sum(abs(z) for _, z in self.v))

    @property
    def zero_set(self) -> frozenset[int]:
        return frozenset(h for h, z in self.v if z == 0)

    @property
    def glued(self) -> tuple[int, ...]:
        return tuple(h for h, z in self.v if z != 0)

    @property
    def kept(self) -> tuple[int, ...]:
        """``I(upsilon)``: the root and every node with ``v_h = 0``."""
        return tuple(sorted(self.zero_set | {self.base.tree.root}))

    def istar(self, h: int) -> int:
        """``max{i in I(upsilon) : i < h}``: the kept component carrying the neck of ``h``."""
        kept = set(self.kept)
        return next(a for a in self.base.tree.ancestors(h) if a in kept)

    def neck_scale(self, h: int) -> float:
        return math.sqrt(abs(self.vmap[h]))

    def check_admissible(self, delta: float | None = None) -> float:
        """Raise unless ``|upsilon| < delta`` and every neck fits inside its weight disk.

        ``delta`` defaults to the largest value with
        ``16(|I|+|M|) delta^{1/2} <= r_C``.
        """
        curve = self.base.curve
        bound = max_admissible_delta(curve) if delta is None else delta
        if self.size >= bound:
            raise GluingError(
                f"|v| = {self.size:.3e} is not below delta = {bound:.3e}; "
                f"admissible delta must satisfy 16(|I|+|M|) delta^(1/2) < r_C = {injectivity_radius_curve(curve):.3e}"
            )
        dT = delta_T(self.base)
        for h in self.glued:
            if 2 * self.neck_scale(h) >= dT:
                raise GluingError(f"neck {h}: 2|v_h|^(1/2) = {2 * self.neck_scale(h):.3e} must be below delta_T = {dT:.3e}")
        return bound


@dataclass(frozen=True)
class Annulus:
    node: int
    component: int  # iota_h, the coordinates of center and radii
    kept_component: int  # i*_h
    center: complex
    inner: float
    middle: float
    outer: float

    def to_json(self) -> dict:
        return {
            "node": self.node,
            "component": self.component,
            "kept_component": self.kept_component,
            "center": [self.center.real, self.center.imag],
            "A_minus": [self.inner, self.middle],
            "A_plus": [self.middle, self.outer],
        }


# --------------------------------------------------------------------------
# the local stretch
# --------------------------------------------------------------------------

def stretch_arrays(x: complex, v: complex, z) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised stretch at a node: ``(on_bubble, coordinate)``.

    Bubble points get the bubble's north coordinate
    ``w = (z-x) / ((1 - beta(2t)) v)``; all others the new coordinate on the
    parent, ``x + beta(t)(z-x)`` or ``z`` itself.  Branches are the half-open
    ranges ``t < 1``, ``[1, 2)`` and ``[2, inf)`` of ``t = |z-x|/|v|^{1/2}``.
    """
    if v == 0:
        raise GluingError("the stretch needs v != 0")
    z = np.asarray(z, dtype=complex)
    s = math.sqrt(abs(v))
    zeta = z - x
    t = np.abs(zeta) / s
    on_bubble = t < 1.0
    mid = (t >= 1.0) & (t < 2.0)
    out = z.copy()
    if np.any(mid):
        out[mid] = x + beta(t[mid]) * zeta[mid]
    if np.any(on_bubble):
        damp = 1.0 - beta(2.0 * t[on_bubble])
        with np.errstate(divide="ignore", invalid="ignore"):
            w = zeta[on_bubble] / (damp * v)
        out[on_bubble] = np.where(damp > 0, w, np.inf)
    return on_bubble, out


def local_stretch(x_h: complex, v_h: complex, z: complex) -> tuple[bool, SpherePoint]:
    """Apply the stretch to one point.

    Returns whether the image lies on the bubble and the image point.  Bubble
    points are reported in the south chart with coordinate
    ``(1 - beta(2t)) conj(v/(z-x))``; the centre ``z = x_h`` goes to the
    bubble's north pole.
    """
    on, w = stretch_arrays(x_h, v_h, np.array([z]))
    w0 = complex(w[0])
    if not on[0]:
        return False, SpherePoint.north(w0)
    if w0 == 0:
        return True, SpherePoint.north(0j)
    if not np.isfinite(w0):
        return True, SpherePoint.infinity()
    return True, SpherePoint.south(np.conj(1.0 / w0))


def dbar_closed_form(x: complex, v: complex, z) -> np.ndarray:
    """Exact ``d/d zbar`` of the stretch inside the neck.

    On ``A^-`` the value is for the holomorphic bubble coordinate
    ``sigma = (1 - beta(2t)) v / (z-x)``, namely ``-v beta'(2t) / (s |z-x|)``.
    On ``A^+`` it is for ``x + beta(t)(z-x)``, namely
    ``beta'(t) (z-x)^2 / (2 s |z-x|)``.  Elsewhere it is zero.
    """
    z = np.asarray(z, dtype=complex)
    s = math.sqrt(abs(v))
    zeta = z - x
    r = np.abs(zeta)
    t = r / s
    out = np.zeros(z.shape, dtype=complex)
    minus = (t >= 0.5) & (t < 1.0)
    plus = (t >= 1.0) & (t < 2.0)
    out[minus] = -v * beta_deriv(2.0 * t[minus]) / (s * r[minus])
    out[plus] = beta_deriv(t[plus]) * zeta[plus] ** 2 / (2.0 * s * r[plus])
    return out


# fourth-order central weights for a first derivative
_FD4 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


def fd_wirtinger(f: Callable[[np.ndarray], np.ndarray], z0, h) -> tuple[np.ndarray, np.ndarray]:
    """``(d f/dz, d f/d zbar)`` by fourth-order differences along ``1`` and ``i``.

    ``f`` maps a complex array to a complex array of the same leading shape
    (trailing axes allowed).  ``h`` may be an array broadcasting with ``z0``.
    """
    z0 = np.asarray(z0, dtype=complex)
    h = np.asarray(h, dtype=float)
    dx = 0
    dy = 0
    for k, c in _FD4:
        dx = dx + c * f(z0 + k * h)
        dy = dy + c * f(z0 + 1j * k * h)
    extra = (None,) * (np.ndim(dx) - z0.ndim)
    hh = h[(...,) + extra] if h.ndim else h
    dx = dx / hh
    dy = dy / hh
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


def _stretch_chart(x: complex, v: complex, z0: complex):
    """The stretch as a function into one holomorphic chart, chosen at ``z0``."""
    on0, w0 = stretch_arrays(x, v, np.array([z0]))
    on0 = bool(on0[0])

    def f(z):
        on, w = stretch_arrays(x, v, z)
        if np.any(on != on0):
            raise GluingError("finite-difference stencil crosses the circle |z - x| = |v|^(1/2)")
        if on0:
            with np.errstate(divide="ignore"):
                return np.where(w == 0, np.inf, 1.0 / w)
        return w

    return f, on0


def _check_step(v: complex, h_fd: float) -> None:
    if h_fd > FD_RESOLUTION * math.sqrt(abs(v)):
        raise GluingError(
            f"resolution: step {h_fd:.2e} exceeds {FD_RESOLUTION} |v|^(1/2) = {FD_RESOLUTION * math.sqrt(abs(v)):.2e}"
        )


def dbar_local(x: complex, v: complex, z: complex, h_fd: float | None = None) -> dict:
    """Finite-difference Wirtinger derivatives of the stretch at ``z``.

    Bubble-side values are taken in ``sigma`` (holomorphic at the node).  The
    relative defect ``|dbar|/|d|`` is unchanged by holomorphic changes of chart,
    so it is the holomorphicity measure.
    """
    h_fd = 1e-3 * math.sqrt(abs(v)) if h_fd is None else h_fd
    _check_step(v, h_fd)
    f, on = _stretch_chart(x, v, z)
    d, db = fd_wirtinger(f, np.array([z]), h_fd)
    d, db = complex(d[0]), complex(db[0])
    return {
        "on_bubble": on,
        "d": d,
        "dbar": db,
        "relative": abs(db) / abs(d) if d != 0 else (0.0 if db == 0 else math.inf),
        "closed_form": complex(dbar_closed_form(x, v, np.array([z]))[0]),
    }


def dq_norm_sup(x: complex, v: complex, samples: int = 4096, seed: int = 0) -> float:
    """Sampled sup over ``A^+ u A^-`` of ``|dq|`` in the round metrics.

    ``|dq| = (|q_z| + |q_zbar|) (1+|z|^2) / (1+|q|^2)`` in whichever chart
    carries the image (``sigma`` on the bubble).
    """
    rng = np.random.default_rng(seed)
    s = math.sqrt(abs(v))
    t = rng.uniform(0.5, 2.0, samples)
    t = t[np.abs(t - 1.0) > 2e-3]
    z = x + s * t * np.exp(2j * np.pi * rng.uniform(size=t.size))
    h = 1e-4 * s
    best = 0.0
    for zi in z:
        f, _ = _stretch_chart(x, v, zi)
        d, db = fd_wirtinger(f, np.array([zi]), h)
        q = f(np.array([zi]))[0]
        val = (abs(d[0]) + abs(db[0])) * (1 + abs(zi) ** 2) / (1 + abs(q) ** 2)
        best = max(best, float(val))
    return best


# --------------------------------------------------------------------------
# the iterated map q_upsilon
# --------------------------------------------------------------------------

def _default_order(tree: trees.RootedTree) -> list[int]:
    return sorted(tree.elements, key=lambda i: (tree.depth(i), i))


def _check_order(tree: trees.RootedTree, order: Sequence[int]) -> list[int]:
    order = list(order)
    if sorted(order) != sorted(tree.elements):
        raise GluingError("the ordering must list every component exactly once")
    pos = {i: k for k, i in enumerate(order)}
    for i, p in tree.parent_map.items():
        if p is not None and pos[p] > pos[i]:
            raise GluingError(f"ordering places {i} before its parent {p}")
    return order


def glued_points(gp: GluingParameter, component: int, z, order: Sequence[int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``q_upsilon`` on points of the kept component ``component``.

    Returns the target component of every point and its north coordinate
    there.  Stretches are applied in ``order`` (a linear extension of the
    tree order); the result does not depend on that choice.
    """
    if component not in gp.kept:
        raise GluingError(f"component {component} is not kept by the gluing")
    tree = gp.base.tree
    order = _default_order(tree) if order is None else _check_order(tree, order)
    z = np.asarray(z, dtype=complex)
    comp = np.full(z.shape, component, dtype=int)
    w = z.copy()
    xs = gp.base.x
    vs = gp.vmap
    pmap = tree.parent_map
    for h in order:
        if pmap[h] is None or vs[h] == 0:
            continue
        sel = comp == pmap[h]
        if not np.any(sel):
            continue
        idx = np.nonzero(sel)
        on, out = stretch_arrays(xs[h], vs[h], w[idx])
        w[idx] = out
        moved = tuple(a[on] for a in idx)
        comp[moved] = h
    return comp, w


def pull_back(gp: GluingParameter, component: int, y: complex) -> tuple[int, complex]:
    """``q_upsilon^{-1}`` of a point on any component, away from the neck circles.

    Walks from ``component`` up to its kept ancestor, inverting each stretch.
    The bubble branch is radial about the node, so the inverse keeps the
    argument and solves the monotone radial equation by bisection.
    """
    tree = gp.base.tree
    pmap = tree.parent_map
    vs = gp.vmap
    xs = gp.base.x
    i, w = component, complex(y)
    while pmap[i] is not None and vs[i] != 0:
        v = vs[i]
        s = math.sqrt(abs(v))
        target = abs(v) * abs(w)
        if target < 0.5 * s:
            zeta = v * w
        else:
            def g(rad: float) -> float:
                return rad - target * (1.0 - float(beta(2.0 * rad / s)))

            rad = optimize.brentq(g, 0.0, s, xtol=1e-16 * s, rtol=4 * np.finfo(float).eps)
            zeta = rad * np.exp(1j * (np.angle(w) + np.angle(v)))
        i, w = pmap[i], xs[i] + complex(zeta)
    return i, w


def annuli(gp: GluingParameter) -> list[Annulus]:
    out = []
    for h in gp.glued:
        s = gp.neck_scale(h)
        out.append(Annulus(h, gp.base.tree.parent_map[h], gp.istar(h), gp.base.x[h], 0.5 * s, s, 2 * s))
    return out


@dataclass(frozen=True)
class GluedCurve:
    """The glued marked curve ``C(upsilon)`` and its bookkeeping."""

    param: GluingParameter
    curve: MarkedCurve
    annuli: tuple[Annulus, ...]
    order: tuple[int, ...]

    def q(self, component: int, z) -> tuple[np.ndarray, np.ndarray]:
        return glued_points(self.param, component, z, self.order)

    def to_json(self) -> dict:
        c = self.curve
        pmap = c.tree.parent_map
        return {
            "kept_components": list(self.param.kept),
            "nodes": [
                {"id": i, "parent": pmap[i], **({"x": [c.gtree.xmap[i].real, c.gtree.xmap[i].imag]} if pmap[i] is not None else {})}
                for i in c.tree.elements
            ],
            "marks": [{"label": l, "node": i, "y": [y.real, y.imag]} for l, i, y in c.marks],
            "annuli": [a.to_json() for a in self.annuli],
            "size": self.param.size,
        }


def build_glued(gp: GluingParameter, order: Sequence[int] | None = None, check: bool = True) -> GluedCurve:
    """Glue every node with ``v_h != 0`` and pull marks and kept nodes back."""
    if check and gp.glued:
        gp.check_admissible()
    tree = gp.base.tree
    order = tuple(_default_order(tree) if order is None else _check_order(tree, order))
    kept = gp.kept
    sub = tree.restrict(kept)
    xs = gp.base.x
    new_x = {}
    for h in kept:
        p = tree.parent_map[h]
        if p is None:
            continue
        _, xh = pull_back(gp, p, xs[h])
        new_x[h] = xh
    marks = []
    for l, j, y in gp.base.curve.marks:
        k, yk = pull_back(gp, j, y)
        marks.append((l, k, yk))
    curve = MarkedCurve(GeometricBubbleTree(sub, tuple(new_x.items())), tuple(marks))
    return GluedCurve(gp, curve, tuple(annuli(gp)), order)


def preglue_map(gp: GluingParameter, order: Sequence[int] | None = None) -> Callable[[int, np.ndarray], np.ndarray]:
    """Sampler ``(component, z) -> unit lift of u_b(q_upsilon(z))``."""
    maps = gp.base.map_of

    def sample(component: int, z) -> np.ndarray:
        comp, w = glued_points(gp, component, z, order)
        out = np.empty(np.shape(w) + (gp.base.n + 1,), dtype=complex)
        for j in np.unique(comp):
            sel = comp == j
            out[sel] = lift_any(maps[j], w[sel])
        return out

    return sample


def lift_any(u, w: np.ndarray) -> np.ndarray:
    """Unit lift that also accepts ``inf`` (the value there is the leading coefficients)."""
    w = np.asarray(w, dtype=complex)
    inf = ~np.isfinite(w)
    out = np.empty(w.shape + (u.n + 1,), dtype=complex)
    if np.any(~inf):
        out[~inf] = u.lift(w[~inf])
    if np.any(inf):
        out[inf] = u.value_at_infinity()
    return out


def _chart_function(gp: GluingParameter, component: int, z0: np.ndarray, order=None):
    """``q_upsilon`` into a per-point holomorphic chart fixed at the base points.

    The chart is the north coordinate where ``|w| <= 1`` at the base point and
    ``sigma = 1/w`` otherwise.  Stencil points that change component are
    flagged through NaN.
    """
    comp0, w0 = glued_points(gp, component, z0, order)
    use_sigma = ~(np.abs(w0) <= 1.0)

    def f(z):
        comp, w = glued_points(gp, component, z, order)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(use_sigma, np.where(np.isinf(w), 0.0, 1.0 / w), w)
        return np.where(comp == comp0, val, np.nan)

    return f, comp0, w0, use_sigma


def dbar_qupsilon(gp: GluingParameter, component: int, z, h_fd: float | None = None, order=None) -> dict:
    """Finite-difference ``d`` and ``dbar`` of ``q_upsilon`` at glued points.

    ``h_fd`` defaults to ``1e-3`` times the smallest neck scale and must not
    exceed ``1e-2`` times it.  Values are in the chart described in
    :func:`_chart_function`; ``relative`` is ``|dbar|/|d|``.
    """
    scales = [gp.neck_scale(h) for h in gp.glued]
    smin = min(scales) if scales else 1.0
    h_fd = 1e-3 * smin if h_fd is None else h_fd
    if scales and h_fd > FD_RESOLUTION * smin:
        raise GluingError(f"resolution: step {h_fd:.2e} exceeds {FD_RESOLUTION} |v|^(1/2) = {FD_RESOLUTION * smin:.2e}")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    f, comp0, w0, use_sigma = _chart_function(gp, component, z, order)
    d, db = fd_wirtinger(f, z, h_fd)
    if np.any(np.isnan(d)) or np.any(np.isnan(db)):
        raise GluingError("finite-difference stencil crosses a neck circle")
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(np.abs(d) > 0, np.abs(db) / np.abs(d), np.where(np.abs(db) > 0, np.inf, 0.0))
    return {"component": comp0, "coordinate": w0, "sigma_chart": use_sigma, "d": d, "dbar": db, "relative": rel}
