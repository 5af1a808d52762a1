"""Bubble trees with positions, marked curves, and bubble maps into CP^n.

Component maps are rational: an ``(n+1)``-tuple of polynomials of common
degree ``d`` in the north-chart coordinate, stored as a complex array of
shape ``(n+1, d+1)`` with ascending powers.  Near infinity the map is
evaluated through the reversed coefficients in ``sigma = 1/z``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import optimize

from . import trees
from .geometry import QuadratureSpec, SpherePoint, radial_rule
from .projective import fs_distance, hproj, normalize, phase_fix

__all__ = [
    "BubbleError",
    "RationalMap",
    "GeometricBubbleTree",
    "MarkedCurve",
    "BubbleMap",
    "OFF_COMPONENT",
    "injectivity_radius_tree",
    "injectivity_radius_curve",
    "max_admissible_delta",
    "eval_map",
    "check_bubble_map",
    "isomorphic_maps",
    "energy",
    "map_from_json",
    "map_to_json",
]

OFF_COMPONENT = 100.0
NODE_TOL = 1e-9


class BubbleError(ValueError):
    """Invalid bubble data."""


def _as_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


@dataclass(frozen=True, eq=False)
class RationalMap:
    """A holomorphic map ``S^2 -> CP^n`` given by homogeneous polynomials."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=complex, copy=True)
        if c.ndim != 2 or c.shape[0] < 2:
            raise BubbleError("coefficients must have shape (n+1, d+1) with n >= 1")
        if not np.any(c):
            raise BubbleError("all components vanish")
        scale = np.max(np.abs(c))
        if np.max(np.abs(c[:, -1])) <= 1e-14 * scale:
            raise BubbleError("leading coefficients vanish: the map has lower degree or a base point at infinity")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.degree > 0:
            defect = self.common_root_defect()
            if defect < 1e-9:
                raise BubbleError(f"components share a root (defect {defect:.2e}); the tuple is not gcd-free")

    @classmethod
    def from_lists(cls, comps: Iterable[Iterable]) -> "RationalMap":
        return cls(np.array([[_as_complex(a) for a in comp] for comp in comps]))

    @classmethod
    def constant(cls, point: Iterable[complex]) -> "RationalMap":
        return cls(np.array(list(point), dtype=complex)[:, None])

    @property
    def n(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RationalMap) and self.coeffs.shape == other.coeffs.shape and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self) -> int:
        return hash(self.coeffs.tobytes())

    # polynomial evaluation ------------------------------------------------
    @staticmethod
    def _horner(c: np.ndarray, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (c.shape[0],), dtype=complex)
        for k in range(c.shape[1] - 1, -1, -1):
            out = out * z[..., None] + c[:, k]
        return out

    @property
    def reversed(self) -> np.ndarray:
        return self.coeffs[:, ::-1]

    @property
    def dcoeffs(self) -> np.ndarray:
        d = self.degree
        if d == 0:
            return np.zeros_like(self.coeffs)
        return self.coeffs[:, 1:] * np.arange(1, d + 1)

    def P(self, z) -> np.ndarray:
        """Homogeneous vector at north coordinate ``z``."""
        return self._horner(self.coeffs, z)

    def dP(self, z) -> np.ndarray:
        return self._horner(self.dcoeffs, z)

    def Psig(self, s) -> np.ndarray:
        """Homogeneous vector at ``sigma = 1/z`` (``sigma = 0`` is infinity)."""
        return self._horner(self.reversed, s)

    def dPsig(self, s) -> np.ndarray:
        r = self.reversed
        d = self.degree
        if d == 0:
            return np.zeros(np.shape(s) + (r.shape[0],), dtype=complex)
        return self._horner(r[:, 1:] * np.arange(1, d + 1), s)

    def common_root_defect(self) -> float:
        """Smallest ``|P(z)|/scale`` over roots of the components; 0 means a common root."""
        scale = float(np.max(np.abs(self.coeffs)))
        best = math.inf
        for comp in self.coeffs:
            if not np.any(np.abs(comp) > 1e-14 * scale):
                continue
            trimmed = np.trim_zeros(comp, "b")
            if len(trimmed) <= 1:
                continue
            roots = np.roots(trimmed[::-1])
            for z in roots:
                if abs(z) <= 1:
                    val = np.linalg.norm(self.P(z)) / (scale * (1 + abs(z)) ** self.degree)
                else:
                    val = np.linalg.norm(self.Psig(1 / z)) / (scale * (1 + abs(1 / z)) ** self.degree)
                best = min(best, float(val))
        return best

    # values and derivatives -------------------------------------------------
    def lift(self, z) -> np.ndarray:
        """Unit representative at north coordinates ``z`` (any finite array).

        Far points go through the reversed polynomial; the phase then differs
        from ``P/|P|`` by ``(z/|z|)^d``, which is restored so the lift is the
        normalized polynomial vector everywhere.
        """
        z = np.asarray(z, dtype=complex)
        far = np.abs(z) > 1
        out = np.empty(z.shape + (self.n + 1,), dtype=complex)
        if np.any(~far):
            out[~far] = normalize(self.P(z[~far]))
        if np.any(far):
            zf = z[far]
            V = normalize(self.Psig(1 / zf))
            out[far] = V * ((zf / np.abs(zf)) ** self.degree)[..., None]
        return out

    def value(self, p: SpherePoint) -> np.ndarray:
        """Phase-fixed unit representative at a sphere point."""
        if p.chart == "north" and abs(p.coordinate) <= 1:
            P = self.P(p.coordinate)
        elif p.chart == "north":
            P = self.Psig(1 / p.coordinate)
        else:
            P = self.Psig(np.conj(p.coordinate))
        if np.linalg.norm(P) == 0:
            raise BubbleError("all components vanish at the evaluation point")
        return phase_fix(P)

    def value_at_infinity(self) -> np.ndarray:
        return phase_fix(self.coeffs[:, -1])

    def tangent_north(self, z) -> tuple[np.ndarray, np.ndarray]:
        """``(U, u')`` with ``U = P/|P|`` and ``u' = (I - U U^*) P'/|P|``."""
        P = self.P(z)
        nrm = np.linalg.norm(P, axis=-1, keepdims=True)
        U = P / nrm
        return U, hproj(U, self.dP(z) / nrm)

    def tangent_sigma(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Same in the holomorphic coordinate ``sigma = 1/z``."""
        P = self.Psig(s)
        nrm = np.linalg.norm(P, axis=-1, keepdims=True)
        U = P / nrm
        return U, hproj(U, self.dPsig(s) / nrm)

    def energy_density(self, z) -> np.ndarray:
        """``|du|^2/(2 pi)`` per unit flat area, ``|du|^2 = 2|u'|^2``."""
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape)
        near = np.abs(z) <= 1
        if np.any(near):
            _, d = self.tangent_north(z[near])
            out[near] = np.sum(np.abs(d) ** 2, axis=-1) / math.pi
        if np.any(~near):
            zf = z[~near]
            _, d = self.tangent_sigma(1 / zf)
            # |d sigma/dz|^2 = |z|^{-4}
            out[~near] = np.sum(np.abs(d) ** 2, axis=-1) / math.pi / np.abs(zf) ** 4
        return out

    # affine reparametrisation -------------------------------------------------
    def compose_affine(self, a: complex, b: complex) -> "RationalMap":
        """The map ``z -> u(a z + b)``."""
        d = self.degree
        out = np.zeros_like(self.coeffs)
        base = np.polynomial.polynomial
        lin = np.array([b, a], dtype=complex)
        power = np.array([1.0 + 0j])
        for k in range(d + 1):
            out[:, : len(power)] += np.outer(self.coeffs[:, k], power)
            power = base.polymul(power, lin)
        return RationalMap(out)

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "coeffs": [[[float(c.real), float(c.imag)] for c in comp] for comp in self.coeffs],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "RationalMap":
        m = cls.from_lists(data["coeffs"])
        if "degree" in data and int(data["degree"]) != m.degree:
            raise BubbleError(f"declared degree {data['degree']} does not match {m.degree} coefficients")
        return m


@dataclass(frozen=True)
class GeometricBubbleTree:
    tree: trees.RootedTree
    x: tuple[tuple[int, complex], ...]

    def __post_init__(self) -> None:
        xs = {h: complex(v) for h, v in self.x}
        if set(xs) != set(trees.hat(self.tree)):
            raise BubbleError("node positions must be given for exactly the non-minimal elements")
        for h, v in xs.items():
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise BubbleError(f"node {h} sits at infinity")
        for i in self.tree.elements:
            kids = self.tree.children(i)
            for a in range(len(kids)):
                for b in range(a + 1, len(kids)):
                    if xs[kids[a]] == xs[kids[b]]:
                        raise BubbleError(f"nodes {kids[a]} and {kids[b]} coincide on component {i}")
        object.__setattr__(self, "x", tuple(sorted(xs.items())))

    @property
    def xmap(self) -> dict[int, complex]:
        return dict(self.x)


@dataclass(frozen=True)
class MarkedCurve:
    gtree: GeometricBubbleTree
    marks: tuple[tuple[int, int, complex], ...] = ()

    def __post_init__(self) -> None:
        tree = self.gtree.tree
        xs = self.gtree.xmap
        seen: dict[int, list[complex]] = {}
        for l, i, y in self.marks:
            if i not in tree:
                raise BubbleError(f"mark {l} on unknown component {i}")
            y = complex(y)
            if not (math.isfinite(y.real) and math.isfinite(y.imag)):
                raise BubbleError(f"mark {l} sits at infinity")
            for h in tree.children(i):
                if xs[h] == y:
                    raise BubbleError(f"mark {l} coincides with node {h}")
            if y in seen.setdefault(i, []):
                raise BubbleError(f"mark {l} coincides with another mark on component {i}")
            seen[i].append(y)
        object.__setattr__(self, "marks", tuple(sorted((int(l), int(i), complex(y)) for l, i, y in self.marks)))

    @property
    def tree(self) -> trees.RootedTree:
        return self.gtree.tree

    @property
    def mark_component(self) -> dict[int, int]:
        return {l: i for l, i, _ in self.marks}

    @property
    def mark_position(self) -> dict[int, complex]:
        return {l: y for l, _, y in self.marks}

    def is_stable(self) -> bool:
        tree = self.tree
        comp = self.mark_component
        return all(len(tree.children(i)) + sum(1 for l in comp if comp[l] == i) >= 2 for i in tree.elements)


@dataclass(frozen=True)
class BubbleMap:
    curve: MarkedCurve
    maps: tuple[tuple[int, RationalMap], ...]

    def __post_init__(self) -> None:
        mp = dict(self.maps)
        if set(mp) != set(self.curve.tree.elements):
            raise BubbleError("one map per component is required")
        ns = {m.n for m in mp.values()}
        if len(ns) != 1:
            raise BubbleError("all component maps must share the target dimension")
        object.__setattr__(self, "maps", tuple(sorted(mp.items())))

    @classmethod
    def build(cls, parents: Mapping[int, int | None], x: Mapping[int, complex],
              maps: Mapping[int, RationalMap], marks: Iterable[tuple[int, int, complex]] = ()) -> "BubbleMap":
        gt = GeometricBubbleTree(trees.RootedTree.from_parents(parents), tuple(x.items()))
        return cls(MarkedCurve(gt, tuple(marks)), tuple(maps.items()))

    @property
    def tree(self) -> trees.RootedTree:
        return self.curve.tree

    @property
    def x(self) -> dict[int, complex]:
        return self.curve.gtree.xmap

    @property
    def map_of(self) -> dict[int, RationalMap]:
        return dict(self.maps)

    @property
    def n(self) -> int:
        return self.maps[0][1].n

    @property
    def bubble_type(self) -> trees.BubbleType:
        return trees.BubbleType(
            self.tree,
            tuple((l, i) for l, i, _ in self.curve.marks),
            tuple((i, m.degree) for i, m in self.maps),
        )

    def with_data(self, x: Mapping[int, complex] | None = None, y: Mapping[int, complex] | None = None,
                  maps: Mapping[int, RationalMap] | None = None) -> "BubbleMap":
        xs = dict(self.x)
        xs.update(x or {})
        ys = self.curve.mark_position
        ys.update(y or {})
        mp = self.map_of
        mp.update(maps or {})
        marks = tuple((l, i, ys[l]) for l, i, _ in self.curve.marks)
        gt = GeometricBubbleTree(self.tree, tuple(xs.items()))
        return BubbleMap(MarkedCurve(gt, marks), tuple(mp.items()))


# --------------------------------------------------------------------------
# injectivity radii
# --------------------------------------------------------------------------

def _south_radius(z: complex) -> float:
    """``|q_S^{-1}(z)|`` for a north coordinate ``z``; infinite at the origin."""
    return math.inf if z == 0 else 1.0 / abs(z)


def _special_distance(gt: GeometricBubbleTree, h: int, i: int, z: complex) -> float:
    parent = gt.tree.parent_map[h]
    if i == parent:
        return abs(z - gt.xmap[h])
    return OFF_COMPONENT


def injectivity_radius_tree(t: GeometricBubbleTree) -> float:
    """Smallest distance from a node to infinity or to another node on its component.

    Distances to special points on other components count as ``100``; with no
    nodes at all the radius is ``100`` as well.
    """
    xs = t.xmap
    pmap = t.tree.parent_map
    best = OFF_COMPONENT
    for h in xs:
        best = min(best, _south_radius(xs[h]))
        for l in xs:
            if l != h:
                best = min(best, _special_distance(t, h, pmap[l], xs[l]))
    return best


def injectivity_radius_curve(c: MarkedCurve) -> float:
    r = injectivity_radius_tree(c.gtree)
    for l, i, y in c.marks:
        r = min(r, _south_radius(y))
        for h in c.gtree.xmap:
            r = min(r, _special_distance(c.gtree, h, i, y))
        for l2, i2, y2 in c.marks:
            if l2 != l and i2 == i:
                r = min(r, abs(y2 - y))
    return r


def max_admissible_delta(c: MarkedCurve) -> float:
    """Largest ``delta`` in ``(0, 1]`` with ``16(|I|+|M|) delta^{1/2} <= r_C``."""
    count = len(c.tree) + len(c.marks)
    return min(1.0, (injectivity_radius_curve(c) / (16.0 * count)) ** 2)


# --------------------------------------------------------------------------
# evaluation and checks
# --------------------------------------------------------------------------

def eval_map(u: RationalMap, z: SpherePoint | complex) -> np.ndarray:
    if not isinstance(z, SpherePoint):
        z = SpherePoint.north(z)
    return u.value(z)


@dataclass
class CheckReport:
    passed: dict[str, bool] = field(default_factory=dict)
    defects: dict[str, float] = field(default_factory=dict)
    details: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_json(self) -> dict:
        return {"ok": self.ok, "passed": self.passed, "defects": self.defects, "details": self.details}


def check_bubble_map(b: BubbleMap, tol: float = NODE_TOL, expected: trees.BubbleType | None = None) -> CheckReport:
    """Node matching, degree labels and stability, each with its measured defect."""
    rep = CheckReport()
    mp = b.map_of
    worst = 0.0
    for h, xh in b.x.items():
        parent = b.tree.parent_map[h]
        d = fs_distance(mp[h].value_at_infinity(), eval_map(mp[parent], xh))
        worst = max(worst, float(d))
        if d > tol:
            rep.details.append(f"node {h}: u_h(inf) and u_parent(x_h) differ by {d:.3e}")
    rep.passed["node_compatibility"] = worst <= tol
    rep.defects["node_compatibility"] = worst
    if expected is not None:
        bad = [i for i, m in b.maps if expected.degree_map.get(i) != m.degree]
        rep.passed["degrees"] = not bad
        rep.defects["degrees"] = float(len(bad))
    else:
        rep.passed["degrees"] = True
        rep.defects["degrees"] = 0.0
    comp = b.curve.mark_component
    unstable = [
        i for i in b.tree.elements
        if mp[i].degree == 0 and len(b.tree.children(i)) + sum(1 for l in comp if comp[l] == i) < 2
    ]
    rep.passed["stability"] = not unstable
    rep.defects["stability"] = float(len(unstable))
    for i in unstable:
        rep.details.append(f"component {i}: degree 0 with fewer than two special points")
    return rep


_SAMPLES = np.exp(2j * np.pi * np.arange(32) / 32) * np.where(np.arange(32) % 2, 0.7, 1.3)


def _map_residual(u: RationalMap, v: RationalMap, a: complex, b: complex) -> np.ndarray:
    """Residual of ``v(a z + b) = u(z)`` on fixed samples, as real numbers."""
    U = normalize(u.P(_SAMPLES))
    V = normalize(v.P(a * _SAMPLES + b))
    r = hproj(U, V)
    return np.concatenate([r.real.ravel(), r.imag.ravel()])


def _solve_affine(u: RationalMap, v: RationalMap, pairs: list[tuple[complex, complex]], tol: float):
    """Find ``(a, b)`` with ``v(a z + b) = u(z)`` and ``a p + b = q`` for the given pairs."""
    guesses = []
    if len(pairs) >= 2:
        (p1, q1), (p2, q2) = pairs[:2]
        a = (q2 - q1) / (p2 - p1)
        guesses.append((a, q1 - a * p1))
    elif len(pairs) == 1:
        p1, q1 = pairs[0]
        for a in (1.0, -1.0, 1j, -1j, 2.0, 0.5):
            guesses.append((a, q1 - a * p1))
    else:
        for a in (1.0, -1.0, 1j, -1j, 2.0, 0.5):
            guesses.append((a, 0.0))

    def resid(p):
        a = complex(p[0], p[1])
        b = complex(p[2], p[3])
        if abs(a) < 1e-12:
            return np.full(2 * 32 * (u.n + 1) + 2 * len(pairs), 1e6)
        pts = [a * pp + b - qq for pp, qq in pairs]
        extra = np.array([[w.real, w.imag] for w in pts]).ravel() if pts else np.zeros(0)
        if u.degree == 0 and v.degree == 0:
            body = np.zeros(2)
            body[0] = fs_distance(u.coeffs[:, 0], v.coeffs[:, 0])
            return np.concatenate([body, extra])
        return np.concatenate([_map_residual(u, v, a, b), extra])

    best = None
    for a0, b0 in guesses:
        sol = optimize.least_squares(resid, [a0.real if isinstance(a0, complex) else float(np.real(a0)),
                                             float(np.imag(a0)), float(np.real(b0)), float(np.imag(b0))],
                                     xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        err = float(np.max(np.abs(sol.fun))) if sol.fun.size else 0.0
        if best is None or err < best[0]:
            best = (err, complex(sol.x[0], sol.x[1]), complex(sol.x[2], sol.x[3]))
        if err < tol:
            break
    return best


def isomorphic_maps(b1: BubbleMap, b2: BubbleMap, tol: float = 1e-8) -> dict | None:
    """Search for an isomorphism ``b1 -> b2``.

    Returns ``{"tree": phi0, "affine": {i: (a, b)}, "residual": r}`` where the
    component map ``z -> a z + b`` carries component ``i`` of ``b1`` onto
    component ``phi0[i]`` of ``b2``, or None when no isomorphism is found.
    """
    if b1.curve.mark_component.keys() != b2.curve.mark_component.keys():
        raise BubbleError("maps carry different marked-point sets")
    t1, t2 = b1.bubble_type, b2.bubble_type
    if not trees.is_equivalent(t1, t2):
        return None
    if len(t1.tree) > trees.AUT_LIMIT:
        raise BubbleError("isomorphism search is brute force and limited to 8 components")
    _, r1 = trees.canonicalize(t1)
    _, r2 = trees.canonicalize(t2)
    inv2 = {v: k for k, v in r2.items()}
    # canonical labels give one tree isomorphism; compose with automorphisms of t2
    base = {i: inv2[r1[i]] for i in t1.tree.elements}
    m1, m2 = b1.map_of, b2.map_of
    y1, y2 = b1.curve.mark_position, b2.curve.mark_position
    x1, x2 = b1.x, b2.x
    for aut in trees.automorphisms(t2):
        phi0 = {i: aut[base[i]] for i in base}
        affine = {}
        worst = 0.0
        for i in t1.tree.elements:
            pairs = [(x1[h], x2[phi0[h]]) for h in t1.tree.children(i)]
            pairs += [(y1[l], y2[l]) for l in t1.marks_on(i)]
            found = _solve_affine(m1[i], m2[phi0[i]], pairs, tol)
            if found is None or found[0] > tol:
                worst = math.inf
                break
            worst = max(worst, found[0])
            affine[i] = (found[1], found[2])
        if worst <= tol:
            return {"tree": phi0, "affine": affine, "residual": worst}
    return None


def _energy_rule(u: RationalMap, quadrature: QuadratureSpec, extent: float) -> float:
    tau, wt = radial_rule(quadrature, [-extent, 0.0, extent])
    M = quadrature.angular_nodes
    ring = np.exp(2j * np.pi * np.arange(M) / M)
    total = 0.0
    step = max(1, (1 << 18) // M)
    for k in range(0, tau.size, step):
        z = np.exp(tau[k:k + step, None]) * ring[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            dens = u.energy_density(z)
        if not np.all(np.isfinite(dens)):
            raise BubbleError("energy quadrature hit a point where the map is undefined")
        total += float(np.sum(wt[k:k + step, None] * dens * np.abs(z) ** 2))
    return total * 2 * np.pi / M


def root_log_moduli(u: RationalMap, extent: float) -> list[float]:
    """Sorted ``ln |root|`` of every component polynomial inside ``(-extent, extent)``.

    Nearly shared roots concentrate the energy density on these circles, so
    they serve as breakpoints for radial quadrature.
    """
    rows = [np.roots(row[::-1]) for row in u.coeffs if np.any(row[1:] != 0)]
    if not rows:
        return []
    roots = np.concatenate(rows)
    pts = np.log(np.abs(roots[np.abs(roots) > 0]))
    return sorted({float(round(t, 12)) for t in pts if -extent < t < extent})


_GL = np.polynomial.legendre.leggauss(16)


def ring_sums(u: RationalMap, tau: np.ndarray, tol: float = 1e-13) -> tuple[np.ndarray, np.ndarray]:
    """``int e r^2 dtheta`` and ``int e z r^2 dtheta`` on the circles ``ln r = tau``.

    Periodic trapezoid (offset by half a step), doubled ring by ring until two
    successive values agree to ``tol`` relative to ``T`` (``T r`` for the first moment).
    """
    tau = np.asarray(tau, dtype=float)
    tot = np.zeros(tau.shape)
    first = np.zeros(tau.shape, dtype=complex)
    prev = None
    active = np.arange(tau.size)
    M = 32
    while active.size:
        r = np.exp(tau[active])
        z = r[:, None] * np.exp(2j * np.pi * (np.arange(M) + 0.5) / M)[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            e = u.energy_density(z) * (r * r * 2 * np.pi / M)[:, None]
        if not np.all(np.isfinite(e)):
            raise BubbleError("ring quadrature hit a point where the map is undefined")
        t_new = np.sum(e, axis=1)
        f_new = np.sum(e * z, axis=1)
        if prev is None or M >= 1 << 15:
            done = np.zeros(active.size, dtype=bool) if prev is None else np.ones(active.size, dtype=bool)
        else:
            pt, pf = prev
            done = (np.abs(t_new - pt) <= tol * t_new) & (np.abs(f_new - pf) <= tol * t_new * (1 + r))
        tot[active] = t_new
        first[active] = f_new
        prev = (t_new[~done], f_new[~done])
        active = active[~done]
        M *= 2
    return tot, first


def ring_quadrature(u: RationalMap, ring_fn, extent: float, breaks=(), tol: float = 1e-12) -> np.ndarray:
    """``int ring_fn(r, T, F) d ln r`` over ``[-extent, extent]`` by adaptive Gauss panels.

    ``T`` and ``F`` are the ring sums of :func:`ring_sums` and ``ring_fn``
    returns an array of shape ``(k, rings)``.  Panels start at unit length,
    broken at ``breaks`` and at the moduli of the component roots, and are
    bisected until halving changes them by less than ``tol`` per unit length.
    """
    x, w = _GL
    edges = set(np.arange(-extent, extent + 0.5, 1.0).tolist()) | set(breaks) | set(root_log_moduli(u, extent))
    edges = np.array(sorted(t for t in edges if -extent <= t <= extent))
    lo, hi = edges[:-1], edges[1:]
    total = None
    for _ in range(40):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes = np.concatenate([mid[:, None] + half[:, None] * x, (lo + 0.5 * half)[:, None] + 0.5 * half[:, None] * x,
                                (mid + 0.5 * half)[:, None] + 0.5 * half[:, None] * x], axis=1)
        T, F = ring_sums(u, nodes.ravel())
        vals = ring_fn(np.exp(nodes.ravel()), T, F).reshape(-1, *nodes.shape)
        k = x.size
        whole = np.einsum("cpn,n->cp", vals[:, :, :k], w) * half
        split = (np.einsum("cpn,n->cp", vals[:, :, k:2 * k], w) + np.einsum("cpn,n->cp", vals[:, :, 2 * k:], w)) * 0.5 * half
        err = np.max(np.abs(whole - split), axis=0)
        ok = err <= tol * np.maximum(2 * half, 1e-3)
        part = np.sum(split[:, ok], axis=1)
        total = part if total is None else total + part
        if np.all(ok):
            return total
        lo, hi = np.concatenate([lo[~ok], mid[~ok]]), np.concatenate([mid[~ok], hi[~ok]])
    raise BubbleError("ring quadrature did not converge")


def energy(u: RationalMap, quadrature: QuadratureSpec | None = None, extent: float = 18.0) -> float:
    """``(1/2pi) int |du|^2`` in the Fubini-Study metric; equals the degree.

    The integral runs over ``ln r`` in ``[-extent, extent]``; the density
    decays like ``r^{-4}`` in both directions so the cut costs ``e^{-2 extent}``.
    A fixed tensor rule is used when ``quadrature`` is given.  Otherwise the
    radial integral is adaptive with breakpoints at the moduli of the
    component roots, where maps with nearly shared roots concentrate.
    """
    if quadrature is not None:
        return _energy_rule(u, quadrature, extent)
    if u.degree == 0:
        return 0.0
    return float(ring_quadrature(u, lambda r, T, F: T[None, :], extent)[0])


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------

def map_from_json(data: dict | str) -> BubbleMap:
    if isinstance(data, str):
        data = json.loads(data)
    parents: dict[int, int | None] = {}
    x: dict[int, complex] = {}
    maps: dict[int, RationalMap] = {}
    for nd in data["nodes"]:
        i = int(nd["id"])
        parents[i] = None if nd.get("parent") is None else int(nd["parent"])
        if parents[i] is not None:
            if "x" not in nd:
                raise BubbleError(f"node {i} needs a position 'x'")
            x[i] = _as_complex(nd["x"])
        maps[i] = RationalMap.from_json(nd["map"])
        if "degree" in nd and int(nd["degree"]) != maps[i].degree:
            raise BubbleError(f"node {i}: degree label {nd['degree']} differs from its map")
    marks = [(int(m["label"]), int(m["node"]), _as_complex(m["y"])) for m in data.get("marks", [])]
    return BubbleMap.build(parents, x, maps, marks)


def map_to_json(b: BubbleMap) -> dict:
    pmap = b.tree.parent_map
    nodes = []
    for i, m in b.maps:
        nd = {"id": i, "parent": pmap[i], "degree": m.degree}
        if pmap[i] is not None:
            xi = b.x[i]
            nd["x"] = [float(xi.real), float(xi.imag)]
        nd["map"] = m.to_json()
        nodes.append(nd)
    marks = [{"label": l, "node": i, "y": [float(y.real), float(y.imag)]} for l, i, y in b.curve.marks]
    return {"nodes": nodes, "marks": marks}
