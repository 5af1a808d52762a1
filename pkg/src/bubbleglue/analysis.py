"""Glued metrics, weights and the modified Sobolev norms.

Every kept component of a glued surface is sampled on one log-polar
cylinder ``z = M(zeta)``, ``zeta = exp(s + i theta)``, where ``M`` is a
translation to the centre of its necks or, for a root carrying two necks, a
Mobius map putting one neck at each end.  In the conformal coordinate
``s + i theta`` the glued metric is ``e^{2 sigma} |ds + i dtheta|^2``;
``e^{sigma}`` is the conformal factor of the metric with respect to ``|dz|``
times ``|dz/dzeta| |zeta|``.

Sections are stored in the unit-sphere model of the target: a vector field
is a horizontal vector at the lift ``U``, a ``(0,1)``-form is stored by its
``d zeta-bar`` coefficient.  With these conventions
``|eta|_g^2 = 2 |eta_zetabar|^2 e^{-2 sigma}`` and the area element is
``e^{2 sigma} ds d theta``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .geometry import beta
from .gluing import GluingError, GluingParameter, _chart_function, delta_T, fd_wirtinger, glued_points, lift_any, stretch_arrays
from .projective import align_phase, hproj

__all__ = [
    "GridSpec",
    "CylinderGrid",
    "GluedSurface",
    "DiscreteSection",
    "neck_chains",
    "CylinderChart",
    "conformal_factor",
    "weight",
    "build_metric_and_weight",
    "d_theta",
    "modified_norm",
    "modified_norm_p1",
    "covariant_derivative",
    "dbar_preglued",
    "random_sections",
    "neck_bump_section",
    "check_pregluing_estimates",
    "check_sobolev_c0",
    "degree_on_component",
]


@dataclass(frozen=True)
class GridSpec:
    ds: float = 0.05
    n_theta: int = 64
    eps_in: float = 1e-2
    r_out: float = 1e2

    def __post_init__(self) -> None:
        if self.ds <= 0 or self.n_theta < 8 or not (0 < self.eps_in < 1) or self.r_out <= 1:
            raise ValueError("grid needs ds > 0, n_theta >= 8, 0 < eps_in < 1 and r_out > 1")

    def refined(self) -> "GridSpec":
        return GridSpec(self.ds / 2, 2 * self.n_theta, self.eps_in, self.r_out)

    def to_json(self) -> dict:
        return {"ds": self.ds, "n_theta": self.n_theta, "eps_in": self.eps_in, "r_out": self.r_out}


# --------------------------------------------------------------------------
# metric and weight as functions of points
# --------------------------------------------------------------------------

def _base_factor(z):
    return 2.0 / (1.0 + np.abs(z) ** 2)


def conformal_factor(gp: GluingParameter, component: int, z) -> np.ndarray:
    """Factor of the glued metric on ``component`` with respect to ``|dz|``.

    Away from glued necks it is the round factor ``2/(1+|z|^2)``.  Within
    ``2|v_h|^{1/2}`` of a glued child the child's metric is pulled back by the
    linear map ``w = (z - x_h)/v_h`` and blended in with ``beta(r/|v_h|^{1/2})``.
    """
    z = np.asarray(z, dtype=complex)
    out = np.array(_base_factor(z), dtype=float)
    tree = gp.base.tree
    vs = gp.vmap
    for h in tree.children(component):
        if vs[h] == 0:
            continue
        x = gp.base.x[h]
        s = math.sqrt(abs(vs[h]))
        r = np.abs(z - x)
        sel = r < 2 * s
        if not np.any(sel):
            continue
        b = beta(r[sel] / s)
        inner = conformal_factor(gp, h, (z[sel] - x) / vs[h]) / abs(vs[h])
        out[sel] = (1 - b) * inner + b * out[sel]
    return out


def weight(gp: GluingParameter, component: int, z, dT: float | None = None) -> np.ndarray:
    """The weight ``rho`` on a component (kept, or glued when called recursively).

    Near a child at distance ``r``: ``r^2 + |v|^2/r^2`` blended to 1 at scale
    ``delta_T`` and, deep inside a glued neck, to the child's own weight.
    Kept non-root components also vanish quadratically at their node (at
    infinity).
    """
    dT = delta_T(gp.base) if dT is None else dT
    z = np.asarray(z, dtype=complex)
    out = np.ones(z.shape)
    tree = gp.base.tree
    vs = gp.vmap
    pmap = tree.parent_map
    near_any = np.zeros(z.shape, dtype=bool)
    for h in tree.children(component):
        x = gp.base.x[h]
        v = vs[h]
        r = np.abs(z - x)
        sel = r <= 2 * dT
        if not np.any(sel):
            continue
        near_any |= sel
        rs = r[sel]
        if v == 0:
            out[sel] = rs**2 + beta(rs / dT) * (1 - rs**2)
            continue
        av = abs(v)
        with np.errstate(divide="ignore"):
            neck = rs**2 + av**2 / rs**2
        val = np.empty(rs.shape)
        outer = rs >= dT
        val[outer] = neck[outer] + beta(rs[outer] / dT) * (1 - neck[outer])
        inner = ~outer
        if np.any(inner):
            zi = z[sel][inner]
            ri = rs[inner]
            b = beta(dT * ri / av)
            deep = b < 1
            vi = neck[inner].copy()
            if np.any(deep):
                on, w = stretch_arrays(x, v, zi[deep])
                if not np.all(on):
                    raise GluingError("weight: inner blend reaches outside the bubble branch; neck too large for delta_T")
                rho_h = weight(gp, h, w, dT)
                bd = b[deep]
                with np.errstate(invalid="ignore"):
                    vi[deep] = rho_h + bd * (neck[inner][deep] - rho_h)
                vi[deep] = np.where(bd == 0, rho_h, vi[deep])
            val[inner] = vi
        out[sel] = val
    if pmap[component] is not None and vs[component] == 0:
        far = ~near_any
        with np.errstate(divide="ignore"):
            q = np.where(z == 0, np.inf, 1.0 / np.abs(z))
        qf = q[far]
        out[far] = np.where(qf < 2 * dT, qf**2 + beta(qf / dT) * (1 - qf**2), 1.0)
    return out


# --------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CylinderChart:
    """Holomorphic coordinate ``z = M(zeta)`` of a cylinder.

    With one neck centre ``a`` it is the translation ``z = a + zeta``; with a
    second centre ``b`` it is the Mobius map sending ``0 -> a`` and
    ``infinity -> b``, normalised so that ``|dz/dzeta| = 1`` at ``a``.
    """

    a: complex
    b: complex | None = None
    lam: complex = 1.0

    @classmethod
    def make(cls, a: complex, b: complex | None = None, n_theta: int = 64) -> "CylinderChart":
        if b is None:
            return cls(complex(a))
        # the pole zeta = -lam sits half an angular step off the grid rays
        phi = math.pi / n_theta - cmath.phase(a - b)
        return cls(complex(a), complex(b), (b - a) * cmath.exp(1j * phi))

    def z(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        if self.b is None:
            return self.a + zeta
        return (self.a * self.lam + self.b * zeta) / (self.lam + zeta)

    def zeta(self, z):
        z = np.asarray(z, dtype=complex)
        if self.b is None:
            return z - self.a
        return self.lam * (z - self.a) / (self.b - z)

    def log_dz(self, zeta) -> np.ndarray:
        """``ln |dz/dzeta|``."""
        zeta = np.asarray(zeta, dtype=complex)
        if self.b is None:
            return np.zeros(zeta.shape)
        return np.log(np.abs(self.lam * (self.b - self.a))) - 2 * np.log(np.abs(self.lam + zeta))

    def to_json(self) -> dict:
        out = {"a": [self.a.real, self.a.imag]}
        if self.b is not None:
            out.update(b=[self.b.real, self.b.imag], lam=[self.lam.real, self.lam.imag])
        return out


def neck_chains(gp: GluingParameter, component: int) -> list[tuple[complex, list[int]]]:
    """Glued necks resolved by one cylinder, as ``(centre, nested chain)`` pairs.

    The root may carry two glued children (one at each end of the cylinder),
    any other kept component at most one.  Each glued bubble below may carry
    at most one glued child, placed at its origin.
    """
    tree = gp.base.tree
    vs = gp.vmap
    first = sorted(h for h in tree.children(component) if vs[h] != 0)
    limit = 2 if component == tree.root else 1
    if len(first) > limit:
        raise GluingError(f"grid unresolved: component {component} has {len(first)} glued necks; one cylinder resolves {limit}")
    out = []
    for h in first:
        chain = [h]
        i = h
        while True:
            glued = [k for k in tree.children(i) if vs[k] != 0]
            if not glued:
                break
            if len(glued) > 1:
                raise GluingError(f"grid unresolved: component {i} has {len(glued)} glued necks; one cylinder resolves one")
            k = glued[0]
            if gp.base.x[k] != 0:
                raise GluingError(f"grid unresolved: nested neck {k} sits off the origin of its bubble")
            chain.append(k)
            i = k
        out.append((gp.base.x[h], chain))
    return out


@dataclass
class CylinderGrid:
    component: int
    chart: CylinderChart
    spec: GridSpec
    s: np.ndarray
    theta: np.ndarray
    ds: float
    dth: float
    z: np.ndarray
    comp: np.ndarray
    w: np.ndarray
    U: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray
    z_mid: np.ndarray
    sigma_mid: np.ndarray
    rho_mid: np.ndarray
    chain: list[int] = field(default_factory=list)
    far_chain: list[int] = field(default_factory=list)

    @property
    def zeta(self) -> np.ndarray:
        return np.exp(self.s[:, None] + 1j * self.theta[None, :])

    @property
    def shape(self) -> tuple[int, int]:
        return self.z.shape

    @property
    def node_weights(self) -> np.ndarray:
        """``ds dtheta`` trapezoid weights at nodes (flat, without the metric)."""
        w = np.full(self.z.shape, self.ds * self.dth)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @property
    def mid_weights(self) -> np.ndarray:
        return np.full(self.z_mid.shape, self.ds * self.dth)

    def to_json(self) -> dict:
        return {
            "component": self.component,
            "chart": self.chart.to_json(),
            "necks": self.chain,
            "far_necks": self.far_chain,
            "n_s": int(self.s.size),
            "n_theta": int(self.theta.size),
            "s_range": [float(self.s[0]), float(self.s[-1])],
            "ds": self.ds,
            **self.spec.to_json(),
        }


def _align_rings(U: np.ndarray) -> np.ndarray:
    """Parallel gauge in ``s``: each ring's phase follows the previous ring."""
    U = U.copy()
    for k in range(1, U.shape[0]):
        U[k] = align_phase(U[k], U[k - 1])
    return U


def _chain_scale(gp: GluingParameter, chain: list[int]) -> float:
    scale = 1.0
    for h in chain:
        scale *= abs(gp.vmap[h])
    return scale


def build_grid(gp: GluingParameter, component: int, spec: GridSpec, dT: float | None = None) -> CylinderGrid:
    chains = neck_chains(gp, component)
    near = chains[0] if chains else (0j, [])
    far = chains[1] if len(chains) > 1 else None
    chart = CylinderChart.make(near[0], far[0] if far else None, spec.n_theta)
    s_lo = math.log(spec.eps_in * _chain_scale(gp, near[1]))
    if far is None:
        s_hi = math.log(spec.r_out)
    else:
        s_hi = math.log(abs(far[0] - near[0]) ** 2 / (spec.eps_in * _chain_scale(gp, far[1])))
    n_s = int(math.ceil((s_hi - s_lo) / spec.ds)) + 1
    s = np.linspace(s_lo, s_hi, n_s)
    ds = float(s[1] - s[0])
    M = spec.n_theta
    theta = 2 * np.pi * np.arange(M) / M
    zeta = np.exp(s[:, None] + 1j * theta[None, :])
    z = chart.z(zeta)
    comp, w = glued_points(gp, component, z)
    maps = gp.base.map_of
    U = np.empty(z.shape + (gp.base.n + 1,), dtype=complex)
    for j in np.unique(comp):
        sel = comp == j
        U[sel] = lift_any(maps[j], w[sel])
    # start from the innermost ring, where the lift is the bubble's polynomial one
    U = _align_rings(U)
    sigma = np.log(conformal_factor(gp, component, z)) + chart.log_dz(zeta) + s[:, None]
    rho = weight(gp, component, z, dT)
    s_mid = 0.5 * (s[1:] + s[:-1])
    zeta_mid = np.exp(s_mid[:, None] + 1j * theta[None, :])
    z_mid = chart.z(zeta_mid)
    sigma_mid = np.log(conformal_factor(gp, component, z_mid)) + chart.log_dz(zeta_mid) + s_mid[:, None]
    rho_mid = weight(gp, component, z_mid, dT)
    return CylinderGrid(component, chart, spec, s, theta, ds, 2 * np.pi / M, z, comp, w, U, sigma, rho,
                        z_mid, sigma_mid, rho_mid, list(near[1]), list(far[1]) if far else [])


@dataclass
class GluedSurface:
    param: GluingParameter
    spec: GridSpec
    delta_T: float
    grids: dict[int, CylinderGrid]

    def to_json(self) -> dict:
        return {
            "size": self.param.size,
            "delta_T": self.delta_T,
            "grids": [g.to_json() for g in self.grids.values()],
        }


def build_metric_and_weight(gp: GluingParameter, spec: GridSpec | None = None, check: bool = True) -> GluedSurface:
    """Sample the glued map, metric factor and weight on every kept component."""
    spec = spec or GridSpec()
    if check and gp.glued:
        gp.check_admissible()
    dT = delta_T(gp.base)
    grids = {i: build_grid(gp, i, spec, dT) for i in gp.kept}
    return GluedSurface(gp, spec, dT, grids)


# --------------------------------------------------------------------------
# sections and norms
# --------------------------------------------------------------------------

_D6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0  # offsets -3..3


def d_theta(f: np.ndarray, dth: float, axis: int = 1) -> np.ndarray:
    """Sixth-order periodic derivative along ``axis``."""
    out = np.zeros_like(f)
    for q, c in zip(range(-3, 4), _D6):
        if c:
            out = out + c * np.roll(f, -q, axis=axis)
    return out / dth


@dataclass
class DiscreteSection:
    """Per-component samples of a vector field or a ``(0,1)``-form.

    ``location`` is ``"node"`` (grid nodes) or ``"mid"`` (ring midpoints).
    Arrays have shape ``(rings, n_theta, m)``; any orthonormal representation
    of the tangent vectors works since only pointwise lengths enter the norms.
    """

    kind: Literal["vector_field", "form_01"]
    location: Literal["node", "mid"]
    data: dict[int, np.ndarray]

    def scaled(self, c: complex) -> "DiscreteSection":
        return DiscreteSection(self.kind, self.location, {i: c * a for i, a in self.data.items()})


def _geometry(grid: CylinderGrid, location: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if location == "node":
        return grid.sigma, grid.rho, grid.node_weights
    return grid.sigma_mid, grid.rho_mid, grid.mid_weights


def _norm_parts(abs_g: np.ndarray, sigma: np.ndarray, rho: np.ndarray, flat_w: np.ndarray, p: float) -> float:
    """``(1/2)[(int |.|^p)^{1/p} + (int rho^{-(p-2)/p} |.|^2)^{1/2}]`` with ``dA = e^{2 sigma} flat_w``."""
    area = np.exp(2 * sigma) * flat_w
    lp = np.sum(abs_g**p * area) ** (1.0 / p)
    with np.errstate(divide="ignore"):
        wt = np.where(rho > 0, rho ** (-(p - 2.0) / p), 0.0)
    l2 = math.sqrt(float(np.sum(wt * abs_g**2 * area)))
    return 0.5 * (float(lp) + l2)


def _check_p(p: float) -> None:
    if not p > 2:
        raise ValueError(f"the modified norms need p > 2, got {p}")


def pointwise_length(sec: DiscreteSection, grid: CylinderGrid, data: np.ndarray) -> np.ndarray:
    sigma, _, _ = _geometry(grid, sec.location)
    mag = np.linalg.norm(data, axis=-1)
    if sec.kind == "form_01":
        return math.sqrt(2.0) * mag * np.exp(-sigma)
    return mag


def modified_norm(surface: GluedSurface, sec: DiscreteSection, p: float = 3.0) -> float:
    """``||.||_{upsilon,p}`` summed over kept components."""
    _check_p(p)
    total = 0.0
    for i, data in sec.data.items():
        g = surface.grids[i]
        sigma, rho, fw = _geometry(g, sec.location)
        total += _norm_parts(pointwise_length(sec, g, data), sigma, rho, fw, p)
    return total


def sup_norm(surface: GluedSurface, sec: DiscreteSection) -> float:
    return float(sum(np.max(pointwise_length(sec, surface.grids[i], d)) for i, d in sec.data.items()))


def covariant_derivative(grid: CylinderGrid, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(nabla_s xi, nabla_theta xi)`` for a node vector field in the ``U`` gauge.

    ``nabla xi = (I - U U^*) d xi - (U^* dU) xi``, with second-order differences
    in ``s`` and sixth-order periodic differences in ``theta``.
    """
    U = grid.U
    ds_xi = np.gradient(xi, grid.ds, axis=0, edge_order=2)
    ds_U = np.gradient(U, grid.ds, axis=0, edge_order=2)
    dt_xi = d_theta(xi, grid.dth)
    dt_U = d_theta(U, grid.dth)
    def cov(dxi, dU):
        a = np.sum(np.conj(U) * dU, axis=-1, keepdims=True)
        return hproj(U, dxi) - a * xi
    return cov(ds_xi, ds_U), cov(dt_xi, dt_U)


def modified_norm_p1(surface: GluedSurface, sec: DiscreteSection, p: float = 3.0) -> float:
    """``||xi||_{upsilon,p} + ||nabla xi||_{upsilon,p}`` for node vector fields."""
    _check_p(p)
    if sec.kind != "vector_field" or sec.location != "node":
        raise ValueError("the p,1 norm is defined for vector fields sampled at nodes")
    total = modified_norm(surface, sec, p)
    for i, xi in sec.data.items():
        g = surface.grids[i]
        ns, nt = covariant_derivative(g, xi)
        mag = np.sqrt(np.sum(np.abs(ns) ** 2 + np.abs(nt) ** 2, axis=-1)) * np.exp(-g.sigma)
        total += _norm_parts(mag, g.sigma, g.rho, g.node_weights, p)
    return total


# --------------------------------------------------------------------------
# the preglued map and its dbar
# --------------------------------------------------------------------------

def _component_tangent(u, w: np.ndarray, sigma_chart: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Chart lift and ``du/dw`` (or ``du/dsigma``) as a horizontal vector at that lift."""
    lift = np.empty(w.shape + (u.n + 1,), dtype=complex)
    out = np.empty_like(lift)
    if np.any(~sigma_chart):
        lift[~sigma_chart], out[~sigma_chart] = u.tangent_north(w[~sigma_chart])
    if np.any(sigma_chart):
        ws = w[sigma_chart]
        with np.errstate(divide="ignore"):
            sg = np.where(np.isinf(ws), 0.0, 1.0 / ws)
        lift[sigma_chart], out[sigma_chart] = u.tangent_sigma(sg)
    return lift, out


def dbar_preglued(surface: GluedSurface, component: int, h_zeta: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """``(d_zeta u, d_zetabar u)`` of the preglued map at the grid nodes, in the grid gauge.

    Chain rule: the holomorphic component map's derivative times the
    finite-difference Wirtinger derivatives of ``q_upsilon`` in
    the cylinder coordinate ``ln zeta``.  Stencils that straddle a neck circle sit where
    ``q_upsilon`` is flat to all orders and are set to zero.
    """
    g = surface.grids[component]
    gp = surface.param
    zeta0 = g.s[:, None] + 1j * g.theta[None, :]
    f, comp0, w0, use_sigma = _chart_function(gp, component, g.z)

    def fz(zeta):
        return f(g.chart.z(np.exp(zeta)))

    d, db = fd_wirtinger(fz, zeta0, h_zeta)
    bad = ~np.isfinite(d) | ~np.isfinite(db)
    d = np.where(bad, 0.0, d)
    db = np.where(bad, 0.0, db)
    maps = gp.base.map_of
    lift = np.empty(g.z.shape + (gp.base.n + 1,), dtype=complex)
    tang = np.empty_like(lift)
    for j in np.unique(comp0):
        sel = comp0 == j
        lift[sel], tang[sel] = _component_tangent(maps[j], w0[sel], use_sigma[sel])
    phase = np.sum(np.conj(lift) * g.U, axis=-1, keepdims=True)
    tang = tang * phase / np.abs(phase)
    return tang * d[..., None], tang * db[..., None]


def dbar_section(surface: GluedSurface, h_zeta: float = 1e-3) -> DiscreteSection:
    data = {}
    for i in surface.grids:
        _, db = dbar_preglued(surface, i, h_zeta)
        data[i] = db
    return DiscreteSection("form_01", "node", data)


def du_sup(surface: GluedSurface, h_zeta: float = 1e-3) -> float:
    """``||du_upsilon||_{C^0}``: ``|du|_g^2 = 2(|u_zeta|^2 + |u_zetabar|^2) e^{-2 sigma}``, summed over components."""
    total = 0.0
    for i, g in surface.grids.items():
        d, db = dbar_preglued(surface, i, h_zeta)
        mag = np.sqrt(2 * (np.sum(np.abs(d) ** 2, axis=-1) + np.sum(np.abs(db) ** 2, axis=-1))) * np.exp(-g.sigma)
        total += float(np.max(mag))
    return total


def degree_on_component(surface: GluedSurface, component: int) -> float:
    """``(1/pi) int u^* omega`` over the cylinder, the degree of the glued map up to truncation."""
    g = surface.grids[component]
    U = g.U
    Us = np.gradient(U, g.ds, axis=0, edge_order=2)
    Ut = d_theta(U, g.dth)
    hs = hproj(U, Us)
    ht = hproj(U, Ut)
    dens = np.imag(np.sum(np.conj(hs) * ht, axis=-1))
    return float(np.sum(dens * g.node_weights) / math.pi)


# --------------------------------------------------------------------------
# Lemma-level checks
# --------------------------------------------------------------------------

def check_pregluing_estimates(gp: GluingParameter, p: float = 3.0, spec: GridSpec | None = None,
                              surface: GluedSurface | None = None) -> dict:
    _check_p(p)
    surface = surface or build_metric_and_weight(gp, spec)
    sec = dbar_section(surface)
    nd = modified_norm(surface, sec, p)
    size = gp.size
    return {
        "size": size,
        "du_C0": du_sup(surface),
        "dbar_norm": nd,
        "ratio": nd / size ** (1.0 / p) if size > 0 else 0.0,
        "p": p,
        "grid": surface.spec.to_json(),
    }


def random_sections(surface: GluedSurface, count: int, seed: int) -> list[DiscreteSection]:
    """Pullbacks of the vector fields ``(I - U U^*) M U`` for random complex matrices ``M``."""
    rng = np.random.default_rng(seed)
    m = surface.param.base.n + 1
    out = []
    for _ in range(count):
        M = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        data = {}
        for i, g in surface.grids.items():
            data[i] = hproj(g.U, g.U @ M.T)
        out.append(DiscreteSection("vector_field", "node", data))
    return out


def neck_bump_section(surface: GluedSurface, node: int, seed: int = 0) -> DiscreteSection:
    """A section supported on the neck of ``node``: a random field times a bump in ``ln r``."""
    gp = surface.param
    k = gp.istar(node)
    g = surface.grids[k]
    chain = g.chain if node in g.chain else g.far_chain
    if node not in chain:
        raise GluingError(f"node {node} is not a neck of the cylinder of component {k}")
    pos = chain.index(node)
    scale = _chain_scale(gp, chain[:pos])
    x = gp.base.x[chain[0]]
    s0 = math.log(abs(complex(g.chart.zeta(x + scale * gp.neck_scale(node)))))
    t = np.abs(g.s - s0)
    bump = 1.0 - beta(1.0 + t / 1.0)
    sec = random_sections(surface, 1, seed)[0]
    return DiscreteSection("vector_field", "node", {i: (a * bump[:, None, None] if i == k else 0 * a) for i, a in sec.data.items()})


def check_sobolev_c0(gp: GluingParameter, p: float = 3.0, trials: int = 50, seed: int = 0,
                     spec: GridSpec | None = None, surface: GluedSurface | None = None) -> dict:
    """Max over random sections of ``||xi||_{C^0} / ||xi||_{upsilon,p,1}``."""
    _check_p(p)
    surface = surface or build_metric_and_weight(gp, spec)
    ratios = []
    for sec in random_sections(surface, trials, seed):
        ratios.append(sup_norm(surface, sec) / modified_norm_p1(surface, sec, p))
    neck = []
    for h in gp.glued:
        try:
            sec = neck_bump_section(surface, h, seed)
        except GluingError:
            continue
        neck.append(sup_norm(surface, sec) / modified_norm_p1(surface, sec, p))
    return {"size": gp.size, "max_ratio": max(ratios), "neck_ratios": neck, "trials": trials, "seed": seed, "p": p}
