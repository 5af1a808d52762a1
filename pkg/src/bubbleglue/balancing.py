"""Balancing functionals and the translation/dilation/rotation action.

For a component map ``u`` let ``e = |du|^2/(2 pi)`` be its energy density in
the flat coordinate, normalised so ``int e = deg u``.  Then

* ``Psi_tilde u = int e z dA`` (complex),
* ``Psi_3 u = int e beta(|z|) dA`` (real),

and on component ``i`` of a bubble map the balancing functional is

``(Psi_tilde u_i + sum d_h x_h + sum y_l,
  Psi_3 u_i + sum d_h beta(|x_h|) + sum beta(|y_l|) - 1/2)``

over children ``h`` and marks ``l`` on ``i``, with tree weights ``d_h``.
The action of ``(c, r, theta)`` sends ``u`` to ``u(a^{-1} z - c)`` and the
special points ``x`` to ``a (x + c)``, where ``a = (1 + r) e^{i theta}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import trees
from .bubbles import BubbleError, BubbleMap, RationalMap, ring_quadrature
from .geometry import QuadratureSpec, beta, beta_deriv, radial_rule

__all__ = [
    "BalanceState",
    "BalanceError",
    "moments",
    "psi_tilde",
    "psi3",
    "psi3_r_derivative",
    "balance_functionals",
    "group_action",
    "balance_solve",
    "translation_dilation_residual",
    "psi3_derivative_check",
    "psi_tilde_c_jacobian",
]

TAU_EXTENT = 40.0
LN2 = math.log(2.0)


class BalanceError(RuntimeError):
    """The balancing iteration failed."""


def _rule(quadrature: QuadratureSpec, breaks: list[float]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss panels of unit length in ``ln r``, split finer across the cutoff transition ``[0, ln 2]``."""
    q = quadrature
    fine = set(np.arange(-TAU_EXTENT, TAU_EXTENT + 0.5, 1.0).tolist()) | set(np.linspace(0.0, LN2, 9).tolist())
    breaks = sorted(fine | set(breaks)) if q.scheme == "gauss" else breaks
    tau, wt = radial_rule(q, breaks)
    M = q.angular_nodes
    th = 2 * np.pi * (np.arange(M) + 0.5) / M
    return tau, wt, th


def _fixed_moments(u: RationalMap, quadrature: QuadratureSpec) -> np.ndarray:
    tau, wt, th = _rule(quadrature, [-TAU_EXTENT, 0.0, LN2, TAU_EXTENT])
    z = np.exp(tau[:, None] + 1j * th[None, :])
    e = u.energy_density(z) * np.abs(z) ** 2 * (2 * np.pi / th.size)
    return _combine(np.sum(e, axis=1) @ wt, np.sum(e * z, axis=1) @ wt, tau, wt, np.sum(e, axis=1))


def _combine(energy, first, tau, wt, ring):
    r = np.exp(tau)
    return np.array([energy, first.real, first.imag, np.sum(wt * ring * beta(r)), np.sum(wt * ring * beta_deriv(r) * r)])


def _moment_rows(r: np.ndarray, T: np.ndarray, F: np.ndarray) -> np.ndarray:
    return np.array([T, F.real, F.imag, T * beta(r), T * beta_deriv(r) * r])


def _moment_vector(u: RationalMap, quadrature: QuadratureSpec | None) -> np.ndarray:
    """``[energy, Re Psi_tilde, Im Psi_tilde, Psi_3, dPsi_3/dr]`` without the ``-1/2`` shift.

    With no ``quadrature`` the radial integral uses adaptive panels broken at
    ``|z| = 1, 2`` and at the moduli of the component roots.
    """
    if quadrature is not None:
        return _fixed_moments(u, quadrature)
    if u.degree == 0:
        return np.zeros(5)
    return ring_quadrature(u, _moment_rows, TAU_EXTENT, breaks=np.linspace(0.0, LN2, 5).tolist(), tol=1e-13)


def moments(u: RationalMap, quadrature: QuadratureSpec | None = None) -> dict:
    """Energy, ``Psi_tilde`` and ``Psi_3`` (without the ``-1/2``) of one map."""
    v = _moment_vector(u, quadrature)
    return {"energy": float(v[0]), "psi_tilde": complex(v[1], v[2]), "psi3": float(v[3])}


def psi_tilde(u: RationalMap, quadrature: QuadratureSpec | None = None) -> complex:
    return moments(u, quadrature=quadrature)["psi_tilde"]


def psi3(u: RationalMap, quadrature: QuadratureSpec | None = None) -> float:
    return moments(u, quadrature=quadrature)["psi3"]


def psi3_r_derivative(u: RationalMap, quadrature: QuadratureSpec | None = None) -> float:
    """``int e beta'(|z|) |z| dA``: the ``r``-derivative of ``Psi_3`` at ``r = 0``."""
    return float(_moment_vector(u, quadrature)[4])


@dataclass(frozen=True)
class BalanceState:
    component: int
    psi_tilde: complex
    psi3: float
    map_psi_tilde: complex
    map_psi3: float
    energy: float
    weight: int

    @property
    def residual(self) -> float:
        return math.hypot(abs(self.psi_tilde), self.psi3)

    def to_json(self) -> dict:
        return {
            "component": self.component,
            "psi_tilde": [self.psi_tilde.real, self.psi_tilde.imag],
            "psi3": self.psi3,
            "map_psi_tilde": [self.map_psi_tilde.real, self.map_psi_tilde.imag],
            "map_psi3": self.map_psi3,
            "energy": self.energy,
            "weight": self.weight,
        }


def _special_points(b: BubbleMap, i: int) -> tuple[list[tuple[complex, int]], list[complex]]:
    d = trees.weights(b.bubble_type)
    xs = b.x
    nodes = [(xs[h], d[h]) for h in b.tree.children(i)]
    marks = [y for l, j, y in b.curve.marks if j == i]
    return nodes, marks


def balance_functionals(b: BubbleMap, i: int, quadrature: QuadratureSpec | None = None) -> BalanceState:
    """``(Psi_tilde, Psi_3)`` of component ``i`` including node and mark terms."""
    if i not in b.tree:
        raise BubbleError(f"unknown component {i}")
    m = moments(b.map_of[i], quadrature=quadrature)
    nodes, marks = _special_points(b, i)
    pt = m["psi_tilde"] + sum(dh * x for x, dh in nodes) + sum(marks, 0j)
    p3 = m["psi3"] + sum(dh * float(beta(abs(x))) for x, dh in nodes) + sum(float(beta(abs(y))) for y in marks) - 0.5
    weight = trees.weights(b.bubble_type)[i]
    return BalanceState(i, complex(pt), float(p3), m["psi_tilde"], m["psi3"], m["energy"], weight)


def group_action(b: BubbleMap, params: Mapping[int, tuple[complex, float, float]]) -> BubbleMap:
    """Apply ``(c, r, theta)`` on each listed component.

    Node values and mark values are unchanged by construction; the children's
    own maps are untouched.
    """
    maps = b.map_of
    new_maps = {}
    new_x = {}
    new_y = {}
    for i, (c, r, th) in params.items():
        if i not in b.tree:
            raise BubbleError(f"unknown component {i}")
        if r <= -1:
            raise BubbleError("dilation parameter must satisfy r > -1")
        a = (1.0 + r) * complex(math.cos(th), math.sin(th))
        new_maps[i] = maps[i].compose_affine(1.0 / a, -complex(c))
        for h in b.tree.children(i):
            new_x[h] = a * (b.x[h] + c)
        for l, j, y in b.curve.marks:
            if j == i:
                new_y[l] = a * (y + c)
    try:
        return b.with_data(x=new_x, y=new_y, maps=new_maps)
    except BubbleError as exc:
        raise BubbleError(f"group action breaks distinctness: {exc}") from exc


def _psi3_total(b: BubbleMap, i: int, c: complex, r: float, quadrature) -> tuple[float, float]:
    """``Psi_3`` after acting by ``(c, r, 0)`` and its ``r``-derivative."""
    a = 1.0 + r
    v = b.map_of[i].compose_affine(1.0 / a, -complex(c))
    nodes, marks = _special_points(b, i)
    val = psi3(v, quadrature) - 0.5
    # d/dr beta((1+r)|w + c|) = beta'(|z|) |z| / (1+r)
    der = psi3_r_derivative(v, quadrature) / a
    for x, dh in nodes:
        val += dh * float(beta(a * abs(x + c)))
        der += dh * float(beta_deriv(a * abs(x + c))) * abs(x + c)
    for y in marks:
        val += float(beta(a * abs(y + c)))
        der += float(beta_deriv(a * abs(y + c))) * abs(y + c)
    return val, der


def balance_solve(b: BubbleMap, tol: float = 1e-10, max_iter: int = 50, components=None,
                  quadrature: QuadratureSpec | None = None) -> tuple[BubbleMap, dict]:
    """Balance each non-root component (or ``components``) by ``(c, r)``.

    The translation enters ``Psi_tilde`` exactly as ``(1+r)(Psi_T + c d_i)``,
    so ``c = -Psi_T/d_i`` in one step; ``r`` then solves the scalar monotone
    equation ``Psi_3 = 0`` by safeguarded Newton steps.  Returns the balanced
    map and ``{i: {"c", "r", "iterations", "residual"}}``.
    """
    comps = sorted(trees.hat(b.tree)) if components is None else list(components)
    params = {}
    info = {}
    for i in comps:
        st = balance_functionals(b, i, quadrature)
        if st.residual < tol:
            info[i] = {"c": 0j, "r": 0.0, "iterations": 0, "residual": st.residual}
            continue
        c = -(st.psi_tilde) / st.weight
        lo, hi = -1.0 + 1e-12, None
        r = 0.0
        it = 0
        val, der = _psi3_total(b, i, c, r, quadrature)
        while abs(val) >= tol:
            it += 1
            if it > max_iter:
                raise BalanceError(f"component {i}: no convergence in {max_iter} iterations (|Psi_3| = {abs(val):.2e})")
            if val > 0:
                hi = r
            else:
                lo = r
            step = -val / der if der > 0 else math.inf
            nxt = r + step
            upper = hi if hi is not None else max(2 * (1 + r) - 1, r + 1.0)
            if not (lo < nxt < upper) or not math.isfinite(nxt):
                nxt = 0.5 * (lo + upper)
            r = nxt
            val, der = _psi3_total(b, i, c, r, quadrature)
        params[i] = (complex(c), float(r), 0.0)
        info[i] = {"c": complex(c), "r": float(r), "iterations": it, "residual": abs(val)}
    out = group_action(b, params) if params else b
    for i in params:
        info[i]["residual"] = balance_functionals(out, i, quadrature).residual
    return out, info


def _acted(u: RationalMap, c: complex, r: float) -> RationalMap:
    return u.compose_affine(1.0 / (1.0 + r), -complex(c))


def translation_dilation_residual(u: RationalMap, c: complex, r: float, quadrature: QuadratureSpec | None = None) -> dict:
    """``Psi_tilde((c, r, 0).u) - (1 + r)(Psi_tilde u + c ||du||^2)`` and its relative size."""
    m = moments(u, quadrature)
    lhs = psi_tilde(_acted(u, c, r), quadrature)
    rhs = (1.0 + r) * (m["psi_tilde"] + complex(c) * m["energy"])
    res = abs(lhs - rhs)
    return {"lhs": lhs, "rhs": rhs, "residual": res, "relative": res / (1.0 + abs(m["psi_tilde"]))}


def psi3_derivative_check(u: RationalMap, h: float = 1e-4, quadrature: QuadratureSpec | None = None) -> dict:
    """Central difference of ``r -> Psi_3((0, r, 0).u)`` at 0 against ``int e beta'(|z|) |z|``."""
    fd = (psi3(_acted(u, 0.0, h), quadrature) - psi3(_acted(u, 0.0, -h), quadrature)) / (2 * h)
    exact = psi3_r_derivative(u, quadrature)
    return {"fd": fd, "exact": exact, "relative": abs(fd - exact) / max(abs(exact), 1e-300)}


def psi_tilde_c_jacobian(u: RationalMap, h: float = 1e-4, quadrature: QuadratureSpec | None = None) -> dict:
    """``d Psi_tilde / dc`` (real and imaginary directions) by central differences against ``||du||^2``."""
    e = moments(u, quadrature)["energy"]
    out = {}
    for name, dc in (("real", h), ("imag", 1j * h)):
        d = (psi_tilde(_acted(u, dc, 0.0), quadrature) - psi_tilde(_acted(u, -dc, 0.0), quadrature)) / (2 * dc)
        out[name] = d
    out["energy"] = e
    out["relative"] = max(abs(out["real"] - e), abs(out["imag"] - e)) / e if e > 0 else 0.0
    return out
