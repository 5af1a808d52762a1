"""The discretised nonlinear dbar operator on a glued surface and its Picard correction.

Unknowns are vector fields ``xi`` at the grid nodes of every kept cylinder,
written in the tangent frame of the preglued lift ``U``: ``xi = F a``.  The
nonlinear operator is evaluated on ring midpoints.  With ``E = exp_U(xi)``,
fourth-order midpoint weights ``d_j`` (derivative) and ``w_j`` (interpolation)
over the rings ``j = k-1 .. k+2``, and ``L`` the dbar stencil in
``zeta = s + i theta``

``Y = L E = (1/2) sum_j (d_j E_j + i w_j D_theta E_j)``,

``F_h(xi) = sum_j w_j Pi_j^{-1} (I - E_j E_j^*) Y``

where ``Pi_j^{-1}`` transports back from ``E_j`` to ``U_j``.  The first and
last midpoints use the two-ring weights.  The result is read in the frame
``Fhat`` of the interpolated midpoint lift.  The derivative at ``xi = 0`` is
complex linear:

``A xi = Fhat^* sum_j w_j [(I - U_j U_j^*) L xi - gamma_j xi_j]``,
``gamma_j = U_j^* L U``,

and ``N(xi) = F_h(xi) - F_h(0) - A xi`` by three evaluations.

The right inverse ``P`` returns the solution of ``A xi = eta`` of least
``L^2`` norm among those ``L^2``-orthogonal to the pushed-forward kernel
``Gamma_-``.  It is computed from the Schur complement of the saddle-point
system, with a sparse LU factorisation of ``A W^{-1} A^*``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy import sparse
from scipy.sparse import linalg as spla

from .analysis import (
    _D6,
    CylinderGrid,
    DiscreteSection,
    GluedSurface,
    GridSpec,
    build_metric_and_weight,
    d_theta,
    modified_norm,
    modified_norm_p1,
    random_sections,
)
from .bubbles import BubbleMap, RationalMap
from .gluing import GluingParameter
from .kernel import field_north, field_sigma, kernel_basis
from .projective import fs_distance, fs_exp, hproj, normalize, tangent_frame, transport_inverse

__all__ = [
    "SolverError",
    "ContractionError",
    "DiscreteProblem",
    "CorrectionState",
    "matched_kernel",
    "index_half_glued",
    "build_problem",
    "picard_correct",
    "quadratic_term_check",
    "node_dbar",
]


class SolverError(RuntimeError):
    """The linear solve failed."""


class ContractionError(SolverError):
    """The Picard map failed to contract."""

    def __init__(self, message: str, factor: float):
        super().__init__(message)
        self.factor = factor


def index_half_glued(b: BubbleMap) -> int:
    """``(n+1) sum lambda_i + n``: half the real index, unchanged by gluing."""
    return (b.n + 1) * sum(u.degree for _, u in b.maps) + b.n


# --------------------------------------------------------------------------
# the kernel of the base and its pushforward
# --------------------------------------------------------------------------

def _field_any(u: RationalMap, Q: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lift and field at ``w`` (``inf`` allowed), north chart inside the unit disk."""
    w = np.asarray(w, dtype=complex)
    U = np.empty(w.shape + (u.n + 1,), dtype=complex)
    X = np.empty_like(U)
    north = np.isfinite(w) & (np.abs(w) <= 1)
    if np.any(north):
        U[north], X[north] = field_north(u, Q, w[north])
    if np.any(~north):
        ws = w[~north]
        with np.errstate(divide="ignore", invalid="ignore"):
            sg = np.where(np.isfinite(ws), 1.0 / ws, 0.0)
        U[~north], X[~north] = field_sigma(u, Q, sg)
    return U, X


def matched_kernel(b: BubbleMap) -> tuple[dict[int, np.ndarray], np.ndarray]:
    """Basis of ``ker D_b``: component fields that agree at every node.

    Returns ``{i: coefficients}`` where each array has shape ``(k, dim_i)``
    combining the component's Euler basis, and the singular values of the
    node-matching matrix.
    """
    bases = {i: kernel_basis(u) for i, u in b.maps}
    order = list(bases)
    offs = {}
    tot = 0
    for i in order:
        offs[i] = tot
        tot += bases[i].dim
    rows = []
    for h in b.tree.elements:
        i = b.tree.parent_map[h]
        if i is None:
            continue
        Ui, Xi = bases[i].values(np.array([b.x[h]]))
        Ui, Xi = Ui[0], Xi[0]
        Uh, Xh = bases[h].values_at_infinity()
        c = np.vdot(Uh, Ui)
        c = c / abs(c)
        F = tangent_frame(Ui)
        blk = np.zeros((b.n, tot), dtype=complex)
        blk[:, offs[i]:offs[i] + bases[i].dim] = np.conj(F.T) @ Xi.T
        blk[:, offs[h]:offs[h] + bases[h].dim] = -np.conj(F.T) @ (c * Xh).T
        rows.append(blk)
    if rows:
        M = np.vstack(rows)
        _, sv, Vh = np.linalg.svd(M)
        rank = int(np.sum(sv > 1e-9 * max(1.0, sv[0])))
        null = np.conj(Vh[rank:]).T
    else:
        sv = np.zeros(0)
        null = np.eye(tot, dtype=complex)
    coeffs = {i: null[offs[i]:offs[i] + bases[i].dim].T for i in order}
    tuples = {}
    for i in order:
        tuples[i] = np.einsum("kd,dab->kab", coeffs[i], bases[i].tuples)
    return tuples, sv


def _push_kernel(gp: GluingParameter, g: CylinderGrid, F: np.ndarray, tuples: dict[int, np.ndarray]) -> np.ndarray:
    """Kernel fields composed with ``q_upsilon`` in the grid gauge and frame: ``(k, n_s, M, n)``."""
    maps = gp.base.map_of
    k = next(iter(tuples.values())).shape[0]
    out = np.zeros((k,) + g.z.shape + (gp.base.n,), dtype=complex)
    for j in np.unique(g.comp):
        sel = g.comp == j
        Ug = g.U[sel]
        for c in range(k):
            L, X = _field_any(maps[j], tuples[j][c], g.w[sel])
            ph = np.sum(np.conj(L) * Ug, axis=-1, keepdims=True)
            ph = ph / np.abs(ph)
            out[c][sel] = np.einsum("pan,pa->pn", np.conj(F[sel]), ph * X)
    return out


# --------------------------------------------------------------------------
# discrete operators
# --------------------------------------------------------------------------

_OFFSETS = (-1, 0, 1, 2)
_D4 = np.array([1.0, -27.0, 27.0, -1.0]) / 24.0
_I4 = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0


def _stencil(ns: int, ds: float) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint derivative and interpolation weights, shape ``(ns - 1, 4)`` over ``_OFFSETS``."""
    d = np.tile(_D4 / ds, (ns - 1, 1))
    w = np.tile(_I4, (ns - 1, 1))
    for c in (0, ns - 2):
        d[c] = [0.0, -1.0 / ds, 1.0 / ds, 0.0]
        w[c] = [0.0, 0.5, 0.5, 0.0]
    return d, w


def _shifted(E: np.ndarray, o: int) -> np.ndarray:
    """Ring ``k + o`` for every midpoint ``k``, clamped at the ends (weights vanish there)."""
    ns = E.shape[0]
    idx = np.clip(np.arange(ns - 1) + o, 0, ns - 1)
    return E[idx]


def _L(E: np.ndarray, g: CylinderGrid) -> np.ndarray:
    """Midpoint dbar stencil in ``zeta``."""
    d, w = _stencil(E.shape[0], g.ds)
    Dt = d_theta(E, g.dth)
    out = 0
    for q, o in enumerate(_OFFSETS):
        out = out + d[:, q, None, None] * _shifted(E, o) + 1j * w[:, q, None, None] * _shifted(Dt, o)
    return 0.5 * out


def _interp(E: np.ndarray, ds: float) -> np.ndarray:
    _, w = _stencil(E.shape[0], ds)
    return sum(w[:, q, None, None] * _shifted(E, o) for q, o in enumerate(_OFFSETS))


@dataclass
class _GridOps:
    grid: CylinderGrid
    F: np.ndarray          # node frames (n_s, M, m, n)
    Fhat: np.ndarray       # midpoint frames (n_s-1, M, m, n)
    W: np.ndarray          # node L^2 weights (n_s, M)
    off_x: int
    off_e: int

    @property
    def nx(self) -> int:
        return self.F.shape[0] * self.F.shape[1] * self.F.shape[3]

    @property
    def ne(self) -> int:
        return self.Fhat.shape[0] * self.Fhat.shape[1] * self.Fhat.shape[3]


@dataclass
class DiscreteProblem:
    """Assembled linearisation, kernel pushforward and factorised right inverse."""

    surface: GluedSurface
    ops: dict[int, _GridOps]
    A: sparse.csr_matrix
    W: np.ndarray
    Gamma: np.ndarray
    kernel_sv: np.ndarray
    _lu: object = field(repr=False)
    _B: np.ndarray = field(repr=False)
    _S: object = field(repr=False)

    @property
    def n(self) -> int:
        return self.surface.param.base.n

    # -- packing -----------------------------------------------------------
    def unpack_x(self, a: np.ndarray) -> dict[int, np.ndarray]:
        out = {}
        for i, o in self.ops.items():
            sh = o.F.shape[:2] + (self.n,)
            out[i] = a[o.off_x:o.off_x + o.nx].reshape(sh)
        return out

    def unpack_e(self, e: np.ndarray) -> dict[int, np.ndarray]:
        out = {}
        for i, o in self.ops.items():
            sh = o.Fhat.shape[:2] + (self.n,)
            out[i] = e[o.off_e:o.off_e + o.ne].reshape(sh)
        return out

    def pack_x(self, d: dict[int, np.ndarray]) -> np.ndarray:
        return np.concatenate([d[i].ravel() for i in self.ops])

    def fields(self, a: np.ndarray) -> dict[int, np.ndarray]:
        """Frame coordinates to ambient horizontal vectors."""
        return {i: np.einsum("...an,...n->...a", self.ops[i].F, x) for i, x in self.unpack_x(a).items()}

    def coords(self, xi: dict[int, np.ndarray]) -> np.ndarray:
        return self.pack_x({i: np.einsum("...an,...a->...n", np.conj(self.ops[i].F), xi[i]) for i in self.ops})

    # -- sections ------------------------------------------------------------
    def vector_section(self, a: np.ndarray) -> DiscreteSection:
        return DiscreteSection("vector_field", "node", self.fields(a))

    def form_section(self, e: np.ndarray) -> DiscreteSection:
        return DiscreteSection("form_01", "mid", self.unpack_e(e))

    def form_norm(self, e: np.ndarray, p: float) -> float:
        return modified_norm(self.surface, self.form_section(e), p)

    def vector_norm(self, a: np.ndarray, p: float) -> float:
        return modified_norm_p1(self.surface, self.vector_section(a), p)

    # -- operators -------------------------------------------------------------
    def dbar(self, a: np.ndarray, ambient: bool = False):
        """``F_h`` at frame coordinates ``a``: midpoint frame coordinates, or ambient vectors."""
        parts = []
        amb = {}
        for i, o in self.ops.items():
            g = o.grid
            x = a[o.off_x:o.off_x + o.nx].reshape(o.F.shape[:2] + (self.n,))
            xi = np.einsum("...an,...n->...a", o.F, x)
            E = fs_exp(g.U, xi)
            Y = _L(E, g)
            _, w = _stencil(E.shape[0], g.ds)
            Fh = 0
            for q, off in enumerate(_OFFSETS):
                Ej, Uj, xj = _shifted(E, off), _shifted(g.U, off), _shifted(xi, off)
                Fh = Fh + w[:, q, None, None] * transport_inverse(Uj, xj, hproj(Ej, Y))
            amb[i] = Fh
            parts.append(np.einsum("...an,...a->...n", np.conj(o.Fhat), Fh).ravel())
        if ambient:
            return amb
        return np.concatenate(parts)

    def N(self, a: np.ndarray, f0: np.ndarray | None = None) -> np.ndarray:
        f0 = self.dbar(np.zeros_like(a)) if f0 is None else f0
        return self.dbar(a) - f0 - self.A @ a

    def solve(self, eta: np.ndarray) -> np.ndarray:
        """``P eta``: least ``W``-norm solution of ``A a = eta`` with ``Gamma^* W a = 0``."""
        Winv = 1.0 / self.W
        y = self._lu.solve(eta)
        if self.Gamma.shape[1]:
            mu = self._S(self._B.conj().T @ y)
            lam = y - self._lu.solve(self._B @ mu)
            a = Winv * (self.A.conj().T @ lam) + self.Gamma @ mu
        else:
            a = Winv * (self.A.conj().T @ y)
        if not np.all(np.isfinite(a)):
            raise SolverError("right inverse produced non-finite values")
        return a

    def kernel_defect(self, a: np.ndarray) -> float:
        """``|Gamma^* W a| / (|Gamma|_W |a|_W)``: the L^2 orthogonality defect."""
        if not self.Gamma.shape[1]:
            return 0.0
        ga = np.abs(self.Gamma.conj().T @ (self.W * a))
        gn = np.sqrt(np.real(np.sum(np.conj(self.Gamma) * self.W[:, None] * self.Gamma, axis=0)))
        an = math.sqrt(float(np.real(np.vdot(a, self.W * a))))
        return float(np.max(ga / np.maximum(gn * an, 1e-300)))


def _assemble_grid(o: _GridOps, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = o.grid
    U = g.U
    ns, M = U.shape[:2]
    d, w = _stencil(ns, g.ds)
    Y0 = _L(U, g)
    m = U.shape[-1]
    eye = np.eye(m)
    Pavg = 0
    for q, off in enumerate(_OFFSETS):
        Uj = _shifted(U, off)
        Pavg = Pavg + w[:, q, None, None, None] * (eye - Uj[..., :, None] * np.conj(Uj[..., None, :]))
    G = np.einsum("...an,...ab->...nb", np.conj(o.Fhat), Pavg)
    kk, qq = np.meshgrid(np.arange(ns - 1), np.arange(M), indexing="ij")
    rows_all, cols_all, vals_all = [], [], []
    nb = np.arange(n)
    for q, off in enumerate(_OFFSETS):
        valid = (w[:, q] != 0) | (d[:, q] != 0)
        Fl_all = _shifted(o.F, off)
        Uj = _shifted(U, off)
        gam = np.sum(np.conj(Uj) * Y0, axis=-1)
        FhF = np.einsum("...an,...ab->...nb", np.conj(o.Fhat), Fl_all)
        lk = np.clip(kk + off, 0, ns - 1)
        for r, cr in zip(range(-3, 4), _D6):
            kap = 0.5j * w[:, q] * cr / g.dth
            if r == 0:
                kap = kap + 0.5 * d[:, q]
            Fl = np.roll(Fl_all, -r, axis=1)
            blk = kap[:, None, None, None] * np.einsum("...nb,...bm->...nm", G, Fl)
            if r == 0:
                blk = blk - (w[:, q, None] * gam)[..., None, None] * FhF
            blk = blk[valid]
            lq = (qq + r) % M
            row = o.off_e + ((kk * M + qq)[..., None, None] * n + nb[:, None])[valid]
            col = o.off_x + ((lk * M + lq)[..., None, None] * n + nb[None, :])[valid]
            rows_all.append(np.broadcast_to(row, blk.shape).ravel())
            cols_all.append(np.broadcast_to(col, blk.shape).ravel())
            vals_all.append(blk.ravel())
    return np.concatenate(rows_all), np.concatenate(cols_all), np.concatenate(vals_all)


def build_problem(gp: GluingParameter, spec: GridSpec | None = None, surface: GluedSurface | None = None) -> DiscreteProblem:
    surface = surface or build_metric_and_weight(gp, spec)
    n = gp.base.n
    ops = {}
    ox = oe = 0
    for i, g in surface.grids.items():
        F = tangent_frame(g.U)
        Fhat = tangent_frame(normalize(_interp(g.U, g.ds)))
        W = np.exp(2 * g.sigma) * g.node_weights
        o = _GridOps(g, F, Fhat, W, ox, oe)
        ops[i] = o
        ox += o.nx
        oe += o.ne
    rows, cols, vals = [], [], []
    for o in ops.values():
        r, c, v = _assemble_grid(o, n)
        rows.append(r)
        cols.append(c)
        vals.append(v)
    A = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(oe, ox))
    W = np.concatenate([np.repeat(o.W.ravel(), n) for o in ops.values()])
    tuples, ksv = matched_kernel(gp.base)
    cols_g = []
    for i, o in ops.items():
        cols_g.append(_push_kernel(gp, o.grid, o.F, tuples).reshape(-1, o.nx))
    Gamma = np.concatenate(cols_g, axis=1).T if cols_g else np.zeros((ox, 0))
    K = (A @ sparse.diags(1.0 / W) @ A.conj().T).tocsc()
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise SolverError(f"factorisation of A W^-1 A^* failed: {exc}") from exc
    B = A @ Gamma
    if Gamma.shape[1]:
        G = Gamma.conj().T @ (W[:, None] * Gamma)
        S = B.conj().T @ lu.solve(B) - G
        try:
            fac = sla.lu_factor(S)
        except (ValueError, sla.LinAlgError) as exc:
            raise SolverError(f"kernel constraint system is singular: {exc}") from exc
        solve_S = lambda r: sla.lu_solve(fac, r)  # noqa: E731
    else:
        solve_S = None
    return DiscreteProblem(surface, ops, A, W, Gamma, ksv, lu, B, solve_S)


# --------------------------------------------------------------------------
# Picard iteration
# --------------------------------------------------------------------------

@dataclass
class CorrectionState:
    """Result of :func:`picard_correct`; sections are stored as frame coordinates."""

    xi: np.ndarray
    eta: np.ndarray
    alpha: np.ndarray
    residuals: list[float]
    contractions: list[float]
    iterations: int
    norms: dict
    problem: DiscreteProblem | None = field(default=None, repr=False)
    runtime: float = 0.0

    @property
    def terminal_contraction(self) -> float:
        return max(self.contractions[-3:]) if self.contractions else 0.0

    def corrected_lift(self) -> dict[int, np.ndarray]:
        """``exp_{u_upsilon}(xi)`` at the grid nodes."""
        xi = self.problem.fields(self.xi)
        return {i: fs_exp(self.problem.ops[i].grid.U, xi[i]) for i in xi}

    def to_json(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual_history": self.residuals,
            "contraction_factors": self.contractions,
            "terminal_contraction": self.terminal_contraction,
            "norms": self.norms,
            "runtime_s": self.runtime,
        }


def node_dbar(surface: GluedSurface, lifts: dict[int, np.ndarray]) -> DiscreteSection:
    """``(I - E E^*) d_zetabar E`` at nodes with fourth-order differences in ``s``.

    A second discretisation, independent of the midpoint stencil that the
    solver inverts; it re-evaluates the corrected map as a map.
    """
    data = {}
    for i, E in lifts.items():
        g = surface.grids[i]
        Es = np.empty_like(E)
        Es[2:-2] = (-E[4:] + 8 * E[3:-1] - 8 * E[1:-3] + E[:-4]) / (12 * g.ds)
        Es[:2] = np.gradient(E[:4], g.ds, axis=0, edge_order=2)[:2]
        Es[-2:] = np.gradient(E[-4:], g.ds, axis=0, edge_order=2)[-2:]
        db = 0.5 * (Es + 1j * d_theta(E, g.dth))
        data[i] = hproj(E, db)
    return DiscreteSection("form_01", "node", data)


def _interior(surface: GluedSurface, sec: DiscreteSection, margin: float = 1.0) -> DiscreteSection:
    """Zero the rings within ``margin`` of the truncation ends of each cylinder."""
    out = {}
    for i, d in sec.data.items():
        g = surface.grids[i]
        s = g.s if sec.location == "node" else 0.5 * (g.s[1:] + g.s[:-1])
        keep = (s > g.s[0] + margin) & (s < g.s[-1] - margin)
        out[i] = d * keep[:, None, None]
    return DiscreteSection(sec.kind, sec.location, out)


def picard_correct(gp: GluingParameter, p: float = 3.0, tol: float = 1e-8, max_iter: int = 50,
                   spec: GridSpec | None = None, problem: DiscreteProblem | None = None,
                   max_contraction: float = 0.9) -> CorrectionState:
    """Solve ``F_h(P eta) = 0`` by ``eta <- alpha - N(P eta)``, ``alpha = -F_h(0)``.

    Stops when ``||eta_{k+1} - eta_k||_{upsilon,p} <= tol ||alpha||_{upsilon,p}``.
    Raises :class:`ContractionError` when a step fails to contract by
    ``max_contraction`` while the differences are above rounding level.
    """
    t0 = time.perf_counter()
    if gp.size == 0:
        z = np.zeros(0, dtype=complex)
        return CorrectionState(z, z, z, [], [], 0, {"alpha": 0.0, "eta": 0.0, "xi_p1": 0.0, "xi_c0": 0.0,
                                                      "dbar_initial": 0.0, "dbar_final": 0.0, "true_ratio": 0.0}, None, 0.0)
    prob = problem or build_problem(gp, spec)
    zero = np.zeros(prob.A.shape[1], dtype=complex)
    f0 = prob.dbar(zero)
    alpha = -f0
    a_norm = prob.form_norm(alpha, p)
    eta = alpha.copy()
    residuals: list[float] = []
    factors: list[float] = []
    floor = 1e-13 * max(a_norm, 1e-300)
    it = 0
    xi = prob.solve(eta)
    while True:
        it += 1
        new = alpha - prob.N(xi, f0)
        diff = prob.form_norm(new - eta, p)
        residuals.append(diff)
        if len(residuals) > 1 and residuals[-2] > floor * 1e3:
            q = diff / residuals[-2]
            factors.append(q)
            if q > max_contraction and diff > floor * 1e3:
                raise ContractionError(f"Picard step {it} expanded differences by {q:.3f}", q)
        eta = new
        xi = prob.solve(eta)
        if diff <= tol * a_norm or diff <= floor:
            break
        if it >= max_iter:
            raise ContractionError(f"no convergence in {max_iter} Picard steps (last factor "
                                   f"{factors[-1] if factors else float('nan'):.3f})", factors[-1] if factors else float("nan"))
    f_final = prob.dbar(xi)
    lifts0 = {i: o.grid.U for i, o in prob.ops.items()}
    xi_amb = prob.fields(xi)
    lifts1 = {i: fs_exp(prob.ops[i].grid.U, xi_amb[i]) for i in xi_amb}
    nd0 = modified_norm(prob.surface, _interior(prob.surface, node_dbar(prob.surface, lifts0)), p)
    nd1 = modified_norm(prob.surface, _interior(prob.surface, node_dbar(prob.surface, lifts1)), p)
    dist = max(float(np.max(fs_distance(lifts0[i], lifts1[i]))) for i in lifts0)
    norms = {
        "alpha": a_norm,
        "eta": prob.form_norm(eta, p),
        "xi_p1": prob.vector_norm(xi, p),
        "xi_c0": dist,
        "dbar_initial": prob.form_norm(f0, p),
        "dbar_final": prob.form_norm(f_final, p),
        "dbar_node_initial": nd0,
        "dbar_node_final": nd1,
        "true_ratio": nd1 / nd0 if nd0 > 0 else 0.0,
        "kernel_defect": prob.kernel_defect(xi),
    }
    return CorrectionState(xi, eta, alpha, residuals, factors, it, norms, prob, time.perf_counter() - t0)


def quadratic_term_check(gp: GluingParameter, p: float = 3.0, amplitude: float = 1e-2, pairs: int = 4, seed: int = 0,
                         spec: GridSpec | None = None, problem: DiscreteProblem | None = None) -> dict:
    """Empirical constant of ``||N xi_1 - N xi_2|| <= C (||xi_1|| + ||xi_2||) ||xi_1 - xi_2||``.

    Also reports the amplitude-halving ratio ``||N xi|| / ||N(xi/2)||``
    (4 for a quadratic remainder).
    """
    prob = problem or build_problem(gp, spec)
    secs = random_sections(prob.surface, 2 * pairs, seed)
    zero = np.zeros(prob.A.shape[1], dtype=complex)
    f0 = prob.dbar(zero)
    def coords(sec):
        a = prob.coords(sec.data)
        return a / math.sqrt(float(np.max(np.abs(a)) ** 2))
    consts = []
    halving = []
    for k in range(pairs):
        x1 = amplitude * coords(secs[2 * k])
        x2 = 0.5 * amplitude * coords(secs[2 * k + 1])
        n1 = prob.N(x1, f0)
        n2 = prob.N(x2, f0)
        lhs = prob.form_norm(n1 - n2, p)
        v1, v2, v12 = (prob.vector_norm(x, p) for x in (x1, x2, x1 - x2))
        consts.append(lhs / ((v1 + v2) * v12))
        nh = prob.N(0.5 * x1, f0)
        halving.append(prob.form_norm(n1, p) / prob.form_norm(nh, p))
    same = prob.form_norm(prob.N(x1, f0) - prob.N(x1, f0), p)
    return {"C": max(consts), "constants": consts, "halving_ratios": halving, "identical_pair": same,
            "amplitude": amplitude, "size": gp.size, "p": p}
