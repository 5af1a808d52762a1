"""Holomorphic vector fields along rational maps.

For ``u = [P]`` of degree ``d`` into ``CP^n`` the Euler sequence identifies
the kernel of the linearised operator ``D_u`` with ``(n+1)``-tuples ``Q`` of
polynomials of degree at most ``d`` modulo ``Q = P``.  The tuple ``Q`` gives
the vector field ``xi = (I - U U^*) Q/|P|`` at the lift ``U = P/|P|``.  In the
same model ``D_u xi = (I - U U^*) dbar xi - (U^* dbar U) xi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bubbles import BubbleError, BubbleMap, RationalMap
from .gluing import fd_wirtinger
from .projective import hproj, tangent_frame

__all__ = [
    "KernelBasis",
    "field_north",
    "field_sigma",
    "kernel_basis",
    "kernel_dimension",
    "index_half",
    "linearized_dbar",
    "check_kernel",
    "infinitesimal_generators",
    "check_regularity",
]

RANK_TOL = 1e-8
_SAMPLE_R = (0.35, 0.8, 1.3, 2.5)


def _horner(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    return RationalMap._horner(c, z)


def field_north(u: RationalMap, Q: np.ndarray, z) -> tuple[np.ndarray, np.ndarray]:
    """``(U, xi)`` at north coordinates ``z`` for the tuple ``Q`` (shape like ``u.coeffs``)."""
    P = u.P(z)
    nrm = np.linalg.norm(P, axis=-1, keepdims=True)
    U = P / nrm
    return U, hproj(U, _horner(Q, z) / nrm)


def field_sigma(u: RationalMap, Q: np.ndarray, s) -> tuple[np.ndarray, np.ndarray]:
    """Same in the chart ``sigma = 1/z``, through reversed coefficients."""
    P = u.Psig(s)
    nrm = np.linalg.norm(P, axis=-1, keepdims=True)
    U = P / nrm
    return U, hproj(U, _horner(Q[:, ::-1], s) / nrm)


@dataclass(frozen=True)
class KernelBasis:
    """Tuples ``Q_k`` spanning ``ker D_u``, shape ``(dim, n+1, d+1)``."""

    map: RationalMap
    tuples: np.ndarray
    singular_values: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.tuples.shape[0])

    def values(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Lift and all basis fields at north coordinates: ``(U, xi[..., k, :])``."""
        z = np.asarray(z, dtype=complex)
        U = None
        out = []
        for Q in self.tuples:
            U, xi = field_north(self.map, Q, z)
            out.append(xi)
        return U, np.stack(out, axis=-2)

    def values_at_infinity(self) -> tuple[np.ndarray, np.ndarray]:
        U = None
        out = []
        for Q in self.tuples:
            U, xi = field_sigma(self.map, Q, np.zeros(1))
            out.append(xi[0])
        return U[0], np.stack(out)


def _sample_points() -> np.ndarray:
    th = 2 * np.pi * np.arange(13) / 13 + 0.1
    return np.concatenate([r * np.exp(1j * (th + 0.37 * k)) for k, r in enumerate(_SAMPLE_R)])


def kernel_basis(u: RationalMap, n: int | None = None) -> KernelBasis:
    """Euler-sequence basis of the holomorphic fields along ``u``.

    All monomial tuples ``e_a z^k`` are evaluated as fields at sample points;
    the numerical rank (singular values above ``1e-8`` of the largest) is the
    kernel dimension and the leading right singular vectors give the basis.
    """
    if n is not None and n != u.n:
        raise BubbleError(f"map targets CP^{u.n}, not CP^{n}")
    if u.degree > 0 and u.common_root_defect() < 1e-9:
        raise BubbleError("degenerate map: components share a root")
    m, dp1 = u.coeffs.shape
    z = _sample_points()
    cols = []
    for a in range(m):
        for k in range(dp1):
            Q = np.zeros((m, dp1), dtype=complex)
            Q[a, k] = 1.0
            _, xi = field_north(u, Q, z)
            cols.append(xi.ravel())
    A = np.array(cols).T
    _, sv, Vh = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(sv > RANK_TOL * sv[0])) if sv[0] > 0 else 0
    tuples = Vh[:rank].reshape(rank, m, dp1)
    return KernelBasis(u, tuples, sv)


def kernel_dimension(u: RationalMap) -> int:
    return kernel_basis(u).dim


def index_half(n: int, d: int, genus: int = 0) -> int:
    """Half the real index: ``<c_1, lambda> - n(g - 1) = (n+1) d + n`` for genus 0."""
    return (n + 1) * d - n * (genus - 1)


def linearized_dbar(U_of, xi_of, z, h: float = 1e-4) -> np.ndarray:
    """``D_u xi = (I - U U^*) dbar xi - (U^* dbar U) xi`` by finite differences.

    ``U_of`` and ``xi_of`` are callables on complex arrays returning the lift
    and the field in the same gauge.
    """
    z = np.asarray(z, dtype=complex)
    _, dbU = fd_wirtinger(U_of, z, h)
    _, dbX = fd_wirtinger(xi_of, z, h)
    U = U_of(z)
    xi = xi_of(z)
    a = np.sum(np.conj(U) * dbU, axis=-1, keepdims=True)
    return hproj(U, dbX) - a * xi


def check_kernel(kb: KernelBasis, samples: int = 200, seed: int = 0, h: float = 1e-4) -> float:
    """Largest ``|D_u xi| / max(1, |xi|)`` over basis elements and random points in both charts."""
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(np.log(0.05), 0.0, samples))
    z = r * np.exp(2j * np.pi * rng.uniform(size=samples))
    worst = 0.0
    u = kb.map
    for Q in kb.tuples:
        for chart in ("north", "sigma"):
            fn = field_north if chart == "north" else field_sigma
            def U_of(w, Q=Q, fn=fn):
                return fn(u, Q, w)[0]
            def X_of(w, Q=Q, fn=fn):
                return fn(u, Q, w)[1]
            D = linearized_dbar(U_of, X_of, z, h)
            scale = np.maximum(1.0, np.linalg.norm(X_of(z), axis=-1))
            worst = max(worst, float(np.max(np.linalg.norm(D, axis=-1) / scale)))
    return worst


def infinitesimal_generators(u: RationalMap) -> list[np.ndarray]:
    """Tuples for ``-u'``, ``-i u'``, ``-z u'`` and ``-i z u'``.

    These generate translations, dilations and rotations of the chart.  Each
    tuple has the shape of ``u.coeffs``; its field vanishes at infinity.
    """
    m, dp1 = u.coeffs.shape
    dP = np.zeros((m, dp1), dtype=complex)
    dP[:, : dp1 - 1] = u.dcoeffs[:, : dp1 - 1] if dp1 > 1 else 0
    zdP = np.zeros((m, dp1), dtype=complex)
    if dp1 > 1:
        zdP[:, 1:] = u.dcoeffs
    return [-dP, -1j * dP, -zdP, -1j * zdP]


def check_regularity(b: BubbleMap) -> dict:
    """Evaluation at infinity from each component's kernel onto the tangent space there.

    Cokernels vanish in genus 0 (``u^* T CP^n`` is a sum of positive line
    bundles), so regularity reduces to this rank condition.
    """
    report = {"components": {}, "regular": True}
    for i, u in b.maps:
        kb = kernel_basis(u)
        U, vals = kb.values_at_infinity()
        F = tangent_frame(U)
        M = np.conj(F.T) @ vals.T
        sv = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
        rank = int(np.sum(sv > RANK_TOL * max(1.0, sv[0] if sv.size else 1.0)))
        ok = rank == u.n
        report["components"][i] = {"kernel_dim": kb.dim, "rank_at_infinity": rank, "singular_values": sv.tolist(), "surjective": ok}
        report["regular"] &= ok
    return report
