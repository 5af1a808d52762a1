"""Fubini-Study geometry of CP^n in the unit-sphere model.

A point is a unit vector ``U`` in ``C^{n+1}`` up to phase.  Tangent vectors
at ``U`` are vectors ``xi`` with ``U^* xi = 0``; the metric is the Euclidean
one on such horizontal vectors, so a line has area ``pi`` and diameter
``pi/2``.  All functions broadcast over leading axes; the last axis is the
homogeneous coordinate.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "normalize",
    "phase_fix",
    "fs_distance",
    "hproj",
    "tangent_frame",
    "fs_exp",
    "transport",
    "transport_inverse",
    "align_phase",
]

_TINY = 1e-300


def _h(a, b):
    """Hermitian pairing ``a^* b`` over the last axis, keeping a trailing axis."""
    return np.sum(np.conj(a) * b, axis=-1, keepdims=True)


def normalize(P) -> np.ndarray:
    """Unit representative (phase untouched)."""
    P = np.asarray(P, dtype=complex)
    nrm = np.linalg.norm(P, axis=-1, keepdims=True)
    if np.any(nrm == 0):
        raise ValueError("the zero vector is not a point of projective space")
    return P / nrm


def phase_fix(P) -> np.ndarray:
    """Unit representative whose first nonzero entry is positive real."""
    U = normalize(P)
    mag = np.abs(U)
    idx = np.argmax(mag > 1e-12 * np.max(mag, axis=-1, keepdims=True), axis=-1)
    lead = np.take_along_axis(U, idx[..., None], axis=-1)
    return U * (np.abs(lead) / lead)


def fs_distance(p, q) -> np.ndarray:
    """Geodesic distance ``arccos |<p, q>|`` between unit representatives.

    Uses ``arcsin`` of the orthogonal part near zero to keep precision for
    nearby points.
    """
    p = normalize(p)
    q = normalize(q)
    c = np.abs(_h(p, q))[..., 0]
    perp = np.linalg.norm(q - p * _h(p, q), axis=-1)
    out = np.where(c > 0.7, np.arcsin(np.clip(perp, 0.0, 1.0)), np.arccos(np.clip(c, 0.0, 1.0)))
    return out if out.ndim else float(out)


def hproj(U, X) -> np.ndarray:
    """Horizontal projection ``(I - U U^*) X``."""
    return X - U * _h(U, X)


def tangent_frame(U) -> np.ndarray:
    """Orthonormal basis of ``U``'s Hermitian complement, shape ``(..., n+1, n)``."""
    U = np.asarray(U, dtype=complex)
    m = U.shape[-1]
    eye = np.broadcast_to(np.eye(m, dtype=complex), U.shape[:-1] + (m, m))
    M = np.concatenate([U[..., :, None], eye], axis=-1)
    Q, _ = np.linalg.qr(M)
    F = Q[..., :, 1:m]
    # one Gram-Schmidt sweep against U to remove rounding drift
    F = F - U[..., :, None] * np.sum(np.conj(U)[..., :, None] * F, axis=-2, keepdims=True)
    return F


def fs_exp(U, xi) -> np.ndarray:
    """Geodesic ``cos|xi| U + sin|xi| xi/|xi|`` (a horizontal lift)."""
    nrm = np.linalg.norm(xi, axis=-1, keepdims=True)
    safe = np.where(nrm > _TINY, nrm, 1.0)
    sinc = np.where(nrm > _TINY, np.sin(nrm) / safe, 1.0)
    return np.cos(nrm) * U + sinc * xi


def _geodesic_data(U, xi):
    nrm = np.linalg.norm(xi, axis=-1, keepdims=True)
    safe = np.where(nrm > _TINY, nrm, 1.0)
    xhat = np.where(nrm > _TINY, xi / safe, 0.0)
    gdot = -np.sin(nrm) * U + np.cos(nrm) * xhat
    return xhat, gdot


def transport(U, xi, Y) -> np.ndarray:
    """Parallel transport of ``Y`` (tangent at ``U``) to ``exp_U(xi)``.

    Along the geodesic the complex line spanned by its velocity turns while
    its complement is fixed, so the transport is complex linear.
    """
    xhat, gdot = _geodesic_data(U, xi)
    return Y + _h(xhat, Y) * (gdot - xhat)


def transport_inverse(U, xi, Z) -> np.ndarray:
    """Inverse of :func:`transport`: from ``exp_U(xi)`` back to ``U``."""
    xhat, gdot = _geodesic_data(U, xi)
    return Z + _h(gdot, Z) * (xhat - gdot)


def align_phase(U, ref) -> np.ndarray:
    """Multiply ``U`` by the phase making ``ref^* U`` real positive."""
    c = _h(ref, U)
    mag = np.abs(c)
    return U * np.where(mag > _TINY, np.conj(c) / np.where(mag > _TINY, mag, 1.0), 1.0)
