"""Charts, translations and cutoff functions on the Riemann sphere.

Conventions
-----------
``q_N(z) = (2z, 1-|z|^2) / (1+|z|^2)`` sends 0 to the north pole (0,0,1).
``q_S(w) = (2w, |w|^2-1) / (1+|w|^2)`` sends 0 to the south pole (0,0,-1),
which plays the role of infinity.  The same point has south coordinate
``w = 1/conj(z)``; the transition is antiholomorphic, so wherever a
holomorphic coordinate near infinity is needed we use ``sigma = 1/z``
(the conjugate of the south coordinate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import integrate

__all__ = [
    "SpherePoint",
    "q_N",
    "q_S",
    "q_N_inv",
    "q_S_inv",
    "embed",
    "phi",
    "beta",
    "beta_deriv",
    "beta_deriv2",
    "beta_r",
    "beta_r_deriv",
    "CutoffSpec",
    "eval_cutoff",
    "eval_cutoff_deriv",
    "measured_c_beta",
    "C_BETA",
    "QuadratureSpec",
    "radial_rule",
    "ms_cutoff_profile",
    "ms_cutoff_energy",
    "ms_cutoff_energy_exact",
]

Chart = Literal["north", "south"]


def _stereo(z, sign: float):
    """``(2z, sign (1 - |z|^2)) / (1 + |z|^2)`` without overflow for large ``|z|``."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    big = r > 1
    rs = np.where(big, r, 1.0)
    inv2 = np.where(big, 1.0 / rs / rs, 0.0)
    # |z| <= 1: direct formula; |z| > 1: divide through by |z|^2
    a = np.minimum(r, 1.0) ** 2
    xy = np.where(big, 2 * z * inv2 / (1.0 + inv2), 2 * z / (1.0 + a))
    h = np.where(big, (inv2 - 1.0) / (inv2 + 1.0), (1.0 - a) / (1.0 + a))
    return np.stack([xy.real, xy.imag, sign * h], axis=-1)


def q_N(z):
    """North stereographic chart, returns an array of shape ``(..., 3)``."""
    return _stereo(z, 1.0)


def q_S(w):
    """South stereographic chart."""
    return _stereo(w, -1.0)


def q_N_inv(X):
    X = np.asarray(X, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (X[..., 0] + 1j * X[..., 1]) / (1.0 + X[..., 2])


def q_S_inv(X):
    X = np.asarray(X, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (X[..., 0] + 1j * X[..., 1]) / (1.0 - X[..., 2])


@dataclass(frozen=True)
class SpherePoint:
    """A point of the sphere given by one chart coordinate.

    ``coordinate`` is the preimage under ``q_N`` or ``q_S``.  Infinity is the
    south-chart point 0.
    """

    chart: Chart
    coordinate: complex

    def __post_init__(self) -> None:
        if self.chart not in ("north", "south"):
            raise ValueError(f"unknown chart {self.chart!r}")
        c = complex(self.coordinate)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise ValueError("chart coordinates must be finite; use the other chart")
        object.__setattr__(self, "coordinate", c)

    @classmethod
    def north(cls, z: complex) -> "SpherePoint":
        return cls("north", z)

    @classmethod
    def south(cls, w: complex) -> "SpherePoint":
        return cls("south", w)

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls("south", 0.0)

    @property
    def is_infinity(self) -> bool:
        return self.chart == "south" and self.coordinate == 0

    def north_coordinate(self) -> complex:
        """The ``q_N`` preimage; raises at infinity."""
        if self.chart == "north":
            return self.coordinate
        if self.coordinate == 0:
            raise ValueError("pole: infinity has no north-chart coordinate")
        return 1.0 / self.coordinate.conjugate()

    def south_coordinate(self) -> complex:
        if self.chart == "south":
            return self.coordinate
        if self.coordinate == 0:
            raise ValueError("pole: the origin has no south-chart coordinate")
        return 1.0 / self.coordinate.conjugate()

    def to_chart(self, chart: Chart) -> "SpherePoint":
        if chart == self.chart:
            return self
        if chart == "north":
            return SpherePoint("north", self.north_coordinate())
        return SpherePoint("south", self.south_coordinate())

    def preferred(self) -> "SpherePoint":
        """North chart unless the point is far out (``|z| > 2``)."""
        if self.chart == "north":
            return self if abs(self.coordinate) <= 2 else self.to_chart("south")
        return self if abs(self.coordinate) < 0.5 else self.to_chart("north")

    def embed(self) -> np.ndarray:
        return embed(self)


def embed(p: SpherePoint) -> np.ndarray:
    """The point in ``R^3``."""
    return q_N(p.coordinate) if p.chart == "north" else q_S(p.coordinate)


def phi(x: complex, z: SpherePoint | complex) -> complex:
    """Translation chart centred at ``x``: ``z - x`` in north coordinates."""
    if isinstance(z, SpherePoint):
        if z.is_infinity:
            raise ValueError("pole: the translation chart is undefined at infinity")
        z = z.north_coordinate()
    return complex(z) - complex(x)


# --------------------------------------------------------------------------
# the smooth step
# --------------------------------------------------------------------------

def _f(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def _f1(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos]) / s[pos] ** 2
    return out


def _f2(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    sp = s[pos]
    out[pos] = np.exp(-1.0 / sp) * (1.0 / sp**4 - 2.0 / sp**3)
    return out


def beta(t):
    """Smooth nondecreasing step: 0 for ``t <= 1``, 1 for ``t >= 2``."""
    t = np.asarray(t, dtype=float)
    a, b = _f(t - 1.0), _f(2.0 - t)
    out = a / (a + b)
    return out if out.ndim else float(out)


def beta_deriv(t):
    t = np.asarray(t, dtype=float)
    a, b = _f(t - 1.0), _f(2.0 - t)
    a1, b1 = _f1(t - 1.0), _f1(2.0 - t)
    out = (a1 * b + a * b1) / (a + b) ** 2
    return out if out.ndim else float(out)


def beta_deriv2(t):
    t = np.asarray(t, dtype=float)
    a, b = _f(t - 1.0), _f(2.0 - t)
    a1, b1 = _f1(t - 1.0), _f1(2.0 - t)
    a2, b2 = _f2(t - 1.0), _f2(2.0 - t)
    S = a + b
    N = a1 * b + a * b1
    N1 = a2 * b - a * b2
    S1 = a1 - b1
    out = N1 / S**2 - 2.0 * N * S1 / S**3
    return out if out.ndim else float(out)


def beta_r(r: float, t):
    """``beta(r^{-1/2} t)``; switches on over ``[r^{1/2}, 2 r^{1/2}]``."""
    return beta(np.asarray(t, dtype=float) / math.sqrt(r))


def beta_r_deriv(r: float, t):
    s = math.sqrt(r)
    out = beta_deriv(np.asarray(t, dtype=float) / s) / s
    return out


@lru_cache(maxsize=1)
def measured_c_beta(samples: int = 200_001) -> float:
    """``max(sup|beta'|, sup|beta''|)`` by dense sampling on ``[1, 2]``.

    With this constant ``|beta_r'| <= C r^{-1/2}`` and ``|beta_r''| <= C r^{-1}``.
    """
    t = np.linspace(1.0, 2.0, samples)
    return float(max(np.max(np.abs(beta_deriv(t))), np.max(np.abs(beta_deriv2(t)))))


C_BETA = measured_c_beta()


# --------------------------------------------------------------------------
# cutoff specs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffSpec:
    kind: Literal["beta", "beta_r", "beta_ms"]
    r: float | None = None
    eps: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "beta_r" and (self.r is None or self.r <= 0):
            raise ValueError("beta_r needs r > 0")
        if self.kind == "beta_ms" and (self.eps is None or self.eps <= 0):
            raise ValueError("beta_ms needs eps > 0")
        if self.kind not in ("beta", "beta_r", "beta_ms"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")

    def support(self) -> tuple[float, float]:
        """Interval outside which the derivative vanishes identically."""
        if self.kind == "beta":
            return (1.0, 2.0)
        if self.kind == "beta_r":
            s = math.sqrt(self.r)
            return (s, 2 * s)
        return (math.exp(-1.0 / self.eps), 1.0)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("cutoffs are evaluated at nonnegative arguments")
    return t


def eval_cutoff(spec: CutoffSpec, t):
    t = _check_t(t)
    if spec.kind == "beta":
        return beta(t)
    if spec.kind == "beta_r":
        return beta_r(spec.r, t)
    with np.errstate(divide="ignore"):
        tau = np.log(t)
    out = ms_cutoff_profile(spec.eps, tau)[0]
    return out if np.ndim(out) else float(out)


def eval_cutoff_deriv(spec: CutoffSpec, t):
    t = _check_t(t)
    if spec.kind == "beta":
        return beta_deriv(t)
    if spec.kind == "beta_r":
        return beta_r_deriv(spec.r, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.log(t)
        dtau = ms_cutoff_profile(spec.eps, tau)[1]
        out = np.where(t > 0, dtau / np.where(t > 0, t, 1.0), 0.0)
    return out if np.ndim(out) else float(out)


# --------------------------------------------------------------------------
# the logarithmic cutoff and its energy
# --------------------------------------------------------------------------

MS_SMOOTHING = 0.01  # corner width in log-radius units


@lru_cache(maxsize=1)
def _step_moments() -> tuple[float, float]:
    m1 = integrate.quad(lambda x: beta(1.0 + x), 0.0, 1.0, epsabs=1e-14)[0]
    m2 = integrate.quad(lambda x: beta(1.0 + x) ** 2, 0.0, 1.0, epsabs=1e-14)[0]
    return m1, m2


def _ms_slope_scale(eps: float) -> tuple[float, float, float]:
    L = 1.0 / eps
    delta = min(MS_SMOOTHING, L / 4)
    k = 1.0 / (L - delta)
    return L, delta, k


def ms_cutoff_profile(eps: float, tau):
    """Value and ``d/dtau`` of the logarithmic cutoff at ``tau = ln r``.

    The profile is the clipped ramp ``1 + eps*ln r`` with both corners rounded
    off over ``MS_SMOOTHING`` in ``ln r``; the slope is raised slightly so the
    ramp still starts at ``r = e^{-1/eps}`` and ends at ``r = 1``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    tau = np.asarray(tau, dtype=float)
    L, delta, k = _ms_slope_scale(eps)
    lo = beta(1.0 + (tau + L) / delta)
    hi = beta(1.0 - tau / delta)
    slope = k * lo * hi
    # value: integrate the slope; corners through a cumulative table of beta
    xs = np.linspace(0.0, 1.0, 2001)
    cum = integrate.cumulative_trapezoid(beta(1.0 + xs), xs, initial=0.0)
    x_lo = np.clip((tau + L) / delta, 0.0, 1.0)
    x_hi = np.clip(-tau / delta, 0.0, 1.0)
    m1 = cum[-1]
    below = delta * np.interp(x_lo, xs, cum) + np.clip(tau - (-L + delta), 0.0, L - 2 * delta)
    # inside the upper corner the slope is beta(1 - tau/delta)
    upper_missing = delta * (m1 - np.interp(x_hi, xs, cum))
    value = k * (below + np.where(tau > -delta, upper_missing, 0.0))
    value = np.where(tau >= 0, 1.0, np.where(tau <= -L, 0.0, np.clip(value, 0.0, 1.0)))
    return value, slope


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor rule in ``(ln r, theta)``."""

    radial_nodes: int = 512
    angular_nodes: int = 256
    scheme: Literal["trapezoid", "gauss"] = "trapezoid"

    def __post_init__(self) -> None:
        if self.radial_nodes < 2 or self.angular_nodes < 1:
            raise ValueError("quadrature needs at least 2 radial and 1 angular node")
        if self.scheme not in ("trapezoid", "gauss"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def to_json(self) -> dict:
        return {"radial_nodes": self.radial_nodes, "angular_nodes": self.angular_nodes, "scheme": self.scheme}


def radial_rule(spec: QuadratureSpec, breaks: list[float]) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights in ``ln r`` over ``[breaks[0], breaks[-1]]``.

    The trapezoid scheme ignores interior breaks; the Gauss scheme uses one
    Gauss-Legendre panel per break interval, nodes shared in proportion to
    panel length (at least 8 per panel).
    """
    a, b = breaks[0], breaks[-1]
    if spec.scheme == "trapezoid":
        x = np.linspace(a, b, spec.radial_nodes)
        w = np.full_like(x, (b - a) / (spec.radial_nodes - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return x, w
    lengths = np.diff(breaks)
    counts = np.maximum(8, np.round(spec.radial_nodes * lengths / (b - a)).astype(int))
    xs, ws = [], []
    for (lo, hi), m in zip(zip(breaks[:-1], breaks[1:]), counts):
        g, gw = np.polynomial.legendre.leggauss(int(m))
        xs.append(0.5 * (hi - lo) * g + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * gw)
    return np.concatenate(xs), np.concatenate(ws)


def ms_cutoff_energy(eps: float, quadrature: QuadratureSpec | None = None) -> float:
    """``int_C |d beta_eps/dr|^2 r dr dtheta`` by quadrature in ``(ln r, theta)``.

    In these variables ``|d/dr|^2 r dr`` becomes ``|d/dtau|^2 dtau``, so the
    integrand is evaluated without the overflowing factors ``e^{+-2 tau}``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    quadrature = quadrature or QuadratureSpec()
    L, delta, _ = _ms_slope_scale(eps)
    tau, w_tau = radial_rule(quadrature, [-L, -L + delta, -delta, 0.0])
    theta_w = 2 * math.pi / quadrature.angular_nodes
    slope = ms_cutoff_profile(eps, tau)[1]
    # the integrand does not depend on theta; the angular sum is kept for the tensor rule
    return float(np.sum(w_tau * slope**2) * theta_w * quadrature.angular_nodes)


def ms_cutoff_energy_exact(eps: float) -> float:
    """Closed form of the same integral, the oracle for the quadrature."""
    L, delta, k = _ms_slope_scale(eps)
    _, m2 = _step_moments()
    return 2 * math.pi * k**2 * ((L - 2 * delta) + 2 * delta * m2)
