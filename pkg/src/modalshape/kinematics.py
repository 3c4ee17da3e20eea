"""Planar modal kinematics of a single continuum segment.

Curvature along the backbone is interpolated between two boundary curves
(the shape generators) ``kappa_a(s) = a . eta(s)`` and ``kappa_b(s) = b . eta(s)``
with the first-order basis ``eta(s) = [1, s]``.  The interpolation variable ``t``
selects one curve of the homotopy.  Units are mm and rad throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# |t - 0.5| beyond this is reported as an extrapolated homotopy
EXTRAPOLATION_LIMIT = 1.5


@dataclass(frozen=True)
class SegmentGeometry:
    L: float = 60.0
    theta0: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"segment length must be positive, got {self.L}")
        if self.theta0 != 0.0:
            raise ValueError("only theta0 = 0 is supported")


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre rule: ``n_nodes`` per panel, ``n_panels`` panels."""

    n_nodes: int = 32
    n_panels: int = 1

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 8:
            raise ValueError(f"need at least 8 quadrature nodes, got {self.n_nodes}")
        if int(self.n_panels) != self.n_panels or self.n_panels < 1:
            raise ValueError(f"need at least one panel, got {self.n_panels}")

    def rule(self, upper: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights on ``[0, upper]``."""
        x, wt = _unit_rule(self.n_nodes, self.n_panels)
        return x * upper, wt * upper


@lru_cache(maxsize=16)
def _unit_rule(n_nodes: int, n_panels: int) -> tuple[np.ndarray, np.ndarray]:
    x, wt = np.polynomial.legendre.leggauss(n_nodes)
    h = 1.0 / n_panels
    left = np.arange(n_panels) * h
    nodes = (left[:, None] + 0.5 * h * (x + 1.0)[None, :]).ravel()
    weights = np.tile(0.5 * h * wt, n_panels)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclass(frozen=True)
class ShapeParams:
    """Parameter vector ``w = [l, a1, a2, b1, b2]``.

    ``l`` is the sensor arc-length (mm); ``a`` and ``b`` are the modal factors
    (1/mm, 1/mm^2) of the two boundary curvature functions.
    """

    l: float
    a: tuple[float, float]
    b: tuple[float, float]

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        if len(a) != 2 or len(b) != 2:
            raise ValueError("modal factor vectors must have exactly 2 entries")
        object.__setattr__(self, "l", float(self.l))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError(f"non-finite shape parameters: {self}")

    @classmethod
    def from_array(cls, w) -> "ShapeParams":
        w = np.asarray(w, dtype=float)
        if w.shape != (5,):
            raise ValueError(f"expected a 5-vector, got shape {w.shape}")
        return cls(w[0], (w[1], w[2]), (w[3], w[4]))

    def as_array(self) -> np.ndarray:
        return np.array([self.l, *self.a, *self.b])

    def check(self, g: SegmentGeometry) -> None:
        if not 0.0 <= self.l <= g.L:
            raise ValueError(f"sensor location l={self.l} outside [0, {g.L}]")


@dataclass(frozen=True)
class PlanarPose:
    px: float
    pz: float
    theta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.pz, self.theta])

    @classmethod
    def from_array(cls, y) -> "PlanarPose":
        px, pz, theta = (float(v) for v in y)
        return cls(px, pz, theta)


def nominal_params(L: float = 60.0) -> ShapeParams:
    """Nominal parameters used for the simulation studies."""
    return ShapeParams(L, (-0.05 / L, -0.01 / L), (-0.5 / L, -0.15 / L))


def eta(s):
    """Modal basis ``[1, s]``; for array ``s`` the result has shape (n, 2)."""
    if np.isscalar(s):
        return np.array([1.0, s])
    s = np.asarray(s, dtype=float)
    out = np.empty(s.shape + (2,))
    out[..., 0] = 1.0
    out[..., 1] = s
    return out


def nu(s):
    """Integrated basis ``[s, s^2 / 2]``."""
    if np.isscalar(s):
        return np.array([s, 0.5 * s * s])
    s = np.asarray(s, dtype=float)
    out = np.empty(s.shape + (2,))
    out[..., 0] = s
    out[..., 1] = 0.5 * s * s
    return out


def is_extrapolated(t: float) -> bool:
    return abs(t - 0.5) > EXTRAPOLATION_LIMIT


def _check_arc(s, g: SegmentGeometry | None, name: str = "s") -> None:
    upper = np.inf if g is None else g.L
    if np.isscalar(s):
        ok = 0.0 <= s <= upper and np.isfinite(s)
    else:
        s = np.asarray(s)
        ok = s.size == 0 or (s.min() >= 0.0 and s.max() <= upper and np.all(np.isfinite(s)))
    if not ok:
        raise ValueError(f"{name}={s} outside [0, {upper}]")


def _blend(t: float, w: ShapeParams) -> np.ndarray:
    a = np.asarray(w.a)
    b = np.asarray(w.b)
    return t * b + (1.0 - t) * a


def curvature(s, t: float, w: ShapeParams, g: SegmentGeometry | None = None):
    """Interpolated curvature ``t kappa_b(s) + (1 - t) kappa_a(s)`` (1/mm)."""
    _check_arc(s, g)
    return eta(s) @ _blend(t, w)


def bending_angle(s, t: float, w: ShapeParams, g: SegmentGeometry):
    """Tangent angle ``theta_s(s)``, closed form since curvature is polynomial."""
    _check_arc(s, g)
    return g.theta0 + nu(s) @ _blend(t, w)


def boundary_angles(w: ShapeParams, g: SegmentGeometry) -> tuple[float, float]:
    """End-of-segment bending angles ``(theta_ea, theta_eb)`` of the two generators."""
    nL = nu(g.L)
    return (g.theta0 + float(nL @ np.asarray(w.a)),
            g.theta0 + float(nL @ np.asarray(w.b)))


def bending_angle_interp(t: float, theta_ea: float, theta_eb: float) -> float:
    return theta_ea + t * (theta_eb - theta_ea)


def _angles_on_nodes(l: float, t: float, w: ShapeParams, g: SegmentGeometry,
                     q: QuadratureSpec):
    s, wt = q.rule(l)
    return s, wt, g.theta0 + nu(s) @ _blend(t, w)


def position(l: float, t: float, w: ShapeParams, g: SegmentGeometry,
             q: QuadratureSpec = QuadratureSpec()) -> tuple[float, float]:
    """In-plane position ``(px, pz)`` at arc-length ``l`` in the bending-plane frame.

    The tangent is ``[sin theta_s, 0, cos theta_s]``, so the y component is zero.
    """
    _check_arc(l, g, "l")
    _, wt, th = _angles_on_nodes(l, t, w, g, q)
    return float(wt @ np.sin(th)), float(wt @ np.cos(th))


def measure(t: float, w: ShapeParams, g: SegmentGeometry,
            q: QuadratureSpec = QuadratureSpec()) -> PlanarPose:
    """Measurement model ``h_p(t, w) = [px(l), pz(l), theta(l)]`` at the sensor."""
    w.check(g)
    px, pz = position(w.l, t, w, g, q)
    return PlanarPose(px, pz, float(bending_angle(w.l, t, w, g)))
