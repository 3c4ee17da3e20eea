"""Analytic Jacobians of the planar measurement model and their finite-difference checks.

Column order for parameter Jacobians is ``(l, a1, a2, b1, b2)``; row order is
``(px, pz, theta)``.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .kinematics import (
    QuadratureSpec,
    SegmentGeometry,
    ShapeParams,
    _angles_on_nodes,
    bending_angle_interp,
    boundary_angles,
    curvature,
    measure,
    nu,
)

DEGENERACY_TOL = 1e-9


class DegenerateHomotopyError(ValueError):
    """The two generators give the same end angle, so ``t`` is not identifiable."""


def ident_jacobian(t: float, w: ShapeParams, g: SegmentGeometry,
                   q: QuadratureSpec = QuadratureSpec(), *, sign: float = 1.0) -> np.ndarray:
    """Identification Jacobian ``d h_p / d w`` (3x5).

    ``sign`` flips the position-row sign of the modal blocks; it exists only as
    a negative control for the validation command.
    """
    w.check(g)
    l = w.l
    s, wt, th = _angles_on_nodes(l, t, w, g, q)
    th_l = float(g.theta0 + nu(l) @ ((1 - t) * np.asarray(w.a) + t * np.asarray(w.b)))
    nus = nu(s)
    # d theta_s / d(modal factors) = nu(s), scaled by (1 - t) or t
    dpx = (wt * np.cos(th)) @ nus
    dpz = -(wt * np.sin(th)) @ nus
    block = np.vstack([sign * dpx, sign * dpz, nu(l)])

    J = np.empty((3, 5))
    J[:, 0] = np.sin(th_l), np.cos(th_l), float(curvature(l, t, w, g))
    J[:, 1:3] = (1.0 - t) * block
    J[:, 3:5] = t * block
    return J


def geom_jacobian(t: float, w: ShapeParams, g: SegmentGeometry,
                  q: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Geometric Jacobian ``d h_p / d t`` (length-3 vector)."""
    w.check(g)
    l = w.l
    s, wt, th = _angles_on_nodes(l, t, w, g, q)
    diff = np.asarray(w.b) - np.asarray(w.a)
    dth = nu(s) @ diff
    return np.array([(wt * np.cos(th)) @ dth,
                     -(wt * np.sin(th)) @ dth,
                     float(nu(l) @ diff)])


def state_param_sensitivity(theta_e: float, w: ShapeParams, g: SegmentGeometry) -> np.ndarray:
    """``dt/dw`` of ``t = (theta_e - theta_ea) / (theta_eb - theta_ea)`` at fixed ``theta_e``."""
    th_a, th_b = boundary_angles(w, g)
    span = th_b - th_a
    if abs(span) < DEGENERACY_TOL:
        raise DegenerateHomotopyError(f"generator end angles coincide (span={span:g})")
    dt_da = (theta_e - th_b) / span**2
    dt_db = -(theta_e - th_a) / span**2
    nL = nu(g.L)
    out = np.zeros(5)
    out[1:3] = dt_da * nL
    out[3:5] = dt_db * nL
    return out


def measurement_matrix_state(t_pred: float, w_prev: ShapeParams, g: SegmentGeometry,
                             q: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """``H_x``: geometric Jacobian at the predicted state and previous parameters."""
    return geom_jacobian(t_pred, w_prev, g, q)


def measurement_matrix_param(x_prev: float, w_pred: ShapeParams, g: SegmentGeometry,
                             q: QuadratureSpec = QuadratureSpec(), *,
                             coupled: bool = True, sign: float = 1.0) -> np.ndarray:
    """``H_w = J_w + J_x dx/dw`` at the previous state and predicted parameters.

    The bending level ``theta_e`` entering ``dx/dw`` is the one realised by
    ``x_prev`` on ``w_pred``.  With ``coupled=False`` this is plain ``J_w``.
    """
    Jw = ident_jacobian(x_prev, w_pred, g, q, sign=sign)
    if not coupled:
        return Jw
    th_a, th_b = boundary_angles(w_pred, g)
    theta_e = bending_angle_interp(x_prev, th_a, th_b)
    dxdw = state_param_sensitivity(theta_e, w_pred, g)
    return Jw + np.outer(geom_jacobian(x_prev, w_pred, g, q), dxdw)


# --- finite-difference oracles -------------------------------------------------

def fd_step(value: float, rel: float = 1e-6) -> float:
    return rel * max(1.0, abs(value))


def central_difference(f: Callable[[np.ndarray], np.ndarray], x, rel: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``f`` with per-coordinate step ``rel * max(1, |x_i|)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cols = []
    for i in range(x.size):
        h = fd_step(x[i], rel)
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * h))
    return np.stack(cols, axis=-1)


def fd_ident_jacobian(t, w, g, q=QuadratureSpec(), rel=1e-6):
    return central_difference(
        lambda v: measure(t, ShapeParams.from_array(v), g, q).as_array(), w.as_array(), rel)


def fd_geom_jacobian(t, w, g, q=QuadratureSpec(), rel=1e-7):
    return central_difference(lambda v: measure(v[0], w, g, q).as_array(), [t], rel)[:, 0]


def interp_state(theta_e: float, w: ShapeParams, g: SegmentGeometry) -> float:
    th_a, th_b = boundary_angles(w, g)
    return (theta_e - th_a) / (th_b - th_a)


def fd_state_param_sensitivity(theta_e, w, g, rel=1e-7):
    return central_difference(
        lambda v: np.array([interp_state(theta_e, ShapeParams.from_array(v), g)]),
        w.as_array(), rel)[0]


def fd_measurement_matrix_param(x_prev, w, g, q=QuadratureSpec(), rel=1e-6):
    """Total derivative of ``h_p(t(w), w)`` with ``theta_e`` frozen at its value at ``w``."""
    th_a, th_b = boundary_angles(w, g)
    theta_e = bending_angle_interp(x_prev, th_a, th_b)

    def h(v):
        wv = ShapeParams.from_array(v)
        return measure(interp_state(theta_e, wv, g), wv, g, q).as_array()

    return central_difference(h, w.as_array(), rel)


def relative_deviation(analytic, reference, floor: float = 1e-9) -> float:
    """Largest column-wise relative deviation.

    Each column is scaled by its largest reference entry, so mixed-unit columns
    are compared on their own scale.
    """
    A = np.atleast_2d(np.asarray(analytic, dtype=float).T).T
    R = np.atleast_2d(np.asarray(reference, dtype=float).T).T
    scale = np.maximum(np.max(np.abs(R), axis=0), floor)
    return float(np.max(np.abs(A - R) / scale))


ANALYTIC_TOL = 1e-5
COMPOSITE_TOL = 1e-4


def random_point(rng: np.random.Generator, g: SegmentGeometry, spread: float = 0.5,
                 nominal: ShapeParams | None = None) -> tuple[float, ShapeParams]:
    """Random ``(t, w)``: modal factors within ``+-spread`` of nominal, ``l`` in ``[0.5L, L)``."""
    from .kinematics import nominal_params

    w0 = (nominal or nominal_params(g.L)).as_array()
    w = w0 * (1.0 + rng.uniform(-spread, spread, size=5))
    # keep central-difference probes on l inside [0, L]
    w[0] = g.L * rng.uniform(0.5, 0.999)
    return float(rng.uniform(0.0, 1.0)), ShapeParams.from_array(w)


def oracle_suite(n_trials: int, g: SegmentGeometry, q: QuadratureSpec = QuadratureSpec(),
                 seed: int = 0, spread: float = 0.5, sign: float = 1.0) -> dict[str, float]:
    """Worst relative deviation of each analytic Jacobian from its finite-difference oracle."""
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(("J_w", "J_x", "dx_dw", "H_w"), 0.0)
    for _ in range(n_trials):
        t, w = random_point(rng, g, spread)
        th_a, th_b = boundary_angles(w, g)
        theta_e = bending_angle_interp(t, th_a, th_b)
        dev = {
            "J_w": relative_deviation(ident_jacobian(t, w, g, q, sign=sign),
                                      fd_ident_jacobian(t, w, g, q)),
            "J_x": relative_deviation(geom_jacobian(t, w, g, q), fd_geom_jacobian(t, w, g, q)),
            "dx_dw": relative_deviation(state_param_sensitivity(theta_e, w, g)[None, :],
                                        fd_state_param_sensitivity(theta_e, w, g)[None, :]),
            "H_w": relative_deviation(measurement_matrix_param(t, w, g, q, sign=sign),
                                      fd_measurement_matrix_param(t, w, g, q)),
        }
        for k, v in dev.items():
            worst[k] = max(worst[k], v)
    return worst


def oracle_thresholds() -> dict[str, float]:
    return {"J_w": ANALYTIC_TOL, "J_x": ANALYTIC_TOL, "dx_dw": ANALYTIC_TOL, "H_w": COMPOSITE_TOL}
