"""Dual extended Kalman filter over the interpolation state and the shape parameters.

Each tick runs a shared time update, then a state-filter correction that uses
the previous parameter estimate, then a parameter-filter correction.  The
parameter correction linearises at the state posterior of the same tick by
default (``param_state="current"``); ``"previous"`` uses the prior tick's.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .jacobians import measurement_matrix_param, measurement_matrix_state
from .kinematics import (
    PlanarPose,
    QuadratureSpec,
    SegmentGeometry,
    ShapeParams,
    is_extrapolated,
    measure,
    nominal_params,
)

PSD_TOL = 1e-10
COND_WARN = 1e12


class FilterDivergence(RuntimeError):
    pass


class InnovationCovarianceError(np.linalg.LinAlgError):
    pass


class IllConditionedInnovation(RuntimeWarning):
    pass


def _diag(*v):
    return np.diag(np.asarray(v, dtype=float))


def check_psd(P, name: str = "covariance") -> np.ndarray:
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] != P.shape[1]:
        raise ValueError(f"{name} must be square, got {P.shape}")
    if not np.all(np.isfinite(P)):
        raise ValueError(f"{name} has non-finite entries")
    if np.max(np.abs(P - P.T), initial=0.0) > 1e-12:
        raise ValueError(f"{name} is not symmetric")
    if np.min(np.linalg.eigvalsh(P)) < -PSD_TOL:
        raise ValueError(f"{name} is not positive semi-definite")
    return P


@dataclass(frozen=True)
class NoiseConfig:
    Qv: np.ndarray = field(default_factory=lambda: _diag(1e-4))
    Qr: np.ndarray = field(default_factory=lambda: _diag(0.01, 0, 0, 0, 0))
    Rn: np.ndarray = field(default_factory=lambda: _diag(0.5, 0.5, 0.0006))
    Re: np.ndarray = field(default_factory=lambda: _diag(0.25, 0.25, 0.0003))

    def __post_init__(self):
        for name, n in (("Qv", 1), ("Qr", 5), ("Rn", 3), ("Re", 3)):
            P = check_psd(getattr(self, name), name)
            if P.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}, got {P.shape}")
            object.__setattr__(self, name, P)


@dataclass(frozen=True)
class EstimatorConfig:
    """Initial beliefs and noise covariances.

    The initial parameter covariance has five diagonal entries; the fourth
    repeats the magnitude of the second (the matching modal order of ``b``).
    """

    x0: float = 0.0
    Px0: float = 1e-4
    w0: np.ndarray = field(default_factory=lambda: nominal_params().as_array())
    Pw0: np.ndarray = field(default_factory=lambda: _diag(0.1, 4e-7, 0.01, 4e-7, 0.0009))
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    # project the sensor-location estimate back onto [0, L]
    clamp_l: bool = True
    # False drops the state-parameter coupling term from H_w
    coupled: bool = True
    # state fed to the parameter filter: "current" is this tick's posterior,
    # "previous" the posterior of the tick before
    param_state: str = "current"

    def __post_init__(self):
        w0 = np.asarray(self.w0, dtype=float)
        if w0.shape != (5,):
            raise ValueError(f"w0 must have 5 entries, got {w0.shape}")
        object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "Px0", check_psd(self.Px0, "Px0"))
        Pw0 = check_psd(self.Pw0, "Pw0")
        if Pw0.shape != (5, 5):
            raise ValueError(f"Pw0 must be 5x5, got {Pw0.shape}")
        object.__setattr__(self, "Pw0", Pw0)
        if self.param_state not in ("current", "previous"):
            raise ValueError(f"param_state must be 'current' or 'previous', got {self.param_state!r}")


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class MeasurementSample:
    y: PlanarPose
    u: float
    k: int


@dataclass(frozen=True)
class DualEstimate:
    state: GaussianBelief
    params: GaussianBelief
    innov_x: np.ndarray = field(default_factory=lambda: np.zeros(3))
    innov_w: np.ndarray = field(default_factory=lambda: np.zeros(3))
    K_x: np.ndarray = field(default_factory=lambda: np.zeros((1, 3)))
    K_w: np.ndarray = field(default_factory=lambda: np.zeros((5, 3)))
    k: int = 0
    extrapolated: bool = False

    @property
    def t(self) -> float:
        return float(self.state.mean[0])

    @property
    def w(self) -> ShapeParams:
        return ShapeParams.from_array(self.params.mean)


def symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def kalman_update(mean, cov, innovation, H, R):
    """One EKF correction; returns ``(mean, cov, K)``.

    ``H`` is (m, n); ``K`` comes out (n, m).  Covariance uses ``(I - K H) P``
    followed by symmetrisation.
    """
    H = np.atleast_2d(H)
    PHt = cov @ H.T
    S = symmetrize(H @ PHt + R)
    try:
        cond = np.linalg.cond(S)
        if not np.isfinite(cond):
            raise np.linalg.LinAlgError("singular innovation covariance")
        if cond > COND_WARN:
            warnings.warn(f"innovation covariance is ill-conditioned (cond={cond:.3g})",
                          IllConditionedInnovation, stacklevel=2)
        K = np.linalg.solve(S, PHt.T).T
    except np.linalg.LinAlgError as exc:
        raise InnovationCovarianceError(str(exc)) from exc
    mean = mean + K @ innovation
    cov = symmetrize((np.eye(cov.shape[0]) - K @ H) @ cov)
    return mean, cov, K


def initialize(cfg: EstimatorConfig) -> DualEstimate:
    return DualEstimate(
        state=GaussianBelief(np.array([float(cfg.x0)]), cfg.Px0.copy()),
        params=GaussianBelief(cfg.w0.copy(), cfg.Pw0.copy()),
    )


def time_update(est: DualEstimate, u: float, noise: NoiseConfig) -> DualEstimate:
    """Additive state model ``x + u``; random-walk parameters."""
    state = GaussianBelief(est.state.mean + u, est.state.cov + noise.Qv)
    params = GaussianBelief(est.params.mean.copy(), est.params.cov + noise.Qr)
    return replace(est, state=state, params=params)


def state_measurement_update(est: DualEstimate, y: PlanarPose, w_prev: ShapeParams,
                             noise: NoiseConfig, g: SegmentGeometry,
                             q: QuadratureSpec = QuadratureSpec()) -> DualEstimate:
    t_pred = est.t
    H = measurement_matrix_state(t_pred, w_prev, g, q)[:, None]
    innov = y.as_array() - measure(t_pred, w_prev, g, q).as_array()
    mean, cov, K = kalman_update(est.state.mean, est.state.cov, innov, H, noise.Rn)
    return replace(est, state=GaussianBelief(mean, cov), innov_x=innov, K_x=K)


def param_measurement_update(est: DualEstimate, y: PlanarPose, x_prev: float,
                             noise: NoiseConfig, g: SegmentGeometry,
                             q: QuadratureSpec = QuadratureSpec(), *,
                             coupled: bool = True, clamp_l: bool = True) -> DualEstimate:
    w_pred = est.w
    H = measurement_matrix_param(x_prev, w_pred, g, q, coupled=coupled)
    innov = y.as_array() - measure(x_prev, w_pred, g, q).as_array()
    mean, cov, K = kalman_update(est.params.mean, est.params.cov, innov, H, noise.Re)
    if clamp_l:
        mean[0] = min(max(mean[0], 0.0), g.L)
    return replace(est, params=GaussianBelief(mean, cov), innov_w=innov, K_w=K)


def step(est: DualEstimate, sample: MeasurementSample, cfg: EstimatorConfig,
         g: SegmentGeometry, q: QuadratureSpec = QuadratureSpec()) -> DualEstimate:
    """One tick: time update, state correction, parameter correction."""
    if sample.k <= est.k:
        raise ValueError(f"tick index must increase: got {sample.k} after {est.k}")
    x_prev = est.t
    w_prev = est.w
    pred = time_update(est, sample.u, cfg.noise)
    post = state_measurement_update(pred, sample.y, w_prev, cfg.noise, g, q)
    if not np.all(np.isfinite(post.state.mean)):
        raise FilterDivergence(f"non-finite state estimate at tick {sample.k}")
    if cfg.param_state == "current":
        x_prev = post.t
    post = param_measurement_update(post, sample.y, x_prev, cfg.noise, g, q,
                                    coupled=cfg.coupled, clamp_l=cfg.clamp_l)
    if not (np.all(np.isfinite(post.state.mean)) and np.all(np.isfinite(post.params.mean))
            and np.all(np.isfinite(post.state.cov)) and np.all(np.isfinite(post.params.cov))):
        raise FilterDivergence(f"non-finite estimate at tick {sample.k}")
    return replace(post, k=sample.k, extrapolated=is_extrapolated(post.t))


def run(samples, cfg: EstimatorConfig, g: SegmentGeometry,
        q: QuadratureSpec = QuadratureSpec()) -> list[DualEstimate]:
    est = initialize(cfg)
    out = []
    for sample in samples:
        est = step(est, sample, cfg, g, q)
        out.append(est)
    return out
