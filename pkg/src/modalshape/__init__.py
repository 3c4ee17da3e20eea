"""Online shape estimation for a planar continuum segment with a dual EKF."""
from .estimator import DualEstimate, EstimatorConfig, NoiseConfig, run, step
from .jacobians import geom_jacobian, ident_jacobian, measurement_matrix_param
from .kinematics import (
    PlanarPose,
    QuadratureSpec,
    SegmentGeometry,
    ShapeParams,
    bending_angle,
    curvature,
    measure,
    position,
    nominal_params,
)
from .simulator import SimConfig, run_workflow, score_estimates, simulate

__all__ = [
    "DualEstimate", "EstimatorConfig", "NoiseConfig", "PlanarPose", "QuadratureSpec",
    "SegmentGeometry", "ShapeParams", "SimConfig", "bending_angle", "curvature",
    "geom_jacobian", "ident_jacobian", "measure", "measurement_matrix_param", "position",
    "run", "run_workflow", "score_estimates", "simulate", "step", "nominal_params",
]
