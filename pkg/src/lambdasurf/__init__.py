"""Numerical construction of rotationally symmetric lambda-hypersurfaces.

The package integrates the profile-curve system of hypersurfaces of
revolution satisfying ``H + <X, nu> = lambda`` in Gaussian space, splits
the curves into graph segments, classifies their shapes, and locates by a
shooting argument the closing curve whose revolution is a compact,
embedded, mean-convex but non-convex topological sphere.
"""

from .classify import ClassificationError, CurveClass, Segment, SegmentType, classify, segment
from .integrate import (
    Event,
    EventKind,
    IntegrationControls,
    Trajectory,
    evaluate,
    integrate,
    singular_start,
    trajectory_from_json,
    trajectory_to_csv,
    trajectory_to_json,
)
from .linearize import LinearizedSolution, count_positive_zeros
from .model import (
    AxisSingularityError,
    CurvatureData,
    Params,
    ProfileState,
    curvatures,
    derive_constants,
    exact_cylinder,
    exact_sphere,
    rhs,
    theta_second,
)
from .shoot import (
    ConvergencePoint,
    ScanPoint,
    ShootNonConvergenceError,
    ShootNotFoundError,
    ShootResult,
    convergence_to_axis_launch,
    find_delta_s,
    hypothesis_satisfied,
    scan_b,
    scan_delta,
)
from .surface import (
    ClosedProfile,
    ConvexityReport,
    Mesh,
    convexity_report,
    mirror_extend,
    revolve,
    self_intersection_check,
    write_obj,
)

__version__ = "0.1.0"

__all__ = [
    "AxisSingularityError",
    "ClassificationError",
    "ClosedProfile",
    "ConvergencePoint",
    "ConvexityReport",
    "CurvatureData",
    "CurveClass",
    "Event",
    "EventKind",
    "IntegrationControls",
    "LinearizedSolution",
    "Mesh",
    "Params",
    "ProfileState",
    "ScanPoint",
    "Segment",
    "SegmentType",
    "ShootNonConvergenceError",
    "ShootNotFoundError",
    "ShootResult",
    "Trajectory",
    "classify",
    "convergence_to_axis_launch",
    "convexity_report",
    "count_positive_zeros",
    "curvatures",
    "derive_constants",
    "evaluate",
    "exact_cylinder",
    "exact_sphere",
    "find_delta_s",
    "hypothesis_satisfied",
    "integrate",
    "mirror_extend",
    "revolve",
    "rhs",
    "scan_b",
    "scan_delta",
    "segment",
    "self_intersection_check",
    "singular_start",
    "theta_second",
    "trajectory_from_json",
    "trajectory_to_csv",
    "trajectory_to_json",
    "write_obj",
]
