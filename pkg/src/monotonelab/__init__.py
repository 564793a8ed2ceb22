"""Finite-dimensional testbed for set-valued monotone operators in l^p spaces."""

from .convex_sets import (
    ConvexSet,
    MinNormResult,
    PolytopeH,
    SetDistanceReport,
    contains_point,
    convex_hull,
    direction_grid,
    face,
    facet_normals,
    minkowski_sum,
    min_norm_point,
    normal_cone,
    set_distance_report,
    set_dual_distance,
    support_function,
)
from .errors import (
    ConstructionError,
    DimensionMismatchError,
    FaceUndefinedError,
    InputError,
    NoSelectionError,
    ScenarioError,
    SolverFailError,
)
from .geometry import ConvexityProbe, NormedSpace
from .limits import (
    LimsupCloud,
    VerificationReport,
    default_radius_schedule,
    default_t_levels,
    lower_bound_check,
    operator_equality_test,
    s_limsup_estimate,
    support_formula_estimate,
    verify_face_inclusion,
    verify_representation,
)
from .operators import (
    DualityMapOperator,
    LinearOperator,
    MonotoneReport,
    NormalConeOperator,
    OperatorSpec,
    OperatorSum,
    PolyhedralSubdiff,
    ResolventResult,
    Trajectory,
    TrajectoryRecord,
    check_monotone,
    default_lambda_schedule,
    min_norm_selection,
    resolvent_solve,
    yosida_trajectory,
)
from .runner import run_suite
from .scenario import CheckSpec, Scenario, load_scenario

__version__ = "0.1.0"
