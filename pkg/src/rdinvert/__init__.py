"""Reconstruction of a space-dependent diffusion coefficient and a
state-dependent reaction term in a 1-D semilinear parabolic equation
from overposed boundary and final-time data."""

from .errors import (
    BlowUpError,
    ConfigurationError,
    ContractionFailureError,
    DataConditionError,
    DegenerateDataError,
    ExpressionError,
    MonotonicityError,
    RangeConditionError,
    RangeViolationError,
    RdInvertError,
    ReconstructionError,
    SmoothingError,
    StiffnessError,
    UnsupportedConfigurationError,
)
from .grids import (
    ScalarField,
    SpatialGrid,
    TimeGrid,
    TimeSeries,
    make_time_grid,
    make_uniform_grid,
)
from .inversion import (
    ConditionReport,
    IterationRecord,
    ReconstructionHistory,
    Scheme,
    SchemeConfig,
    check_conditions,
    lift_initial_value,
    relative_l2,
    run_reconstruction,
    update_a_sequential,
    update_a_wronskian,
    update_f_sequential,
    update_f_trace,
    update_f_wronskian,
)
from .observations import (
    LambdaRule,
    NoiseDistribution,
    NoiseSpec,
    ObservationSet,
    PenaltyOrder,
    SmoothingSpec,
    sample_and_perturb,
    smooth_to_grid,
)
from .problem import BCKind, BoundaryCondition, End, ProblemSkeleton, ProblemSpec
from .reaction import ClampPolicy, ReactionCurve, sup_distance
from .sensitivity import (
    ObservationKind,
    PerturbationMode,
    SensitivitySetup,
    jacobian_matrix,
    jacobian_singular_values,
    linearized_response,
    observe,
    sensitivity_solve,
    sensitivity_solve_direction,
    singular_values,
)
from .solver import (
    StateHistory,
    boundary_second_derivative,
    final_profile,
    solve_forward,
    time_derivative_at_T,
    trace_at,
)

__version__ = "0.1.0"
