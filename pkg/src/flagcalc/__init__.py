"""Flag manifolds of idempotents, Stiefel bundles and their connections in matrix algebras."""
from .algebra import (
    DEFAULT_TOL,
    RandomSource,
    Tolerance,
    corner_inverse,
    exp_skew,
    log_unitary,
    matrix_from_json,
    matrix_to_json,
)
from .connection import (
    BundleMorphismLocal,
    LocalConnection,
    TangentChartVector,
    connector,
    covariant_derivative_chart,
    horizontal_lift,
    pullback,
    pushforward,
    vertical_lift,
    vertical_projector,
)
from .errors import FlagCalcError, FormatError
from .flag import (
    Flag,
    FlagFactorization,
    OrthoFlag,
    OrthogonalSystem,
    alpha,
    alpha_inverse,
    canonical_projection_E,
    cpr_theta,
    diagonal_truncation,
    flag_action,
    flag_factorize,
    kernel_split,
    make_flag,
    make_ortho_flag,
    membership,
    orthogonal_system,
    pr_k,
)
from .idempotent import equivalent, leq, orthogonalize, range_projection
from .stiefel import (
    FlagTangent,
    StiefelPoint,
    TautologicalElement,
    UnitaryStiefelPoint,
    connection_form_omega,
    covariant_derivative_taut,
    horizontal_lift_flag,
    parallel_transport,
    sigma_delta,
    stiefel_point,
    structure_action,
    transport_frames,
    unitary_reduce,
)
from .suites import SuiteReport, run_suite

__version__ = "0.1.0"
