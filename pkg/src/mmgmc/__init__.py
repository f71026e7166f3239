"""Majorization-minimization for least squares with the generalized GMC
penalty ``lam * (||x||_1 - f_alpha(x))``."""
from .core import (
    ObjectiveValue,
    ProblemInstance,
    directional_derivative,
    evaluate_objective,
    evaluate_penalty,
    residual_gradient,
)
from .inner import (
    InnerConfig,
    InnerResult,
    InnerSolverError,
    lipschitz_bound,
    minimize_majorizer_in_ball,
    project_ball,
    prox_l1_plus_ball,
)
from .mm import (
    InitializationError,
    IterationTrace,
    MMConfig,
    check_trace_invariants,
    run_mm,
    stationarity_report,
)
from .moreau import (
    ProxFunction,
    huber_closed_form,
    make_base,
    moreau_envelope,
    moreau_gradient,
    register,
    soft_threshold,
)
from .surrogate import (
    ConvexityCertificate,
    NotCertifiedError,
    SurrogateParams,
    Verdict,
    certify_objective_convexity,
    certify_strong_convexity,
    certify_surrogate_convexity,
    majorizer_smooth_gradient,
    majorizer_value,
    minimal_gamma,
    minorizer_envelope,
    minorizer_objective_value,
)

__version__ = "0.1.0"
