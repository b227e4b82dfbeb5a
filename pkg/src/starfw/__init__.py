"""starfw: projection-free optimization over compact convex sets.

Frank-Wolfe main loop with four stepsize strategies, a catalogue of convex
and star-convex (nonconvex) objectives, and mechanical audits of the
iteration-complexity bounds on recorded runs.
"""

from . import errors
from .geometry import (
    BoxSet,
    FeasibleSet,
    L1Ball,
    L2Ball,
    ProbabilitySimplex,
    VertexPolytope,
    set_from_json,
)
from .objectives import (
    AbsExp1D,
    BallRegion,
    BoxRegion,
    NormPower,
    Objective,
    PNorm,
    Quadratic,
    QuarticCross,
    SegmentRegion,
    StarShapedDistanceSum,
    distance_squared,
    objective_from_json,
)
from .solver import (
    BoundConstants,
    IterationRecord,
    RunReport,
    SolverConfig,
    gamma_constant,
    gap,
    replay_bound_inputs,
    solve,
)
from .stepsizes import (
    AdaptiveLipschitzRule,
    ArmijoRule,
    DiminishingRule,
    KnownLipschitzRule,
    StepContext,
    build_strategy,
    diminishing_step,
)
from .verify import (
    BoundAuditReport,
    ConvexityWitness,
    StarConvexityReport,
    audit_adaptive_descent,
    audit_adaptive_step_floor,
    audit_armijo_rate,
    audit_fcr_rates,
    audit_lipschitz_corridor,
    check_gradient,
    check_star_convexity,
    estimate_gradient_sup,
    estimate_lipschitz,
    find_convexity_violation,
    run_audits,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "FeasibleSet", "ProbabilitySimplex", "BoxSet", "L1Ball", "L2Ball",
    "VertexPolytope", "set_from_json",
    "Objective", "Quadratic", "AbsExp1D", "QuarticCross", "PNorm", "NormPower",
    "StarShapedDistanceSum", "BoxRegion", "BallRegion", "SegmentRegion",
    "distance_squared", "objective_from_json",
    "StepContext", "ArmijoRule", "AdaptiveLipschitzRule", "KnownLipschitzRule",
    "DiminishingRule", "build_strategy", "diminishing_step",
    "SolverConfig", "IterationRecord", "RunReport", "BoundConstants",
    "gap", "solve", "replay_bound_inputs", "gamma_constant",
    "StarConvexityReport", "ConvexityWitness", "BoundAuditReport",
    "check_star_convexity", "find_convexity_violation", "estimate_lipschitz",
    "estimate_gradient_sup", "check_gradient", "audit_armijo_rate",
    "audit_fcr_rates", "audit_lipschitz_corridor", "audit_adaptive_descent",
    "audit_adaptive_step_floor", "run_audits",
]
