"""Exact transport between laws of finite discrete-time stochastic processes.

The package keeps every mass, cost, and verdict in exact rational arithmetic:
couplings are checked for causality stepwise, bicausal optima come from a
verified backward induction with a brute-force oracle alongside, and any
bicausal coupling can be lifted to a slot-level biadapted bijection whose
projection reproduces it exactly. The approximation pipeline rearranges slots
within partition cells to produce biadapted Monge couplings that agree with
the target coupling on every product of cells.
"""

__version__ = "0.1.0"

from .approx import (
    Partition,
    biadapted_feasibility,
    cell_agreement,
    convergence_report,
    grid_partition,
    mesh_bound_check,
    monge_approximation,
    split_bijection,
)
from .couplings import (
    CausalityReport,
    Coupling,
    bicausal_constraints,
    classify_monge,
    diagonal_coupling,
    is_bicausal,
    is_causal,
    marginals,
    product_coupling,
    swap,
)
from .lifting import (
    AdaptedBijection,
    MicroSpace,
    RefinementPlan,
    lift_biadapted,
    lift_static,
    microatomize,
    plan_refinement,
    project,
    projection_bicausal_check,
    verify_adapted,
)
from .measures import (
    Kernel,
    PathMeasure,
    SubMeasure,
    disintegrate,
    pushforward,
    restrict,
    validate,
)
from .solvers import (
    CostSpec,
    SolveResult,
    adapted_wasserstein,
    solve_bicausal_dp,
    solve_bicausal_oracle,
    solve_kantorovich,
)
from .spaces import PathSpace, Point, ProductMetric, StepAlphabet, distance_pp, make_space
from .transport import solve_transport

__all__ = [
    "AdaptedBijection",
    "CausalityReport",
    "CostSpec",
    "Coupling",
    "Kernel",
    "MicroSpace",
    "Partition",
    "PathMeasure",
    "PathSpace",
    "Point",
    "ProductMetric",
    "RefinementPlan",
    "SolveResult",
    "StepAlphabet",
    "SubMeasure",
    "adapted_wasserstein",
    "biadapted_feasibility",
    "bicausal_constraints",
    "cell_agreement",
    "classify_monge",
    "convergence_report",
    "diagonal_coupling",
    "disintegrate",
    "distance_pp",
    "grid_partition",
    "is_bicausal",
    "is_causal",
    "lift_biadapted",
    "lift_static",
    "make_space",
    "marginals",
    "mesh_bound_check",
    "microatomize",
    "monge_approximation",
    "plan_refinement",
    "product_coupling",
    "project",
    "projection_bicausal_check",
    "pushforward",
    "restrict",
    "solve_bicausal_dp",
    "solve_bicausal_oracle",
    "solve_kantorovich",
    "solve_transport",
    "split_bijection",
    "swap",
    "validate",
    "verify_adapted",
]
