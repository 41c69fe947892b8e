"""Approximate value iteration with injected errors, periodic non-stationary
policies and their performance bounds on finite discounted MDPs."""

from .avi import (
    AviTrace,
    ErrorModel,
    TraceStats,
    extract_periodic_policy,
    run_avi,
    trace_stats,
)
from .bounds import (
    AuditReport,
    BoundInputs,
    BoundReport,
    TightnessInstance,
    all_policies_bound,
    asymptotic_bounds,
    audit_trace_inequalities,
    build_tightness_instance,
    run_tightness,
    thm1_bound,
    thm3_bound,
)
from .estimator import ApproximateValueIteration
from .experiment import ExperimentConfig, run_experiment
from .garnet import GarnetSpec, generate_garnet
from .mdp import (
    Mdp,
    PeriodicPolicy,
    Prefer,
    apply_bellman,
    apply_optimal_bellman,
    compose_bellman,
    greedy_policy,
    greedy_set,
    maxnorm,
    q_values,
    span,
    validate_mdp,
)
from .solvers import (
    SolveResult,
    evaluate_periodic,
    evaluate_stationary,
    loss,
    solve_optimal,
    solve_periodic,
)
from .validation import ConvergenceError, InvalidMdpError

__version__ = "0.1.0"
