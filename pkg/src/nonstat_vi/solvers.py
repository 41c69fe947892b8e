"""Exact fixed-point solvers: optimal values, stationary and periodic policies.

Every iterative solve starts from the zero vector and stops on the usual
contraction certificate, so ``certified_error`` bounds the distance of the
returned value to the true fixed point in max-norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mdp import (
    Mdp,
    PeriodicPolicy,
    apply_bellman,
    apply_optimal_bellman,
    compose_bellman,
    greedy_policy,
    maxnorm,
)
from .validation import (
    ConvergenceError,
    check_mdp,
    check_policy,
    check_tolerance,
    check_value,
)

DEFAULT_TOL = 1e-10
MAX_ITER = 10**6
MAX_DIRECT_STATES = 2000


@dataclass(frozen=True)
class SolveResult:
    value: np.ndarray
    policy: Optional[np.ndarray]
    iterations: int
    certified_error: float


def _iterate(op, n_states, contraction, tol, max_iter):
    # certificate: ||T v - v*|| <= c / (1 - c) * ||T v - v||
    factor = contraction / (1.0 - contraction)
    v = np.zeros(n_states)
    for it in range(1, max_iter + 1):
        tv = op(v)
        cert = factor * maxnorm(tv - v)
        v = tv
        if cert <= tol:
            return v, it, cert
    raise ConvergenceError(f"no convergence after {max_iter} iterations")


def solve_optimal(mdp: Mdp, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER):
    """Run exact value iteration until ``||v - v*|| <= tol`` is certified."""
    check_mdp(mdp)
    tol = check_tolerance(tol)
    v, it, cert = _iterate(
        lambda u: apply_optimal_bellman(mdp, u), mdp.n_states, mdp.gamma, tol, max_iter
    )
    return SolveResult(v, greedy_policy(mdp, v), it, cert)


def evaluate_stationary(
    mdp: Mdp,
    pi,
    method: str = "direct",
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
) -> np.ndarray:
    """Value of the stationary policy ``pi``.

    ``method="direct"`` solves ``(I - gamma P_pi) v = r_pi`` by LU with partial
    pivoting and polishes the answer with residual refinement until
    ``||r_pi + gamma P_pi v - v|| / (1 - gamma) <= tol``. ``method="iterative"``
    applies ``T_pi`` from zero until the contraction certificate drops below
    ``tol``.
    """
    check_mdp(mdp)
    pi = check_policy(mdp, pi)
    tol = check_tolerance(tol)
    if method == "iterative":
        v, _, _ = _iterate(
            lambda u: apply_bellman(mdp, pi, u), mdp.n_states, mdp.gamma, tol, max_iter
        )
        return v
    if method != "direct":
        raise ValueError(f"unknown evaluation method {method!r}")
    n = mdp.n_states
    if n > MAX_DIRECT_STATES:
        raise ValueError(
            f"direct evaluation is limited to {MAX_DIRECT_STATES} states; "
            "use method='iterative'"
        )
    a = np.eye(n) - mdp.gamma * mdp.policy_matrix(pi)
    r = mdp.policy_rewards(pi)
    v = np.linalg.solve(a, r)
    for _ in range(10):
        residual = apply_bellman(mdp, pi, v) - v
        if maxnorm(residual) / (1.0 - mdp.gamma) <= tol:
            break
        v = v + np.linalg.solve(a, residual)
    else:
        # refinement stalled; finish with the contraction iteration
        v = _refine_iteratively(mdp, pi, v, tol, max_iter)
    return v


def _refine_iteratively(mdp, pi, v, tol, max_iter):
    factor = mdp.gamma / (1.0 - mdp.gamma)
    for _ in range(max_iter):
        tv = apply_bellman(mdp, pi, v)
        done = factor * maxnorm(tv - v) <= tol
        v = tv
        if done:
            return v
    raise ConvergenceError(f"no convergence after {max_iter} iterations")


def solve_periodic(
    mdp: Mdp, pp: PeriodicPolicy, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER
) -> SolveResult:
    """Fixed point of ``T_{cycle[0]} ... T_{cycle[m-1]}`` with its certificate."""
    check_mdp(mdp)
    tol = check_tolerance(tol)
    cycle = [check_policy(mdp, pi) for pi in pp.cycle]
    v, it, cert = _iterate(
        lambda u: compose_bellman(mdp, cycle, u),
        mdp.n_states,
        mdp.gamma ** len(cycle),
        tol,
        max_iter,
    )
    return SolveResult(v, None, it, cert)


def evaluate_periodic(
    mdp: Mdp, pp: PeriodicPolicy, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER
) -> np.ndarray:
    """Value of the periodic policy ``pp`` when ``pp.cycle[0]`` acts first."""
    return solve_periodic(mdp, pp, tol, max_iter).value


def loss(v_star, v_pi) -> float:
    """Max-norm distance ``||v_star - v_pi||``."""
    v_star = np.asarray(v_star, dtype=float)
    v_pi = np.asarray(v_pi, dtype=float)
    if v_star.shape != v_pi.shape:
        raise ValueError(f"shape mismatch: {v_star.shape} vs {v_pi.shape}")
    return maxnorm(v_star - v_pi)


def check_solution(mdp: Mdp, v) -> float:
    """A posteriori bound ``||T v - v|| / (1 - gamma)`` on ``||v - v*||``."""
    v = check_value(mdp, v)
    return maxnorm(apply_optimal_bellman(mdp, v) - v) / (1.0 - mdp.gamma)
