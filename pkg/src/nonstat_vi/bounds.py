"""Closed-form performance bounds, the tightness instance and proof audits.

Notation: ``eps`` bounds the span of the injected errors, ``delta`` is
``span(v* - v0)``, ``k`` the iteration count and ``m`` the period of the
non-stationary policy that loops over the last ``m`` greedy policies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .avi import AviTrace, ErrorModel, extract_periodic_policy, run_avi, trace_stats
from .mdp import Mdp, Prefer, apply_bellman, maxnorm
from .solvers import DEFAULT_TOL, evaluate_periodic, evaluate_stationary, loss, solve_optimal

AUDIT_SLACK = 1e-8


@dataclass(frozen=True)
class BoundInputs:
    gamma: float
    k: int
    m: int = 1
    eps: float = 0.0
    delta: float = 0.0
    eps_inf: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.k < 1 or self.m < 1:
            raise ValueError("k and m must be >= 1")
        if min(self.eps, self.delta, self.eps_inf) < 0:
            raise ValueError("eps, delta and eps_inf must be nonnegative")


def _numerator(b: BoundInputs) -> float:
    g = b.gamma
    return (g - g**b.k) / (1.0 - g) * b.eps + g**b.k * b.delta


def thm3_bound(b: BoundInputs) -> float:
    """Loss bound for the periodic policy over the last ``b.m`` policies."""
    return _numerator(b) / (1.0 - b.gamma**b.m)


def thm1_bound(b: BoundInputs) -> float:
    """Loss bound for the last greedy policy (the ``m = 1`` case)."""
    return _numerator(b) / (1.0 - b.gamma)


def all_policies_bound(gamma: float, k: int, eps: float, delta: float) -> float:
    """The ``m = k`` bound written in its expanded form."""
    c = gamma**k / (1.0 - gamma**k)
    return (gamma / (1.0 - gamma) - c) * eps + c * delta


class AsymptoticBounds(NamedTuple):
    classic: float
    span_limit: float
    nonstat_limit: float


def asymptotic_bounds(gamma: float, eps_inf: float, eps_span: float) -> AsymptoticBounds:
    """Limits as ``k -> infinity``.

    ``classic`` is the textbook ``2 gamma / (1 - gamma)^2`` bound in max-norm,
    ``span_limit`` the stationary span bound and ``nonstat_limit`` the limit of
    the all-policies (``m = k``) bound.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    return AsymptoticBounds(
        classic=2 * gamma / (1 - gamma) ** 2 * eps_inf,
        span_limit=gamma / (1 - gamma) ** 2 * eps_span,
        nonstat_limit=gamma / (1 - gamma) * eps_span,
    )


STAY, MOVE = 1, 0


@dataclass(frozen=True)
class TightnessInstance:
    """Deterministic chain on which the stationary bound is attained.

    States ``s_0 .. s_k``: ``s_0`` is absorbing, ``s_l`` moves to ``s_{l-1}``
    and ``s_k`` chooses between staying (reward ``stay_reward``) and moving
    on. Action 1 is "stay" and action 0 is "move"; elsewhere both actions are
    the same transition.
    """

    mdp: Mdp
    v0: np.ndarray
    errors: np.ndarray  # shape (k - 1, k + 1): eps_1 .. eps_{k-1}
    stay_reward: float
    predicted_loss: float
    tie_break: Prefer
    k: int
    eps: float
    delta: float

    def error_model(self) -> ErrorModel:
        """Errors for a ``k``-iteration run; the ``k``-th error is zero."""
        padded = np.vstack([self.errors, np.zeros((1, self.mdp.n_states))])
        return ErrorModel.explicit(padded)

    @property
    def bar_policy(self) -> np.ndarray:
        pi = np.full(self.mdp.n_states, MOVE, dtype=np.int64)
        pi[self.k] = STAY
        return pi


def build_tightness_instance(gamma: float, k: int, eps: float, delta: float):
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if eps < 0 or delta < 0:
        raise ValueError("eps and delta must be nonnegative")
    n = k + 1
    r = -(gamma - gamma**k) / (1 - gamma) * eps - gamma**k * delta
    p = np.zeros((n, 2, n))
    p[0, :, 0] = 1.0
    for s in range(1, n):
        p[s, :, s - 1] = 1.0
    p[k, STAY] = 0.0
    p[k, STAY, k] = 1.0
    rewards = np.zeros((n, 2))
    rewards[k, STAY] = r
    v0 = np.zeros(n)
    v0[0] = -delta
    errors = np.zeros((k - 1, n))
    for j in range(1, k):
        errors[j - 1, j] = -eps
    return TightnessInstance(
        mdp=Mdp(p, rewards, gamma),
        v0=v0,
        errors=errors,
        stay_reward=r,
        predicted_loss=thm1_bound(BoundInputs(gamma, k, 1, eps, delta)),
        tie_break=Prefer({k: (STAY,)}),
        k=k,
        eps=eps,
        delta=delta,
    )


@dataclass(frozen=True)
class TightnessResult:
    trace: AviTrace
    v_star: np.ndarray
    policy: np.ndarray
    loss: float
    predicted_loss: float


def run_tightness(inst: TightnessInstance, tol: float = DEFAULT_TOL) -> TightnessResult:
    """Run AVI on ``inst`` and measure the loss of the greedy policy ``pi_k``.

    The first ``k - 1`` updates use the adversarial errors; ``pi_k`` is greedy
    for ``v_{k-1}`` with ties resolved towards staying in ``s_k``.
    """
    trace = run_avi(inst.mdp, inst.v0, inst.k, inst.error_model(), inst.tie_break)
    v_star = solve_optimal(inst.mdp, tol).value
    pi = trace.policy(inst.k)
    measured = loss(v_star, evaluate_stationary(inst.mdp, pi, tol=tol))
    return TightnessResult(trace, v_star, pi, measured, inst.predicted_loss)


@dataclass
class AuditReport:
    """Per-check slacks (right-hand side minus left-hand side)."""

    value_error: list = field(default_factory=list)  # (j, slack)
    recursion: dict = field(default_factory=dict)  # m -> slack
    loss_bound: dict = field(default_factory=dict)  # m -> (loss, bound, slack)
    slack_tol: float = AUDIT_SLACK

    @property
    def value_error_ok(self) -> bool:
        return all(s >= -self.slack_tol for _, s in self.value_error)

    def m_ok(self, m: int) -> bool:
        return (
            self.value_error_ok
            and self.recursion[m] >= -self.slack_tol
            and self.loss_bound[m][2] >= -self.slack_tol
        )

    @property
    def ok(self) -> bool:
        return self.value_error_ok and all(self.m_ok(m) for m in self.recursion)

    def violations(self) -> list:
        out = [
            f"value-error check fails at j={j} (slack {s:.3g})"
            for j, s in self.value_error
            if s < -self.slack_tol
        ]
        for m, s in self.recursion.items():
            if s < -self.slack_tol:
                out.append(f"recursion check fails at m={m} (slack {s:.3g})")
        for m, (_, _, s) in self.loss_bound.items():
            if s < -self.slack_tol:
                out.append(f"loss bound fails at m={m} (slack {s:.3g})")
        return out


def audit_trace_inequalities(
    mdp: Mdp,
    trace: AviTrace,
    v_star,
    m_list,
    tol: float = DEFAULT_TOL,
    periodic_values: Optional[dict] = None,
) -> AuditReport:
    """Check the inequalities behind the periodic-policy bound on a trace.

    (a) ``||v* - v_j|| <= gamma^j ||v* - v0|| + (1 - gamma^j)/(1 - gamma) eps_inf``
        for every ``j <= k``;
    (b) ``||T_{pi_k} v_{k-1} - v_{k,m}|| <= gamma^m ||v_{k-m} - v_{k,m}||
        + (gamma - gamma^m)/(1 - gamma) eps_inf`` for each ``m``;
    (c) the measured loss of the periodic policy against :func:`thm3_bound`.

    ``v_{k,m}`` is the value of the periodic policy; pass ``periodic_values``
    (``m -> value``) to reuse values already computed.
    """
    v_star = np.asarray(v_star, dtype=float)
    g, k = trace.gamma, trace.k
    m_list = list(m_list)
    bad = [m for m in m_list if not 1 <= m <= k]
    if bad:
        raise ValueError(f"m values {bad} outside [1, {k}]")
    stats = trace_stats(trace, v_star)
    report = AuditReport()

    d0 = maxnorm(v_star - trace.v0)
    for j in range(k + 1):
        rhs = g**j * d0 + (1 - g**j) / (1 - g) * stats.eps_inf
        report.value_error.append((j, rhs - maxnorm(v_star - trace.value(j))))

    backup = apply_bellman(mdp, trace.policy(k), trace.value(k - 1))
    periodic_values = periodic_values or {}
    for m in m_list:
        if m in periodic_values:
            v_pm = np.asarray(periodic_values[m], dtype=float)
        else:
            v_pm = evaluate_periodic(mdp, extract_periodic_policy(trace, m), tol)
        lhs = maxnorm(backup - v_pm)
        rhs = g**m * maxnorm(trace.value(k - m) - v_pm) + (g - g**m) / (
            1 - g
        ) * stats.eps_inf
        report.recursion[m] = rhs - lhs
        measured = loss(v_star, v_pm)
        bound = thm3_bound(BoundInputs(g, k, m, stats.eps_span, stats.delta0))
        report.loss_bound[m] = (measured, bound, bound - measured)
    return report


@dataclass
class BoundReport:
    thm1: float
    thm3: list  # [(m, bound)]
    classic_asymptotic: float
    measured: list  # [(m, loss)]

    @property
    def margins(self) -> list:
        bounds = dict(self.thm3)
        return [(m, bounds[m] - value) for m, value in self.measured]
