"""Approximate value iteration with injected errors.

Each iteration picks a greedy policy for the current value, applies its
Bellman operator and then adds an error vector::

    pi_j = greedy(v_{j-1})
    v_j  = T_{pi_j} v_{j-1} + eps_j

The full run is recorded in an :class:`AviTrace`, from which the periodic
policies looping over the last ``m`` greedy policies are extracted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .mdp import (
    DEFAULT_TIE_TOL,
    Mdp,
    PeriodicPolicy,
    TieBreak,
    apply_bellman,
    check_tie_break,
    greedy_policy,
    maxnorm,
    span,
)
from .validation import check_mdp, check_value


@dataclass(frozen=True)
class ErrorModel:
    """Where the per-iteration errors come from.

    Use the constructors :meth:`zero`, :meth:`explicit` and
    :meth:`random_span` rather than building instances by hand.
    """

    kind: str
    errors: Optional[np.ndarray] = None
    bound: float = 0.0
    seed: object = None

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def explicit(cls, errors):
        errors = np.array(errors, dtype=float)
        if errors.ndim != 2:
            raise ValueError("explicit errors must be a 2-D array (k, n_states)")
        errors.setflags(write=False)
        return cls("explicit", errors=errors)

    @classmethod
    def random_span(cls, bound: float, seed=None):
        if bound < 0:
            raise ValueError("span bound must be nonnegative")
        return cls("random_span", bound=float(bound), seed=seed)

    def sampler(self, k: int, n_states: int):
        """Return a callable ``j -> eps_j`` for ``j = 1..k``."""
        if self.kind == "zero":
            zeros = np.zeros(n_states)
            return lambda j: zeros
        if self.kind == "explicit":
            if self.errors.shape != (k, n_states):
                raise ValueError(
                    f"explicit errors have shape {self.errors.shape}, "
                    f"expected ({k}, {n_states})"
                )
            return lambda j: self.errors[j - 1]
        if self.kind == "random_span":
            rng = np.random.default_rng(self.seed)
            return lambda j: draw_span_error(rng, n_states, self.bound)
        raise ValueError(f"unknown error model kind {self.kind!r}")


def draw_span_error(rng: np.random.Generator, n_states: int, bound: float):
    """Draw a centred error vector whose span is exactly ``bound``."""
    x = rng.uniform(-bound / 2, bound / 2, size=n_states)
    lo, hi = int(np.argmin(x)), int(np.argmax(x))
    width = x[hi] - x[lo]
    if n_states < 2 or width == 0.0:
        return np.zeros(n_states)
    half = bound / 2
    x = (x - (x[hi] + x[lo]) / 2) * (bound / width)
    x = np.clip(x, -half, half)
    # pin the extremes so the realised span is exactly `bound`
    x[hi], x[lo] = half, -half
    return x


@dataclass(frozen=True)
class AviTrace:
    """Record of one noisy value-iteration run.

    ``policies[j-1]``, ``values[j-1]`` and ``errors[j-1]`` hold ``pi_j``,
    ``v_j`` and ``eps_j`` for ``j = 1..k``.
    """

    v0: np.ndarray
    policies: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    gamma: float

    @property
    def k(self) -> int:
        return self.policies.shape[0]

    def value(self, j: int) -> np.ndarray:
        """``v_j`` for ``0 <= j <= k``."""
        if not 0 <= j <= self.k:
            raise IndexError(f"value index {j} outside [0, {self.k}]")
        return self.v0 if j == 0 else self.values[j - 1]

    def policy(self, j: int) -> np.ndarray:
        """``pi_j`` for ``1 <= j <= k``."""
        if not 1 <= j <= self.k:
            raise IndexError(f"policy index {j} outside [1, {self.k}]")
        return self.policies[j - 1]

    def error(self, j: int) -> np.ndarray:
        if not 1 <= j <= self.k:
            raise IndexError(f"error index {j} outside [1, {self.k}]")
        return self.errors[j - 1]


def run_avi(
    mdp: Mdp,
    v0,
    k: int,
    err: ErrorModel = ErrorModel.zero(),
    tie_break: TieBreak = "lowest",
    tie_tol: float = DEFAULT_TIE_TOL,
) -> AviTrace:
    """Run ``k`` iterations of approximate value iteration from ``v0``."""
    check_mdp(mdp)
    v = check_value(mdp, v0).copy()
    if k < 1:
        raise ValueError("k must be at least 1")
    check_tie_break(tie_break, mdp.n_actions)
    draw = err.sampler(k, mdp.n_states)
    v0 = v.copy()
    policies, values, errors = [], [], []
    for j in range(1, k + 1):
        pi = greedy_policy(mdp, v, tie_break, tie_tol)
        eps = np.array(draw(j), dtype=float)
        v = apply_bellman(mdp, pi, v) + eps
        policies.append(pi)
        values.append(v)
        errors.append(eps)
    return _freeze_trace(v0, policies, values, errors, mdp.gamma)


def _freeze_trace(v0, policies, values, errors, gamma):
    arrays = [
        np.array(v0, dtype=float),
        np.array(policies, dtype=np.int64),
        np.array(values, dtype=float),
        np.array(errors, dtype=float),
    ]
    for a in arrays:
        a.setflags(write=False)
    return AviTrace(*arrays, gamma=float(gamma))


def extract_periodic_policy(trace: AviTrace, m: int) -> PeriodicPolicy:
    """Loop over the last ``m`` greedy policies, newest first."""
    if not 1 <= m <= trace.k:
        raise ValueError(f"m must be in [1, {trace.k}], got {m}")
    return PeriodicPolicy(tuple(trace.policy(trace.k - i) for i in range(m)))


class TraceStats(NamedTuple):
    eps_span: float
    eps_inf: float
    delta0: Optional[float]
    v_star_needed: bool


def trace_stats(trace: AviTrace, v_star=None, last: Optional[int] = None) -> TraceStats:
    """Error magnitudes of a trace and the initial gap ``span(v* - v0)``.

    ``last`` restricts the error maxima to ``eps_1 .. eps_last``; by default
    all ``k`` recorded errors are used. ``delta0`` is only available when
    ``v_star`` is given, otherwise ``v_star_needed`` is set.
    """
    last = trace.k if last is None else last
    if not 0 <= last <= trace.k:
        raise ValueError(f"last must be in [0, {trace.k}]")
    errs = trace.errors[:last]
    eps_span = max((span(e) for e in errs), default=0.0)
    eps_inf = max((maxnorm(e) for e in errs), default=0.0)
    if v_star is None:
        return TraceStats(eps_span, eps_inf, None, True)
    return TraceStats(eps_span, eps_inf, span(np.asarray(v_star) - trace.v0), False)
