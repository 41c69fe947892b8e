"""Finite discounted MDPs, Bellman operators and greedy action selection.

Value functions and policies are plain numpy vectors: a value function is a
float array of length ``n_states`` and a deterministic policy is an integer
array of the same length holding one action per state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

ROW_SUM_TOL = 1e-12
DEFAULT_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Mdp:
    """Tabular MDP with uniform action sets.

    Parameters
    ----------
    transitions : array of shape (n_states, n_actions, n_states)
        ``transitions[s, a, s2]`` is the probability of moving to ``s2``.
    rewards : array of shape (n_states, n_actions)
    gamma : float in [0, 1)

    The arrays are copied and frozen, so an ``Mdp`` can be shared freely.
    Construction does not check the stochasticity invariants; use
    :func:`validate_mdp` (or :func:`nonstat_vi.validation.check_mdp`).
    """

    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float

    def __post_init__(self):
        p = np.array(self.transitions, dtype=float)
        r = np.array(self.rewards, dtype=float)
        p.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "transitions", p)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n_states(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_actions(self) -> int:
        return self.rewards.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.gamma == other.gamma
            and self.transitions.shape == other.transitions.shape
            and self.rewards.shape == other.rewards.shape
            and bool(np.array_equal(self.transitions, other.transitions))
            and bool(np.array_equal(self.rewards, other.rewards))
        )

    __hash__ = None

    def policy_matrix(self, policy) -> np.ndarray:
        """Return the (n_states, n_states) transition matrix of ``policy``."""
        policy = np.asarray(policy)
        return self.transitions[np.arange(self.n_states), policy]

    def policy_rewards(self, policy) -> np.ndarray:
        policy = np.asarray(policy)
        return self.rewards[np.arange(self.n_states), policy]


@dataclass(frozen=True)
class PeriodicPolicy:
    """A non-stationary policy that loops over ``cycle``.

    ``cycle[0]`` acts at time 0, ``cycle[1]`` at time 1, and so on, wrapping
    around after ``len(cycle)`` steps. When built from a value-iteration run
    the newest policy comes first.
    """

    cycle: tuple

    def __post_init__(self):
        cycle = []
        for pi in self.cycle:
            a = np.array(pi, dtype=np.int64)
            a.setflags(write=False)
            cycle.append(a)
        if not cycle:
            raise ValueError("a periodic policy needs at least one policy")
        object.__setattr__(self, "cycle", tuple(cycle))

    @property
    def period(self) -> int:
        return len(self.cycle)

    def action(self, t: int, state: int) -> int:
        return int(self.cycle[t % self.period][state])

    def __eq__(self, other):
        if not isinstance(other, PeriodicPolicy):
            return NotImplemented
        return self.period == other.period and all(
            np.array_equal(a, b) for a, b in zip(self.cycle, other.cycle)
        )

    __hash__ = None


@dataclass(frozen=True)
class Prefer:
    """Tie-break rule that favours actions in a given order.

    ``order`` is either a sequence of actions applied in every state, or a
    mapping ``state -> sequence of actions`` for per-state preferences.
    States (or tied sets) not covered fall back to the lowest index.
    """

    order: Union[Sequence[int], Mapping[int, Sequence[int]]] = field(default=())

    def ranking(self, state: int) -> tuple:
        if isinstance(self.order, Mapping):
            return tuple(self.order.get(state, ()))
        return tuple(self.order)

    def actions(self):
        if isinstance(self.order, Mapping):
            return [a for acts in self.order.values() for a in acts]
        return list(self.order)


TieBreak = Union[str, Prefer]


def validate_mdp(mdp: Mdp) -> list:
    """Return the list of invariant violations of ``mdp`` (empty when valid)."""
    problems = []
    p, r = mdp.transitions, mdp.rewards
    if not 0.0 <= mdp.gamma < 1.0:
        problems.append(f"gamma must be < 1 and >= 0, got {mdp.gamma!r}")
    if r.ndim != 2 or r.shape[0] < 1 or r.shape[1] < 1:
        problems.append(f"rewards must be a non-empty 2-D array, got shape {r.shape}")
        return problems
    n, na = r.shape
    if p.ndim != 3 or p.shape[:2] != (n, na):
        problems.append(
            f"transitions must have shape ({n}, {na}, n_next), got {p.shape}"
        )
        return problems
    if p.shape[2] != n:
        problems.append(
            f"transition rows have {p.shape[2]} entries but there are {n} states"
        )
    for s in range(n):
        for a in range(na):
            row = p[s, a]
            if not np.all(np.isfinite(row)):
                problems.append(f"non-finite probability at ({s},{a})")
                continue
            if np.any(row < 0):
                problems.append(f"negative probability at ({s},{a})")
            total = float(np.sum(row))
            if abs(total - 1.0) > ROW_SUM_TOL:
                problems.append(f"row sum {total:.12g} != 1 at ({s},{a})")
            if not np.isfinite(r[s, a]):
                problems.append(f"non-finite reward at ({s},{a})")
    return problems


def span(v) -> float:
    """Span seminorm ``max(v) - min(v)``."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("span of an empty vector is undefined")
    return float(np.max(v) - np.min(v))


def maxnorm(v) -> float:
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("max-norm of an empty vector is undefined")
    return float(np.max(np.abs(v)))


def _check_value(mdp: Mdp, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (mdp.n_states,):
        raise ValueError(
            f"value function has shape {v.shape}, expected ({mdp.n_states},)"
        )
    return v


def _check_policy(mdp: Mdp, pi) -> np.ndarray:
    pi = np.asarray(pi)
    if pi.shape != (mdp.n_states,):
        raise ValueError(f"policy has shape {pi.shape}, expected ({mdp.n_states},)")
    if not np.issubdtype(pi.dtype, np.integer):
        raise ValueError("policy entries must be integers")
    if np.any(pi < 0) or np.any(pi >= mdp.n_actions):
        raise ValueError(f"policy references an action outside [0, {mdp.n_actions})")
    return pi


def q_values(mdp: Mdp, v) -> np.ndarray:
    """One-step lookahead values ``r(s,a) + gamma * sum_s' P(s'|s,a) v(s')``."""
    v = _check_value(mdp, v)
    return mdp.rewards + mdp.gamma * (mdp.transitions @ v)


def apply_bellman(mdp: Mdp, pi, v) -> np.ndarray:
    """Apply the policy Bellman operator ``T_pi`` to ``v``."""
    pi = _check_policy(mdp, pi)
    v = _check_value(mdp, v)
    return mdp.policy_rewards(pi) + mdp.gamma * (mdp.policy_matrix(pi) @ v)


def apply_optimal_bellman(mdp: Mdp, v) -> np.ndarray:
    return q_values(mdp, v).max(axis=1)


def greedy_set(mdp: Mdp, v, tie_tol: float = DEFAULT_TIE_TOL) -> np.ndarray:
    """Boolean mask of shape (n_states, n_actions) marking greedy actions.

    An action is greedy when its Q-value is within ``tie_tol`` of the best one.
    """
    if tie_tol < 0:
        raise ValueError("tie_tol must be nonnegative")
    q = q_values(mdp, v)
    return q >= q.max(axis=1, keepdims=True) - tie_tol


def _pick(candidates: np.ndarray, state: int, tie_break: TieBreak) -> int:
    if isinstance(tie_break, Prefer):
        for a in tie_break.ranking(state):
            if candidates[a]:
                return a
        return int(np.flatnonzero(candidates)[0])
    if tie_break == "lowest":
        return int(np.flatnonzero(candidates)[0])
    if tie_break == "highest":
        return int(np.flatnonzero(candidates)[-1])
    raise ValueError(f"unknown tie-break rule {tie_break!r}")


def check_tie_break(tie_break: TieBreak, n_actions: int) -> None:
    if isinstance(tie_break, Prefer):
        bad = [a for a in tie_break.actions() if not 0 <= a < n_actions]
        if bad:
            raise ValueError(f"preference list references invalid actions {bad}")
    elif tie_break not in ("lowest", "highest"):
        raise ValueError(f"unknown tie-break rule {tie_break!r}")


def greedy_policy(
    mdp: Mdp, v, tie_break: TieBreak = "lowest", tie_tol: float = DEFAULT_TIE_TOL
) -> np.ndarray:
    """Return a greedy policy for ``v``, resolving ties with ``tie_break``.

    ``tie_break`` is ``"lowest"``, ``"highest"`` or a :class:`Prefer` rule.
    """
    check_tie_break(tie_break, mdp.n_actions)
    mask = greedy_set(mdp, v, tie_tol)
    return np.array(
        [_pick(mask[s], s, tie_break) for s in range(mdp.n_states)], dtype=np.int64
    )


def compose_bellman(mdp: Mdp, policies, v) -> np.ndarray:
    """Compute ``T_{p1} T_{p2} ... T_{pm} v`` for ``policies = [p1, ..., pm]``.

    The last policy is applied first.
    """
    policies = list(policies)
    if not policies:
        raise ValueError("compose_bellman needs at least one policy")
    out = _check_value(mdp, v)
    for pi in reversed(policies):
        out = apply_bellman(mdp, pi, out)
    return out
