"""Garnet random MDPs."""

from dataclasses import dataclass

import numpy as np

from .mdp import Mdp


@dataclass(frozen=True)
class GarnetSpec:
    n_states: int = 20
    n_actions: int = 4
    branching: int = 3
    gamma: float = 0.9
    reward_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_states < 1 or self.n_actions < 1:
            raise ValueError("n_states and n_actions must be positive")
        if not 1 <= self.branching <= self.n_states:
            raise ValueError(
                f"branching must be in [1, {self.n_states}], got {self.branching}"
            )
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")


def generate_garnet(spec: GarnetSpec) -> Mdp:
    """Sample a Garnet MDP.

    Each (state, action) pair reaches ``branching`` distinct successors drawn
    without replacement, with probabilities from normalised uniform draws, and
    earns a reward uniform in ``[0, reward_scale]``.
    """
    rng = np.random.default_rng(spec.seed)
    n, na = spec.n_states, spec.n_actions
    p = np.zeros((n, na, n))
    rewards = np.zeros((n, na))
    for s in range(n):
        for a in range(na):
            succ = rng.choice(n, size=spec.branching, replace=False)
            w = rng.uniform(size=spec.branching)
            # guard against an all-zero draw
            w = w + np.finfo(float).tiny if w.sum() == 0 else w
            p[s, a, succ] = w / w.sum()
            rewards[s, a] = rng.uniform(0.0, spec.reward_scale)
    return Mdp(p, rewards, spec.gamma)
