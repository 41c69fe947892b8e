"""Independent reference computations used by the tests.

Nothing here calls the package's operators: these are the slow, obvious
versions that the fast paths are checked against.
"""

import numpy as np


def random_mdp_arrays(rng, n_states, n_actions, sparsity=0.0):
    p = rng.uniform(size=(n_states, n_actions, n_states))
    if sparsity:
        p[rng.uniform(size=p.shape) < sparsity] = 0.0
        idx = rng.integers(n_states, size=(n_states, n_actions))
        for s in range(n_states):
            for a in range(n_actions):
                p[s, a, idx[s, a]] += 1.0
    p /= p.sum(axis=2, keepdims=True)
    r = rng.uniform(-1, 1, size=(n_states, n_actions))
    return p, r


def backup_loop(p, r, gamma, policy, v):
    """T_pi v with explicit loops, ascending next-state order."""
    n = len(v)
    out = np.zeros(n)
    for s in range(n):
        a = policy[s]
        acc = 0.0
        for s2 in range(n):
            acc += p[s, a, s2] * v[s2]
        out[s] = r[s, a] + gamma * acc
    return out


def rollout_value(p, r, gamma, cycle, tol=1e-10):
    """Discounted return of a periodic policy by forward propagation.

    The horizon is the smallest H with gamma**H <= tol, so the truncation
    error is at most tol * max|r| / (1 - gamma).
    """
    n = p.shape[0]
    horizon = int(np.ceil(np.log(tol) / np.log(gamma))) if gamma > 0 else 1
    dist = np.eye(n)
    total = np.zeros(n)
    disc = 1.0
    for t in range(horizon):
        pi = cycle[t % len(cycle)]
        p_pi = p[np.arange(n), pi]
        r_pi = r[np.arange(n), pi]
        total += disc * (dist @ r_pi)
        dist = dist @ p_pi
        disc *= gamma
    return total


def enumerate_optimal(p, r, gamma):
    """v* as the max over every deterministic policy of its exact value."""
    import itertools

    n, na = r.shape
    best = np.full(n, -np.inf)
    for pol in itertools.product(range(na), repeat=n):
        pol = np.array(pol)
        p_pi = p[np.arange(n), pol]
        r_pi = r[np.arange(n), pol]
        v = np.linalg.solve(np.eye(n) - gamma * p_pi, r_pi)
        best = np.maximum(best, v)
    return best
