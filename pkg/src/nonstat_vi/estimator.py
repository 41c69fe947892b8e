"""Scikit-learn style wrapper around approximate value iteration."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .avi import ErrorModel, extract_periodic_policy, run_avi
from .mdp import DEFAULT_TIE_TOL
from .solvers import DEFAULT_TOL, evaluate_periodic, loss, solve_optimal
from .validation import check_mdp


class ApproximateValueIteration(BaseEstimator):
    """Noisy value iteration as an estimator.

    ``fit`` runs ``n_iter`` iterations on an MDP; the fitted estimator
    predicts the actions of the last greedy policy and can build the periodic
    policy that loops over the last ``m`` greedy policies.

    Parameters
    ----------
    n_iter : int
        Number of iterations ``k``.
    error_bound : float
        Span bound of the random errors added after each backup; 0 gives
        exact value iteration. Ignored when ``errors`` is set.
    errors : array of shape (n_iter, n_states), optional
        Explicit error sequence.
    tie_break : {"lowest", "highest"} or Prefer
    tie_tol : float
    random_state : int or None
        Seed for the random errors.

    Attributes
    ----------
    trace_ : AviTrace
    policy_ : ndarray of shape (n_states,)
        The last greedy policy.
    value_ : ndarray of shape (n_states,)
        The last value iterate.
    """

    def __init__(
        self,
        n_iter=30,
        error_bound=0.0,
        errors=None,
        tie_break="lowest",
        tie_tol=DEFAULT_TIE_TOL,
        random_state=None,
    ):
        self.n_iter = n_iter
        self.error_bound = error_bound
        self.errors = errors
        self.tie_break = tie_break
        self.tie_tol = tie_tol
        self.random_state = random_state

    def _error_model(self):
        if self.errors is not None:
            return ErrorModel.explicit(self.errors)
        if self.error_bound:
            return ErrorModel.random_span(self.error_bound, self.random_state)
        return ErrorModel.zero()

    def fit(self, mdp, v0=None):
        check_mdp(mdp)
        v0 = np.zeros(mdp.n_states) if v0 is None else v0
        self.trace_ = run_avi(
            mdp, v0, self.n_iter, self._error_model(), self.tie_break, self.tie_tol
        )
        self.mdp_ = mdp
        self.n_states_ = mdp.n_states
        self.policy_ = self.trace_.policy(self.trace_.k)
        self.value_ = self.trace_.value(self.trace_.k)
        return self

    def predict(self, states):
        check_is_fitted(self, "trace_")
        states = np.asarray(states)
        if np.any(states < 0) or np.any(states >= self.n_states_):
            raise ValueError("state index out of range")
        return self.policy_[states]

    def periodic_policy(self, m=1):
        check_is_fitted(self, "trace_")
        return extract_periodic_policy(self.trace_, m)

    def policy_value(self, m=1, tol=DEFAULT_TOL):
        """Value of the periodic policy over the last ``m`` policies."""
        return evaluate_periodic(self.mdp_, self.periodic_policy(m), tol)

    def score(self, m=1, tol=DEFAULT_TOL):
        """Negated loss ``-||v* - v_{k,m}||``; higher is better."""
        check_is_fitted(self, "trace_")
        v_star = solve_optimal(self.mdp_, tol).value
        return -loss(v_star, self.policy_value(m, tol))
