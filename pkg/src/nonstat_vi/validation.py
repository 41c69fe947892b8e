"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

import numpy as np

from .mdp import Mdp, _check_policy, _check_value, validate_mdp


class InvalidMdpError(ValueError):
    """Raised when an MDP breaks one of its invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid MDP: " + "; ".join(self.violations))


class ConvergenceError(RuntimeError):
    """A fixed-point iteration hit its iteration cap."""


def check_mdp(mdp) -> Mdp:
    if not isinstance(mdp, Mdp):
        raise TypeError(f"expected an Mdp, got {type(mdp).__name__}")
    violations = validate_mdp(mdp)
    if violations:
        raise InvalidMdpError(violations)
    return mdp


def check_value(mdp: Mdp, v) -> np.ndarray:
    v = _check_value(mdp, v)
    if not np.all(np.isfinite(v)):
        raise ValueError("value function has non-finite entries")
    return v


def check_policy(mdp: Mdp, pi) -> np.ndarray:
    return _check_policy(mdp, pi)


def check_tolerance(tol: float, name: str = "tol") -> float:
    tol = float(tol)
    if not tol > 0:
        raise ValueError(f"{name} must be positive, got {tol}")
    return tol
