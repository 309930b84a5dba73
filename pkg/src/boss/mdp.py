"""Tabular MDPs and exact dynamic-programming planners."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_ITERATIONS = 100_000


class PlanningError(RuntimeError):
    """Raised when a fixed-point iteration fails to converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class TabularMDP:
    """Finite MDP with rewards indexed by (s, a, s').

    ``transitions`` and ``rewards`` both have shape (S, A, S). Arrays are made
    read-only on construction so instances can be shared freely.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    discount: float
    expected_rewards: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.array(self.transitions, dtype=float)
        r = np.array(self.rewards, dtype=float)
        if t.ndim != 3 or t.shape[0] != t.shape[2]:
            raise ValueError(f"transitions must have shape (S, A, S), got {t.shape}")
        if r.shape != t.shape:
            raise ValueError(f"rewards shape {r.shape} does not match transitions {t.shape}")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if not np.allclose(t.sum(axis=2), 1.0, rtol=0.0, atol=1e-9):
            raise ValueError("transition rows must sum to 1")
        er = np.einsum("ijk,ijk->ij", t, r)
        for arr in (t, r, er):
            arr.setflags(write=False)
        object.__setattr__(self, "transitions", t)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "expected_rewards", er)

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    def q_values(self, values: np.ndarray) -> np.ndarray:
        """One-step backup Q(s, a) = r(s, a) + discount * sum_s' T(s, a, s') V(s')."""
        return self.expected_rewards + self.discount * (self.transitions @ values)


def _check_values(mdp: TabularMDP, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape != (mdp.n_states,):
        raise ValueError(f"value function must have length {mdp.n_states}, got shape {v.shape}")
    return v


def value_iteration(
    mdp: TabularMDP,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    initial_values=None,
) -> np.ndarray:
    """Optimal state values by repeated Bellman backups.

    Iteration stops once the contraction bound guarantees the result is within
    ``tolerance`` of the true fixed point in sup-norm. That is stricter than
    asking for a one-step residual below ``tolerance``, and it is what lets
    values from separately solved MDPs be compared at ``2 * tolerance``.

    ``initial_values`` warm-starts the iteration; the answer does not depend on
    it beyond the tolerance.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    gamma = mdp.discount
    # |V_{k+1} - V*| <= gamma / (1 - gamma) * |V_{k+1} - V_k|
    stop = tolerance * (1.0 - gamma) / gamma if gamma > 0 else np.inf
    v = np.zeros(mdp.n_states) if initial_values is None else _check_values(mdp, initial_values).copy()
    residual = np.inf
    for _ in range(max_iterations):
        v_new = mdp.q_values(v).max(axis=1)
        residual = float(np.max(np.abs(v_new - v)))
        v = v_new
        if residual <= stop:
            return v
    raise PlanningError(f"value iteration did not converge in {max_iterations} iterations", residual)


def greedy_policy(mdp: TabularMDP, values) -> np.ndarray:
    """Greedy actions with respect to ``values``; ties go to the lowest action index."""
    q = mdp.q_values(_check_values(mdp, values))
    # np.argmax returns the first maximal index
    return np.argmax(q, axis=1)


def evaluate_policy(
    mdp: TabularMDP,
    policy,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> np.ndarray:
    """Value of a deterministic policy, iterated to ``tolerance`` of its fixed point."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    pi = np.asarray(policy, dtype=int)
    if pi.shape != (mdp.n_states,):
        raise ValueError(f"policy must have length {mdp.n_states}, got shape {pi.shape}")
    if np.any(pi < 0) or np.any(pi >= mdp.n_actions):
        raise ValueError("policy contains an out-of-range action")
    states = np.arange(mdp.n_states)
    t_pi = mdp.transitions[states, pi]
    r_pi = mdp.expected_rewards[states, pi]
    gamma = mdp.discount
    stop = tolerance * (1.0 - gamma) / gamma if gamma > 0 else np.inf
    v = np.zeros(mdp.n_states)
    residual = np.inf
    for _ in range(max_iterations):
        v_new = r_pi + gamma * (t_pi @ v)
        residual = float(np.max(np.abs(v_new - v)))
        v = v_new
        if residual <= stop:
            return v
    raise PlanningError(f"policy evaluation did not converge in {max_iterations} iterations", residual)


def policy_values(mdp: TabularMDP, policy) -> np.ndarray:
    """Exact value of a deterministic policy via a linear solve."""
    pi = np.asarray(policy, dtype=int)
    states = np.arange(mdp.n_states)
    a = np.eye(mdp.n_states) - mdp.discount * mdp.transitions[states, pi]
    return np.linalg.solve(a, mdp.expected_rewards[states, pi])


def policy_iteration(mdp: TabularMDP, initial_policy=None, max_iterations: int = 1000):
    """Howard's policy iteration with exact evaluation; returns ``(values, policy)``.

    The current action is kept unless another is better by more than a
    rounding margin, which guarantees termination. The returned policy is then
    re-extracted greedily so ties follow the lowest-index rule.
    """
    n = mdp.n_states
    pi = np.zeros(n, dtype=int) if initial_policy is None else np.array(initial_policy, dtype=int)
    states = np.arange(n)
    for _ in range(max_iterations):
        v = policy_values(mdp, pi)
        q = mdp.q_values(v)
        best = np.argmax(q, axis=1)
        margin = 1e-12 * max(1.0, float(np.max(np.abs(v))))
        improve = q[states, best] > q[states, pi] + margin
        if not improve.any():
            return v, greedy_policy(mdp, v)
        pi = np.where(improve, best, pi)
    raise PlanningError(f"policy iteration did not converge in {max_iterations} iterations", np.nan)


def solve(mdp: TabularMDP, tolerance: float = DEFAULT_TOLERANCE, initial_values=None):
    """Return ``(values, policy)`` for ``mdp``."""
    v = value_iteration(mdp, tolerance, initial_values=initial_values)
    return v, greedy_policy(mdp, v)
