"""BOSS and baseline agents."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mdp import DEFAULT_TOLERANCE, TabularMDP, policy_iteration, solve
from .priors import PosteriorModel


@dataclass(frozen=True, eq=False)
class MergedMDP:
    """K sampled models fused into one MDP with K*A actions.

    Merged action ``k`` is base action ``k % A`` under the dynamics of model
    ``k // A``.
    """

    mdp: TabularMDP
    n_models: int
    n_base_actions: int

    def decode(self, k: int) -> tuple[int, int]:
        return divmod(int(k), self.n_base_actions)


def merge_models(models) -> MergedMDP:
    models = list(models)
    if not models:
        raise ValueError("need at least one model to merge")
    first = models[0]
    for m in models[1:]:
        if m.transitions.shape != first.transitions.shape:
            raise ValueError("cannot merge models with different state/action shapes")
        if m.discount != first.discount:
            raise ValueError("cannot merge models with different discounts")
    # (K, S, A, S) -> (S, K, A, S) -> (S, K*A, S) keeps k = i*A + j
    t = np.stack([m.transitions for m in models], axis=1)
    r = np.stack([m.rewards for m in models], axis=1)
    n_states, k, n_actions, _ = t.shape
    merged = TabularMDP(
        t.reshape(n_states, k * n_actions, n_states),
        r.reshape(n_states, k * n_actions, n_states),
        first.discount,
    )
    return MergedMDP(merged, k, n_actions)


class BossAgent:
    """Best of Sampled Set.

    Whenever some state-action pair has been tried exactly ``B`` times, the
    next action triggers a fresh batch of ``K`` posterior samples, which are
    merged and solved; the merged policy is then followed until the next
    trigger.
    """

    def __init__(self, posterior: PosteriorModel, K: int = 5, B: int = 10, tolerance: float = DEFAULT_TOLERANCE):
        if K < 1 or B < 1:
            raise ValueError("K and B must both be at least 1")
        self.posterior = posterior
        self.K = int(K)
        self.B = int(B)
        self.tolerance = tolerance
        self.q = np.zeros((posterior.n_states, posterior.n_actions), dtype=np.int64)
        self.do_sample = True
        self.merged: MergedMDP | None = None
        self.policy: np.ndarray | None = None
        self.n_resamples = 0
        self.resampled_last_act = False

    def resample(self, rng: np.random.Generator) -> None:
        models = self.posterior.sample_models(self.K, rng)
        self.merged = merge_models(models)
        _, self.policy = solve(self.merged.mdp, self.tolerance)
        self.do_sample = False
        self.n_resamples += 1

    def act(self, s: int, rng: np.random.Generator) -> int:
        self.resampled_last_act = self.do_sample
        if self.do_sample:
            self.resample(rng)
        _, base_action = self.merged.decode(self.policy[s])
        return base_action

    def observe(self, s: int, a: int, reward: float, s_next: int) -> None:
        self.q[s, a] += 1
        self.posterior.update(s, a, s_next)
        if self.q[s, a] == self.B:
            self.do_sample = True


class ExploitAgent:
    """Plans on the posterior-mean model after every observation.

    Replanning uses exact policy iteration started from the previous policy;
    consecutive mean models differ by one observation, so this usually takes
    one or two linear solves.
    """

    def __init__(self, posterior: PosteriorModel):
        self.posterior = posterior
        self._last_policy = None
        self._policy = None
        self.resampled_last_act = False

    def act(self, s: int, rng: np.random.Generator | None = None) -> int:
        if self._policy is None:
            _, self._policy = policy_iteration(self.posterior.mean_model(), self._last_policy)
            self._last_policy = self._policy
        return int(self._policy[s])

    def observe(self, s, a, reward, s_next) -> None:
        self.posterior.update(s, a, s_next)
        self._policy = None


def exploit_act(posterior: PosteriorModel, s: int, tolerance: float = DEFAULT_TOLERANCE) -> int:
    _, policy = solve(posterior.mean_model(), tolerance)
    return int(policy[s])


class FixedPolicyAgent:
    """Follows a given deterministic policy and ignores observations."""

    def __init__(self, policy):
        self.policy = np.asarray(policy, dtype=int)
        self.resampled_last_act = False

    def act(self, s, rng=None) -> int:
        return int(self.policy[s])

    def observe(self, s, a, reward, s_next) -> None:
        pass


class RandomAgent:
    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self.resampled_last_act = False

    def act(self, s, rng) -> int:
        return int(rng.integers(self.n_actions))

    def observe(self, s, a, reward, s_next) -> None:
        pass


def optimistic_sample_size(delta1: float) -> int:
    """Samples needed so that, with probability 1 - delta1, one is optimistic at a fixed state.

    Ceiling of log(delta1/2) / log(1 - delta1/2).
    """
    if not 0.0 < delta1 < 1.0:
        raise ValueError(f"delta1 must lie in (0, 1), got {delta1}")
    return math.ceil(math.log(delta1 / 2) / math.log1p(-delta1 / 2))
