"""Conjugate posteriors over Chain-style dynamics.

Every posterior exposes ``update(s, a, s_next)``, ``sample_model(rng)`` and
``mean_model()``. Rewards are never learned; they come from the environment's
:class:`~boss.environments.OutcomeSpec`.
"""

from __future__ import annotations

import numpy as np

from .environments import EnvInstance, OutcomeSpec
from .mdp import TabularMDP


class PosteriorModel:
    """Base class for beliefs over tabular MDPs."""

    def __init__(self, outcomes: OutcomeSpec, n_actions: int, discount: float):
        self.outcomes = outcomes
        self.n_states = outcomes.n_states
        self.n_actions = n_actions
        self.discount = discount
        self._rewards = outcomes.reward_tensor(n_actions)

    def update(self, s: int, a: int, s_next: int) -> None:
        raise NotImplementedError

    def sample_model(self, rng: np.random.Generator) -> TabularMDP:
        raise NotImplementedError

    def mean_model(self) -> TabularMDP:
        raise NotImplementedError

    def sample_models(self, k: int, rng: np.random.Generator) -> list[TabularMDP]:
        return [self.sample_model(rng) for _ in range(k)]

    def _mdp(self, transitions: np.ndarray) -> TabularMDP:
        return TabularMDP(transitions, self._rewards, self.discount)


def _normalise_rows(t: np.ndarray) -> np.ndarray:
    # guards against the last ulp after Gamma normalisation
    return t / t.sum(axis=-1, keepdims=True)


class FullPosterior(PosteriorModel):
    """Independent Dirichlet over next states for every state-action pair."""

    name = "full"

    def __init__(self, outcomes: OutcomeSpec, n_actions: int, discount: float, prior: float = 1.0):
        super().__init__(outcomes, n_actions, discount)
        if prior <= 0:
            raise ValueError("Dirichlet pseudo-count must be positive")
        self.prior = float(prior)
        self.dirichlet_params = np.full((self.n_states, n_actions, self.n_states), self.prior)

    def update(self, s, a, s_next):
        self.dirichlet_params[s, a, s_next] += 1.0

    def sample_model(self, rng):
        # Dirichlet via normalised Gamma draws, one row per (s, a)
        g = rng.standard_gamma(self.dirichlet_params)
        return self._mdp(_normalise_rows(g))

    def mean_model(self):
        return self._mdp(_normalise_rows(self.dirichlet_params))


class SlipPosterior(PosteriorModel):
    """Beta posterior over slip probabilities, shared across groups of actions.

    ``beta_params[g] = (non_slip_count, slip_count)``. With one group every
    action shares a single slip probability ("tied"); with one group per
    action each action has its own ("semi").
    """

    def __init__(
        self,
        outcomes: OutcomeSpec,
        n_actions: int,
        discount: float,
        per_action: bool,
        prior: tuple[float, float] = (1.0, 1.0),
    ):
        super().__init__(outcomes, n_actions, discount)
        if outcomes.n_outcomes != 2:
            raise ValueError("slip posteriors need a two-outcome spec")
        if min(prior) <= 0:
            raise ValueError("Beta parameters must be positive")
        self.per_action = per_action
        self.prior = (float(prior[0]), float(prior[1]))
        n_groups = n_actions if per_action else 1
        self.beta_params = np.tile(np.array(self.prior), (n_groups, 1))

    @property
    def name(self) -> str:
        return "semi" if self.per_action else "tied"

    def _group(self, a: int) -> int:
        return a if self.per_action else 0

    def update(self, s, a, s_next):
        outcome = self.outcomes.decode(s, s_next)
        slipped = outcome != self.outcomes.intended[a]
        self.beta_params[self._group(a), int(slipped)] += 1.0

    def _slip_per_action(self, slip_by_group: np.ndarray) -> np.ndarray:
        return np.array([slip_by_group[self._group(a)] for a in range(self.n_actions)])

    def sample_model(self, rng):
        slip = rng.beta(self.beta_params[:, 1], self.beta_params[:, 0])
        probs = self.outcomes.slip_outcome_probs(self._slip_per_action(slip))
        return self._mdp(self.outcomes.transition_tensor(probs))

    def mean_model(self):
        slip = self.beta_params[:, 1] / self.beta_params.sum(axis=1)
        probs = self.outcomes.slip_outcome_probs(self._slip_per_action(slip))
        return self._mdp(self.outcomes.transition_tensor(probs))


class TiedPosterior(SlipPosterior):
    def __init__(self, outcomes, n_actions, discount, prior=(1.0, 1.0)):
        super().__init__(outcomes, n_actions, discount, per_action=False, prior=prior)


class SemiPosterior(SlipPosterior):
    def __init__(self, outcomes, n_actions, discount, prior=(1.0, 1.0)):
        super().__init__(outcomes, n_actions, discount, per_action=True, prior=prior)


PRIORS = ("full", "tied", "semi", "cluster")


def make_posterior(kind: str, env: EnvInstance, full_prior: float = 1.0, **cluster_kwargs) -> PosteriorModel:
    """Fresh prior of the given kind for ``env``'s state, action and outcome shape.

    ``full_prior`` is the Dirichlet pseudo-count for the full prior; extra
    keyword arguments go to the cluster prior.
    """
    args = (env.outcomes, env.n_actions, env.mdp.discount)
    if kind == "full":
        return FullPosterior(*args, prior=full_prior)
    if kind == "tied":
        return TiedPosterior(*args)
    if kind == "semi":
        return SemiPosterior(*args)
    if kind == "cluster":
        from .cluster import ClusterPosterior

        return ClusterPosterior(*args, **cluster_kwargs)
    raise ValueError(f"unknown prior {kind!r}; expected one of {PRIORS}")
