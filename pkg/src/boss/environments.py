"""Chain and Chain2 benchmark environments.

States are 0-indexed here; CSV output and documentation count from 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import TabularMDP

ADVANCE = 0
RESET = 1
N_CHAIN_STATES = 5


@dataclass(frozen=True, eq=False)
class OutcomeSpec:
    """Maps abstract outcomes to successor states and rewards.

    ``successor[s, o]`` and ``reward[s, o]`` give where outcome ``o`` leads from
    state ``s`` and what it pays. ``intended[a]`` is the outcome action ``a``
    aims for; any other outcome counts as a slip.
    """

    successor: np.ndarray
    reward: np.ndarray
    intended: np.ndarray

    def __post_init__(self):
        succ = np.array(self.successor, dtype=int)
        rew = np.array(self.reward, dtype=float)
        intended = np.array(self.intended, dtype=int)
        if succ.ndim != 2 or rew.shape != succ.shape:
            raise ValueError("successor and reward must both have shape (S, n_outcomes)")
        n_states, n_outcomes = succ.shape
        if np.any(succ < 0) or np.any(succ >= n_states):
            raise ValueError("successor states out of range")
        if np.any(intended < 0) or np.any(intended >= n_outcomes):
            raise ValueError("intended outcomes out of range")
        decode = np.full((n_states, n_states), -1, dtype=int)
        for s in range(n_states):
            for o in range(n_outcomes):
                if decode[s, succ[s, o]] != -1:
                    raise ValueError(f"outcomes from state {s} do not reach distinct successors")
                decode[s, succ[s, o]] = o
        for arr in (succ, rew, intended, decode):
            arr.setflags(write=False)
        object.__setattr__(self, "successor", succ)
        object.__setattr__(self, "reward", rew)
        object.__setattr__(self, "intended", intended)
        object.__setattr__(self, "_decode", decode)

    @property
    def n_states(self) -> int:
        return self.successor.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.successor.shape[1]

    @property
    def n_actions(self) -> int:
        return self.intended.shape[0]

    def decode(self, s: int, s_next: int) -> int:
        """Outcome that takes ``s`` to ``s_next``; raises ValueError if none does."""
        o = int(self._decode[s, s_next])
        if o < 0:
            raise ValueError(f"no outcome leads from state {s} to state {s_next}")
        return o

    def reward_tensor(self, n_actions: int | None = None) -> np.ndarray:
        """Rewards indexed (s, a, s'); zero wherever no outcome reaches s'."""
        n_actions = self.n_actions if n_actions is None else n_actions
        r = np.zeros((self.n_states, n_actions, self.n_states))
        for s in range(self.n_states):
            for o in range(self.n_outcomes):
                r[s, :, self.successor[s, o]] = self.reward[s, o]
        return r

    def transition_tensor(self, outcome_probs) -> np.ndarray:
        """Expand per-(s, a) outcome probabilities of shape (S, A, n_outcomes) to (S, A, S)."""
        p = np.asarray(outcome_probs, dtype=float)
        t = np.zeros((self.n_states, p.shape[1], self.n_states))
        for s in range(self.n_states):
            for o in range(self.n_outcomes):
                t[s, :, self.successor[s, o]] += p[s, :, o]
        return t

    def build_mdp(self, outcome_probs, discount: float) -> TabularMDP:
        return TabularMDP(self.transition_tensor(outcome_probs), self.reward_tensor(), discount)

    def slip_outcome_probs(self, slip) -> np.ndarray:
        """Outcome probabilities for a two-outcome spec given a slip probability per action."""
        if self.n_outcomes != 2:
            raise ValueError("slip parameterisation needs exactly two outcomes")
        slip = np.broadcast_to(np.asarray(slip, dtype=float), (self.n_actions,))
        p = np.empty((self.n_states, self.n_actions, 2))
        for a in range(self.n_actions):
            p[:, a, self.intended[a]] = 1.0 - slip[a]
            p[:, a, 1 - self.intended[a]] = slip[a]
        return p


@dataclass(frozen=True, eq=False)
class EnvInstance:
    name: str
    mdp: TabularMDP
    outcomes: OutcomeSpec
    outcome_probs: np.ndarray
    true_clusters: tuple[int, ...]
    start_state: int = 0

    @property
    def n_states(self) -> int:
        return self.mdp.n_states

    @property
    def n_actions(self) -> int:
        return self.mdp.n_actions


def chain_outcomes(n_states: int = N_CHAIN_STATES) -> OutcomeSpec:
    successor = np.empty((n_states, 2), dtype=int)
    reward = np.zeros((n_states, 2))
    for s in range(n_states):
        successor[s, ADVANCE] = min(s + 1, n_states - 1)
        successor[s, RESET] = 0
        reward[s, RESET] = 2.0
    reward[n_states - 1, ADVANCE] = 10.0
    # action 0 ("Action 1") aims to advance, action 1 ("Action 2") to reset
    return OutcomeSpec(successor, reward, intended=np.array([ADVANCE, RESET]))


def _env(name, outcome_probs, clusters, discount) -> EnvInstance:
    outcomes = chain_outcomes(len(clusters))
    probs = np.asarray(outcome_probs, dtype=float)
    probs.setflags(write=False)
    return EnvInstance(
        name=name,
        mdp=outcomes.build_mdp(probs, discount),
        outcomes=outcomes,
        outcome_probs=probs,
        true_clusters=tuple(clusters),
    )


def make_chain(discount: float = 0.95) -> EnvInstance:
    """Five-state chain; each action's outcome is switched with probability 0.2."""
    outcomes = chain_outcomes()
    return _env("chain", outcomes.slip_outcome_probs(0.2), [1] * N_CHAIN_STATES, discount)


def make_chain2(discount: float = 0.95) -> EnvInstance:
    """Chain variant whose even-numbered states (2 and 4) have near-reversed dynamics."""
    clusters = [1, 2, 1, 2, 1]
    outcomes = chain_outcomes()
    # cluster 1 rows must be bit-identical to Chain's
    probs = outcomes.slip_outcome_probs(0.2)
    for s, c in enumerate(clusters):
        if c == 2:
            probs[s, 0] = (0.3, 0.7)
            probs[s, 1] = (0.7, 0.3)
    return _env("chain2", probs, clusters, discount)


ENVIRONMENTS = {"chain": make_chain, "chain2": make_chain2}


def make_env(name: str, discount: float = 0.95) -> EnvInstance:
    try:
        factory = ENVIRONMENTS[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; expected one of {sorted(ENVIRONMENTS)}") from None
    return factory(discount)


def env_step(env: EnvInstance, state: int, action: int, rng: np.random.Generator) -> tuple[float, int, int]:
    """Sample one transition; returns ``(reward, next_state, outcome)``."""
    p = env.outcome_probs[state, action]
    u = rng.random()
    # inverse-CDF over outcomes, so a forced uniform pins the outcome in tests
    outcome = int(np.searchsorted(np.cumsum(p), u, side="right"))
    outcome = min(outcome, len(p) - 1)
    return (
        float(env.outcomes.reward[state, outcome]),
        int(env.outcomes.successor[state, outcome]),
        outcome,
    )
