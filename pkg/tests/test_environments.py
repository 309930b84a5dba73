import numpy as np
import pytest

from boss.environments import ADVANCE, RESET, OutcomeSpec, env_step, make_chain, make_chain2, make_env
from boss.mdp import greedy_policy, value_iteration

# 0-indexed: "state 5" is 4, "Action 1" is 0


class ForcedRng:
    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u


def test_chain_last_state_pays_ten():
    mdp = make_chain().mdp
    assert mdp.transitions[4, 0, 4] == pytest.approx(0.8)
    assert mdp.rewards[4, 0, 4] == 10.0


def test_chain_reset_action():
    mdp = make_chain().mdp
    for s in range(5):
        assert mdp.transitions[s, 1, 0] == pytest.approx(0.8)
        assert mdp.rewards[s, 1, 0] == 2.0


def test_chain_structure():
    env = make_chain()
    mdp = env.mdp
    np.testing.assert_allclose(mdp.transitions.sum(axis=2), 1.0, atol=1e-12)
    for s in range(4):
        assert mdp.transitions[s, 0, s + 1] == pytest.approx(0.8)
        assert mdp.transitions[s, 0, 0] == pytest.approx(0.2)
        assert mdp.rewards[s, 0, s + 1] == 0.0
    assert env.true_clusters == (1,) * 5
    assert env.start_state == 0


def test_chain2_cluster_two_dynamics():
    env = make_chain2()
    assert env.mdp.transitions[1, 0, 2] == pytest.approx(0.3)
    assert env.mdp.transitions[3, 1, 4] == pytest.approx(0.7)
    assert env.true_clusters == (1, 2, 1, 2, 1)


def test_chain2_odd_states_equal_chain():
    chain, chain2 = make_chain().mdp, make_chain2().mdp
    for s in (0, 2, 4):
        assert np.array_equal(chain.transitions[s], chain2.transitions[s])
    assert np.array_equal(chain.rewards, chain2.rewards)


@pytest.mark.parametrize("factory", [make_chain, make_chain2])
def test_transitions_rebuild_from_outcomes(factory):
    env = factory()
    rebuilt = env.outcomes.transition_tensor(env.outcome_probs)
    assert np.array_equal(rebuilt, env.mdp.transitions)
    # every row is supported only on the outcome successors
    for s in range(env.n_states):
        support = set(np.flatnonzero(env.mdp.transitions[s].sum(axis=0)))
        assert support <= set(env.outcomes.successor[s].tolist())


def test_chain_optimal_policy_is_action_one():
    mdp = make_chain().mdp
    assert greedy_policy(mdp, value_iteration(mdp)).tolist() == [0] * 5


def test_step_forced_outcomes():
    env = make_chain()
    assert env_step(env, 4, 0, ForcedRng(0.0)) == (10.0, 4, ADVANCE)
    assert env_step(env, 2, 1, ForcedRng(0.5)) == (2.0, 0, RESET)
    # the same action slipping pays the realised outcome's reward
    assert env_step(env, 4, 0, ForcedRng(0.9)) == (2.0, 0, RESET)


def test_step_frequency():
    env = make_chain()
    rng = np.random.default_rng(2024)
    n = 100_000
    advances = sum(env_step(env, 0, 0, rng)[2] == ADVANCE for _ in range(n))
    assert advances / n == pytest.approx(0.8, abs=0.005)


def test_step_is_seeded():
    env = make_chain2()

    def roll(seed):
        rng = np.random.default_rng(seed)
        s, out = 0, []
        for t in range(200):
            r, s, o = env_step(env, s, t % 2, rng)
            out.append((r, s, o))
        return out

    assert roll(7) == roll(7)
    assert roll(7) != roll(8)


def test_outcome_decoding():
    spec = make_chain().outcomes
    assert spec.decode(0, 1) == ADVANCE
    assert spec.decode(0, 0) == RESET
    assert spec.decode(4, 4) == ADVANCE
    with pytest.raises(ValueError):
        spec.decode(0, 3)


def test_outcome_spec_requires_distinct_successors():
    with pytest.raises(ValueError):
        OutcomeSpec(successor=[[0, 0], [1, 0]], reward=[[0, 0], [0, 0]], intended=[0, 1])


def test_make_env_rejects_unknown():
    with pytest.raises(ValueError):
        make_env("grid")
