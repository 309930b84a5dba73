import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from boss.environments import make_chain, make_chain2
from boss.mdp import (
    PlanningError,
    TabularMDP,
    evaluate_policy,
    greedy_policy,
    policy_iteration,
    value_iteration,
)

from conftest import exact_policy_values, mdp_seeds, oracle_optimal_values, random_mdp

TOL = 1e-6


def self_loop(reward, discount=0.95):
    return TabularMDP(np.ones((1, 1, 1)), np.full((1, 1, 1), reward), discount)


def test_zero_rewards_give_zero_values():
    mdp = random_mdp(0)
    mdp = TabularMDP(mdp.transitions, np.zeros_like(mdp.rewards), 0.9)
    assert np.array_equal(value_iteration(mdp), np.zeros(4))
    assert np.array_equal(evaluate_policy(mdp, [1, 0, 2, 1]), np.zeros(4))


def test_self_loop_geometric_series():
    assert value_iteration(self_loop(10.0), TOL)[0] == pytest.approx(200.0, abs=TOL)
    assert evaluate_policy(self_loop(2.0), [0], TOL)[0] == pytest.approx(40.0, abs=TOL)


def test_chain_values_match_policy_iteration_oracle():
    mdp = make_chain(0.95).mdp
    np.testing.assert_allclose(value_iteration(mdp, TOL), oracle_optimal_values(mdp), atol=1e-4, rtol=0)


def test_chain_optimal_policy_always_advances():
    mdp = make_chain(0.95).mdp
    assert greedy_policy(mdp, value_iteration(mdp)).tolist() == [0] * 5


def test_ties_go_to_lowest_action():
    t = np.zeros((3, 4, 3))
    t[:, :, 1] = 1.0
    mdp = TabularMDP(t, np.ones((3, 4, 3)), 0.9)
    assert greedy_policy(mdp, value_iteration(mdp)).tolist() == [0, 0, 0]


def test_chain2_policy_matches_exhaustive_enumeration():
    mdp = make_chain2(0.95).mdp
    values = {pi: exact_policy_values(mdp, pi) for pi in itertools.product(range(2), repeat=5)}
    best = max(values, key=lambda pi: values[pi].sum())
    # the optimal policy dominates every other one in every state
    assert all(np.all(values[best] >= v - 1e-9) for v in values.values())
    assert tuple(greedy_policy(mdp, value_iteration(mdp))) == best


def test_evaluate_optimal_policy_agrees_with_value_iteration():
    mdp = make_chain(0.95).mdp
    v = value_iteration(mdp, TOL)
    np.testing.assert_allclose(evaluate_policy(mdp, greedy_policy(mdp, v), TOL), v, atol=2 * TOL, rtol=0)


def test_policy_iteration_agrees_with_value_iteration():
    for mdp in (make_chain().mdp, make_chain2().mdp, random_mdp(3)):
        v_pi, pi = policy_iteration(mdp)
        v = value_iteration(mdp, TOL)
        np.testing.assert_allclose(v_pi, v, atol=TOL, rtol=0)
        assert np.array_equal(pi, greedy_policy(mdp, v))


def test_non_convergence_raises_with_residual():
    with pytest.raises(PlanningError) as err:
        value_iteration(make_chain().mdp, TOL, max_iterations=3)
    assert err.value.residual > 0
    with pytest.raises(PlanningError):
        evaluate_policy(make_chain().mdp, [0] * 5, TOL, max_iterations=3)


@pytest.mark.parametrize(
    "transitions, discount",
    [
        (np.full((2, 1, 2), 0.6), 0.9),  # rows sum to 1.2
        (np.array([[[1.5, -0.5]], [[0.0, 1.0]]]), 0.9),
        (np.array([[[1.0, 0.0]], [[0.0, 1.0]]]), 1.0),
    ],
)
def test_invalid_mdps_rejected(transitions, discount):
    with pytest.raises(ValueError):
        TabularMDP(transitions, np.zeros_like(transitions), discount)


def test_shape_mismatch_rejected():
    mdp = make_chain().mdp
    with pytest.raises(ValueError):
        greedy_policy(mdp, np.zeros(4))
    with pytest.raises(ValueError):
        evaluate_policy(mdp, [0, 0, 0])
    with pytest.raises(ValueError):
        evaluate_policy(mdp, [0, 0, 0, 0, 2])


@settings(max_examples=40, deadline=None)
@given(mdp_seeds)
def test_planner_invariants(seed):
    mdp = random_mdp(seed)
    v = value_iteration(mdp, TOL)
    # monotone improvement
    assert np.all(mdp.q_values(v).max(axis=1) >= v - TOL)
    # the Bellman residual of the returned values is within tolerance
    assert np.max(np.abs(mdp.q_values(v).max(axis=1) - v)) <= TOL
    # greedy policy is near-optimal
    pi = greedy_policy(mdp, v)
    gap = (2 * TOL) / (1 - mdp.discount)
    assert np.all(np.abs(evaluate_policy(mdp, pi, TOL) - v) <= gap)
    # values bounded by the reward range
    lo, hi = mdp.rewards.min() / (1 - mdp.discount), mdp.rewards.max() / (1 - mdp.discount)
    assert np.all(v >= lo - TOL) and np.all(v <= hi + TOL)
    # close to the exact oracle
    np.testing.assert_allclose(v, oracle_optimal_values(mdp), atol=TOL, rtol=0)


@settings(max_examples=10, deadline=None)
@given(mdp_seeds)
def test_planning_is_bitwise_deterministic(seed):
    a, b = random_mdp(seed), random_mdp(seed)
    assert value_iteration(a).tobytes() == value_iteration(b).tobytes()
    assert greedy_policy(a, value_iteration(a)).tobytes() == greedy_policy(b, value_iteration(b)).tobytes()
