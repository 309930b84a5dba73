import numpy as np
import pytest
from hypothesis import strategies as st

from boss.mdp import TabularMDP


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_mdp(seed: int, n_states: int = 4, n_actions: int = 3, discount: float = 0.9) -> TabularMDP:
    r = np.random.default_rng(seed)
    t = r.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    rewards = r.uniform(-1.0, 5.0, size=(n_states, n_actions, n_states))
    return TabularMDP(t, rewards, discount)


mdp_seeds = st.integers(min_value=0, max_value=2**32 - 1)


def exact_policy_values(mdp: TabularMDP, policy) -> np.ndarray:
    """Independent oracle: solve (I - gamma P_pi) V = r_pi directly."""
    n = mdp.n_states
    p = np.array([[mdp.transitions[s, policy[s], s2] for s2 in range(n)] for s in range(n)])
    r = np.array([sum(mdp.transitions[s, policy[s], s2] * mdp.rewards[s, policy[s], s2] for s2 in range(n)) for s in range(n)])
    return np.linalg.solve(np.eye(n) - mdp.discount * p, r)


def oracle_optimal_values(mdp: TabularMDP) -> np.ndarray:
    """Independent oracle: plain policy iteration with exact linear solves."""
    policy = [0] * mdp.n_states
    while True:
        v = exact_policy_values(mdp, policy)
        q = mdp.expected_rewards + mdp.discount * np.einsum("sat,t->sa", mdp.transitions, v)
        new = [int(np.argmax(q[s])) if q[s].max() > q[s, policy[s]] + 1e-12 else policy[s] for s in range(mdp.n_states)]
        if new == policy:
            return v
        policy = new


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record a one-line verdict for the acceptance summary."""

    def _record(criterion: str, passed: bool, detail: str):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
