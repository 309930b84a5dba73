"""Seeded multi-trial experiment runner and CSV output."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import BossAgent, ExploitAgent, FixedPolicyAgent, RandomAgent
from .cluster import DEFAULT_ALPHA, DEFAULT_BURN, DEFAULT_THIN
from .environments import ENVIRONMENTS, env_step, make_env
from .mdp import solve
from .priors import PRIORS, make_posterior

log = logging.getLogger(__name__)

AGENTS = ("boss", "exploit", "optimal", "random")
SUMMARY_HEADER = ["env", "agent", "prior", "K", "B", "gamma", "steps", "runs", "seed", "mean_cum_reward", "std_err"]
TRIALS_HEADER = ["run_id", "cum_reward"]
TRACE_HEADER = ["run_id", "step", "state", "action", "reward", "resampled"]


class ConfigError(ValueError):
    pass


class TrialError(RuntimeError):
    def __init__(self, config: ExperimentConfig, run_id: int, cause: BaseException):
        super().__init__(f"run {run_id} failed for {config.label()}: {cause!r}")
        self.run_id = run_id


@dataclass(frozen=True)
class ExperimentConfig:
    env: str = "chain"
    agent: str = "boss"
    prior: str = "tied"
    K: int = 5
    B: int = 10
    discount: float = 0.95
    steps: int = 1000
    runs: int = 500
    base_seed: int = 0
    alpha: float = DEFAULT_ALPHA
    gibbs_burn: int = DEFAULT_BURN
    gibbs_thin: int = DEFAULT_THIN
    full_prior: float = 1.0
    trace: bool = False

    def __post_init__(self):
        if self.env not in ENVIRONMENTS:
            raise ConfigError(f"unknown env {self.env!r}")
        if self.agent not in AGENTS:
            raise ConfigError(f"unknown agent {self.agent!r}")
        if self.prior not in PRIORS:
            raise ConfigError(f"unknown prior {self.prior!r}")
        if self.steps < 1 or self.runs < 1:
            raise ConfigError("steps and runs must be at least 1")
        if self.agent == "boss" and (self.K < 1 or self.B < 1):
            raise ConfigError("boss needs K >= 1 and B >= 1")
        if not 0.0 <= self.discount < 1.0:
            raise ConfigError("gamma must lie in [0, 1)")
        if self.base_seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.alpha <= 0 or self.gibbs_burn < 0 or self.gibbs_thin < 0:
            raise ConfigError("alpha must be positive and Gibbs sweep counts non-negative")
        if self.full_prior <= 0:
            raise ConfigError("full-prior pseudo-count must be positive")

    def label(self) -> str:
        return f"{self.env}/{self.agent}/{self.prior} K={self.K} B={self.B}"


@dataclass
class TrialResult:
    run_id: int
    cumulative_reward: float
    n_resamples: int = 0
    # rows of (step, state, action, reward, resampled), 0-indexed
    trace: list[tuple[int, int, int, float, bool]] | None = None


@dataclass(frozen=True)
class Summary:
    mean: float
    std_err: float
    runs: int
    config: ExperimentConfig = field(compare=False)

    def row(self) -> list:
        c = self.config
        return [c.env, c.agent, c.prior, c.K, c.B, c.discount, c.steps, self.runs, c.base_seed, self.mean, self.std_err]


def trial_seed(base_seed: int, run_id: int) -> np.random.SeedSequence:
    """Per-trial seed; depends only on (base_seed, run_id), never on run order."""
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(run_id,))


def make_agent(config: ExperimentConfig, env):
    if config.agent == "optimal":
        _, policy = solve(env.mdp)
        return FixedPolicyAgent(policy)
    if config.agent == "random":
        return RandomAgent(env.n_actions)
    cluster_kwargs = {}
    if config.prior == "cluster":
        cluster_kwargs = dict(alpha=config.alpha, gibbs_burn=config.gibbs_burn, gibbs_thin=config.gibbs_thin)
    posterior = make_posterior(config.prior, env, full_prior=config.full_prior, **cluster_kwargs)
    if config.agent == "boss":
        return BossAgent(posterior, K=config.K, B=config.B)
    return ExploitAgent(posterior)


def run_trial(config: ExperimentConfig, run_id: int) -> TrialResult:
    try:
        env = make_env(config.env, config.discount)
        agent = make_agent(config, env)
        env_seed, agent_seed = trial_seed(config.base_seed, run_id).spawn(2)
        env_rng = np.random.default_rng(env_seed)
        agent_rng = np.random.default_rng(agent_seed)
        trace = [] if config.trace else None
        s = env.start_state
        total = 0.0
        for step in range(config.steps):
            a = agent.act(s, agent_rng)
            reward, s_next, _ = env_step(env, s, a, env_rng)
            agent.observe(s, a, reward, s_next)
            total += reward
            if trace is not None:
                trace.append((step, s, a, reward, agent.resampled_last_act))
            s = s_next
    except Exception as exc:
        raise TrialError(config, run_id, exc) from exc
    return TrialResult(run_id, total, getattr(agent, "n_resamples", 0), trace)


def summarize(config: ExperimentConfig, rewards) -> Summary:
    """Mean and standard error (sample std / sqrt(n)); exact and order-independent."""
    values = [float(x) for x in rewards]
    n = len(values)
    if n == 0:
        raise ValueError("no trial results to summarise")
    mean = math.fsum(values) / n
    if n == 1:
        warnings.warn("standard error undefined for a single run; reporting 0", RuntimeWarning, stacklevel=2)
        return Summary(mean, 0.0, n, config)
    var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    return Summary(mean, math.sqrt(var / n), n, config)


def _run_one(args):
    return run_trial(*args)


def run_trials(config: ExperimentConfig, workers: int = 1) -> list[TrialResult]:
    """All trials of ``config`` ordered by run_id."""
    jobs = [(config, i) for i in range(config.runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, config.runs // (4 * workers))))
    else:
        results = [_run_one(job) for job in jobs]
    return sorted(results, key=lambda r: r.run_id)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> tuple[Summary, list[TrialResult]]:
    trials = run_trials(config, workers)
    summary = summarize(config, [t.cumulative_reward for t in trials])
    log.info("%s: mean %.1f +- %.1f over %d runs", config.label(), summary.mean, summary.std_err, summary.runs)
    return summary, trials


def pooled_std_err(a: Summary, b: Summary) -> float:
    """Standard error of the difference of two independent means."""
    return math.hypot(a.std_err, b.std_err)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def output_paths(out_path) -> dict[str, Path]:
    out = Path(out_path)
    return {
        "summary": out,
        "trials": out.with_name(out.stem + ".trials.csv"),
        "trace": out.with_name(out.stem + ".trace.csv"),
    }


def write_results(summary: Summary, trials, out_path) -> dict[str, Path]:
    """Write the summary CSV, plus trials and trace CSVs next to it when there is data.

    Trace states and actions are written 1-indexed.
    """
    paths = output_paths(out_path)
    written = {}
    with open(paths["summary"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerow([_fmt(x) for x in summary.row()])
    written["summary"] = paths["summary"]
    trials = sorted(trials, key=lambda t: t.run_id)
    if trials:
        with open(paths["trials"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRIALS_HEADER)
            for t in trials:
                w.writerow([t.run_id, _fmt(float(t.cumulative_reward))])
        written["trials"] = paths["trials"]
    if any(t.trace for t in trials):
        with open(paths["trace"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            for t in trials:
                for step, s, a, r, resampled in t.trace or ():
                    w.writerow([t.run_id, step + 1, s + 1, a + 1, _fmt(float(r)), int(resampled)])
        written["trace"] = paths["trace"]
    return written


def read_trials(path) -> list[TrialResult]:
    with open(path, newline="") as fh:
        return [TrialResult(int(row["run_id"]), float(row["cum_reward"])) for row in csv.DictReader(fh)]

