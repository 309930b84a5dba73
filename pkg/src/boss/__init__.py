"""Best of Sampled Set (BOSS) model-based reinforcement learning on tabular MDPs."""

from .agents import BossAgent, ExploitAgent, MergedMDP, merge_models, optimistic_sample_size
from .cluster import ClusterPosterior, Clustering, crp_log_prior, dcm_log_marginal, gibbs_sweep
from .environments import EnvInstance, OutcomeSpec, env_step, make_chain, make_chain2, make_env
from .harness import ExperimentConfig, Summary, TrialResult, run_experiment, run_trial, write_results
from .mdp import PlanningError, TabularMDP, evaluate_policy, greedy_policy, value_iteration
from .priors import FullPosterior, PosteriorModel, SemiPosterior, TiedPosterior, make_posterior

__version__ = "0.1.0"
