"""Non-parametric state-clustering posterior.

States are partitioned by a Chinese restaurant process. Each (cluster, action)
pair has a multinomial over outcomes with a Dirichlet(eta) prior; those
multinomials are integrated out, so the posterior is a distribution over
partitions only. Partitions are sampled with collapsed Gibbs sweeps, and
per-cluster outcome distributions are then drawn from the conjugate
posterior predictive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import gammaln

from .environments import OutcomeSpec
from .mdp import TabularMDP
from .priors import PosteriorModel

DEFAULT_ALPHA = 0.5
DEFAULT_BURN = 500
DEFAULT_THIN = 50


def canonicalize(assignment) -> np.ndarray:
    """Relabel cluster ids 0, 1, 2, ... in order of first appearance."""
    labels = np.asarray(assignment, dtype=np.int64)
    mapping: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, c in enumerate(labels.tolist()):
        out[i] = mapping.setdefault(c, len(mapping))
    return out


@dataclass(frozen=True)
class Clustering:
    """Assignment of states to clusters, stored in canonical form."""

    assignment: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(c) for c in canonicalize(self.assignment)))

    @classmethod
    def single(cls, n_states: int) -> Clustering:
        return cls((0,) * n_states)

    @property
    def n_clusters(self) -> int:
        return max(self.assignment) + 1 if self.assignment else 0

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(int(n) for n in np.bincount(self.assignment, minlength=self.n_clusters))

    def members(self, cluster: int) -> list[int]:
        return [s for s, c in enumerate(self.assignment) if c == cluster]

    def blocks(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(self.members(c)) for c in range(self.n_clusters))


def dcm_log_marginal(counts, eta) -> float:
    """Log marginal likelihood of one cluster's outcome counts.

    ``counts`` has shape (n_member_states, n_actions, n_outcomes); a 2-D array
    is read as a single state. Each action's multinomial is integrated against
    Dirichlet(``eta``). The per-state multinomial coefficients are included, so
    the value is the probability of the counts themselves rather than of one
    particular ordering of observations.
    """
    o = np.asarray(counts, dtype=float)
    if o.ndim == 2:
        o = o[None]
    eta = np.asarray(eta, dtype=float)
    if o.size == 0:
        return 0.0
    if np.any(o < 0):
        raise ValueError("counts must be non-negative")
    per_state_totals = o.sum(axis=2)
    multinomial_coef = gammaln(per_state_totals + 1).sum() - gammaln(o + 1).sum()
    pooled = o.sum(axis=0)
    n_actions = pooled.shape[0]
    polya = (
        n_actions * (gammaln(eta.sum()) - gammaln(eta).sum())
        + gammaln(pooled + eta).sum()
        - gammaln(pooled.sum(axis=1) + eta.sum()).sum()
    )
    return float(multinomial_coef + polya)


def crp_log_prior(clustering, alpha: float) -> float:
    """Log CRP probability of a partition: alpha^r Gamma(alpha)/Gamma(alpha+n) prod Gamma(size)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not isinstance(clustering, Clustering):
        clustering = Clustering(tuple(clustering))
    sizes = np.array(clustering.sizes, dtype=float)
    n = sizes.sum()
    return float(
        len(sizes) * math.log(alpha) + math.lgamma(alpha) - math.lgamma(alpha + n) + gammaln(sizes).sum()
    )


def log_joint(clustering, counts, alpha: float, eta) -> float:
    """log p(counts | clustering) + log p(clustering | alpha)."""
    if not isinstance(clustering, Clustering):
        clustering = Clustering(tuple(clustering))
    counts = np.asarray(counts)
    total = crp_log_prior(clustering, alpha)
    for block in clustering.blocks():
        total += dcm_log_marginal(counts[list(block)], eta)
    return total


def conditional_log_weights_reference(assignment, s: int, counts, alpha: float, eta) -> np.ndarray:
    """Unnormalised log p(state ``s`` joins each cluster | the rest) from full joints.

    Candidates are the clusters of the other states in canonical order followed
    by one fresh cluster. Slow; used to check the sampler.
    """
    base = canonicalize(assignment)
    labels = sorted({int(c) for i, c in enumerate(base) if i != s})
    fresh = max(labels, default=-1) + 1
    out = []
    for c in labels + [fresh]:
        trial = base.copy()
        trial[s] = c
        out.append(log_joint(trial, counts, alpha, eta))
    return np.array(out)


# -- compiled sampler --------------------------------------------------------


@numba.njit(cache=True)
def _polya_term(pooled, extra, eta, eta_sum):
    # sum over actions of log Gamma(pooled+extra+eta) - log Gamma(total+eta_sum)
    total = 0.0
    for a in range(pooled.shape[0]):
        row = 0.0
        for i in range(pooled.shape[1]):
            x = pooled[a, i] + extra[a, i]
            row += x
            total += math.lgamma(x + eta[i])
        total -= math.lgamma(row + eta_sum)
    return total


@numba.njit(cache=True)
def _state_log_weights(pooled, sizes, n_slots, counts_s, alpha, eta, out):
    """Log weights for placing one state, written into ``out``.

    Slots ``0..n_slots-1`` with nonzero size are existing clusters; the final
    entry is a fresh cluster. Returns the number of weights written. Only the
    factors that differ between candidates are kept.
    """
    eta_sum = eta.sum()
    zero = np.zeros_like(counts_s)
    k = 0
    for c in range(n_slots):
        if sizes[c] == 0:
            continue
        out[k] = (
            math.log(sizes[c])
            + _polya_term(pooled[c], counts_s, eta, eta_sum)
            - _polya_term(pooled[c], zero, eta, eta_sum)
        )
        k += 1
    out[k] = (
        math.log(alpha)
        + _polya_term(zero, counts_s, eta, eta_sum)
        - _polya_term(zero, zero, eta, eta_sum)
    )
    return k + 1


@numba.njit(cache=True)
def _canonicalize_inplace(assign):
    n = assign.shape[0]
    mapping = np.full(n, -1, dtype=np.int64)
    nxt = 0
    for s in range(n):
        c = assign[s]
        if mapping[c] < 0:
            mapping[c] = nxt
            nxt += 1
        assign[s] = mapping[c]
    return nxt


@numba.njit(cache=True)
def _gibbs_sweeps(assign, counts, alpha, eta, uniforms):
    """Run ``uniforms.shape[0]`` sweeps in place, visiting states in index order."""
    n_states, n_actions, n_outcomes = counts.shape
    pooled = np.zeros((n_states, n_actions, n_outcomes))
    sizes = np.zeros(n_states, dtype=np.int64)
    weights = np.empty(n_states + 1)
    slot_of = np.empty(n_states + 1, dtype=np.int64)
    _canonicalize_inplace(assign)
    for s in range(n_states):
        pooled[assign[s]] += counts[s]
        sizes[assign[s]] += 1
    for sweep in range(uniforms.shape[0]):
        for s in range(n_states):
            c_old = assign[s]
            pooled[c_old] -= counts[s]
            sizes[c_old] -= 1
            n_w = _state_log_weights(pooled, sizes, n_states, counts[s], alpha, eta, weights)
            # map weight index -> slot; fresh cluster takes the lowest empty slot
            k = 0
            fresh = -1
            for c in range(n_states):
                if sizes[c] > 0:
                    slot_of[k] = c
                    k += 1
                elif fresh < 0:
                    fresh = c
            slot_of[k] = fresh
            top = weights[0]
            for j in range(1, n_w):
                if weights[j] > top:
                    top = weights[j]
            norm = 0.0
            for j in range(n_w):
                weights[j] = math.exp(weights[j] - top)
                norm += weights[j]
            target = uniforms[sweep, s] * norm
            acc = 0.0
            choice = n_w - 1
            for j in range(n_w):
                acc += weights[j]
                if target < acc:
                    choice = j
                    break
            c_new = slot_of[choice]
            assign[s] = c_new
            pooled[c_new] += counts[s]
            sizes[c_new] += 1
        _canonicalize_inplace(assign)
        pooled[:] = 0.0
        sizes[:] = 0
        for s in range(n_states):
            pooled[assign[s]] += counts[s]
            sizes[assign[s]] += 1
    return assign


def state_log_weights(clustering, s: int, counts, alpha: float, eta) -> np.ndarray:
    """Compiled-path conditional log weights, in the same candidate order as the reference."""
    assign = canonicalize(clustering.assignment if isinstance(clustering, Clustering) else clustering)
    counts = np.asarray(counts, dtype=float)
    n_states = counts.shape[0]
    pooled = np.zeros(counts.shape)
    sizes = np.zeros(n_states, dtype=np.int64)
    for i in range(n_states):
        if i != s:
            pooled[assign[i]] += counts[i]
            sizes[assign[i]] += 1
    out = np.empty(n_states + 1)
    n = _state_log_weights(pooled, sizes, n_states, counts[s], float(alpha), np.asarray(eta, float), out)
    return out[:n]


# -- posterior ---------------------------------------------------------------


class ClusterPosterior(PosteriorModel):
    """CRP-clustered outcome model; plugs into BOSS like any other posterior.

    The Gibbs chain restarts from a single cluster with a fresh burn-in the
    first time a model is sampled after new data arrives. Further samples
    without intervening data continue the chain after ``gibbs_thin`` sweeps,
    so one batch of K samples costs ``burn + (K - 1) * thin`` sweeps.
    """

    name = "cluster"

    def __init__(
        self,
        outcomes: OutcomeSpec,
        n_actions: int,
        discount: float,
        alpha: float = DEFAULT_ALPHA,
        eta=None,
        gibbs_burn: int = DEFAULT_BURN,
        gibbs_thin: int = DEFAULT_THIN,
    ):
        super().__init__(outcomes, n_actions, discount)
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        eta = np.ones(outcomes.n_outcomes) if eta is None else np.asarray(eta, dtype=float)
        if eta.shape != (outcomes.n_outcomes,) or np.any(eta <= 0):
            raise ValueError("eta must hold one positive pseudo-count per outcome")
        if gibbs_burn < 0 or gibbs_thin < 0:
            raise ValueError("sweep counts must be non-negative")
        self.alpha = float(alpha)
        self.eta = eta
        self.gibbs_burn = int(gibbs_burn)
        self.gibbs_thin = int(gibbs_thin)
        self.outcome_counts = np.zeros((self.n_states, n_actions, outcomes.n_outcomes), dtype=np.int64)
        self.current = Clustering.single(self.n_states)
        self._stale = True

    def update(self, s, a, s_next):
        self.outcome_counts[s, a, self.outcomes.decode(s, s_next)] += 1
        self._stale = True

    def run_sweeps(self, n_sweeps: int, rng: np.random.Generator) -> Clustering:
        if n_sweeps > 0:
            assign = np.array(self.current.assignment, dtype=np.int64)
            uniforms = rng.random((n_sweeps, self.n_states))
            _gibbs_sweeps(assign, self.outcome_counts.astype(float), self.alpha, self.eta, uniforms)
            self.current = Clustering(tuple(assign))
        return self.current

    def pooled_counts(self, clustering: Clustering | None = None) -> np.ndarray:
        """Counts summed over each cluster's states, shape (n_clusters, A, n_outcomes)."""
        clustering = self.current if clustering is None else clustering
        pooled = np.zeros((clustering.n_clusters,) + self.outcome_counts.shape[1:])
        np.add.at(pooled, np.array(clustering.assignment), self.outcome_counts)
        return pooled

    def _model_from_cluster_probs(self, theta: np.ndarray, clustering: Clustering) -> TabularMDP:
        probs = theta[np.array(clustering.assignment)]
        return self._mdp(self.outcomes.transition_tensor(probs))

    def sample_given_clustering(self, clustering: Clustering, rng: np.random.Generator) -> TabularMDP:
        g = rng.standard_gamma(self.eta + self.pooled_counts(clustering))
        return self._model_from_cluster_probs(g / g.sum(axis=-1, keepdims=True), clustering)

    def sample_model(self, rng):
        if self._stale:
            self.current = Clustering.single(self.n_states)
            self.run_sweeps(self.gibbs_burn, rng)
            self._stale = False
        else:
            self.run_sweeps(self.gibbs_thin, rng)
        return self.sample_given_clustering(self.current, rng)

    def mean_model(self):
        """Posterior-predictive mean conditional on the chain's current clustering."""
        alpha_post = self.eta + self.pooled_counts()
        return self._model_from_cluster_probs(alpha_post / alpha_post.sum(axis=-1, keepdims=True), self.current)


def gibbs_sweep(posterior: ClusterPosterior, rng: np.random.Generator) -> Clustering:
    """One sweep over all states; updates and returns ``posterior.current``."""
    return posterior.run_sweeps(1, rng)


def sample_clustered_model(posterior: ClusterPosterior, rng: np.random.Generator) -> TabularMDP:
    return posterior.sample_model(rng)
