"""Explicit Bayes mixtures over a finite hypothesis class."""

from __future__ import annotations

import math

from urlab.core import Percept, entropy
from urlab.errors import DomainError, EmptyClassError, ImpossiblePerceptError
from urlab.models.base import EnvironmentModel


def _weight_entropy(weights) -> float:
    h = 0.0
    for w in weights:
        if w > 0.0:
            h -= w * math.log(w)
    return max(h, 0.0)


class MixtureModel(EnvironmentModel):
    """xi(e) = sum_nu w_nu nu(e), updated by w_nu <- nu(e) / xi(e) * w_nu.

    Components are themselves :class:`EnvironmentModel` instances and are
    conditioned on the same history as the mixture. A component that assigns
    probability zero to an observed percept is falsified: its weight becomes
    exactly zero and it is never updated again.
    """

    def __init__(self, components, prior=None):
        super().__init__()
        if not components:
            raise DomainError("a mixture needs at least one component")
        self.components = list(components)
        k = len(self.components)
        if prior is None:
            prior = [1.0 / k] * k
        if len(prior) != k or any(p < 0.0 for p in prior):
            raise DomainError("prior must be a non-negative vector with one entry per component")
        total = math.fsum(prior)
        if total <= 0.0:
            raise DomainError("prior has no mass")
        self.weights = [p / total for p in prior]
        self.log_likelihoods = [0.0 if w > 0.0 else -math.inf for w in self.weights]
        self.num_actions = self.components[0].num_actions
        self.reward_bounds = self.components[0].reward_bounds

    def posterior(self) -> list[float]:
        return list(self.weights)

    def entropy(self) -> float:
        return entropy(self.weights)

    def percept_distribution(self, action):
        out: dict[Percept, float] = {}
        for w, nu in zip(self.weights, self.components):
            if w > 0.0:
                for e, p in nu.percept_distribution(action).items():
                    out[e] = out.get(e, 0.0) + w * p
        return out

    def conditional_probability(self, action, percept):
        return math.fsum(
            w * nu.conditional_probability(action, percept)
            for w, nu in zip(self.weights, self.components)
            if w > 0.0
        )

    def sample(self, action, rng):
        k = rng.categorical(self.weights)
        return self.components[k].sample(action, rng)

    def update(self, action, percept):
        likes = [
            nu.conditional_probability(action, percept) if w > 0.0 else 0.0
            for w, nu in zip(self.weights, self.components)
        ]
        xi = math.fsum(w * p for w, p in zip(self.weights, likes))
        if xi <= 0.0:
            raise ImpossiblePerceptError(f"mixture assigns zero probability to {percept}")
        h_before = _weight_entropy(self.weights)
        new = [w * p / xi for w, p in zip(self.weights, likes)]
        total = math.fsum(new)
        self.weights = [w / total for w in new]
        for i, (p, nu) in enumerate(zip(likes, self.components)):
            if p > 0.0:
                self.log_likelihoods[i] += math.log(p)
                nu.update(action, percept)
            else:
                self.weights[i] = 0.0
                self.log_likelihoods[i] = -math.inf
        self.last_probability = xi
        self.last_info_gain = h_before - _weight_entropy(self.weights)

    def _save(self):
        tokens = [nu.checkpoint() if w > 0.0 else None for w, nu in zip(self.weights, self.components)]
        return list(self.weights), list(self.log_likelihoods), tokens

    def _restore(self, state):
        weights, lls, tokens = state
        self.weights = list(weights)
        self.log_likelihoods = list(lls)
        for nu, tok in zip(self.components, tokens):
            if tok is not None:
                nu.rollback(tok)

    def hypothesis(self, index: int) -> EnvironmentModel:
        """Component ``index``, copied, conditioned on the history so far."""
        return self.components[index].copy()

    def snapshot(self):
        return {"kind": "mixture", "weights": list(self.weights)}


def posterior_sample(model, rng) -> int:
    """Draw a hypothesis index with probability equal to its posterior weight."""
    return rng.categorical(model.posterior())


def mdl_select(model, lam: float = 0.0, complexity=None) -> int:
    """argmin over unfalsified hypotheses of complexity - lam * log-likelihood.

    ``complexity`` defaults to the hypothesis index. Ties go to the lower
    complexity, then the lower index.
    """
    if lam < 0.0:
        raise DomainError("lambda must be non-negative")
    weights = model.posterior()
    lls = model.log_likelihoods_list() if hasattr(model, "log_likelihoods_list") else model.log_likelihoods
    if complexity is None:
        complexity = range(len(weights))
    best = None
    best_key = None
    for i, (w, ll, k) in enumerate(zip(weights, lls, complexity)):
        if w <= 0.0 or ll == -math.inf:
            continue
        score = k - lam * ll if lam > 0.0 else float(k)
        key = (score, k, i)
        if best_key is None or key < best_key:
            best, best_key = i, key
    if best is None:
        raise EmptyClassError("every hypothesis has been falsified")
    return best
