"""Histories, percepts, discounting, utilities and information-theoretic helpers."""

from __future__ import annotations

import math
from typing import Callable, Iterable, Iterator, NamedTuple, Sequence

from urlab.errors import DomainError

# Gridworld action indices.
LEFT, RIGHT, UP, DOWN, NOOP = range(5)
ACTION_NAMES = ("left", "right", "up", "down", "noop")
NUM_GRID_ACTIONS = 5

# Mass deviations below this are renormalized silently; larger ones raise.
NORMALIZATION_TOLERANCE = 1e-6


class Percept(NamedTuple):
    """One (observation, reward) emission.

    ``observation`` is an integer code. For gridworld wall observations it
    packs the four adjacency bits as ``left | right << 1 | up << 2 | down << 3``;
    noise tiles emit codes drawn from ``range(alphabet)``.
    """

    observation: int
    reward: float


class History:
    """Append-only sequence of (action, percept) pairs."""

    __slots__ = ("_items",)

    def __init__(self, items: Iterable[tuple[int, Percept]] = ()):
        self._items: list[tuple[int, Percept]] = [(int(a), Percept(*e)) for a, e in items]

    def append(self, action: int, percept: Percept) -> None:
        self._items.append((int(action), percept))

    def prefix(self, t: int) -> "History":
        return History(self._items[:t])

    def actions(self) -> list[int]:
        return [a for a, _ in self._items]

    def percepts(self) -> list[Percept]:
        return [e for _, e in self._items]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[tuple[int, Percept]]:
        return iter(self._items)

    def __getitem__(self, i):
        return self._items[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, History) and self._items == other._items

    def __repr__(self) -> str:
        return f"History(len={len(self._items)})"


class GeometricDiscount:
    """Geometric discounting, gamma^k for a step k cycles ahead."""

    kind = "geometric"

    def __init__(self, gamma: float):
        if not 0.0 < gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
        self.gamma = float(gamma)

    def weight(self, k: int) -> float:
        return self.gamma**k

    def normalizer(self, t: int = 0) -> float:
        """Gamma_t = sum_{k >= t} gamma^(k - t); time-independent for geometric."""
        return 1.0 / (1.0 - self.gamma)

    def __repr__(self) -> str:
        return f"GeometricDiscount({self.gamma})"


def _as_gamma(discount) -> float:
    return discount.gamma if isinstance(discount, GeometricDiscount) else float(discount)


def effective_horizon(discount, eps: float) -> int:
    """Smallest H with Gamma_{t+H} / Gamma_t <= eps, for geometric discounting.

    The tail ratio is gamma^H, so H = ceil(ln eps / ln gamma). A guard step
    corrects the rare case where floating-point rounding lands the ceiling one
    off from the defining inequality.
    """
    gamma = _as_gamma(discount)
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps}")
    h = max(0, math.ceil(math.log(eps) / math.log(gamma)))
    while h > 0 and gamma ** (h - 1) <= eps:
        h -= 1
    while gamma**h > eps:
        h += 1
    return h


def effective_horizon_iterative(discount, eps: float, t: int = 0, max_steps: int = 10**7) -> int:
    """Evaluate the effective-horizon definition by stepping H = 0, 1, 2, ...

    For geometric weights the tail ratio Gamma_{t+H} / Gamma_t is the running
    product gamma * gamma * ... (H factors), accumulated here by repeated
    multiplication rather than logarithms. ``t`` is accepted for symmetry
    with the general definition; geometric discounting ignores it.
    """
    gamma = _as_gamma(discount)
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps}")
    h = 0
    weight = 1.0
    while h < max_steps:
        if weight <= eps:
            return h
        h += 1
        weight *= gamma
    raise DomainError("effective horizon exceeds max_steps")


def discounted_return(rewards: Sequence[float], discount) -> float:
    """Sum of gamma^k * r_k with k counted from 0."""
    gamma = _as_gamma(discount)
    total = 0.0
    w = 1.0
    for r in rewards:
        total += w * r
        w *= gamma
    return total


def _check_distribution(p: Sequence[float], name: str) -> list[float]:
    values = [float(x) for x in p]
    for x in values:
        if x < 0.0 or math.isnan(x):
            raise DomainError(f"{name} has a negative or NaN entry: {x}")
    total = math.fsum(values)
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        raise DomainError(f"{name} sums to {total}, not 1")
    return [x / total for x in values]


def entropy(p: Sequence[float]) -> float:
    """Shannon entropy in nats, with 0 ln 0 = 0."""
    probs = _check_distribution(p, "distribution")
    h = -math.fsum(x * math.log(x) for x in probs if x > 0.0)
    return max(h, 0.0)


def kl_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """KL(p || q) in nats; ``math.inf`` when p is not absolutely continuous w.r.t. q."""
    if len(p) != len(q):
        raise DomainError("distributions have different supports")
    pp = _check_distribution(p, "p")
    qq = _check_distribution(q, "q")
    terms = []
    for pi, qi in zip(pp, qq):
        if pi == 0.0:
            continue
        if qi == 0.0:
            return math.inf
        terms.append(pi * math.log(pi / qi))
    return max(math.fsum(terms), 0.0)


class UtilityFunction:
    """Maps the latest model update to a scalar utility, clamped into [low, high].

    Utilities are evaluated *after* the model has conditioned on the percept:
    ``square`` and ``shannon`` read the predictive probability the model gave
    that percept (``model.last_probability``), ``kl`` reads the model's
    information gain, ``reward`` reads the percept's reward.
    """

    KINDS = ("reward", "square", "shannon", "kl")

    def __init__(self, kind: str, low: float, high: float):
        if kind not in self.KINDS:
            raise DomainError(f"unknown utility kind {kind!r}")
        if not low < high:
            raise DomainError(f"utility bounds must satisfy low < high, got ({low}, {high})")
        self.kind = kind
        self.low = float(low)
        self.high = float(high)
        self.evaluate = self._make_evaluator()

    def _make_evaluator(self):
        lo, hi = self.low, self.high
        kind = self.kind
        if kind == "reward":

            def evaluate(model, percept):
                u = percept[1]
                return lo if u < lo else (hi if u > hi else u)

        elif kind == "square":

            def evaluate(model, percept):
                u = -model.last_probability
                return lo if u < lo else (hi if u > hi else u)

        elif kind == "shannon":

            def evaluate(model, percept):
                p = model.last_probability
                if p <= 0.0:
                    return hi
                u = -math.log(p)
                return lo if u < lo else (hi if u > hi else u)

        else:

            def evaluate(model, percept):
                u = model.info_gain_of_last_update()
                return lo if u < lo else (hi if u > hi else u)

        return evaluate

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("evaluate", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self.evaluate = self._make_evaluator()

    @property
    def bounds(self) -> tuple[float, float]:
        return self.low, self.high

    def raw(self, model, percept: Percept) -> float:
        kind = self.kind
        if kind == "reward":
            return percept.reward
        if kind == "square":
            return -model.last_probability
        if kind == "shannon":
            p = model.last_probability
            return math.inf if p <= 0.0 else -math.log(p)
        return model.info_gain_of_last_update()

    def __call__(self, model, percept: Percept) -> float:
        return self.evaluate(model, percept)

    def __repr__(self) -> str:
        return f"UtilityFunction({self.kind!r}, {self.low}, {self.high})"


def history_probability(
    policy: Callable[[History], Sequence[float]], env, history: History
) -> float:
    """Probability of ``history`` under the joint policy/environment measure.

    ``policy`` maps a history prefix to a distribution over actions; ``env`` is
    an environment model supporting checkpoint/rollback. The model is restored
    before returning. Intended as a test oracle.
    """
    token = env.checkpoint()
    prob = 1.0
    try:
        for t, (a, e) in enumerate(history):
            prob *= policy(history.prefix(t))[a]
            if prob == 0.0:
                break
            prob *= env.conditional_probability(a, e)
            if prob == 0.0:
                break
            env.update(a, e)
    finally:
        env.rollback(token)
    return prob
