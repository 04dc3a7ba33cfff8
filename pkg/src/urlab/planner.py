"""History-based Monte-Carlo tree search (rho-UCT) and an exact expectimax oracle.

The search tree alternates decision nodes (one child per action) and chance
nodes (one child per sampled percept). Every simulation checkpoints the
model, walks down the tree sampling percepts from the model and conditioning
the model on them, grows the tree by one chance node, finishes the horizon
with a uniformly random rollout, backs up the discounted utility sum and
rolls the model back.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Optional

from urlab.core import UtilityFunction
from urlab.errors import ConfigError, DomainError


@dataclass
class PlannerConfig:
    """Planning horizon, budget and UCB constant.

    Exactly one of ``samples`` and ``time_budget_ms`` is active; when both are
    given the time budget wins. ``bounds`` are the per-step utility bounds
    (alpha, beta) used to normalize values in the UCB rule.
    """

    horizon: int = 6
    samples: Optional[int] = 600
    time_budget_ms: Optional[float] = None
    ucb_c: float = math.sqrt(2.0)
    bounds: tuple = (-10.0, 100.0)
    gamma: float = 0.99

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1", key="agent.horizon")
        if self.time_budget_ms is None:
            if self.samples is None or self.samples < 1:
                raise ConfigError("samples must be >= 1", key="agent.samples")
        elif self.time_budget_ms <= 0:
            raise ConfigError("time budget must be positive", key="agent.time_budget_ms")
        if not self.ucb_c > 0:
            raise ConfigError("exploration constant must be positive", key="agent.ucb_c")
        lo, hi = self.bounds
        if not hi > lo:
            raise ConfigError("utility bounds need beta > alpha", key="agent.bounds")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must lie in (0, 1]", key="agent.gamma")

    def with_bounds(self, bounds) -> "PlannerConfig":
        return PlannerConfig(self.horizon, self.samples, self.time_budget_ms, self.ucb_c, tuple(bounds), self.gamma)

    def min_return(self, steps: int) -> float:
        """Smallest attainable discounted sum over ``steps`` steps."""
        return self.bounds[0] * sum(self.gamma**k for k in range(steps))


class ChanceNode:
    __slots__ = ("visits", "value", "children", "isq")

    def __init__(self):
        self.visits = 0
        self.value = 0.0
        self.children: dict = {}
        self.isq = math.inf  # 1 / sqrt(visits), cached for the UCB rule


class DecisionNode:
    __slots__ = ("visits", "value", "children")

    def __init__(self, num_actions: int):
        self.visits = 0
        self.value = 0.0
        self.children: list = [None] * num_actions


@dataclass
class SearchResult:
    action: int
    values: list  # mean backed-up return per root action, None if never tried
    visits: list
    samples: int

    @property
    def best_value(self) -> float:
        return max(v for v in self.values if v is not None)


def normalize_utility(u: float, cfg: PlannerConfig, steps: Optional[int] = None) -> float:
    """Map an accumulated discounted utility over ``steps`` (default: the
    horizon) into [0, 1]: subtract the smallest attainable sum, divide by
    m (beta - alpha)."""
    steps = cfg.horizon if steps is None else steps
    lo, hi = cfg.bounds
    return (u - cfg.min_return(steps)) / (cfg.horizon * (hi - lo))


def uct_select(node: DecisionNode, cfg: PlannerConfig, steps: Optional[int] = None) -> int:
    """UCB action choice at a visited decision node; untried actions come first."""
    steps = cfg.horizon if steps is None else steps
    lo, hi = cfg.bounds
    scale = 1.0 / (cfg.horizon * (hi - lo))
    shift = cfg.min_return(steps)
    log_t = math.log(node.visits) if node.visits > 0 else 0.0
    best_a, best = 0, -math.inf
    for a, child in enumerate(node.children):
        if child is None or child.visits == 0:
            return a
        score = (child.value - shift) * scale + cfg.ucb_c * math.sqrt(log_t / child.visits)
        if score > best:
            best, best_a = score, a
    return best_a


class _Search:
    """One rho-UCT search; holds the hot-loop state."""

    def __init__(self, model, cfg: PlannerConfig, utility: UtilityFunction, rng, trace=None):
        self.model = model
        self.cfg = cfg
        self.utility = utility
        self.rng = rng
        self.num_actions = model.num_actions
        self.gamma = cfg.gamma
        self.c = cfg.ucb_c
        lo, hi = cfg.bounds
        self.scale = 1.0 / (cfg.horizon * (hi - lo))
        # shift[h]: minimum discounted sum over h remaining steps
        self.shift = [cfg.min_return(h) for h in range(cfg.horizon + 1)]
        self.trace = trace
        self.path = [] if trace is not None else None

    def rollout(self, steps: int) -> float:
        total = 0.0
        w = 1.0
        rng = self.rng
        n = self.num_actions
        simulate = self.model.simulate
        utility = self.utility.evaluate
        model = self.model
        for _ in range(steps):
            e = simulate(rng.randrange(n), rng)
            total += w * utility(model, e)
            w *= self.gamma
        return total

    def decision(self, node: DecisionNode, steps: int) -> float:
        if steps == 0:
            return 0.0
        children = node.children
        nv = node.visits
        if nv < self.num_actions:
            # untried actions first, in index order; after k visits actions 0..k-1 are tried
            action = nv
            chance = children[action] = ChanceNode()
        else:
            # UCB rule; the per-node shift and the common sqrt(log T) factor are
            # hoisted out of the loop, which leaves the argmax unchanged
            bonus = self.c * math.sqrt(math.log(nv))
            scale = self.scale
            best = -math.inf
            action = 0
            a = 0
            for child in children:
                score = child.value * scale + bonus * child.isq
                if score > best:
                    best = score
                    action = a
                a += 1
            chance = children[action]
        ret = self.chance(chance, action, steps)
        node.visits = nv + 1
        node.value += (ret - node.value) / (nv + 1)
        return ret

    def chance(self, node: ChanceNode, action: int, steps: int) -> float:
        model = self.model
        e = model.simulate(action, self.rng)
        u = self.utility.evaluate(model, e)
        if self.path is not None:
            self.path.append((action, e))
        if node.visits == 0:
            ret = u + self.gamma * self.rollout(steps - 1) if steps > 1 else u
        else:
            child = node.children.get(e)
            if child is None:
                child = node.children[e] = DecisionNode(self.num_actions)
            ret = u + self.gamma * self.decision(child, steps - 1) if steps > 1 else u
        v = node.visits + 1
        node.visits = v
        node.value += (ret - node.value) / v
        node.isq = 1.0 / math.sqrt(v)
        return ret

    def run(self) -> SearchResult:
        cfg = self.cfg
        model = self.model
        root = DecisionNode(self.num_actions)
        horizon = cfg.horizon
        deadline = None
        if cfg.time_budget_ms is not None:
            deadline = time.perf_counter() + cfg.time_budget_ms / 1000.0
            limit = None
        else:
            limit = cfg.samples
        n = 0
        while True:
            if limit is not None:
                if n >= limit:
                    break
            elif n % 16 == 0 and n > 0 and time.perf_counter() >= deadline:
                break
            token = model.checkpoint()
            try:
                ret = self.decision(root, horizon)
            finally:
                model.rollback(token)
            if self.trace is not None:
                self._emit(n, ret)
            n += 1
        values = [c.value if c is not None and c.visits > 0 else None for c in root.children]
        visits = [c.visits if c is not None else 0 for c in root.children]
        best = max(v for v in values if v is not None)
        ties = [a for a, v in enumerate(values) if v is not None and v == best]
        action = ties[0] if len(ties) == 1 else ties[self.rng.randrange(len(ties))]
        self.root = root
        return SearchResult(action, values, visits, n)

    def _emit(self, n, ret):
        record = {
            "sim": n,
            "path": [[a, [e.observation, e.reward]] for a, e in self.path],
            "value": ret,
        }
        self.trace.write(json.dumps(record) + "\n")
        self.path.clear()


def search(model, cfg: PlannerConfig, utility: UtilityFunction, rng, trace=None) -> SearchResult:
    """Run rho-UCT from the model's current history and pick a root action.

    The model is restored after every simulation, so on return it predicts
    exactly as before the call. ``trace`` is an optional text stream that
    receives one JSON record per simulation.
    """
    if cfg.time_budget_ms is None and (cfg.samples is None or cfg.samples < 1):
        raise ConfigError("samples must be >= 1", key="agent.samples")
    return _Search(model, cfg, utility, rng, trace).run()


def search_tree(model, cfg: PlannerConfig, utility: UtilityFunction, rng):
    """Like :func:`search` but also return the root node, for inspection."""
    s = _Search(model, cfg, utility, rng)
    result = s.run()
    return result, s.root


def expectimax_exact(model, horizon: int, utility: UtilityFunction, gamma: float, max_support: int = 64) -> list:
    """Exact truncated expectimax value of each root action.

    Enumerates every percept in the model's support (through
    checkpoint/update/rollback), so cost grows as (|A| |E|)^horizon; meant
    for small test instances only.
    """
    if horizon < 0:
        raise DomainError("horizon must be non-negative")
    if horizon == 0:
        return [0.0] * model.num_actions

    def q_value(action: int, steps: int) -> float:
        dist = model.percept_distribution(action)
        if len(dist) > max_support:
            raise DomainError(f"percept support of {len(dist)} exceeds max_support={max_support}")
        total = 0.0
        for e, p in dist.items():
            if p <= 0.0:
                continue
            token = model.checkpoint()
            try:
                model.update(action, e)
                u = utility(model, e)
                total += p * (u + gamma * v_value(steps - 1))
            finally:
                model.rollback(token)
        return total

    def v_value(steps: int) -> float:
        if steps == 0:
            return 0.0
        return max(q_value(a, steps) for a in range(model.num_actions))

    return [q_value(a, horizon) for a in range(model.num_actions)]
