"""Brute-force reference computations and the oracle suites behind ``urlab oracle``.

Each reference recomputes a quantity the fast code maintains incrementally,
from its definition: batch posteriors from per-hypothesis likelihood
products, expected information gain by enumerating percepts, root values by
exact expectimax, effective horizons by stepping the discount weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from urlab.core import Percept, UtilityFunction, effective_horizon, effective_horizon_iterative, kl_divergence
from urlab.gridworld import parse_layout
from urlab.models import IIDModel, KnownGridModel, LocationMixture, MixtureModel, bandit
from urlab.planner import PlannerConfig, expectimax_exact, search
from urlab.rng import RandomSource

SMALL_LAYOUT = ("...", ".#.", "..D")


@dataclass
class OracleReport:
    name: str
    passed: bool
    checked: int
    max_error: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.checked} checks, max error {self.max_error:.3g}"


# ---------------------------------------------------------------------------
# Bayes update


def batch_location_posterior(hypotheses, prior, history) -> list:
    """Posterior from prior * prod_k nu(e_k | ...) recomputed from scratch."""
    weights = []
    for nu, w in zip(hypotheses, prior):
        token = nu.checkpoint()
        like = 1.0
        for a, e in history:
            p = nu.conditional_probability(a, e)
            like *= p
            if p == 0.0:
                break
            nu.update(a, e)
        nu.rollback(token)
        weights.append(w * like)
    total = math.fsum(weights)
    return [x / total for x in weights]


def check_bayes_equivalence(max_len: int = 6, layout=SMALL_LAYOUT, theta: float = 0.75,
                            tol: float = 1e-9) -> OracleReport:
    """Exhaustive: every action/percept sequence with positive mixture
    probability up to ``max_len`` steps, incremental vs batch posterior.

    The batch side walks the same tree, keeping each hypothesis's running
    likelihood product; it never touches the mixture's update rule.
    """
    spec = parse_layout(layout, [theta])
    mix = LocationMixture(spec, theta)
    n2 = spec.n * spec.n
    start = spec.index(spec.start)
    hyps = [KnownGridModel.hypothesis(spec, i, theta, start) for i in range(n2)]
    prior = mix.posterior()
    worst = 0.0
    count = 0

    def walk(depth, likes):
        nonlocal worst, count
        if depth == max_len:
            return
        for a in range(mix.num_actions):
            for e in mix.percept_distribution(a):
                tok = mix.checkpoint()
                toks = [h.checkpoint() for h in hyps]
                new_likes = []
                for h, like in zip(hyps, likes):
                    p = h.conditional_probability(a, e) if like > 0.0 else 0.0
                    if p > 0.0:
                        h.update(a, e)
                    new_likes.append(like * p)
                mix.update(a, e)
                z = math.fsum(w * l for w, l in zip(prior, new_likes))
                batch = [w * l / z for w, l in zip(prior, new_likes)]
                inc = mix.posterior()
                worst = max(worst, max(abs(x - y) for x, y in zip(inc, batch)))
                count += 1
                walk(depth + 1, new_likes)
                for h, t in zip(hyps, toks):
                    h.rollback(t)
                mix.rollback(tok)

    walk(0, [1.0 if w > 0.0 else 0.0 for w in prior])
    return OracleReport("bayes", worst <= tol, count, worst)


# ---------------------------------------------------------------------------
# Expected information gain


def expected_info_gain(model, action: int) -> float:
    """sum_e xi(e) * (Ent(w) - Ent(w | e)), by enumerating the percept support."""
    total = 0.0
    for e, p in model.percept_distribution(action).items():
        tok = model.checkpoint()
        model.update(action, e)
        total += p * model.info_gain_of_last_update()
        model.rollback(tok)
    return total


def posterior_weighted_kl(model: MixtureModel, action: int) -> float:
    """sum_nu w_nu KL(nu(. | a) || xi(. | a)) over the joint percept support."""
    xi = model.percept_distribution(action)
    support = sorted(xi)
    q = [xi[e] for e in support]
    total = 0.0
    for w, nu in zip(model.posterior(), model.components):
        if w <= 0.0:
            continue
        p = [nu.conditional_probability(action, e) for e in support]
        total += w * kl_divergence(p, q)
    return total


def random_iid_mixture(rng: np.random.Generator, k: int, actions: int = 2, percepts: int = 4) -> MixtureModel:
    comps = []
    for _ in range(k):
        table = []
        for _ in range(actions):
            probs = rng.dirichlet(np.ones(percepts))
            table.append({Percept(o, float(o)): float(p) for o, p in enumerate(probs)})
        comps.append(IIDModel(table, reward_bounds=(0.0, float(percepts - 1))))
    prior = rng.dirichlet(np.ones(k))
    return MixtureModel(comps, prior.tolist())


def check_expected_ig(instances: int = 1000, seed: int = 0, tol: float = 1e-6) -> OracleReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(instances):
        model = random_iid_mixture(rng, 2 + i % 2)
        for a in range(model.num_actions):
            err = abs(expected_info_gain(model, a) - posterior_weighted_kl(model, a))
            worst = max(worst, err)
    return OracleReport("expected-ig", worst <= tol, instances, worst)


# ---------------------------------------------------------------------------
# Planner


@dataclass
class PlannerInstance:
    name: str
    factory: object  # () -> fresh model
    horizon: int


def planner_instances() -> list:
    spec = parse_layout(("..D", ".#.", "..."), [0.75])
    beside = spec.index((1, 0))
    return [
        PlannerInstance("bandit-2arm-m2", lambda: bandit([0.2, 0.8]), 2),
        PlannerInstance("bandit-3arm-m2", lambda: bandit([0.3, 0.5, 0.7]), 2),
        PlannerInstance("bandit-2arm-m3", lambda: bandit([0.9, 0.6]), 3),
        PlannerInstance("grid3x3-m2", lambda: KnownGridModel(spec, beside), 2),
        PlannerInstance("grid3x3-m3", lambda: KnownGridModel(spec, beside), 3),
    ]


def check_planner(searches: int = 100, samples: int = 100_000, tol: float = 0.05, seed: int = 0,
                  min_agree: float = 0.95) -> OracleReport:
    """rho-UCT root values and argmax vs exact expectimax.

    ``searches`` are spread evenly over the instances. The root value (the
    estimate for the recommended action) is compared with the exact optimum
    on the normalized scale, divided by m (beta - alpha). Rarely visited root
    actions carry the downward bias of mean backups over exploratory
    subtrees; their worst error is reported in ``detail`` but not gated.
    """
    instances = planner_instances()
    per = max(1, searches // len(instances))
    agree = 0
    total = 0
    worst = 0.0
    worst_any = 0.0
    detail = {}
    for k, inst in enumerate(instances):
        model = inst.factory()
        lo, hi = model.reward_bounds
        util = UtilityFunction("reward", lo, hi)
        exact = expectimax_exact(model, inst.horizon, util, 0.99)
        best = max(exact)
        argmax = {a for a, v in enumerate(exact) if best - v <= 1e-12}
        cfg = PlannerConfig(horizon=inst.horizon, samples=samples, bounds=(lo, hi), gamma=0.99)
        scale = inst.horizon * (hi - lo)
        hits = 0
        for j in range(per):
            res = search(model, cfg, util, RandomSource(seed, stream=(k, j)))
            hits += res.action in argmax
            worst = max(worst, abs(res.values[res.action] - best) / scale)
            for a, v in enumerate(res.values):
                if v is not None:
                    worst_any = max(worst_any, abs(v - exact[a]) / scale)
        agree += hits
        total += per
        detail[inst.name] = {"exact": exact, "agree": hits, "searches": per}
    ok = worst <= tol and agree >= min_agree * total
    return OracleReport("expectimax", ok, total, worst, {"agree": agree, "worst_any_action": worst_any, **detail})


# ---------------------------------------------------------------------------
# Effective horizon


def check_horizon(pairs: int = 100, seed: int = 0) -> OracleReport:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(pairs):
        gamma = float(rng.uniform(0.5, 0.999))
        eps = float(rng.uniform(1e-4, 0.5))
        if effective_horizon(gamma, eps) != effective_horizon_iterative(gamma, eps):
            mismatches += 1
    return OracleReport("horizon", mismatches == 0, pairs, float(mismatches))


SUITES = {
    "bayes": check_bayes_equivalence,
    "expected-ig": check_expected_ig,
    "expectimax": check_planner,
    "horizon": check_horizon,
}


def run_suite(name: str) -> list:
    if name == "all":
        return [fn() for fn in SUITES.values()]
    return [SUITES[name]()]


__all__ = [
    "OracleReport",
    "SUITES",
    "batch_location_posterior",
    "check_bayes_equivalence",
    "check_expected_ig",
    "check_horizon",
    "check_planner",
    "expected_info_gain",
    "posterior_weighted_kl",
    "random_iid_mixture",
    "run_suite",
]
