"""The agent zoo.

Every agent is a (model, utility, planner) triple driven by the same loop:
``act`` plans from the model's current history and returns an action, the
environment answers with a percept, ``update`` conditions the model on it.
Agents that switch behavior (BayesExp, Thompson sampling) keep a small mode
record whose counters tick once per ``act``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from urlab.core import UtilityFunction
from urlab.errors import ConfigError, DomainError
from urlab.models import DirichletGridModel, KnownGridModel, LocationMixture, mdl_select, posterior_sample
from urlab.planner import PlannerConfig, search

AGENT_TYPES = ("aixi", "aimu", "ksa-square", "ksa-shannon", "ksa-kl", "bayesexp", "thompson", "mdl", "random")
MODEL_KINDS = ("mixture", "dirichlet")
DEFAULT_SHANNON_CAP = math.log(1e6)


def ksa_bounds(kind: str, model, shannon_cap: float = DEFAULT_SHANNON_CAP, kl_cap: Optional[float] = None):
    """Per-step utility bounds (low, high) for a knowledge-seeking utility.

    For ``kl`` over an explicit class the bound is the entropy of the current
    weights (all the information there is to gain). The factorized model has
    no such bound, so a symmetric cap is used, by default ln 2 per tile.
    """
    if kind == "square":
        return (-1.0, 0.0)
    if kind == "shannon":
        if not shannon_cap > 0:
            raise DomainError("shannon cap must be positive")
        return (0.0, float(shannon_cap))
    if kind == "kl":
        if isinstance(model, DirichletGridModel):
            cap = math.log(2.0) * model.n * model.n if kl_cap is None else float(kl_cap)
            return (-cap, cap)
        if kl_cap is not None:
            return (0.0, float(kl_cap))
        h = model.entropy()
        # a collapsed posterior still needs a non-empty interval
        return (0.0, h if h > 0.0 else 1.0)
    raise DomainError(f"unknown knowledge-seeking utility {kind!r}")


def ksa_utility(kind: str, model, shannon_cap: float = DEFAULT_SHANNON_CAP, kl_cap: Optional[float] = None):
    lo, hi = ksa_bounds(kind, model, shannon_cap, kl_cap)
    return UtilityFunction(kind, lo, hi)


def reward_utility(model) -> UtilityFunction:
    lo, hi = model.reward_bounds
    return UtilityFunction("reward", lo, hi)


@dataclass
class ExplorationSchedule:
    """eps_t = eps0 * t ** -decay for t = 1, 2, ...; ``decay=0`` is constant."""

    eps0: float = 0.05
    decay: float = 0.0

    def __post_init__(self):
        if math.isnan(self.eps0) or self.eps0 < 0:
            raise ConfigError("epsilon0 must be non-negative", key="agent.epsilon0")
        if not self.decay >= 0:
            raise ConfigError("epsilon decay must be >= 0", key="agent.epsilon_decay")

    @property
    def kind(self) -> str:
        return "constant" if self.decay == 0 else "power-decay"

    def __call__(self, t: int) -> float:
        if t < 1:
            raise DomainError("schedule is indexed from t = 1")
        if self.decay == 0 or math.isinf(self.eps0):
            return self.eps0
        return self.eps0 * t ** (-self.decay)


class Agent:
    """Base agent: plans against ``model`` with ``utility``."""

    name = "agent"

    def __init__(self, model, planner: PlannerConfig, utility: UtilityFunction, rng):
        self.model = model
        self.utility = utility
        self.planner = planner.with_bounds(utility.bounds)
        self.rng = rng
        self.t = 0
        self.last_search = None
        self.last_info_gain = 0.0
        self.last_utility = None

    @property
    def mode(self) -> str:
        return "exploit"

    def act(self) -> int:
        self.t += 1
        self.last_search = search(self.model, self.planner, self.utility, self.rng)
        return self.last_search.action

    def update(self, action: int, percept) -> None:
        model = self.model
        model.update(action, percept)
        gain = getattr(model, "last_info_gain", None)
        self.last_info_gain = 0.0 if gain is None else gain
        self.last_utility = self.utility(model, percept)

    def snapshot(self) -> dict:
        return {"agent": self.name, "t": self.t, "mode": self.mode, "model": self.model.snapshot()}


class AIXIAgent(Agent):
    """Maximizes extrinsic reward under the Bayes mixture (or any model)."""

    name = "aixi"

    def __init__(self, model, planner: PlannerConfig, rng):
        super().__init__(model, planner, reward_utility(model), rng)


class AIMUAgent(AIXIAgent):
    """AIXI with the true environment as its model."""

    name = "aimu"


class KSAAgent(Agent):
    """Knowledge-seeking agent: intrinsic utility only, rewards ignored."""

    def __init__(self, model, planner: PlannerConfig, rng, kind: str = "kl",
                 shannon_cap: float = DEFAULT_SHANNON_CAP, kl_cap: Optional[float] = None):
        super().__init__(model, planner, ksa_utility(kind, model, shannon_cap, kl_cap), rng)
        self.kind = kind
        self.name = f"ksa-{kind}"

    @property
    def mode(self) -> str:
        return "explore"


class BayesExpAgent(Agent):
    """AIXI interleaved with bursts of knowledge seeking.

    Outside a burst, the value of the information-gain planner is compared
    with eps_t; above it the agent follows the IG planner for ``burst_length``
    cycles. The IG estimate draws from its own random stream so that with an
    unreachable threshold the agent acts exactly like AIXI on the same seed.
    """

    name = "bayesexp"

    def __init__(self, model, planner: PlannerConfig, rng, schedule: Optional[ExplorationSchedule] = None,
                 burst_length: Optional[int] = None, kl_cap: Optional[float] = None):
        super().__init__(model, planner, reward_utility(model), rng)
        self.schedule = schedule or ExplorationSchedule()
        self.burst_length = planner.horizon if burst_length is None else int(burst_length)
        if self.burst_length < 1:
            raise ConfigError("burst length must be >= 1", key="agent.horizon")
        self.ig_utility = ksa_utility("kl", model, kl_cap=kl_cap)
        self.ig_planner = planner.with_bounds(self.ig_utility.bounds)
        self.ig_rng = rng.spawn(1)
        self.remaining = 0
        self.exploring = False
        self.last_ig_value = None

    @property
    def mode(self) -> str:
        return f"explore-burst:{self.remaining}" if self.exploring else "exploit"

    def _explore(self) -> int:
        self.last_search = search(self.model, self.ig_planner, self.ig_utility, self.ig_rng)
        return self.last_search.action

    def act(self) -> int:
        self.t += 1
        if self.remaining > 0:
            self.remaining -= 1
            self.exploring = True
            return self._explore()
        eps = self.schedule(self.t)
        if not math.isinf(eps):
            result = search(self.model, self.ig_planner, self.ig_utility, self.ig_rng)
            self.last_ig_value = result.best_value
            if result.best_value > eps:
                # this cycle is the first of the burst
                self.remaining = self.burst_length - 1
                self.exploring = True
                self.last_search = result
                return result.action
        self.exploring = False
        self.last_search = search(self.model, self.planner, self.utility, self.rng)
        return self.last_search.action


def _require_explicit_class(model, agent: str):
    if not hasattr(model, "hypothesis") or not hasattr(model, "posterior"):
        raise ConfigError(f"{agent} needs an explicit hypothesis class (model=mixture)", key="agent.model")


class ThompsonAgent(Agent):
    """Samples a hypothesis from the posterior and follows its optimal policy
    for ``commit_length`` cycles before re-sampling. The full mixture is still
    updated every cycle."""

    name = "thompson"

    def __init__(self, model, planner: PlannerConfig, rng, commit_length: Optional[int] = None):
        _require_explicit_class(model, "thompson sampling")
        super().__init__(model, planner, reward_utility(model), rng)
        self.commit_length = planner.horizon if commit_length is None else int(commit_length)
        if self.commit_length < 1:
            raise ConfigError("commitment length must be >= 1", key="agent.horizon")
        self.sample_rng = rng.spawn(1)
        self.hypothesis = None
        self.remaining = 0
        self.resamples = 0

    @property
    def mode(self) -> str:
        if self.hypothesis is None:
            return "exploit"
        return f"committed:{self.hypothesis}:{self.remaining}"

    def act(self) -> int:
        self.t += 1
        if self.remaining == 0:
            self.hypothesis = posterior_sample(self.model, self.sample_rng)
            self.remaining = self.commit_length
            self.resamples += 1
        self.remaining -= 1
        rho = self.model.hypothesis(self.hypothesis)
        self.last_search = search(rho, self.planner, self.utility, self.rng)
        return self.last_search.action


class MDLAgent(Agent):
    """Plans with the simplest unfalsified hypothesis, re-selected every cycle."""

    name = "mdl"

    def __init__(self, model, planner: PlannerConfig, rng, lam: float = 0.0):
        _require_explicit_class(model, "MDL")
        super().__init__(model, planner, reward_utility(model), rng)
        self.lam = float(lam)
        self.selected = None

    @property
    def mode(self) -> str:
        return "exploit" if self.selected is None else f"committed:{self.selected}"

    def act(self) -> int:
        self.t += 1
        self.selected = mdl_select(self.model, self.lam)
        rho = self.model.hypothesis(self.selected)
        self.last_search = search(rho, self.planner, self.utility, self.rng)
        return self.last_search.action


class RandomAgent(Agent):
    """Uniformly random actions; the model is still updated for bookkeeping."""

    name = "random"

    def __init__(self, model, planner: PlannerConfig, rng):
        super().__init__(model, planner, reward_utility(model), rng)

    @property
    def mode(self) -> str:
        return "random"

    def act(self) -> int:
        self.t += 1
        return self.rng.randrange(self.model.num_actions)


@dataclass
class AgentConfig:
    """Agent section of an experiment config. ``model`` picks the agent's
    environment class; it is ignored by ``aimu``."""

    type: str = "aixi"
    model: str = "mixture"
    horizon: int = 6
    samples: Optional[int] = 600
    time_budget_ms: Optional[float] = None
    ucb_c: float = math.sqrt(2.0)
    gamma: float = 0.99
    epsilon0: float = 0.05
    epsilon_decay: float = 0.0
    # ``lambda`` is a Python keyword; the config key is mapped onto this field
    lam: float = 0.0
    shannon_beta_cap: float = DEFAULT_SHANNON_CAP
    kl_cap: Optional[float] = None

    def validate(self) -> None:
        if self.type not in AGENT_TYPES:
            raise ConfigError(f"unknown agent type {self.type!r}; expected one of {', '.join(AGENT_TYPES)}",
                              key="agent.type")
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {', '.join(MODEL_KINDS)}",
                              key="agent.model")
        if self.type in ("thompson", "mdl") and self.model != "mixture":
            raise ConfigError(f"{self.type} requires model=mixture", key="agent.model")
        if not self.shannon_beta_cap > 0:
            raise ConfigError("must be positive", key="agent.shannon_beta_cap")
        if self.lam < 0:
            raise ConfigError("must be non-negative", key="agent.lambda")
        ExplorationSchedule(self.epsilon0, self.epsilon_decay)
        self.planner_config()

    def planner_config(self) -> PlannerConfig:
        return PlannerConfig(
            horizon=self.horizon,
            samples=self.samples,
            time_budget_ms=self.time_budget_ms,
            ucb_c=self.ucb_c,
            gamma=self.gamma,
        )


def build_model(kind: str, spec):
    """A fresh agent model for the true environment ``spec``."""
    if kind == "mixture":
        return LocationMixture(spec)
    if kind == "dirichlet":
        return DirichletGridModel.for_spec(spec)
    raise ConfigError(f"unknown model {kind!r}", key="agent.model")


def build_agent(cfg: AgentConfig, spec, rng) -> Agent:
    """Wire up the agent described by ``cfg`` for the true environment ``spec``."""
    cfg.validate()
    planner = cfg.planner_config()
    if cfg.type == "aimu":
        return AIMUAgent(KnownGridModel(spec), planner, rng)
    model = build_model(cfg.model, spec)
    if cfg.type == "aixi":
        return AIXIAgent(model, planner, rng)
    if cfg.type.startswith("ksa-"):
        return KSAAgent(model, planner, rng, cfg.type[4:], cfg.shannon_beta_cap, cfg.kl_cap)
    if cfg.type == "bayesexp":
        return BayesExpAgent(model, planner, rng, ExplorationSchedule(cfg.epsilon0, cfg.epsilon_decay),
                             kl_cap=cfg.kl_cap)
    if cfg.type == "thompson":
        return ThompsonAgent(model, planner, rng)
    if cfg.type == "mdl":
        return MDLAgent(model, planner, rng, cfg.lam)
    return RandomAgent(model, planner, rng)
