"""Experiment orchestration: config resolution, seeded runs, scores and output files.

A config is a nested JSON object::

    {
      "label": "aixi-mloc",
      "preset": "smoke",
      "cycles": 300, "runs": 10, "seed": 0,
      "environment": {"layout": "default", "thetas": [0.75]},
      "agent": {"type": "aixi", "model": "mixture", "horizon": 4, "samples": 200}
    }

Values are layered: built-in defaults, then the preset, then the file, then
command-line overrides. Run ``i`` draws from seed ``seed + i``, split into an
environment stream and an agent stream, so runs are independent of each
other and of the execution order.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np
from scipy import stats as sps

from urlab.agents import AgentConfig, build_agent
from urlab.errors import ConfigError
from urlab.gridworld import GridGeneratorConfig, Gridworld, generate_spec, reachable_count
from urlab.rng import RandomSource

# 10x10 maze; every open tile is reachable from the top-left start.
DEFAULT_LAYOUT = (
    "..........",
    ".##.###.#.",
    ".#....#.#.",
    ".#.##.#...",
    "...#..##.#",
    ".#.#.#....",
    ".#...#.##.",
    ".####..#..",
    "......#.D.",
    ".#.#......",
)

PRESETS = {
    "smoke": {
        "cycles": 300,
        "runs": 10,
        "environment": {"size": 10, "thetas": [0.75]},
        "agent": {"horizon": 4, "samples": 200, "gamma": 0.99},
    },
    "full": {
        "cycles": 500,
        "runs": 50,
        "environment": {"size": 10, "thetas": [0.75]},
        "agent": {"horizon": 6, "samples": 600, "gamma": 0.99},
    },
}

SCORE_KINDS = ("auto", "reward", "exploration")
FINAL_WINDOW = 0.1
TRACE_COLUMNS = ("run", "t", "score", "cum_avg", "explored_frac", "mode", "reward")


@dataclass
class EnvironmentConfig:
    """``layout`` is ``"default"``, ``"random"``, or rows of ``.#DN`` text."""

    layout: object = "default"
    thetas: list = field(default_factory=lambda: [0.75])
    size: int = 10
    wall_density: float = 0.2
    noise_tiles: int = 0
    noise_alphabet: int = 16
    seed: Optional[int] = None

    def validate(self) -> None:
        if not isinstance(self.thetas, list) or not self.thetas:
            raise ConfigError("need a non-empty list of payout probabilities", key="environment.thetas")
        for th in self.thetas:
            if not isinstance(th, (int, float)) or not 0.0 <= th <= 1.0:
                raise ConfigError(f"payout probability {th!r} outside [0, 1]", key="environment.thetas")
        if not isinstance(self.size, int) or self.size < 2:
            raise ConfigError("must be an integer >= 2", key="environment.size")
        if not 0.0 <= self.wall_density <= 1.0:
            raise ConfigError("must lie in [0, 1]", key="environment.wall_density")
        if isinstance(self.layout, str) and self.layout not in ("default", "random"):
            raise ConfigError("expected 'default', 'random' or a list of rows", key="environment.layout")

    def build(self, base_seed: int):
        seed = base_seed if self.seed is None else self.seed
        if self.layout == "default":
            text = "\n".join(DEFAULT_LAYOUT)
        elif self.layout == "random":
            text = None
        else:
            text = "\n".join(self.layout)
        gen = GridGeneratorConfig(
            size=self.size,
            wall_density=self.wall_density,
            thetas=list(self.thetas),
            layout=text,
            noise_tiles=self.noise_tiles,
            noise_alphabet=self.noise_alphabet,
        )
        return generate_spec(gen, RandomSource(seed, stream=(2,)))


@dataclass
class ExperimentConfig:
    label: str = "experiment"
    cycles: int = 300
    runs: int = 10
    seed: int = 0
    score: str = "auto"
    parallel: int = 1
    preset: Optional[str] = None
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)

    def validate(self) -> None:
        if not isinstance(self.cycles, int) or self.cycles < 1:
            raise ConfigError("must be an integer >= 1", key="cycles")
        if not isinstance(self.runs, int) or self.runs < 1:
            raise ConfigError("must be an integer >= 1", key="runs")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("must be a non-negative integer", key="seed")
        if self.score not in SCORE_KINDS:
            raise ConfigError(f"expected one of {', '.join(SCORE_KINDS)}", key="score")
        if not isinstance(self.parallel, int) or self.parallel < 1:
            raise ConfigError("must be an integer >= 1", key="parallel")
        self.environment.validate()
        self.agent.validate()

    @property
    def score_kind(self) -> str:
        if self.score != "auto":
            return self.score
        return "exploration" if self.agent.type.startswith("ksa-") else "reward"

    def to_dict(self) -> dict:
        d = asdict(self)
        agent = d["agent"]
        agent["lambda"] = agent.pop("lam")
        env = d["environment"]
        if isinstance(env["layout"], tuple):
            env["layout"] = list(env["layout"])
        return d


# ---------------------------------------------------------------------------
# Config resolution


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _build_section(cls, data: dict, prefix: str, renames: Optional[dict] = None):
    if not isinstance(data, dict):
        raise ConfigError("expected an object", key=prefix)
    renames = renames or {}
    names = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        name = renames.get(key, key)
        if name not in names or key in renames.values():
            raise ConfigError("unknown key", key=f"{prefix}.{key}")
        kwargs[name] = value
    return cls(**kwargs)


def resolve_config(data: dict, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Layer defaults, preset, ``data`` and ``overrides`` into a validated config."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object", key="<root>")
    overrides = overrides or {}
    preset = overrides.get("preset", data.get("preset"))
    layered: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}", key="preset")
        layered = _merge(layered, PRESETS[preset])
    layered = _merge(layered, data)
    layered = _merge(layered, overrides)
    layered["preset"] = preset
    top = {f.name for f in fields(ExperimentConfig)}
    for key in layered:
        if key not in top:
            raise ConfigError("unknown key", key=key)
    env_data = layered.pop("environment", {})
    agent_data = layered.pop("agent", {})
    try:
        env = _build_section(EnvironmentConfig, env_data, "environment")
        agent = _build_section(AgentConfig, agent_data, "agent", {"lambda": "lam"})
        if isinstance(env.layout, list):
            for row in env.layout:
                if not isinstance(row, str):
                    raise ConfigError("layout rows must be strings", key="environment.layout")
        cfg = ExperimentConfig(environment=env, agent=agent, **layered)
    except TypeError as exc:
        raise ConfigError(str(exc), key="<root>") from exc
    cfg.validate()
    return cfg


def load_config(path: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read a JSON config file; syntax errors report line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", key=path) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}", key=path) from exc
    return resolve_config(data, overrides)


# ---------------------------------------------------------------------------
# Runs


@dataclass
class RunTrace:
    run: int
    seed: int
    rows: list  # (run, t, score, cum_avg, explored_frac, mode, reward)
    posterior: dict

    @property
    def scores(self) -> list:
        return [r[2] for r in self.rows]

    @property
    def cum_avg(self) -> list:
        return [r[3] for r in self.rows]

    @property
    def rewards(self) -> list:
        return [r[6] for r in self.rows]

    @property
    def explored(self) -> list:
        return [r[4] for r in self.rows]


def score(kind: str, trace: RunTrace) -> list:
    """Per-cycle score series: the reward, or 100 * explored fraction."""
    if kind == "reward":
        return trace.rewards
    if kind == "exploration":
        return [100.0 * f for f in trace.explored]
    raise ConfigError(f"unknown score kind {kind!r}", key="score")


def exploration_score(visited: int, reachable: int) -> float:
    return 100.0 * visited / reachable


def run_single(cfg: ExperimentConfig, run: int, spec=None) -> RunTrace:
    """One T-cycle agent/environment interaction for run index ``run``."""
    if spec is None:
        spec = cfg.environment.build(cfg.seed)
    seed = cfg.seed + run
    env = Gridworld(spec, RandomSource(seed, stream=(0,)))
    agent = build_agent(cfg.agent, spec, RandomSource(seed, stream=(1,)))
    reachable = reachable_count(spec)
    kind = cfg.score_kind
    rows = []
    total = 0.0
    for t in range(1, cfg.cycles + 1):
        action = agent.act()
        mode = agent.mode
        percept = env.step(action)
        agent.update(action, percept)
        explored = len(env.visited) / reachable
        s = percept.reward if kind == "reward" else 100.0 * explored
        total += s
        rows.append((run, t, s, total / t, explored, mode, percept.reward))
    return RunTrace(run, seed, rows, agent.snapshot())


def _run_worker(args):
    cfg, run, spec = args
    return run_single(cfg, run, spec)


@dataclass
class SummaryStats:
    """Across-run statistics of the cumulative-average score curve."""

    label: str
    mean: list
    sd: list
    runs: int
    final_window: list  # per-run mean of the cumulative-average curve over the last window
    final_explored: tuple  # (mean, sd) of the final explored fraction

    @property
    def cycles(self) -> int:
        return len(self.mean)

    @property
    def final_mean(self) -> float:
        return float(np.mean(self.final_window))


def window_start(cycles: int, fraction: float = FINAL_WINDOW) -> int:
    """0-based index of the first cycle in the final window (at least one cycle)."""
    return cycles - max(1, int(math.ceil(fraction * cycles)))


def summarize(label: str, traces: list) -> SummaryStats:
    curves = np.array([t.cum_avg for t in traces], dtype=float)
    scores = np.array([t.scores for t in traces], dtype=float)
    n_runs, cycles = scores.shape
    # mean_t = (1 / tN) sum_i sum_{j <= t} s_ij, recomputed from raw scores
    mean = np.cumsum(scores.sum(axis=0)) / (np.arange(1, cycles + 1) * n_runs)
    sd = curves.std(axis=0, ddof=1) if n_runs > 1 else np.zeros(cycles)
    start = window_start(cycles)
    final = curves[:, start:].mean(axis=1)
    explored = np.array([t.explored[-1] for t in traces])
    ex_sd = float(explored.std(ddof=1)) if n_runs > 1 else 0.0
    return SummaryStats(label, mean.tolist(), sd.tolist(), n_runs, final.tolist(), (float(explored.mean()), ex_sd))


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None):
    """Run every seed; returns (stats, traces) and writes files when ``out_dir`` is set."""
    cfg.validate()
    spec = cfg.environment.build(cfg.seed)
    jobs = [(cfg, i, spec) for i in range(cfg.runs)]
    if cfg.parallel > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel) as pool:
            traces = list(pool.map(_run_worker, jobs))
    else:
        traces = [_run_worker(job) for job in jobs]
    traces.sort(key=lambda tr: tr.run)
    stats = summarize(cfg.label, traces)
    if out_dir is not None:
        emit_outputs(stats, traces, out_dir, cfg)
    return stats, traces


# ---------------------------------------------------------------------------
# Output


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: str, header, rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from exc


def _write_json(path: str, obj) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from exc


def emit_outputs(stats: SummaryStats, traces: list, out_dir: str, cfg: Optional[ExperimentConfig] = None) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"{out_dir}: {exc.strerror}") from exc
    _write_csv(
        os.path.join(out_dir, "summary.csv"),
        ("label", "t", "mean", "sd"),
        ((stats.label, t + 1, m, s) for t, (m, s) in enumerate(zip(stats.mean, stats.sd))),
    )
    _write_csv(
        os.path.join(out_dir, "final_window.csv"),
        ("label", "run", "final_window_mean", "final_explored_frac"),
        ((stats.label, tr.run, v, tr.explored[-1]) for tr, v in zip(traces, stats.final_window)),
    )
    for tr in traces:
        _write_csv(os.path.join(out_dir, f"trace_{tr.run}.csv"), TRACE_COLUMNS, tr.rows)
        _write_json(os.path.join(out_dir, f"posterior_final_{tr.run}.json"), tr.posterior)
    if cfg is not None:
        resolved = cfg.to_dict()
        # worker count is an execution detail; results do not depend on it
        resolved.pop("parallel")
        resolved["run_seeds"] = [cfg.seed + i for i in range(cfg.runs)]
        _write_json(os.path.join(out_dir, "config.resolved.json"), resolved)


def read_summary(path: str) -> SummaryStats:
    """Load ``summary.csv`` and the sibling ``final_window.csv``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError("empty summary", key=path)
    label = rows[0]["label"]
    mean = [float(r["mean"]) for r in rows]
    sd = [float(r["sd"]) for r in rows]
    fw_path = os.path.join(os.path.dirname(path) or ".", "final_window.csv")
    with open(fw_path, newline="", encoding="utf-8") as fh:
        fw = list(csv.DictReader(fh))
    final = [float(r["final_window_mean"]) for r in fw]
    explored = np.array([float(r["final_explored_frac"]) for r in fw])
    ex_sd = float(explored.std(ddof=1)) if len(fw) > 1 else 0.0
    return SummaryStats(label, mean, sd, len(fw), final, (float(explored.mean()), ex_sd))


# ---------------------------------------------------------------------------
# Comparison


@dataclass
class Comparison:
    a: str
    b: str
    mean_a: float
    mean_b: float
    statistic: float
    p_value: float

    @property
    def difference(self) -> float:
        return self.mean_a - self.mean_b

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def welch(a: SummaryStats, b: SummaryStats, alternative: str = "two-sided") -> Comparison:
    """Two-sample Welch t-test on per-run final-window means.

    ``alternative="greater"`` tests the one-sided claim mean(a) > mean(b).
    """
    x = np.asarray(a.final_window, dtype=float)
    y = np.asarray(b.final_window, dtype=float)
    ma, mb = float(x.mean()), float(y.mean())
    if len(x) < 2 or len(y) < 2:
        return Comparison(a.label, b.label, ma, mb, math.nan, math.nan)
    if x.var() == 0.0 and y.var() == 0.0:
        # degenerate: no spread, so the test reduces to comparing the constants
        if ma == mb:
            return Comparison(a.label, b.label, ma, mb, 0.0, 1.0)
        stat = math.copysign(math.inf, ma - mb)
        p = 0.0 if alternative == "two-sided" or (alternative == "greater") == (ma > mb) else 1.0
        return Comparison(a.label, b.label, ma, mb, stat, p)
    with warnings.catch_warnings():
        # one constant sample triggers a precision warning that does not apply here
        warnings.simplefilter("ignore", RuntimeWarning)
        res = sps.ttest_ind(x, y, equal_var=False, alternative=alternative)
    return Comparison(a.label, b.label, ma, mb, float(res.statistic), float(res.pvalue))


def compare(experiments: list) -> tuple:
    """Long-format (label, t, mean, sd) rows plus pairwise Welch tests."""
    if not experiments:
        raise ConfigError("nothing to compare", key="compare")
    cycles = experiments[0].cycles
    for s in experiments[1:]:
        if s.cycles != cycles:
            raise ConfigError(
                f"{s.label!r} has {s.cycles} cycles, {experiments[0].label!r} has {cycles}", key="compare"
            )
    table = [(s.label, t + 1, m, d) for s in experiments for t, (m, d) in enumerate(zip(s.mean, s.sd))]
    tests = [welch(a, b) for i, a in enumerate(experiments) for b in experiments[i + 1:]]
    return table, tests
