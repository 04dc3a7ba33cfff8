import math

import numpy as np
import pytest
from scipy import stats

from urlab.core import DOWN, LEFT, NOOP, RIGHT, UP, Percept
from urlab.errors import ConfigError, DomainError, GenerationError
from urlab.gridworld import (
    DISPENSER,
    REWARD_BOUNDS,
    GridGeneratorConfig,
    GridSpec,
    GridState,
    Gridworld,
    Tile,
    bits_to_code,
    code_to_bits,
    exact_percept_distribution,
    generate_spec,
    observe_bits,
    parse_layout,
    reachable_count,
    step,
)
from urlab.rng import RandomSource


def open_grid(n, dispenser=(1, 1), theta=0.75):
    rows = ["." * n for _ in range(n)]
    x, y = dispenser
    rows[y] = rows[y][:x] + "D" + rows[y][x + 1:]
    return parse_layout(rows, [theta])


def test_bump_into_wall():
    spec = parse_layout([".#.", "...", "..D"], [0.75])
    state, e = step(spec, GridState((0, 0)), RIGHT, RandomSource(0))
    assert state.pos == (0, 0)
    assert e.reward == -10.0


def test_off_grid_is_a_wall():
    spec = open_grid(3)
    state, e = step(spec, GridState((0, 0)), LEFT, RandomSource(0))
    assert state.pos == (0, 0) and e.reward == -10.0
    state, e = step(spec, GridState((0, 0)), UP, RandomSource(0))
    assert state.pos == (0, 0) and e.reward == -10.0


def test_noop_on_empty():
    spec = open_grid(3)
    state, e = step(spec, GridState((0, 0)), NOOP, RandomSource(0))
    assert state.pos == (0, 0) and e.reward == -1.0


def test_deterministic_dispenser_pays():
    spec = open_grid(3, theta=1.0)
    rng = RandomSource(0)
    for _ in range(20):
        _, e = step(spec, GridState((1, 1)), NOOP, rng)
        assert e.reward == 100.0


def test_moving_onto_dispenser_draws_payout():
    spec = open_grid(3, dispenser=(1, 0), theta=1.0)
    state, e = step(spec, GridState((0, 0)), RIGHT, RandomSource(0))
    assert state.pos == (1, 0) and e.reward == 100.0


def test_dispenser_frequency_binomial():
    spec = open_grid(3, theta=0.75)
    rng = RandomSource(11)
    n = 10_000
    hits = sum(step(spec, GridState((1, 1)), NOOP, rng)[1].reward == 100.0 for _ in range(n))
    sigma = math.sqrt(n * 0.75 * 0.25)
    assert abs(hits - 0.75 * n) <= 3 * sigma


def test_observation_bits_examples():
    spec = open_grid(10)
    assert observe_bits(spec, (0, 0)) == (1, 0, 1, 0)
    assert observe_bits(spec, (4, 4)) == (0, 0, 0, 0)
    enclosed = parse_layout([".#..", "#...", "....", "...D"], [0.5])
    assert observe_bits(enclosed, (0, 0)) == (1, 1, 1, 1)


def test_observation_inside_wall_rejected():
    spec = parse_layout([".#", ".D"], [0.5])
    with pytest.raises(DomainError):
        observe_bits(spec, (1, 0))


def test_bit_code_round_trip():
    for code in range(16):
        assert bits_to_code(code_to_bits(code)) == code
    # left | right << 1 | up << 2 | down << 3
    assert bits_to_code((1, 0, 1, 0)) == 5


def test_perceptual_aliasing():
    spec = open_grid(5, dispenser=(4, 4))
    assert observe_bits(spec, (1, 1)) == observe_bits(spec, (2, 2))


def test_reachable_count_examples():
    assert reachable_count(parse_layout(["..", ".D"], [0.5])) == 4
    assert reachable_count(parse_layout([".#.", ".#D", ".#."], [0.5])) == 3
    walled = parse_layout([".#.", "##D", "..."], [0.5])
    assert reachable_count(walled) == 1


def test_exact_distribution_examples():
    spec = parse_layout(["..N", ".D.", "..."], [0.75], noise_alphabet=16)
    d = exact_percept_distribution(spec, GridState((0, 0)), DOWN)
    assert d == {Percept(spec.obs_codes[3], -1.0): 1.0}
    d = exact_percept_distribution(spec, GridState((0, 1)), RIGHT)
    code = spec.obs_codes[4]
    assert d == {Percept(code, 100.0): 0.75, Percept(code, -1.0): 0.25}
    d = exact_percept_distribution(spec, GridState((1, 0)), RIGHT)
    assert len(d) == 16
    assert all(p == pytest.approx(1 / 16) for p in d.values())


def test_step_matches_exact_distribution_chi2():
    spec = parse_layout(["...", ".D.", "..."], [0.75])
    rng = RandomSource(5)
    dist = exact_percept_distribution(spec, GridState((0, 1)), RIGHT)
    keys = sorted(dist)
    counts = {k: 0 for k in keys}
    n = 10_000
    for _ in range(n):
        counts[step(spec, GridState((0, 1)), RIGHT, rng)[1]] += 1
    obs = np.array([counts[k] for k in keys])
    exp = np.array([dist[k] * n for k in keys])
    assert stats.chisquare(obs, exp).pvalue > 0.001


def test_parse_layout_passthrough_and_errors():
    text = "\n".join(["..........", ".#.#.#.#.#"] + [".........."] * 7 + ["........D."])
    spec = parse_layout(text, [0.75])
    assert spec.layout_text() == text
    assert generate_spec(GridGeneratorConfig(layout=text, thetas=[0.75]), RandomSource(0)) == spec
    with pytest.raises(ConfigError, match="environment.layout"):
        parse_layout(["..x", "...", "..D"], [0.5])
    with pytest.raises(ConfigError, match="environment.thetas"):
        parse_layout(["...", "...", "..D"], [])
    with pytest.raises(ConfigError, match="environment.layout"):
        parse_layout(["...", "... ", "..D"], [0.5])


def test_spec_invariants():
    with pytest.raises(DomainError):
        GridSpec([[Tile("wall"), Tile(DISPENSER, theta=0.5)], [Tile(), Tile()]])
    with pytest.raises(DomainError):
        GridSpec([[Tile(), Tile()], [Tile(), Tile()]])
    with pytest.raises(DomainError):
        Tile(DISPENSER)
    with pytest.raises(DomainError):
        Tile("empty", theta=0.5)


def test_generation_reproducible():
    cfg = GridGeneratorConfig(size=10, thetas=[0.75])
    a = generate_spec(cfg, RandomSource(4))
    b = generate_spec(cfg, RandomSource(4))
    assert a == b
    assert a.n == 10 and a.thetas() == [0.75]
    # every open tile is reachable
    open_tiles = sum(not w for w in a.walls)
    assert reachable_count(a) == open_tiles


def test_generation_density_one_fails():
    with pytest.raises(GenerationError):
        generate_spec(GridGeneratorConfig(size=5, wall_density=1.0, max_retries=5), RandomSource(0))


def test_live_gridworld_tracks_visits():
    spec = open_grid(3)
    env = Gridworld(spec, RandomSource(0))
    env.step(RIGHT)
    env.step(RIGHT)
    env.step(LEFT)
    assert env.pos == (1, 0)
    assert env.visited == {0, 1, 2}
    assert env.reward_bounds == REWARD_BOUNDS == (-10.0, 100.0)
