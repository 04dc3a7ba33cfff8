import math

import numpy as np
import pytest
from scipy import stats

from urlab.core import DOWN, LEFT, NOOP, RIGHT, UP, Percept
from urlab.errors import EmptyClassError, ImpossiblePerceptError, StateError
from urlab.gridworld import GridState, exact_percept_distribution, parse_layout
from urlab.models import (
    DirichletGridModel,
    IIDModel,
    KnownGridModel,
    LocationMixture,
    MixtureModel,
    bandit,
    beta_entropy,
    mdl_select,
    posterior_sample,
)
from urlab.rng import RandomSource

E = Percept(0, 1.0)
F = Percept(1, 0.0)


def two_point(p1, p2):
    """Two single-action hypotheses giving percept E probability p1 and p2."""
    return [
        IIDModel([{E: p1, F: 1 - p1}], reward_bounds=(0, 1)),
        IIDModel([{E: p2, F: 1 - p2}], reward_bounds=(0, 1)),
    ]


# -- generic mixture --------------------------------------------------------


def test_mixture_predictive_examples():
    m = MixtureModel(two_point(1.0, 0.0), [0.5, 0.5])
    assert m.conditional_probability(0, E) == 0.5
    m = MixtureModel(two_point(0.3, 0.9), [1.0, 0.0])
    assert m.conditional_probability(0, E) == pytest.approx(0.3)
    assert m.percept_distribution(0) == pytest.approx({E: 0.3, F: 0.7})


def test_mixture_update_examples():
    m = MixtureModel(two_point(1.0, 0.0), [0.5, 0.5])
    m.update(0, E)
    assert m.posterior() == [1.0, 0.0]
    assert m.info_gain_of_last_update() == pytest.approx(math.log(2))
    m = MixtureModel(two_point(0.75, 0.25), [0.5, 0.5])
    m.update(0, E)
    assert m.posterior() == pytest.approx([0.75, 0.25])


def test_identity_update_has_zero_gain():
    m = MixtureModel(two_point(0.5, 0.5), [0.3, 0.7])
    m.update(0, E)
    assert m.info_gain_of_last_update() == pytest.approx(0.0, abs=1e-15)
    assert m.posterior() == pytest.approx([0.3, 0.7])


def test_falsified_component_stays_dead():
    m = MixtureModel(two_point(0.5, 1.0), [0.5, 0.5])
    m.update(0, F)
    assert m.posterior()[1] == 0.0
    for _ in range(20):
        m.update(0, E)
        assert m.posterior()[1] == 0.0


def test_impossible_percept_raises():
    m = MixtureModel(two_point(1.0, 1.0))
    with pytest.raises(ImpossiblePerceptError):
        m.update(0, F)


def test_info_gain_before_update_is_an_error():
    with pytest.raises(StateError):
        MixtureModel(two_point(0.5, 0.5)).info_gain_of_last_update()


def test_checkpoint_round_trip():
    m = MixtureModel(two_point(0.8, 0.4), [0.5, 0.5])
    before = m.percept_distribution(0)
    tok = m.checkpoint()
    for e in (E, E, F, E, F):
        m.update(0, e)
    m.rollback(tok)
    assert m.percept_distribution(0) == before


def test_nested_checkpoints_and_stale_tokens():
    m = MixtureModel(two_point(0.8, 0.4), [0.5, 0.5])
    original = m.posterior()
    c1 = m.checkpoint()
    m.update(0, E)
    mid = m.posterior()
    c2 = m.checkpoint()
    m.update(0, E)
    m.rollback(c2)
    assert m.posterior() == mid
    m.rollback(c1)
    assert m.posterior() == original
    with pytest.raises(StateError):
        m.rollback(c1)


def test_rolling_back_outer_token_discards_inner():
    m = MixtureModel(two_point(0.8, 0.4), [0.5, 0.5])
    c1 = m.checkpoint()
    m.update(0, E)
    c2 = m.checkpoint()
    m.update(0, F)
    m.rollback(c1)
    assert m.posterior() == [0.5, 0.5]
    with pytest.raises(StateError):
        m.rollback(c2)


def test_posterior_sample_point_mass():
    m = MixtureModel(two_point(0.5, 0.5), [1.0, 0.0])
    rng = RandomSource(0)
    assert all(posterior_sample(m, rng) == 0 for _ in range(100))


def test_posterior_sample_binomial():
    m = MixtureModel(two_point(0.5, 0.5), [0.5, 0.5])
    rng = RandomSource(1)
    n = 10_000
    ones = sum(posterior_sample(m, rng) for _ in range(n))
    assert abs(ones - n / 2) <= 3 * math.sqrt(n / 4)


def test_posterior_sample_uniform_over_100():
    spec = parse_layout(["." * 10] * 9 + ["." * 9 + "D"], [0.75])
    m = LocationMixture(spec)
    rng = RandomSource(2)
    counts = np.bincount([posterior_sample(m, rng) for _ in range(20_000)], minlength=100)
    assert stats.chisquare(counts).pvalue > 0.001


def test_mdl_select_examples():
    m = MixtureModel([IIDModel([{E: 1.0}]) for _ in range(4)])
    assert mdl_select(m) == 0
    m.weights = [0.0, 0.0, 1.0, 0.0]
    m.log_likelihoods = [-math.inf, -math.inf, 0.0, -math.inf]
    assert mdl_select(m) == 2


def test_mdl_large_lambda_prefers_likelihood():
    m = MixtureModel(two_point(0.2, 0.9), [0.5, 0.5])
    for _ in range(5):
        m.update(0, E)
    assert mdl_select(m, lam=0.0) == 0
    # index gap 1 vs log-likelihood gap 5 ln(4.5) ~ 7.5: lambda = 1 already flips it
    assert mdl_select(m, lam=1.0) == 1
    assert mdl_select(m, lam=100.0) == 1


def test_mdl_empty_class():
    m = MixtureModel(two_point(0.5, 0.5))
    m.weights = [0.0, 0.0]
    with pytest.raises(EmptyClassError):
        mdl_select(m)


# -- location mixture ------------------------------------------------------


def small():
    return parse_layout(["...", ".#.", "..D"], [0.75])


def test_location_class_size_and_prior():
    m = LocationMixture(small())
    assert len(m.posterior()) == 9
    assert m.posterior() == pytest.approx([1 / 9] * 9)
    assert m.entropy() == pytest.approx(math.log(9))
    assert LocationMixture(small(), include_wall_placements=False).posterior()[4] == 0.0


def test_location_payout_probability_is_weight_times_theta():
    spec = parse_layout(["." * 10] * 9 + ["." * 9 + "D"], [0.75])
    m = LocationMixture(spec)
    d = m.percept_distribution(RIGHT)
    code = spec.obs_codes[1]
    assert d[Percept(code, 100.0)] == pytest.approx(0.01 * 0.75)
    assert sum(d.values()) == pytest.approx(1.0)


def test_location_payout_collapses_posterior():
    m = LocationMixture(small())
    code = small().obs_codes[1]
    m.update(RIGHT, Percept(code, 100.0))
    post = m.posterior()
    assert post[1] == 1.0 and sum(post) == 1.0
    assert m.info_gain_of_last_update() == pytest.approx(math.log(9))


def test_location_miss_scales_one_weight():
    m = LocationMixture(small())
    code = small().obs_codes[1]
    m.update(RIGHT, Percept(code, -1.0))
    post = m.posterior()
    z = 8 + 0.25
    assert post[1] == pytest.approx(0.25 / z)
    assert post[0] == pytest.approx(1 / z)


def test_location_wall_hypothesis_keeps_mass():
    m = LocationMixture(small())
    # walk the ring of open tiles, never seeing a payout
    for a in (RIGHT, RIGHT, DOWN, DOWN, LEFT, LEFT, UP):
        e = next(e for e in m.percept_distribution(a) if e.reward == -1.0)
        m.update(a, e)
    post = m.posterior()
    assert post[4] == max(post)
    assert post[4] > 1 / 9


def test_location_rejects_inconsistent_observation():
    m = LocationMixture(small())
    with pytest.raises(ImpossiblePerceptError):
        m.update(RIGHT, Percept(15, -1.0))


def test_location_checkpoint_restores_everything():
    m = LocationMixture(small())
    before = (m.posterior(), m.entropy(), m.pos, m.log_likelihoods_list())
    tok = m.checkpoint()
    rng = RandomSource(0)
    for _ in range(8):
        m.simulate(rng.randrange(5), rng)
    m.rollback(tok)
    assert (m.posterior(), m.entropy(), m.pos, m.log_likelihoods_list()) == before


def test_location_hypothesis_tracks_position():
    m = LocationMixture(small())
    m.update(RIGHT, Percept(small().obs_codes[1], -1.0))
    h = m.hypothesis(8)
    assert h.pos == 1
    assert h.theta[8] == 0.75 and sum(h.theta) == 0.75


# -- known model -------------------------------------------------------------


def test_known_model_matches_environment_distribution():
    spec = parse_layout(["..N", ".D.", "..."], [0.75])
    model = KnownGridModel(spec)
    rng = RandomSource(3)
    for _ in range(50):
        a = rng.randrange(5)
        state = GridState(spec.coord(model.pos))
        assert model.percept_distribution(a) == pytest.approx(exact_percept_distribution(spec, state, a))
        model.simulate(a, rng)


# -- Dirichlet model ---------------------------------------------------------


def test_dirichlet_fresh_tile_payout_half():
    m = DirichletGridModel(3)
    m.wall[1] = 1
    m.wall[3] = 1
    assert m.payout_probability(1) == 0.5
    d = m.percept_distribution(RIGHT)
    assert sum(p for e, p in d.items() if e.reward == 100.0) == pytest.approx(0.5)


def test_dirichlet_rule_of_succession():
    m = DirichletGridModel(3)
    m.successes[4], m.visits[4] = 1, 3
    assert m.payout_probability(4) == pytest.approx(0.4)


def test_dirichlet_observation_sets_wall_beliefs():
    m = DirichletGridModel(4)
    m.update(NOOP, Percept(0b0101, -1.0))  # left and up walls (off-grid here), right and down open
    assert m.wall[1] == 1 and m.wall[4] == 1  # OPEN
    m2 = DirichletGridModel(4, start=5)
    m2.update(NOOP, Percept(0b0101, -1.0))
    assert m2.wall[4] == 2 and m2.wall[1] == 2  # WALL
    assert m2.wall[6] == 1 and m2.wall[9] == 1


def test_dirichlet_wall_belief_collapses():
    m = DirichletGridModel(4, start=5)
    m.update(NOOP, Percept(0b0001, -1.0))
    d = m.percept_distribution(NOOP)
    for e, p in d.items():
        assert e.observation & 1 == 1
    assert m.wall_probability(4) == 1.0


def test_dirichlet_counts_update():
    m = DirichletGridModel(3)
    m.successes[0], m.visits[0] = 1, 3
    m.update(NOOP, Percept(0b0101, 100.0))
    assert (m.successes[0], m.visits[0]) == (2, 4)


def test_dirichlet_bump_marks_wall_and_keeps_position():
    m = DirichletGridModel(3)
    m.update(RIGHT, Percept(0b0111, -10.0))
    assert m.pos == 0
    assert m.wall[1] == 2


def test_dirichlet_wall_discovery_gain():
    m = DirichletGridModel(3)
    m.wall[3] = 1  # down already known open
    # bump right: one new wall (right). Observation repeats it, nothing else new.
    m.update(RIGHT, Percept(0b0111, -10.0))
    assert m.info_gain_of_last_update() == pytest.approx(math.log(2))


def test_dirichlet_touches_at_most_five_tiles():
    m = DirichletGridModel(10)
    rng = RandomSource(4)
    for _ in range(300):
        m.simulate(rng.randrange(5), rng)
        assert m.last_touched <= 5


def test_dirichlet_distribution_sums_to_one_after_updates():
    m = DirichletGridModel(5)
    rng = RandomSource(6)
    for _ in range(100):
        for a in range(5):
            assert sum(m.percept_distribution(a).values()) == pytest.approx(1.0, abs=1e-9)
        m.simulate(rng.randrange(5), rng)


def test_dirichlet_simulate_probability_matches_distribution():
    m = DirichletGridModel(5)
    rng = RandomSource(7)
    for _ in range(200):
        a = rng.randrange(5)
        d = m.percept_distribution(a)
        tok = m.checkpoint()
        e = m.simulate(a, rng)
        p = m.last_probability
        m.rollback(tok)
        assert p == pytest.approx(d[e])
        assert m.conditional_probability(a, e) == pytest.approx(d[e])
        m.update(a, e)


def test_dirichlet_undo_log():
    m = DirichletGridModel(5)
    rng = RandomSource(8)
    for _ in range(10):
        m.simulate(rng.randrange(5), rng)
    state = (list(m.wall), list(m.successes), list(m.visits), m.pos)
    tok = m.checkpoint()
    for _ in range(30):
        m.simulate(rng.randrange(5), rng)
    m.rollback(tok)
    assert (list(m.wall), list(m.successes), list(m.visits), m.pos) == state


def test_beta_entropy_reference_values():
    assert beta_entropy(1.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert beta_entropy(2.0, 3.0) == pytest.approx(stats.beta(2, 3).entropy())


# -- bandit ------------------------------------------------------------------


def test_bandit_table():
    b = bandit([0.8, 0.2])
    assert b.conditional_probability(0, Percept(0, 1.0)) == pytest.approx(0.8)
    assert b.reward_bounds == (0.0, 1.0)
    assert b.num_actions == 2
