import math

import numpy as np
import pytest

from models.instance import Instance, Scenario, ScenarioDistribution, SolveStatus, Strategy
from solvers.bruteforce import exact_optimal_radius, exact_two_stage
from solvers.errors import InvalidConfig
from solvers.generators import e1_instance
from solvers.matroid import Unconstrained
from solvers.registry import get_inner
from solvers.saa import (
    DiscardingStrategy,
    SaaConfig,
    delta_sample_count,
    evaluate,
    pick_threshold,
    radius_search,
    saa_bounded_delta,
    saa_run,
)
from solvers.sampling import BernoulliOracle, ExplicitOracle, draw_repetition, oracle_from_identity


def test_repetition_count_and_minimum_samples():
    config = SaaConfig(epsilon=0.1, alpha=0.1, gamma=0.1)
    assert config.repetitions == 29
    assert config.min_samples == 10
    with pytest.raises(InvalidConfig):
        SaaConfig(epsilon=0.1, alpha=0.1, gamma=0.1, samples=5).sample_count(100)
    assert SaaConfig(epsilon=0.1, alpha=0.1, gamma=0.1, samples=12).sample_count(100) == 12


@pytest.mark.parametrize('field', ['epsilon', 'alpha', 'gamma'])
@pytest.mark.parametrize('value', [0.0, 1.0, -0.5])
def test_parameters_must_be_open_unit_interval(field, value):
    params = {'epsilon': 0.1, 'alpha': 0.1, 'gamma': 0.1, field: value}
    with pytest.raises(InvalidConfig):
        SaaConfig(**params)


def test_threshold_ties_favour_later_samples():
    threshold = pick_threshold([5.0, 1.0, 5.0, 3.0], alpha=0.5)
    assert (threshold.value, threshold.rank, threshold.index) == (5.0, 2, 0)
    assert pick_threshold([4.0], alpha=0.01).rank == 1
    with pytest.raises(InvalidConfig):
        pick_threshold([], alpha=0.5)


def _e1_base(instance, distribution):
    return get_inner('sup3').run(instance, distribution, None).strategy


def test_discarding_drops_expensive_scenarios(e1):
    instance, distribution = e1
    a1, a2 = distribution.scenarios
    discarding = DiscardingStrategy(_e1_base(instance, distribution), threshold=3.0)
    assert discarding.extend(a1) == frozenset({0})
    assert discarding.is_discarded(a2)
    assert discarding.extend(a2) == frozenset()

    evaluation = evaluate(instance, distribution, discarding, eta=3.0)
    assert evaluation.expected_cost == pytest.approx(1.0)
    assert evaluation.violation_probability == pytest.approx(0.5)
    assert evaluation.discarded_probability == pytest.approx(0.5)
    assert evaluation.max_eta == pytest.approx(0.5)


def test_evaluate_plain_strategy(e1):
    instance, distribution = e1
    evaluation = evaluate(instance, distribution, _e1_base(instance, distribution), eta=3.0)
    assert evaluation.as_dict() == pytest.approx({
        'expected_cost': 6.0, 'violation_probability': 0.0,
        'max_eta': 0.5, 'discarded_probability': 0.0,
    })
    nothing = Strategy(frozenset(), {'A1': frozenset(), 'A2': frozenset()})
    assert evaluate(instance, distribution, nothing, eta=3.0).max_eta == math.inf


def test_saa_on_e1_is_seeded(e1):
    instance, distribution = e1
    config = SaaConfig(epsilon=0.1, alpha=0.5, gamma=0.5, samples=20, seed=7)
    first = saa_run(instance, ExplicitOracle(distribution), get_inner('sup3'), config)
    second = saa_run(instance, ExplicitOracle(distribution), get_inner('sup3'), config)
    assert first.feasible
    assert first.samples == 20
    assert first.threshold.rank == 10
    assert len(first.sample_costs) == 20
    assert first.sample_costs == second.sample_costs
    assert first.repetitions[0].status is SolveStatus.FEASIBLE
    assert first.formula_samples >= config.min_samples

    evaluation = evaluate(instance, distribution, first.strategy, eta=3.0)
    assert evaluation.expected_cost <= (1 + config.epsilon) * instance.budget + 1e-9


def test_saa_reports_every_repetition_when_infeasible():
    instance, distribution = e1_instance(budget=1.0)
    config = SaaConfig(epsilon=0.1, alpha=0.5, gamma=0.5, samples=10)
    result = saa_run(instance, ExplicitOracle(distribution), get_inner('sup3'), config)
    assert result.status is SolveStatus.INFEASIBLE
    assert len(result.repetitions) == config.repetitions


def test_radius_search_stops_at_the_covering_radius(e1):
    instance, distribution = e1
    config = SaaConfig(epsilon=0.1, alpha=0.5, gamma=0.5, samples=20)
    result = radius_search(instance, ExplicitOracle(distribution), get_inner('sup3'), config)
    assert result.feasible
    assert result.radius == pytest.approx(1.0)
    assert result.radius_grid == ((1.0, SolveStatus.FEASIBLE),)


def test_delta_sample_count(e1):
    instance, _ = e1
    config = SaaConfig(epsilon=0.5, alpha=0.5, gamma=0.5)
    assert delta_sample_count(instance, 9.0, config, log_psi=0.0) == 9
    assert delta_sample_count(instance, 0.0, config, log_psi=0.0) == 1
    free, _ = e1_instance(budget=0.0)
    assert delta_sample_count(free, 0.0, config, log_psi=0.0) == 1
    assert delta_sample_count(free, 2.0, config, log_psi=0.0) == 17
    assert delta_sample_count(free, 20.0, config, log_psi=0.0) == 167
    with pytest.raises(InvalidConfig):
        delta_sample_count(instance, -1.0, config, log_psi=0.0)


def test_bounded_delta_flags_large_stage2_costs(e1):
    instance, distribution = e1
    config = SaaConfig(epsilon=0.3, alpha=0.5, gamma=0.5, samples=15)
    loose = saa_bounded_delta(instance, ExplicitOracle(distribution), get_inner('sup3'), 100.0, config)
    assert loose.feasible
    assert not loose.delta_exceeded
    assert loose.strategy.threshold is None
    tight = saa_bounded_delta(instance, ExplicitOracle(distribution), get_inner('sup3'), 0.5, config)
    assert tight.delta_exceeded


def test_oracles_are_reproducible():
    oracle = BernoulliOracle([0.5, 0.5], [1.0, 2.0], (1.0, 2.0), (0.5, 0.5))
    first = draw_repetition(oracle, 3, 1, 8)
    second = draw_repetition(oracle_from_identity(oracle.identity()), 3, 1, 8)
    assert [s.id for s in first] == [s.id for s in second]

    exact = oracle.to_distribution()
    assert len(exact) == 8
    assert [s.probability for s in exact] == pytest.approx([0.125] * 8)
    with pytest.raises(InvalidConfig):
        oracle_from_identity({'kind': 'mystery'})


def test_explicit_oracle_keeps_scenario_ids(e1):
    _, distribution = e1
    samples = draw_repetition(ExplicitOracle(distribution), 0, 0, 50)
    assert {s.id for s in samples} <= {'A1', 'A2'}
    assert all(s.probability == 1.0 for s in samples)


def _two_sites(budget=1.45):
    """Two far-apart client/facility pairs, four scenarios over which clients show up."""
    instance = Instance.from_points(
        ['c0', 'c1'], ['f0', 'f1'], [1.0, 19.0], [0.0, 20.0],
        radii=[1.0, 1.0], stage1_costs=[1.0, 1.0], constraint=Unconstrained(2), budget=budget,
    )
    truth = ScenarioDistribution((
        Scenario('none', [], [2.0, 2.0], 0.4),
        Scenario('first', [0], [2.0, 2.0], 0.3),
        Scenario('second', [1], [2.0, 2.0], 0.2),
        Scenario('both', [0, 1], [2.0, 2.0], 0.1),
    ))
    return instance, truth


SEEDS = range(50)


@pytest.mark.slow
def test_saa_meets_cost_and_violation_bounds_on_most_seeds():
    instance, truth = _two_sites()
    inner = get_inner('sup3')
    assert exact_two_stage(instance, truth).value == pytest.approx(1.4)
    good = 0
    for seed in SEEDS:
        config = SaaConfig(epsilon=0.1, alpha=0.1, gamma=0.1, samples=200, seed=seed)
        result = saa_run(instance, ExplicitOracle(truth), inner, config)
        if not result.feasible:
            continue
        evaluation = evaluate(instance, truth, result.strategy, eta=inner.eta)
        if (evaluation.expected_cost <= (1 + 2 * config.epsilon) * instance.budget + 1e-9
                and evaluation.violation_probability <= 2 * config.alpha + 1e-9):
            good += 1
    assert good >= 45


@pytest.mark.slow
def test_radius_search_never_overshoots_the_optimal_radius():
    instance, truth = _two_sites()
    best = exact_optimal_radius(instance, truth).radius
    assert best == pytest.approx(1.0)
    good = 0
    for seed in SEEDS:
        config = SaaConfig(epsilon=0.1, alpha=0.1, gamma=0.1, samples=200, seed=seed)
        result = radius_search(instance, ExplicitOracle(truth), get_inner('sup3'), config)
        if result.feasible and result.radius <= best + 1e-9:
            good += 1
    assert good >= 45


@pytest.mark.slow
def test_bounded_delta_meets_the_cost_bound_on_most_seeds():
    instance, truth = _two_sites()
    inner = get_inner('sup3')
    delta = max(s.stage2_costs.sum() for s in truth)
    good = 0
    for seed in SEEDS:
        config = SaaConfig(epsilon=0.3, alpha=0.1, gamma=0.1, samples=1000, seed=seed)
        result = saa_bounded_delta(instance, ExplicitOracle(truth), inner, delta, config)
        if not result.feasible:
            continue
        assert not result.delta_exceeded
        evaluation = evaluate(instance, truth, result.strategy, eta=inner.eta)
        if evaluation.expected_cost <= (1 + 2 * config.epsilon) * instance.budget + 1e-9:
            good += 1
    assert good >= 45
