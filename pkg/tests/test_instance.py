import math

import numpy as np
import pytest

from models.instance import (
    Instance,
    Scenario,
    ScenarioDistribution,
    Strategy,
    ball,
    candidate_radii,
    cheapest_in_ball,
    covering_radius,
    empirical_distribution,
    expected_cost,
    maxdist,
    strategy_cost,
)
from solvers.errors import EmptyBall, InvalidInstance, MissingScenario
from solvers.matroid import Unconstrained


def test_e1_ball_membership_is_closed(e1):
    instance, _ = e1
    assert ball(instance, 0).members == {0}
    assert ball(instance, 1).members == {1}
    # d(c1, f2) = 9 sits exactly on the boundary
    assert ball(instance, 0, radius=9.0).members == {0, 1}


def test_e1_expected_costs(e1):
    instance, distribution = e1
    a1, a2 = distribution.scenarios
    cases = {
        frozenset(): 6.0,
        frozenset({0}): 9.0,
        frozenset({1}): 7.0,
        frozenset({0, 1}): 10.0,
    }
    for stage1, expected in cases.items():
        stage2 = {a1.id: frozenset() if 0 in stage1 else {0},
                  a2.id: ({0} - stage1) | ({1} - stage1)}
        strategy = Strategy(stage1, stage2)
        assert expected_cost(instance, distribution, strategy) == pytest.approx(expected)
        assert maxdist(instance, a2, strategy) <= 0.5 + 1e-12


def test_strategy_cost_without_stage2_entry_raises(e1):
    instance, distribution = e1
    with pytest.raises(MissingScenario):
        strategy_cost(instance, distribution.scenarios[0], Strategy({0}, {}))


def test_cheapest_in_ball_tie_breaks_by_index():
    assert cheapest_in_ball(frozenset({3, 1, 2}), [9.0, 4.0, 4.0, 4.0]) == 1
    with pytest.raises(EmptyBall):
        cheapest_in_ball(frozenset(), [1.0])


def test_empty_scenario_has_zero_maxdist(e1):
    instance, _ = e1
    empty = Scenario('E', [], [1.0, 1.0])
    assert maxdist(instance, empty, Strategy(frozenset(), {'E': frozenset()})) == 0.0


def test_nothing_open_is_infinitely_far(e1):
    instance, distribution = e1
    a1 = distribution.scenarios[0]
    assert maxdist(instance, a1, Strategy(frozenset(), {a1.id: frozenset()})) == math.inf


def test_probabilities_must_sum_to_one():
    with pytest.raises(InvalidInstance):
        ScenarioDistribution((Scenario('A', [0], [1.0], 0.5), Scenario('B', [0], [1.0], 0.4)))


def test_standing_assumption_is_enforced():
    with pytest.raises(InvalidInstance, match='no facility within'):
        Instance.from_points(['c'], ['f'], [0.0], [5.0], radii=[1.0], stage1_costs=[1.0],
                             constraint=Unconstrained(1), budget=1.0)


def test_matrix_must_extend_to_a_metric():
    distances = np.array([[1.0, 100.0], [1.0, 1.0]])
    with pytest.raises(InvalidInstance, match='triangle'):
        Instance(['a', 'b'], ['x', 'y'], distances, radii=[100.0, 1.0], stage1_costs=[1.0, 1.0],
                 constraint=Unconstrained(2), budget=1.0)


def test_empirical_distribution_merges_identical_samples():
    samples = [Scenario('s0', [0], [1.0]), Scenario('s1', [1], [1.0]), Scenario('s2', [0], [1.0])]
    distribution, owner = empirical_distribution(samples)
    assert len(distribution) == 2
    assert owner == [0, 1, 0]
    assert [s.probability for s in distribution] == pytest.approx([2 / 3, 1 / 3])


def test_candidate_radii_start_at_covering_radius(e1):
    instance, _ = e1
    assert covering_radius(instance) == pytest.approx(1.0)
    assert candidate_radii(instance) == pytest.approx([1.0, 9.0])
