from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_instance
from models.instance import ball_sets, expected_cost, maxdist
from solvers.bruteforce import exact_two_stage
from solvers.cluster import greedy_cluster_by_radius
from solvers.reduction import (
    ReductionExtension,
    extend_reduction,
    outlier_penalties,
    reduce_and_solve,
)
from solvers.matroid import KnapsackSystem
from solvers.registry import get_inner
from solvers.robust_outlier import RW_SOLVERS
from solvers.settings import SolverSettings


def test_e1_penalties(e1):
    instance, distribution = e1
    balls = ball_sets(instance)
    clusterings = {s.id: greedy_cluster_by_radius(balls, s.active, instance.radii) for s in distribution}
    assert outlier_penalties(instance, distribution, balls, clusterings).tolist() == [2.0, 4.0]
    assert outlier_penalties(instance, distribution, balls, clusterings, 'listing').tolist() == [4.0, 8.0]


@pytest.mark.parametrize('algorithm', ['matsup5', 'matsup11'])
def test_e1_reduction_keeps_everything_in_stage2(e1, algorithm):
    instance, distribution = e1
    result = get_inner(algorithm).run(instance, distribution, SolverSettings())
    assert result.feasible
    assert result.strategy.stage1 == frozenset()
    assert expected_cost(instance, distribution, result.strategy) == pytest.approx(6.0)
    assert result.certificate.to_dict(instance) == {
        'kind': 'reduction', 'F_I': [], 'rho': result.certificate.rho,
        'radii': {'c1': 2.0, 'c2': 2.0},
    }


@settings(deadline=None, max_examples=200)
@given(st.integers(0, 10 ** 6))
def test_rw3_reduction_costs_at_most_the_optimum_within_5r(seed):
    rng = np.random.default_rng(seed)
    instance, distribution = random_instance(rng, n=int(rng.integers(1, 5)), m=int(rng.integers(1, 5)),
                                             scenarios=int(rng.integers(1, 4)))
    instance = instance.with_budget(exact_two_stage(instance, distribution).value)

    result = reduce_and_solve(instance, distribution, RW_SOLVERS['rw3'])
    assert result.feasible
    assert expected_cost(instance, distribution, result.strategy) <= instance.budget + 1e-6
    for scenario in distribution:
        assert maxdist(instance, scenario, result.strategy) <= 5.0 + 1e-9


@settings(deadline=None, max_examples=200)
@given(st.integers(0, 10 ** 6))
def test_rw9_reduction_handles_per_client_radii(seed):
    rng = np.random.default_rng(seed)
    instance, distribution = random_instance(rng, n=int(rng.integers(1, 5)), m=int(rng.integers(1, 5)),
                                             scenarios=int(rng.integers(1, 4)))
    radii = instance.distances.min(axis=1) * rng.uniform(1.0, 2.5, size=instance.n)
    instance = replace(instance, radii=radii)
    instance = instance.with_budget(exact_two_stage(instance, distribution).value)

    result = reduce_and_solve(instance, distribution, RW_SOLVERS['rw9'])
    assert result.feasible
    assert expected_cost(instance, distribution, result.strategy) <= instance.budget + 1e-6
    for scenario in distribution:
        assert maxdist(instance, scenario, result.strategy) <= 11.0 + 1e-9


def test_extension_depends_only_on_stage1_rho_and_radii(e1):
    instance, distribution = e1
    result = reduce_and_solve(instance, distribution, RW_SOLVERS['rw3'])
    rebuilt = ReductionExtension(instance, result.strategy.stage1, result.certificate.rho)
    for scenario in distribution:
        assert rebuilt.extend(scenario) == result.strategy.stage2[scenario.id]

    a2 = distribution.scenarios[1]
    assert extend_reduction(instance, frozenset({0}), 3.0, a2) == frozenset({1})


@settings(deadline=None, max_examples=200)
@given(st.integers(0, 10 ** 6))
def test_musup5_respects_the_knapsack_rows(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 5))
    knapsack = KnapsackSystem(rng.integers(0, 3, size=(2, m)), (int(rng.integers(0, 4)), 2))
    instance, distribution = random_instance(rng, n=int(rng.integers(1, 5)), m=m,
                                             scenarios=int(rng.integers(1, 4)), constraint=knapsack)
    instance = instance.with_budget(exact_two_stage(instance, distribution).value)

    result = get_inner('musup5').run(instance, distribution, SolverSettings())
    assert result.feasible
    assert knapsack.admits(result.strategy.stage1)
    assert expected_cost(instance, distribution, result.strategy) <= instance.budget + 1e-6
    for scenario in distribution:
        assert maxdist(instance, scenario, result.strategy) <= 5.0 + 1e-9
