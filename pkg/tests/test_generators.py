import numpy as np
import pytest

from solvers.errors import InvalidConfig
from solvers.generators import CONSTRAINTS, GeneratorSpec, bernoulli_oracle, generate
from solvers.matroid import ExplicitMatroid, KnapsackSystem, PartitionMatroid, Unconstrained, UniformMatroid


def test_same_seed_same_instance():
    spec = GeneratorSpec(n=6, m=4, scenarios=3, seed=11)
    first, first_dist = generate(spec)
    second, second_dist = generate(spec)
    assert np.array_equal(first.distances, second.distances)
    assert np.array_equal(first.stage1_costs, second.stage1_costs)
    assert [s.active for s in first_dist] == [s.active for s in second_dist]
    assert [s.probability for s in first_dist] == [s.probability for s in second_dist]
    other, _ = generate(GeneratorSpec(n=6, m=4, scenarios=3, seed=12))
    assert not np.array_equal(first.distances, other.distances)


@pytest.mark.parametrize('values', [
    {'n': 0, 'm': 3},
    {'n': 3, 'm': 0},
    {'n': 3, 'm': 3, 'scenarios': 0},
    {'n': 3, 'm': 3, 'layout': 'torus'},
    {'n': 3, 'm': 3, 'constraint': 'graphic'},
    {'n': 3, 'm': 21, 'constraint': 'explicit'},
    {'n': 3, 'm': 3, 'rank': -1},
    {'n': 3, 'm': 3, 'activation': 1.5},
])
def test_bad_specs_are_rejected(values):
    with pytest.raises(InvalidConfig):
        GeneratorSpec(**values)


@pytest.mark.parametrize('constraint, kind', zip(CONSTRAINTS, [
    Unconstrained, UniformMatroid, PartitionMatroid, ExplicitMatroid, KnapsackSystem,
]))
def test_every_structure_can_be_generated(constraint, kind):
    instance, distribution = generate(GeneratorSpec(n=5, m=6, constraint=constraint, rank=2, seed=3))
    assert isinstance(instance.constraint, kind)
    assert instance.constraint.ground_size == 6
    assert sum(s.probability for s in distribution) == pytest.approx(1.0)
    if constraint == 'explicit':
        assert all(len(base) <= 2 for base in instance.constraint.bases())


def test_radius_never_drops_below_the_nearest_facility():
    instance, _ = generate(GeneratorSpec(n=8, m=2, radius=0.0, seed=5))
    assert np.all(instance.distances.min(axis=1) <= instance.radii + 1e-9)
    assert instance.homogeneous


def test_radius_choices_give_per_client_radii():
    instance, _ = generate(GeneratorSpec(n=8, m=3, radius_choices=(1.0, 50.0), seed=2))
    nearest = instance.distances.min(axis=1)
    for radius, floor in zip(instance.radii, nearest):
        assert radius in (1.0, 50.0) or radius == floor
        assert radius >= floor


def test_matrix_layout_drops_points():
    instance, _ = generate(GeneratorSpec(n=3, m=3, layout='matrix'))
    assert instance.client_points is None


def test_from_dict_ignores_unknown_keys_and_wraps_type_errors():
    spec = GeneratorSpec.from_dict({'n': 2, 'm': 2, 'colour': 'blue', 'multipliers': [1, 2]})
    assert spec.multipliers == (1, 2)
    with pytest.raises(InvalidConfig):
        GeneratorSpec.from_dict({'n': 'two', 'm': 2})


def test_bernoulli_oracle_follows_the_generator_settings():
    spec = GeneratorSpec(n=3, m=2, activation=0.25, multipliers=(1.0, 4.0))
    instance, _ = generate(spec)
    oracle = bernoulli_oracle(spec, instance)
    assert oracle.identity()['kind'] == 'bernoulli'
    assert oracle.activation.tolist() == [0.25] * 3
    assert len(oracle.to_distribution()) == 16
