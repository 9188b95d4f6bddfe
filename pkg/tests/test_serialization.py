import json

import pytest

from models.serialization import (
    distribution_from_dict,
    dump_json,
    file_sha256,
    instance_from_dict,
    load_json,
    rw_from_dict,
    strategy_from_dict,
    strategy_to_dict,
)
from solvers.errors import CapExceeded, InvalidInstance
from solvers.matroid import ExplicitMatroid, KnapsackSystem
from solvers.reduction import ReductionExtension
from solvers.sup_rounding import SupExtension, solve_sup_poly

MATRIX_DOC = {
    'schema_version': 1,
    'metric': 'matrix',
    'clients': [{'id': 'a', 'row': [1.0, 3.0]}, {'id': 'b', 'row': [3.0, 1.0]}],
    'facilities': [{'id': 'x', 'c1': 2.0}, {'id': 'y', 'c1': 4.0}],
    'radii': {'a': 1.0, 'b': 1.0},
    'constraint': {'type': 'explicit', 'bases': [['x'], ['y']]},
    'budget': 5.0,
}


def test_matrix_instance_with_explicit_bases():
    instance = instance_from_dict(MATRIX_DOC)
    assert instance.clients == ('a', 'b')
    assert isinstance(instance.constraint, ExplicitMatroid)
    assert instance.constraint.bases() == [[0], [1]]
    assert instance.distances.tolist() == [[1.0, 3.0], [3.0, 1.0]]


def test_knapsack_weights_live_on_facilities():
    doc = dict(MATRIX_DOC, constraint={'type': 'multiknapsack', 'budgets': [3, 1]})
    doc['facilities'] = [{'id': 'x', 'c1': 2.0, 'knapsack_weights': [1, 1]},
                         {'id': 'y', 'c1': 4.0, 'knapsack_weights': [2, 0]}]
    constraint = instance_from_dict(doc).constraint
    assert isinstance(constraint, KnapsackSystem)
    assert constraint.weights.tolist() == [[1, 2], [1, 0]]
    del doc['facilities'][1]['knapsack_weights']
    with pytest.raises(InvalidInstance, match='knapsack weight'):
        instance_from_dict(doc)


@pytest.mark.parametrize('change, message', [
    ({'schema_version': 99}, 'schema_version'),
    ({'metric': 'manhattan'}, 'metric'),
    ({'radii': {'a': 1.0}}, 'missing'),
    ({'constraint': {'type': 'graphic'}}, 'constraint type'),
    ({'budget': 'lots'}, 'malformed'),
])
def test_bad_instance_documents(change, message):
    with pytest.raises(InvalidInstance, match=message):
        instance_from_dict(dict(MATRIX_DOC, **change))


def test_explicit_bases_respect_the_ground_cap():
    with pytest.raises(CapExceeded):
        instance_from_dict(MATRIX_DOC, max_ground=1)


def test_scenarios_need_a_cost_per_facility_and_known_clients():
    instance = instance_from_dict(MATRIX_DOC)
    good = {'scenarios': [{'id': 'S', 'clients': ['b'], 'c2': {'x': 1.0, 'y': 2.0}, 'p': 1.0}]}
    (scenario,) = distribution_from_dict(good, instance)
    assert scenario.active == frozenset({1})
    with pytest.raises(InvalidInstance, match='no stage-II cost'):
        distribution_from_dict({'scenarios': [{'id': 'S', 'clients': [], 'c2': {'x': 1.0}, 'p': 1.0}]},
                               instance)
    with pytest.raises(InvalidInstance, match='unknown client'):
        distribution_from_dict({'scenarios': [{'id': 'S', 'clients': ['z'], 'c2': {'x': 1, 'y': 1},
                                               'p': 1.0}]}, instance)


def test_rw_document_defaults_weights_to_stage1_costs():
    doc = dict(MATRIX_DOC, penalties={'a': 3.0, 'b': 0.5}, V=4.0)
    instance, rw = rw_from_dict(doc)
    assert rw.weights.tolist() == [2.0, 4.0]
    assert rw.penalties.tolist() == [3.0, 0.5]
    assert rw.budget == 4.0
    with pytest.raises(InvalidInstance, match='missing'):
        rw_from_dict(dict(MATRIX_DOC))


def test_strategy_document_restores_the_extension(e1):
    instance, distribution = e1
    result = solve_sup_poly(instance, distribution)
    doc = json.loads(json.dumps(strategy_to_dict(instance, result.strategy, result.certificate)))
    restored = strategy_from_dict(instance, doc)
    assert isinstance(restored.extension, SupExtension)
    for scenario in distribution:
        assert restored.extension.extend(scenario) == result.strategy.stage2[scenario.id]

    reduction = {'schema_version': 1, 'F_I': ['f1'], 'F_A': {},
                 'certificate': {'kind': 'reduction', 'F_I': ['f1'], 'rho': 3.0,
                                 'radii': {'c1': 2.0, 'c2': 2.0}}}
    rule = strategy_from_dict(instance, reduction).extension
    assert isinstance(rule, ReductionExtension)
    assert rule.extend(distribution.scenarios[1]) == frozenset({1})


def test_json_files(tmp_path):
    path = tmp_path / 'doc.json'
    dump_json(path, {'b': 1, 'a': 0.5})
    assert path.read_text() == '{\n  "a": 0.5,\n  "b": 1\n}\n'
    assert load_json(path) == {'a': 0.5, 'b': 1}
    assert len(file_sha256(path)) == 64
    (tmp_path / 'broken.json').write_text('{nope')
    with pytest.raises(InvalidInstance, match='not valid JSON'):
        load_json(tmp_path / 'broken.json')
    (tmp_path / 'list.json').write_text('[]')
    with pytest.raises(InvalidInstance, match='JSON object'):
        load_json(tmp_path / 'list.json')
