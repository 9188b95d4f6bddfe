"""
JSON documents for instances, scenario lists, RW instances and strategies.

Every document carries ``schema_version``. Facilities, clients and scenarios
are referred to by id in the files and by index in memory.
"""

import hashlib
import json
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from models.instance import Instance, Scenario, ScenarioDistribution, Strategy
from solvers.errors import InvalidInstance, StochSupError
from solvers.matroid import (
    ExplicitMatroid,
    KnapsackSystem,
    PartitionMatroid,
    Unconstrained,
    UniformMatroid,
)
from solvers.reduction import ReductionExtension
from solvers.robust_outlier import RwInstance
from solvers.sup_rounding import SupCertificate, SupExtension

SCHEMA_VERSION = 1


# ── FILES ─────────────────────────────────────────────────────────────────────

def dump_json(path, doc: dict):
    """Stable rendering: sorted keys, fixed indent, trailing newline."""
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + '\n', encoding='utf-8')


def load_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise InvalidInstance(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise InvalidInstance(f"{path}: expected a JSON object")
    return doc


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _check_version(doc: dict):
    version = doc.get('schema_version', SCHEMA_VERSION)
    if not isinstance(version, int) or version > SCHEMA_VERSION:
        raise InvalidInstance(f"unsupported schema_version {version!r}")


# ── CONSTRAINTS ───────────────────────────────────────────────────────────────

def _constraint_to_dict(constraint, facilities) -> dict:
    ids = lambda members: [facilities[i] for i in sorted(members)]
    if isinstance(constraint, Unconstrained):
        return {'type': 'none'}
    if isinstance(constraint, UniformMatroid):
        return {'type': 'uniform', 'k': constraint.k}
    if isinstance(constraint, PartitionMatroid):
        return {'type': 'partition', 'blocks': [ids(b) for b in constraint.blocks],
                'capacities': list(constraint.capacities)}
    if isinstance(constraint, ExplicitMatroid):
        return {'type': 'explicit', 'bases': [ids(b) for b in constraint.bases()]}
    if isinstance(constraint, KnapsackSystem):
        return {'type': 'multiknapsack', 'budgets': list(constraint.budgets)}
    raise InvalidInstance(f"cannot serialize stage-I structure {type(constraint).__name__}")


def _constraint_from_dict(doc: dict, facility_docs: list, index: dict, max_ground: int):
    kind = doc.get('type', 'none')
    m = len(facility_docs)
    positions = lambda labels: [index[str(label)] for label in labels]
    if kind == 'none':
        return Unconstrained(m)
    if kind == 'uniform':
        return UniformMatroid(m, int(doc['k']))
    if kind == 'partition':
        return PartitionMatroid(m, tuple(positions(b) for b in doc['blocks']),
                                tuple(int(c) for c in doc['capacities']))
    if kind == 'explicit':
        return ExplicitMatroid.from_bases([positions(b) for b in doc['bases']], m, max_ground)
    if kind == 'multiknapsack':
        budgets = tuple(doc['budgets'])
        rows = [f.get('knapsack_weights') for f in facility_docs]
        if any(r is None or len(r) != len(budgets) for r in rows):
            raise InvalidInstance("every facility needs one knapsack weight per budget")
        weights = np.asarray(rows, dtype=float).reshape(m, len(budgets)).T
        return KnapsackSystem(weights, budgets)
    raise InvalidInstance(f"unknown constraint type {kind!r}")


# ── INSTANCES ─────────────────────────────────────────────────────────────────

def instance_to_dict(instance: Instance) -> dict:
    euclidean = instance.client_points is not None and instance.facility_points is not None
    facilities = []
    for i, label in enumerate(instance.facilities):
        entry = {'id': label, 'c1': float(instance.stage1_costs[i])}
        if euclidean:
            entry['point'] = [float(x) for x in instance.facility_points[i]]
        if isinstance(instance.constraint, KnapsackSystem):
            entry['knapsack_weights'] = [int(w) for w in instance.constraint.weights[:, i]]
        facilities.append(entry)
    if euclidean:
        clients = [{'id': c, 'point': [float(x) for x in p]}
                   for c, p in zip(instance.clients, instance.client_points)]
    else:
        clients = [{'id': c, 'row': [float(x) for x in row]}
                   for c, row in zip(instance.clients, instance.distances)]
    return {
        'schema_version': SCHEMA_VERSION,
        'metric': 'euclidean' if euclidean else 'matrix',
        'clients': clients,
        'facilities': facilities,
        'radii': {c: float(r) for c, r in zip(instance.clients, instance.radii)},
        'constraint': _constraint_to_dict(instance.constraint, instance.facilities),
        'budget': float(instance.budget),
    }


def instance_from_dict(doc: dict, max_ground: int = 20) -> Instance:
    _check_version(doc)
    try:
        client_docs = list(doc['clients'])
        facility_docs = list(doc['facilities'])
        clients = [str(c['id']) for c in client_docs]
        facilities = [str(f['id']) for f in facility_docs]
        index = {label: i for i, label in enumerate(facilities)}
        radii_doc = doc['radii']
        radii = [float(radii_doc[c]) for c in clients]
        costs = [float(f['c1']) for f in facility_docs]
        constraint = _constraint_from_dict(doc.get('constraint', {}), facility_docs, index, max_ground)
        common = dict(radii=radii, stage1_costs=costs, constraint=constraint, budget=float(doc['budget']))

        metric = doc.get('metric', 'matrix')
        if metric == 'euclidean':
            return Instance.from_points(clients, facilities,
                                        [c['point'] for c in client_docs],
                                        [f['point'] for f in facility_docs], **common)
        if metric == 'matrix':
            matrix = doc.get('matrix') or [c['row'] for c in client_docs]
            distances = np.asarray(matrix, dtype=float)
            if distances.shape != (len(clients), len(facilities)):
                raise InvalidInstance("distance matrix must be clients x facilities")
            return Instance(clients, facilities, distances, **common)
        raise InvalidInstance(f"unknown metric {metric!r}")
    except StochSupError:
        raise
    except KeyError as exc:
        raise InvalidInstance(f"instance document is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InvalidInstance(f"malformed instance document: {exc}") from None


# ── SCENARIOS ─────────────────────────────────────────────────────────────────

def distribution_to_dict(instance: Instance, distribution: ScenarioDistribution) -> dict:
    return {
        'schema_version': SCHEMA_VERSION,
        'scenarios': [
            {
                'id': s.id,
                'clients': [instance.clients[j] for j in sorted(s.active)],
                'c2': {f: float(c) for f, c in zip(instance.facilities, s.stage2_costs)},
                'p': float(s.probability),
            }
            for s in distribution
        ],
    }


def distribution_from_dict(doc: dict, instance: Instance) -> ScenarioDistribution:
    _check_version(doc)
    try:
        scenarios = []
        for entry in doc['scenarios']:
            active = [instance.client_index(c) for c in entry['clients']]
            costs = entry['c2']
            missing = [f for f in instance.facilities if f not in costs]
            if missing:
                raise InvalidInstance(f"scenario {entry['id']}: no stage-II cost for {missing[0]}")
            scenarios.append(Scenario(str(entry['id']), active,
                                      [float(costs[f]) for f in instance.facilities],
                                      float(entry['p'])))
        return ScenarioDistribution(tuple(scenarios)).validate_for(instance)
    except StochSupError:
        raise
    except KeyError as exc:
        raise InvalidInstance(f"scenario document is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InvalidInstance(f"malformed scenario document: {exc}") from None


# ── RW INSTANCES ──────────────────────────────────────────────────────────────

def rw_to_dict(instance: Instance, rw: RwInstance) -> dict:
    doc = instance_to_dict(instance)
    doc['penalties'] = {c: float(v) for c, v in zip(instance.clients, rw.penalties)}
    doc['weights'] = {f: float(w) for f, w in zip(instance.facilities, rw.weights)}
    doc['V'] = float(rw.budget)
    return doc


def rw_from_dict(doc: dict, max_ground: int = 20):
    """The host instance and its RW instance; weights default to the stage-I costs."""
    instance = instance_from_dict(doc, max_ground)
    try:
        penalties = [float(doc['penalties'][c]) for c in instance.clients]
        weights_doc = doc.get('weights')
        weights = None if weights_doc is None else [float(weights_doc[f]) for f in instance.facilities]
        budget = float(doc.get('V', instance.budget))
    except KeyError as exc:
        raise InvalidInstance(f"RW document is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InvalidInstance(f"malformed RW document: {exc}") from None
    return instance, RwInstance.from_instance(instance, penalties, weights, budget=budget)


# ── STRATEGIES ────────────────────────────────────────────────────────────────

def strategy_to_dict(instance: Instance, strategy: Strategy, certificate=None) -> dict:
    f = instance.facilities
    doc = {
        'schema_version': SCHEMA_VERSION,
        'F_I': [f[i] for i in sorted(strategy.stage1)],
        'F_A': {sid: [f[i] for i in sorted(opened)] for sid, opened in sorted(strategy.stage2.items())},
    }
    if certificate is not None:
        doc['certificate'] = certificate.to_dict(instance)
    return doc


def extension_from_dict(instance: Instance, doc: dict):
    """Rebuild the stage-II rule from a certificate written by ``strategy_to_dict``."""
    try:
        stage1 = frozenset(instance.facility_index(label) for label in doc['F_I'])
        kind = doc.get('kind')
        if kind == 'sup':
            index = instance.client_index
            certificate = SupCertificate(
                stage1,
                {index(c): index(rep) for c, rep in doc['pi_I'].items()},
                {index(c): float(v) for c, v in doc['gI'].items()},
                float(doc['R']),
            )
            return SupExtension(instance, certificate)
        if kind == 'reduction':
            radii = [float(doc['radii'][c]) for c in instance.clients]
            return ReductionExtension(replace_radii(instance, radii), stage1, float(doc["rho"]))
        raise InvalidInstance(f"unknown certificate kind {kind!r}")
    except StochSupError:
        raise
    except KeyError as exc:
        raise InvalidInstance(f"certificate is missing {exc.args[0]!r}") from None


def replace_radii(instance: Instance, radii) -> Instance:
    if np.array_equal(instance.radii, np.asarray(radii, dtype=float)):
        return instance
    return replace(instance, radii=np.asarray(radii, dtype=float))


def strategy_from_dict(instance: Instance, doc: dict) -> Strategy:
    _check_version(doc)
    try:
        stage1 = [instance.facility_index(label) for label in doc['F_I']]
        stage2 = {sid: [instance.facility_index(label) for label in opened]
                  for sid, opened in doc.get('F_A', {}).items()}
    except KeyError as exc:
        raise InvalidInstance(f"strategy document is missing {exc.args[0]!r}") from None
    certificate: Optional[dict] = doc.get('certificate')
    extension = extension_from_dict(instance, certificate) if certificate else None
    return Strategy(stage1, stage2, extension)


__all__ = [
    'SCHEMA_VERSION',
    'dump_json',
    'load_json',
    'file_sha256',
    'instance_to_dict',
    'instance_from_dict',
    'distribution_to_dict',
    'distribution_from_dict',
    'rw_to_dict',
    'rw_from_dict',
    'strategy_to_dict',
    'strategy_from_dict',
    'extension_from_dict',
    'replace_radii',
]
