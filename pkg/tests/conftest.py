import numpy as np
import pytest

from app import create_app
from models.db import db
from models.instance import Instance, Scenario, ScenarioDistribution
from models.serialization import distribution_to_dict, dump_json, instance_to_dict
from solvers.generators import e1_instance
from solvers.matroid import Unconstrained
from solvers.sampling import ExplicitOracle
from solvers.settings import BruteForceCaps, SolverSettings


@pytest.fixture
def app():
    app = create_app('testing')
    yield app
    with app.app_context():
        db.session.remove()
        db.drop_all()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def solver_settings():
    return SolverSettings(caps=BruteForceCaps())


@pytest.fixture
def e1():
    return e1_instance()


@pytest.fixture
def e1_files(tmp_path, e1):
    instance, distribution = e1
    paths = {
        'instance': tmp_path / 'e1_instance.json',
        'dist': tmp_path / 'e1_scenarios.json',
        'oracle': tmp_path / 'e1_oracle.json',
    }
    dump_json(paths['instance'], instance_to_dict(instance))
    dump_json(paths['dist'], distribution_to_dict(instance, distribution))
    dump_json(paths['oracle'], ExplicitOracle(distribution).identity())
    return {k: str(v) for k, v in paths.items()}


def random_instance(rng, n, m, scenarios, constraint=None, radius=None, budget=1e9):
    """Tiny Euclidean instance in the plane with random stage-II costs."""
    clients = rng.uniform(0, 10, size=(n, 2))
    facilities = rng.uniform(0, 10, size=(m, 2))
    distances = np.linalg.norm(clients[:, None] - facilities[None], axis=2)
    floor = float(distances.min(axis=1).max())
    if radius is None:
        radius = floor
    radius = max(radius, floor)
    instance = Instance.from_points(
        [f"c{j}" for j in range(n)], [f"f{i}" for i in range(m)], clients, facilities,
        radii=np.full(n, radius), stage1_costs=rng.integers(1, 10, size=m).astype(float),
        constraint=constraint or Unconstrained(m), budget=budget,
    )
    probabilities = rng.dirichlet(np.ones(scenarios))
    probabilities = probabilities / probabilities.sum()
    scens = []
    for a in range(scenarios):
        active = np.flatnonzero(rng.random(n) < 0.6)
        costs = instance.stage1_costs * rng.uniform(1.0, 3.0)
        scens.append(Scenario(f"A{a}", active.tolist(), costs, float(probabilities[a])))
    total = sum(s.probability for s in scens)
    return instance, ScenarioDistribution(tuple(s.with_probability(s.probability / total) for s in scens))
