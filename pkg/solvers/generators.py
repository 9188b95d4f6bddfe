"""
Seeded random instances and scenario distributions, plus the small fixed
instance used across the test suite.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from models.instance import Instance, Scenario, ScenarioDistribution
from solvers.errors import InvalidConfig
from solvers.matroid import (
    ExplicitMatroid,
    KnapsackSystem,
    PartitionMatroid,
    Unconstrained,
    UniformMatroid,
    mask_members,
)
from solvers.sampling import BernoulliOracle

LAYOUTS = ('square', 'line', 'matrix')
CONSTRAINTS = ('unconstrained', 'uniform', 'partition', 'explicit', 'knapsack')
EXPLICIT_MAX_GROUND = 20


@dataclass(frozen=True)
class GeneratorSpec:
    n:                int
    m:                int
    scenarios:        int = 3
    layout:           str = 'square'
    side:             float = 10.0
    radius:           Optional[float] = None
    radius_choices:   tuple = ()
    stage1_costs:     tuple = (1.0, 10.0)
    multipliers:      tuple = (1.0, 3.0)
    activation:       float = 0.5
    constraint:       str = 'unconstrained'
    rank:             int = 2
    blocks:           int = 2
    knapsack_rows:    int = 1
    knapsack_budget:  int = 4
    knapsack_weights: tuple = (1, 3)
    budget:           float = 10.0
    seed:             int = 0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidConfig("a generated instance needs at least one client")
        if self.m < 1:
            raise InvalidConfig("a generated instance needs at least one facility")
        if self.scenarios < 1:
            raise InvalidConfig("a generated distribution needs at least one scenario")
        if self.layout not in LAYOUTS:
            raise InvalidConfig(f"layout must be one of {LAYOUTS}")
        if self.constraint not in CONSTRAINTS:
            raise InvalidConfig(f"constraint must be one of {CONSTRAINTS}")
        if self.constraint == 'explicit' and self.m > EXPLICIT_MAX_GROUND:
            raise InvalidConfig(f"explicit matroids are generated for at most {EXPLICIT_MAX_GROUND} facilities")
        if self.rank < 0:
            raise InvalidConfig("rank must be non-negative")
        if not 0.0 <= self.activation <= 1.0:
            raise InvalidConfig("activation probability must lie in [0, 1]")
        lo, hi = self.stage1_costs
        if lo < 0 or hi < lo:
            raise InvalidConfig("stage-I cost range must be 0 <= low <= high")
        if self.multipliers[0] < 0 or self.multipliers[1] < self.multipliers[0]:
            raise InvalidConfig("stage-II multiplier range must be 0 <= low <= high")
        if self.budget < 0:
            raise InvalidConfig("budget must be non-negative")

    @classmethod
    def from_dict(cls, values: dict) -> 'GeneratorSpec':
        known = {k: v for k, v in values.items() if k in cls.__dataclass_fields__}
        for key in ('radius_choices', 'stage1_costs', 'multipliers', 'knapsack_weights'):
            if key in known:
                known[key] = tuple(known[key])
        try:
            return cls(**known)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from None


def _constraint(spec: GeneratorSpec, rng: np.random.Generator):
    m = spec.m
    if spec.constraint == 'unconstrained':
        return Unconstrained(m)
    if spec.constraint == 'uniform':
        return UniformMatroid(m, min(spec.rank, m))
    if spec.constraint == 'knapsack':
        lo, hi = spec.knapsack_weights
        weights = rng.integers(lo, hi + 1, size=(spec.knapsack_rows, m))
        return KnapsackSystem(weights, (spec.knapsack_budget,) * spec.knapsack_rows)

    labels = rng.integers(0, max(1, spec.blocks), size=m)
    blocks = [frozenset(int(i) for i in np.flatnonzero(labels == b)) for b in range(max(1, spec.blocks))]
    blocks = [b for b in blocks if b]
    capacities = [int(rng.integers(1, len(b) + 1)) for b in blocks]
    partition = PartitionMatroid(m, tuple(blocks), tuple(capacities))
    if spec.constraint == 'partition':
        return partition
    # explicit: a partition matroid truncated to the requested rank
    table = np.array([partition.is_independent(mask_members(mask)) and bin(mask).count('1') <= spec.rank
                      for mask in range(1 << m)], dtype=bool)
    return ExplicitMatroid(m, table)


def _points(spec: GeneratorSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    if spec.layout == 'line':
        return rng.uniform(0.0, spec.side, size=(count, 1))
    return rng.uniform(0.0, spec.side, size=(count, 2))


def generate(spec: GeneratorSpec):
    """Instance and explicit distribution, deterministic in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    clients = [f"c{j}" for j in range(spec.n)]
    facilities = [f"f{i}" for i in range(spec.m)]
    client_points = _points(spec, rng, spec.n)
    facility_points = _points(spec, rng, spec.m)
    distances = np.linalg.norm(client_points[:, None, :] - facility_points[None, :, :], axis=2)

    nearest = distances.min(axis=1)
    if spec.radius_choices and spec.radius is None:
        radii = np.maximum(rng.choice(np.asarray(spec.radius_choices, dtype=float), size=spec.n), nearest)
    else:
        radius = float(np.median(distances)) if spec.radius is None else float(spec.radius)
        radii = np.full(spec.n, max(radius, float(nearest.max())))

    stage1 = rng.uniform(*spec.stage1_costs, size=spec.m).round(2)
    constraint = _constraint(spec, rng)
    common = dict(radii=radii, stage1_costs=stage1, constraint=constraint, budget=spec.budget)
    if spec.layout == 'matrix':
        instance = Instance(clients, facilities, distances, **common)
    else:
        instance = Instance(clients, facilities, distances, client_points=client_points,
                            facility_points=facility_points, **common)

    probabilities = rng.dirichlet(np.ones(spec.scenarios))
    scenarios = []
    for a in range(spec.scenarios):
        active = np.flatnonzero(rng.random(spec.n) < spec.activation)
        costs = (stage1 * rng.uniform(*spec.multipliers)).round(2)
        scenarios.append(Scenario(f"A{a + 1}", active.tolist(), costs, float(probabilities[a])))
    total = sum(s.probability for s in scenarios)
    distribution = ScenarioDistribution(tuple(s.with_probability(s.probability / total) for s in scenarios))
    return instance, distribution


def bernoulli_oracle(spec: GeneratorSpec, instance: Instance) -> BernoulliOracle:
    """Black-box oracle matching the spec: per-client activation, cost multipliers at both ends of the range."""
    lo, hi = spec.multipliers
    return BernoulliOracle(np.full(instance.n, spec.activation), instance.stage1_costs, (lo, hi), (0.5, 0.5))


def e1_instance(budget: float = 9.0):
    """Two facilities at 0 and 10, clients at 1 and 9, R=2, two equally likely scenarios."""
    instance = Instance.from_points(
        ['c1', 'c2'], ['f1', 'f2'], [1.0, 9.0], [0.0, 10.0],
        radii=[2.0, 2.0], stage1_costs=[5.0, 5.0], constraint=Unconstrained(2), budget=budget,
    )
    distribution = ScenarioDistribution((
        Scenario('A1', [0], [2.0, 2.0], 0.5),
        Scenario('A2', [0, 1], [2.0, 8.0], 0.5),
    ))
    return instance, distribution


__all__ = [
    'LAYOUTS',
    'CONSTRAINTS',
    'GeneratorSpec',
    'generate',
    'bernoulli_oracle',
    'e1_instance',
]
