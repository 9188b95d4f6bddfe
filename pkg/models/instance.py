"""
Core domain model.

Clients and facilities are addressed by index (0..n-1 and 0..m-1); the id
labels are kept alongside for I/O. "Smallest id" tie-breaks everywhere mean
smallest index, i.e. the order in which the instance lists them.
"""

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from solvers.errors import ConstraintMismatch, EmptyBall, InvalidInstance, MissingScenario
from solvers.matroid import Constraint

DISTANCE_TOL = 1e-9
PROBABILITY_TOL = 1e-9


# ── ENUMS ─────────────────────────────────────────────────────────────────────

class SolveStatus(enum.Enum):
    """Outcome of a solver run"""
    FEASIBLE   = "feasible"
    INFEASIBLE = "infeasible"


# ── INSTANCE ──────────────────────────────────────────────────────────────────

def _check_bipartite_metric(distances: np.ndarray):
    """A client x facility matrix extends to a metric only if d(j,i) ≤ d(j,i') + d(j',i') + d(j',i)."""
    if distances.size == 0:
        return
    slack = DISTANCE_TOL * max(1.0, float(distances.max()))
    for j in range(distances.shape[0]):
        via_client = (distances[j][None, :] + distances).min(axis=1)
        detour = (via_client[:, None] + distances).min(axis=0)
        if np.any(distances[j] > detour + slack):
            raise InvalidInstance(f"distance matrix violates the triangle inequality at client row {j}")


@dataclass(frozen=True, eq=False)
class Instance:
    """
    A supplier instance: clients, facilities, the client-facility metric,
    radius demands, stage-I costs, the stage-I structure and the budget.
    """
    clients:         tuple
    facilities:      tuple
    distances:       np.ndarray
    radii:           np.ndarray
    stage1_costs:    np.ndarray
    constraint:      Constraint
    budget:          float
    client_points:   Optional[np.ndarray] = None
    facility_points: Optional[np.ndarray] = None

    def __post_init__(self):
        clients = tuple(str(c) for c in self.clients)
        facilities = tuple(str(f) for f in self.facilities)
        n, m = len(clients), len(facilities)
        if len(set(clients)) != n or len(set(facilities)) != m:
            raise InvalidInstance("client and facility ids must be unique")

        distances = np.array(self.distances, dtype=float).reshape(n, m)
        radii = np.array(self.radii, dtype=float).reshape(n)
        costs = np.array(self.stage1_costs, dtype=float).reshape(m)
        for name, arr in (('distances', distances), ('radii', radii), ('stage1_costs', costs)):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InvalidInstance(f"{name} must be finite and non-negative")
        budget = float(self.budget)
        if not math.isfinite(budget) or budget < 0:
            raise InvalidInstance("budget must be finite and non-negative")
        if self.constraint.ground_size != m:
            raise InvalidInstance("stage-I structure ground set must match the facilities")

        if n and not m:
            raise InvalidInstance("an instance with clients needs at least one facility")
        if n:
            nearest = distances.min(axis=1)
            short = np.flatnonzero(nearest > radii + DISTANCE_TOL)
            if short.size:
                j = int(short[0])
                raise InvalidInstance(
                    f"client {clients[j]} has no facility within its radius {radii[j]:g}")
        if self.client_points is None:
            _check_bipartite_metric(distances)

        for arr in (distances, radii, costs):
            arr.setflags(write=False)
        object.__setattr__(self, 'clients', clients)
        object.__setattr__(self, 'facilities', facilities)
        object.__setattr__(self, 'distances', distances)
        object.__setattr__(self, 'radii', radii)
        object.__setattr__(self, 'stage1_costs', costs)
        object.__setattr__(self, 'budget', budget)

    @classmethod
    def from_points(cls, clients, facilities, client_points, facility_points, **kwargs) -> 'Instance':
        """Euclidean instance from coordinates in R^k."""
        cp = np.asarray(client_points, dtype=float)
        fp = np.asarray(facility_points, dtype=float)
        fp = fp.reshape(len(facilities), -1) if fp.size else np.zeros((len(facilities), 1))
        cp = cp.reshape(len(clients), -1) if cp.size else np.zeros((len(clients), fp.shape[1]))
        distances = np.linalg.norm(cp[:, None, :] - fp[None, :, :], axis=2)
        return cls(clients, facilities, distances, client_points=cp, facility_points=fp, **kwargs)

    @property
    def n(self) -> int:
        return len(self.clients)

    @property
    def m(self) -> int:
        return len(self.facilities)

    @property
    def homogeneous(self) -> bool:
        return self.n == 0 or bool(np.all(self.radii == self.radii[0]))

    @property
    def common_radius(self) -> float:
        if not self.homogeneous:
            raise ConstraintMismatch("instance radii are not homogeneous")
        return float(self.radii[0]) if self.n else 0.0

    def with_radius(self, radius: float) -> 'Instance':
        return replace(self, radii=np.full(self.n, float(radius)))

    def with_budget(self, budget: float) -> 'Instance':
        return replace(self, budget=float(budget))

    def client_index(self, label: str) -> int:
        try:
            return self.clients.index(str(label))
        except ValueError:
            raise InvalidInstance(f"unknown client {label!r}") from None

    def facility_index(self, label: str) -> int:
        try:
            return self.facilities.index(str(label))
        except ValueError:
            raise InvalidInstance(f"unknown facility {label!r}") from None

    def __repr__(self):
        return f'<Instance n={self.n} m={self.m} B={self.budget:g}>'


# ── SCENARIOS ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Scenario:
    """Active client set C^A with its stage-II cost vector c^A and probability p_A."""
    id:           str
    active:       frozenset
    stage2_costs: np.ndarray
    probability:  float = 1.0

    def __post_init__(self):
        costs = np.array(self.stage2_costs, dtype=float).reshape(-1)
        if not np.all(np.isfinite(costs)) or np.any(costs < 0):
            raise InvalidInstance(f"scenario {self.id}: stage-II costs must be finite and non-negative")
        p = float(self.probability)
        if not (0.0 <= p <= 1.0 + PROBABILITY_TOL):
            raise InvalidInstance(f"scenario {self.id}: probability {p} outside [0, 1]")
        costs.setflags(write=False)
        object.__setattr__(self, 'id', str(self.id))
        object.__setattr__(self, 'active', frozenset(int(j) for j in self.active))
        object.__setattr__(self, 'stage2_costs', costs)
        object.__setattr__(self, 'probability', p)

    def key(self) -> tuple:
        """Identity of the realisation, ignoring id and probability."""
        return tuple(sorted(self.active)), self.stage2_costs.tobytes()

    def with_probability(self, probability: float) -> 'Scenario':
        return replace(self, probability=probability)

    def __repr__(self):
        return f'<Scenario {self.id} |A|={len(self.active)} p={self.probability:g}>'


@dataclass(frozen=True)
class ScenarioDistribution:
    """Explicit finite distribution (polynomial-scenarios model)."""
    scenarios: tuple

    def __post_init__(self):
        scenarios = tuple(self.scenarios)
        ids = [s.id for s in scenarios]
        if len(set(ids)) != len(ids):
            raise InvalidInstance("scenario ids must be unique")
        if scenarios:
            total = math.fsum(s.probability for s in scenarios)
            if abs(total - 1.0) > PROBABILITY_TOL:
                raise InvalidInstance(f"scenario probabilities sum to {total}, not 1")
        object.__setattr__(self, 'scenarios', scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __len__(self):
        return len(self.scenarios)

    def by_id(self, scenario_id: str) -> Scenario:
        for scenario in self.scenarios:
            if scenario.id == scenario_id:
                return scenario
        raise MissingScenario(f"no scenario {scenario_id!r}")

    def validate_for(self, instance: Instance) -> 'ScenarioDistribution':
        for s in self.scenarios:
            if any(j < 0 or j >= instance.n for j in s.active):
                raise InvalidInstance(f"scenario {s.id} activates an unknown client")
            if len(s.stage2_costs) != instance.m:
                raise InvalidInstance(f"scenario {s.id} needs one stage-II cost per facility")
        return self


def empirical_distribution(samples: Sequence[Scenario]):
    """
    Uniform distribution over the samples, merging identical realisations.

    Returns the distribution and, for every sample, the index of the scenario
    it was merged into.
    """
    if not samples:
        raise InvalidInstance("an empirical distribution needs at least one sample")
    slots, counts, firsts, owner = {}, [], [], []
    for k, sample in enumerate(samples):
        key = sample.key()
        if key not in slots:
            slots[key] = len(firsts)
            firsts.append(sample)
            counts.append(0)
        counts[slots[key]] += 1
        owner.append(slots[key])
    total = len(samples)
    scenarios, used = [], set()
    for idx, (first, count) in enumerate(zip(firsts, counts)):
        sid = first.id if first.id not in used else f'{first.id}#{idx}'
        used.add(sid)
        scenarios.append(replace(first, id=sid, probability=count / total))
    return ScenarioDistribution(tuple(scenarios)), owner


# ── STRATEGIES ────────────────────────────────────────────────────────────────

@runtime_checkable
class ExtensionRule(Protocol):
    """Maps any scenario to a stage-II facility set."""

    def extend(self, scenario: Scenario) -> frozenset:
        ...


@dataclass(frozen=True, eq=False)
class Strategy:
    stage1:    frozenset
    stage2:    Mapping[str, frozenset] = field(default_factory=dict)
    extension: Optional[ExtensionRule] = None

    def __post_init__(self):
        object.__setattr__(self, 'stage1', frozenset(int(i) for i in self.stage1))
        object.__setattr__(self, 'stage2',
                           {str(k): frozenset(int(i) for i in v) for k, v in self.stage2.items()})

    def stage2_for(self, scenario: Scenario) -> frozenset:
        if scenario.id in self.stage2:
            return self.stage2[scenario.id]
        if self.extension is not None:
            return frozenset(self.extension.extend(scenario))
        raise MissingScenario(f"strategy has no stage-II set for scenario {scenario.id!r}")

    def __repr__(self):
        return f'<Strategy |F_I|={len(self.stage1)} explicit={len(self.stage2)}>'


@dataclass(frozen=True)
class Ball:
    client:  int
    members: frozenset

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self):
        return len(self.members)


# ── OPERATIONS ────────────────────────────────────────────────────────────────

def _radius_vector(instance: Instance, radii=None) -> np.ndarray:
    if radii is None:
        return instance.radii
    arr = np.asarray(radii, dtype=float)
    if arr.ndim == 0:
        if float(arr) < 0:
            raise InvalidInstance("radius must be non-negative")
        return np.full(instance.n, float(arr))
    return arr.reshape(instance.n)


def ball(instance: Instance, client: int, radius: Optional[float] = None,
         tol: float = DISTANCE_TOL) -> Ball:
    """G_j = {i : d(i, j) ≤ R}, closed boundary."""
    if not 0 <= client < instance.n:
        raise InvalidInstance(f"client index {client} out of range")
    r = float(instance.radii[client] if radius is None else radius)
    if r < 0:
        raise InvalidInstance("radius override must be non-negative")
    members = np.flatnonzero(instance.distances[client] <= r + tol)
    return Ball(client, frozenset(int(i) for i in members))


def ball_sets(instance: Instance, radii=None, tol: float = DISTANCE_TOL) -> tuple:
    """Balls of every client as facility-index frozensets, indexed by client."""
    r = _radius_vector(instance, radii)
    inside = instance.distances <= r[:, None] + tol
    return tuple(frozenset(int(i) for i in np.flatnonzero(row)) for row in inside)


def cheapest_in_ball(ball_or_members, costs: Sequence[float]) -> int:
    members = ball_or_members.members if isinstance(ball_or_members, Ball) else ball_or_members
    if not members:
        raise EmptyBall("cannot pick a facility from an empty ball")
    return min(sorted(members), key=lambda i: float(costs[i]))


def set_cost(costs: Sequence[float], opened: Iterable[int]) -> float:
    return math.fsum(float(costs[i]) for i in sorted(opened))


def strategy_cost(instance: Instance, scenario: Scenario, strategy: Strategy) -> float:
    """C(s, A) = c^I(F_I) + c^A(F_A)."""
    stage2 = strategy.stage2_for(scenario)
    return set_cost(instance.stage1_costs, strategy.stage1) + set_cost(scenario.stage2_costs, stage2)


def covering_distance(instance: Instance, client: int, opened: Iterable[int]) -> float:
    opened = sorted(opened)
    if not opened:
        return math.inf
    return float(instance.distances[client, opened].min())


def coverage_ratio(distance: float, radius: float, tol: float = DISTANCE_TOL) -> float:
    if radius > 0:
        return distance / radius
    return 0.0 if distance <= tol else math.inf


def scenario_ratios(instance: Instance, active: Iterable[int], opened: Iterable[int],
                    radii=None) -> dict:
    """Per active client, covering distance over R_j."""
    r = _radius_vector(instance, radii)
    opened = frozenset(opened)
    return {j: coverage_ratio(covering_distance(instance, j, opened), float(r[j]))
            for j in sorted(active)}


def maxdist(instance: Instance, scenario: Scenario, strategy: Strategy, radii=None) -> float:
    """max_{j∈A} d(j, F_I ∪ F_A)/R_j; 0 for an empty A, inf when nothing is open."""
    if not scenario.active:
        return 0.0
    opened = strategy.stage1 | strategy.stage2_for(scenario)
    if not opened:
        return math.inf
    return max(scenario_ratios(instance, scenario.active, opened, radii).values())


def expected_cost(instance: Instance, distribution: ScenarioDistribution,
                  strategy: Strategy) -> float:
    """Σ_A p_A · C(s, A)."""
    return math.fsum(s.probability * strategy_cost(instance, s, strategy) for s in distribution)


def covering_radius(instance: Instance) -> float:
    """Smallest homogeneous radius under which every client ball is nonempty."""
    if instance.n == 0:
        return 0.0
    return float(instance.distances.min(axis=1).max())


def candidate_radii(instance: Instance) -> list:
    """Distinct client-facility distances at or above the covering radius."""
    floor = covering_radius(instance)
    values = np.unique(instance.distances)
    return [float(v) for v in values if v >= floor - DISTANCE_TOL]


__all__ = [
    'SolveStatus',
    'Instance',
    'Scenario',
    'ScenarioDistribution',
    'ExtensionRule',
    'Strategy',
    'Ball',
    'empirical_distribution',
    'ball',
    'ball_sets',
    'cheapest_in_ball',
    'set_cost',
    'strategy_cost',
    'covering_distance',
    'coverage_ratio',
    'scenario_ratios',
    'maxdist',
    'expected_cost',
    'covering_radius',
    'candidate_radii',
]
