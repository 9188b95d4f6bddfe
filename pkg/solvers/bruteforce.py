"""
Exact enumeration baselines for desk-sized instances.

Facility subsets are bitmasks; per-subset tables (cost, clients covered) are
built with subset-sum style passes over one bit at a time.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from models.instance import (
    Instance,
    ScenarioDistribution,
    SolveStatus,
    Strategy,
    ball_sets,
    candidate_radii,
    expected_cost,
)
from solvers.errors import CapExceeded
from solvers.matroid import ExplicitMatroid, mask_members, subset_mask, subset_sums
from solvers.robust_outlier import RwInstance
from solvers.settings import SolverSettings

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ExactResult:
    status:     SolveStatus
    value:      float
    stage1:     frozenset = frozenset()
    stage2:     Mapping[str, frozenset] = field(default_factory=dict)
    enumerated: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is SolveStatus.FEASIBLE

    @property
    def strategy(self) -> Optional[Strategy]:
        if not math.isfinite(self.value):
            return None
        return Strategy(self.stage1, self.stage2)


@dataclass(frozen=True, eq=False)
class RadiusResult:
    status: SolveStatus
    radius: Optional[float]
    result: Optional[ExactResult] = None


def _union_masks(singletons: np.ndarray, size: int) -> np.ndarray:
    """table[T] = OR of singletons[i] over the bits i of T."""
    table = np.zeros(1 << size, dtype=np.int64)
    for b in range(size):
        view = table.reshape(-1, 2, 1 << b)
        view[:, 1, :] |= view[:, 0, :] | int(singletons[b])
    return table


def _admissible(constraint, size: int) -> np.ndarray:
    if isinstance(constraint, ExplicitMatroid):
        return constraint.independent.copy()
    return np.array([constraint.admits(mask_members(mask)) for mask in range(1 << size)], dtype=bool)


class _ScenarioTable:
    """Cheapest stage-II cover of every subset of one scenario's active clients."""

    def __init__(self, scenario, balls, caps):
        self.scenario = scenario
        self.clients = sorted(scenario.active)
        self.pool = sorted(set().union(*(balls[j] for j in self.clients))) if self.clients else []
        if len(self.pool) > caps.cover:
            raise CapExceeded(f"scenario {scenario.id}: {len(self.pool)} cover facilities exceed {caps.cover}")
        position = {j: k for k, j in enumerate(self.clients)}
        # serves[k]: active clients whose ball holds pool facility k
        serves = np.zeros(len(self.pool), dtype=np.int64)
        for k, i in enumerate(self.pool):
            for j in self.clients:
                if i in balls[j]:
                    serves[k] |= 1 << position[j]
        self.cover = _union_masks(serves, len(self.pool))
        self.cost = subset_sums(np.asarray([scenario.stage2_costs[i] for i in self.pool], dtype=float))
        best = np.full(1 << len(self.clients), math.inf)
        np.minimum.at(best, self.cover, self.cost)
        for b in range(len(self.clients)):
            view = best.reshape(-1, 2, 1 << b)
            np.minimum(view[:, 0, :], view[:, 1, :], out=view[:, 0, :])
        self.best = best
        self.full = (1 << len(self.clients)) - 1
        self.position = position

    def stage1_hits(self, balls, m: int) -> np.ndarray:
        singles = np.zeros(m, dtype=np.int64)
        for j in self.clients:
            for i in balls[j]:
                singles[i] |= 1 << self.position[j]
        return _union_masks(singles, m)

    def witness(self, uncovered: int) -> frozenset:
        target = self.best[uncovered]
        hits = np.flatnonzero(((self.cover & uncovered) == uncovered) & (self.cost <= target + 1e-12))
        return frozenset(self.pool[k] for k in mask_members(int(hits[0])))


def exact_two_stage(instance: Instance, distribution: ScenarioDistribution, radii=None,
                    settings: Optional[SolverSettings] = None) -> ExactResult:
    """
    Minimum expected cost over all admissible F_I with every active client
    covered within its radius. The value is reported even when it exceeds B;
    the status says whether it fits the budget.
    """
    settings = settings or SolverSettings()
    caps = settings.caps
    if instance.m > caps.facilities:
        raise CapExceeded(f"{instance.m} facilities exceed the exact cap {caps.facilities}")
    if len(distribution) > caps.scenarios:
        raise CapExceeded(f"{len(distribution)} scenarios exceed the exact cap {caps.scenarios}")
    if instance.n > caps.clients:
        raise CapExceeded(f"{instance.n} clients exceed the exact cap {caps.clients}")
    distribution.validate_for(instance)
    balls = ball_sets(instance, radii, settings.tolerances.distance)

    m = instance.m
    admissible = _admissible(instance.constraint, m)
    total = subset_sums(np.asarray(instance.stage1_costs, dtype=float))
    tables, uncovered = [], []
    for scenario in distribution:
        table = _ScenarioTable(scenario, balls, caps)
        missing = table.full & ~table.stage1_hits(balls, m)
        total = total + scenario.probability * table.best[missing]
        tables.append(table)
        uncovered.append(missing)
    total = np.where(admissible, total, math.inf)

    best = int(np.argmin(total))
    if not math.isfinite(total[best]):
        log.info("exact two-stage: no admissible strategy covers every scenario")
        return ExactResult(SolveStatus.INFEASIBLE, math.inf, enumerated=int(admissible.sum()))
    stage1 = mask_members(best)
    stage2 = {t.scenario.id: t.witness(int(missing[best])) for t, missing in zip(tables, uncovered)}
    witness = Strategy(stage1, stage2)
    value = expected_cost(instance, distribution, witness)
    status = (SolveStatus.FEASIBLE if value <= instance.budget + settings.tolerances.budget
              else SolveStatus.INFEASIBLE)
    return ExactResult(status, value, witness.stage1, witness.stage2, int(admissible.sum()))


def rw_objective(rw: RwInstance, selection, rho: float = 1.0, tol: float = 1e-9) -> float:
    """Σ_{i∈S} w_i + Σ_{j: d(j,S) > ρR_j} v_j."""
    chosen = sorted(selection)
    terms = [float(rw.weights[i]) for i in chosen]
    for j in range(rw.n):
        distance = float(rw.distances[j, chosen].min()) if chosen else math.inf
        if distance > rho * float(rw.radii[j]) + tol:
            terms.append(float(rw.penalties[j]))
    return math.fsum(terms)


def exact_rw(rw: RwInstance, rho: float = 1.0,
             settings: Optional[SolverSettings] = None) -> ExactResult:
    """Minimum RW objective over every S in the stage-I structure; S = ∅ is always enumerated."""
    settings = settings or SolverSettings()
    if rw.m > settings.caps.rw_facilities:
        raise CapExceeded(f"{rw.m} facilities exceed the RW exact cap {settings.caps.rw_facilities}")
    masks = np.arange(1 << rw.m, dtype=np.int64)
    admissible = _admissible(rw.constraint, rw.m)
    total = subset_sums(np.asarray(rw.weights, dtype=float))
    inside = rw.distances <= rho * rw.radii[:, None] + settings.tolerances.distance
    for j in range(rw.n):
        missed = (masks & subset_mask(np.flatnonzero(inside[j]))) == 0
        total = total + np.where(missed, float(rw.penalties[j]), 0.0)
    total = np.where(admissible, total, math.inf)
    best = int(np.argmin(total))
    selection = mask_members(best)
    value = rw_objective(rw, selection, rho, settings.tolerances.distance)
    status = SolveStatus.FEASIBLE if value <= rw.budget + settings.tolerances.budget else SolveStatus.INFEASIBLE
    return ExactResult(status, value, selection, enumerated=int(admissible.sum()))


def exact_optimal_radius(instance: Instance, distribution: ScenarioDistribution,
                         settings: Optional[SolverSettings] = None) -> RadiusResult:
    """Smallest candidate radius R with a budget-feasible strategy (binary search, cost is monotone in R)."""
    candidates = candidate_radii(instance)
    lo, hi = 0, len(candidates) - 1
    found = None
    while lo <= hi:
        mid = (lo + hi) // 2
        result = exact_two_stage(instance, distribution, candidates[mid], settings)
        if result.feasible:
            found = (candidates[mid], result)
            hi = mid - 1
        else:
            lo = mid + 1
    if found is None:
        return RadiusResult(SolveStatus.INFEASIBLE, None)
    return RadiusResult(SolveStatus.FEASIBLE, found[0], found[1])


__all__ = [
    'ExactResult',
    'RadiusResult',
    'exact_two_stage',
    'rw_objective',
    'exact_rw',
    'exact_optimal_radius',
]
