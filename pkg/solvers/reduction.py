"""
Reduction from a two-stage instance with an explicit scenario list to a single
robust weighted supplier instance. A ρ-approximate RW solution for stage I
becomes a (ρ+2)-approximate two-stage strategy that extends to any scenario.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from models.instance import (
    Instance,
    Scenario,
    ScenarioDistribution,
    SolveStatus,
    Strategy,
    ball_sets,
    cheapest_in_ball,
    covering_distance,
)
from solvers.cluster import Clustering, greedy_cluster_by_radius
from solvers.robust_outlier import RwInstance, RwResult, RwSolver
from solvers.settings import SolverSettings

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ReductionCertificate:
    stage1:      frozenset
    rho:         float
    radii:       np.ndarray = field(repr=False)
    clusterings: Mapping[str, Clustering] = field(repr=False)
    rw:          RwInstance = field(repr=False)

    def to_dict(self, instance: Instance) -> dict:
        return {
            'kind': 'reduction',
            'F_I': [instance.facilities[i] for i in sorted(self.stage1)],
            'rho': float(self.rho),
            'radii': {c: float(r) for c, r in zip(instance.clients, self.radii)},
        }


@dataclass(frozen=True, eq=False)
class ReductionExtension:
    """Stage-II rule that depends on F_I, ρ and the radii only."""
    instance: Instance
    stage1:   frozenset
    rho:      float
    tol:      float = 1e-9
    balls:    tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self.balls is None:
            object.__setattr__(self, 'balls', ball_sets(self.instance, tol=self.tol))

    def extend(self, scenario: Scenario) -> frozenset:
        return extend_reduction(self.instance, self.stage1, self.rho, scenario, self.balls, self.tol)


@dataclass(frozen=True, eq=False)
class ReductionResult:
    status:      SolveStatus
    strategy:    Optional[Strategy] = None
    certificate: Optional[ReductionCertificate] = None
    rw_result:   Optional[RwResult] = None
    penalties:   Optional[np.ndarray] = None

    @property
    def feasible(self) -> bool:
        return self.status is SolveStatus.FEASIBLE


def outlier_penalties(instance: Instance, distribution: ScenarioDistribution, balls,
                      clusterings: Mapping[str, Clustering],
                      weighting: str = 'probability') -> np.ndarray:
    """v_j = Σ_{A: j∈H_A} p_A c^A(i^A_j); 'listing' drops the p_A factor."""
    terms = [[] for _ in range(instance.n)]
    for scenario in distribution:
        weight = scenario.probability if weighting == 'probability' else 1.0
        for j in clusterings[scenario.id].representatives:
            cheapest = cheapest_in_ball(balls[j], scenario.stage2_costs)
            terms[j].append(weight * float(scenario.stage2_costs[cheapest]))
    return np.array([math.fsum(t) for t in terms], dtype=float)


def reduce_and_solve(instance: Instance, distribution: ScenarioDistribution, solver: RwSolver,
                     settings: Optional[SolverSettings] = None) -> ReductionResult:
    settings = settings or SolverSettings()
    tol = settings.tolerances.distance
    distribution.validate_for(instance)
    balls = ball_sets(instance, tol=tol)
    clusterings = {s.id: greedy_cluster_by_radius(balls, s.active, instance.radii)
                   for s in distribution}
    penalties = outlier_penalties(instance, distribution, balls, clusterings,
                                  settings.penalty_weighting)
    rw = RwInstance.from_instance(instance, penalties)
    result = solver.run(rw, settings)
    if not result.feasible:
        log.info("reduction: %s reported infeasible", solver.name)
        return ReductionResult(SolveStatus.INFEASIBLE, rw_result=result, penalties=penalties)

    extension = ReductionExtension(instance, result.selection, solver.rho, tol, balls)
    stage2 = {s.id: extension.extend(s) for s in distribution}
    certificate = ReductionCertificate(result.selection, solver.rho, instance.radii, clusterings, rw)
    log.info("reduction: %s opened %d stage-I facilities", solver.name, len(result.selection))
    return ReductionResult(SolveStatus.FEASIBLE, Strategy(result.selection, stage2, extension),
                           certificate, result, penalties)


def extend_reduction(instance: Instance, stage1: frozenset, rho: float, scenario: Scenario,
                     balls=None, tol: float = 1e-9) -> frozenset:
    """Open i^A_j for every representative j of A that F_I leaves farther than ρR_j."""
    if balls is None:
        balls = ball_sets(instance, tol=tol)
    clustering = greedy_cluster_by_radius(balls, scenario.active, instance.radii)
    return frozenset(
        cheapest_in_ball(balls[j], scenario.stage2_costs)
        for j in clustering.representatives
        if covering_distance(instance, j, stage1) > rho * float(instance.radii[j]) + tol
    )


__all__ = [
    'ReductionCertificate',
    'ReductionExtension',
    'ReductionResult',
    'outlier_penalties',
    'reduce_and_solve',
    'extend_reduction',
]
