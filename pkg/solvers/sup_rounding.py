"""
Correlated LP rounding for homogeneous two-stage supplier instances with an
explicit scenario list, and the rule that extends its stage-I decision to
scenarios it never saw.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from models.instance import (
    Instance,
    Scenario,
    ScenarioDistribution,
    SolveStatus,
    Strategy,
    ball_sets,
    cheapest_in_ball,
    set_cost,
)
from solvers.cluster import Clustering, greedy_cluster
from solvers.errors import ConstraintMismatch
from solvers.lp import LinearProgram, Sense, solve
from solvers.matroid import Unconstrained
from solvers.settings import SolverSettings

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SupLpSolution:
    """y^I per facility, y^A per scenario and the LP objective (expected fractional cost)."""
    stage1:    np.ndarray
    stage2:    Mapping[str, np.ndarray]
    objective: float

    def ball_mass(self, balls: Sequence[frozenset]) -> np.ndarray:
        return np.array([self.stage1[sorted(b)].sum() if b else 0.0 for b in balls])


@dataclass(frozen=True)
class SupCertificate:
    """Everything the extension needs: F_I, π^I, y^I(G_j) per client, and R."""
    stage1:     frozenset
    assignment: Mapping[int, int]
    ball_mass:  Mapping[int, float]
    radius:     float

    def to_dict(self, instance: Instance) -> dict:
        c, f = instance.clients, instance.facilities
        return {
            'kind': 'sup',
            'F_I': [f[i] for i in sorted(self.stage1)],
            'pi_I': {c[j]: c[rep] for j, rep in sorted(self.assignment.items())},
            'gI': {c[j]: float(v) for j, v in sorted(self.ball_mass.items())},
            'R': float(self.radius),
        }


@dataclass(frozen=True)
class SupRoundingState:
    stage1_clustering:    Clustering
    scenario_clusterings: Mapping[str, Clustering]
    order:                tuple
    threshold_index:      int


@dataclass(frozen=True, eq=False)
class SupExtension:
    instance:    Instance
    certificate: SupCertificate
    balls:       tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self.balls is None:
            object.__setattr__(self, 'balls', ball_sets(self.instance, self.certificate.radius))

    def extend(self, scenario: Scenario) -> frozenset:
        return extend_sup(self.instance, self.certificate, scenario, self.balls)


@dataclass(frozen=True, eq=False)
class SupResult:
    status:        SolveStatus
    strategy:      Optional[Strategy] = None
    certificate:   Optional[SupCertificate] = None
    lp:            Optional[SupLpSolution] = None
    state:         Optional[SupRoundingState] = None
    expected_cost: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.status is SolveStatus.FEASIBLE


def _scenario_clustering(balls, scenario: Scenario, assignment, ball_mass) -> Clustering:
    priority = {j: -float(ball_mass[assignment[j]]) for j in scenario.active}
    return greedy_cluster(balls, scenario.active, priority)


def _open_stage2(balls, scenario: Scenario, clustering: Clustering, stage1: frozenset,
                 assignment) -> frozenset:
    return frozenset(
        cheapest_in_ball(balls[j], scenario.stage2_costs)
        for j in clustering.representatives
        if stage1.isdisjoint(balls[assignment[j]])
    )


def build_sup_lp(instance: Instance, distribution: ScenarioDistribution,
                 balls: Sequence[frozenset]):
    """Budget row, one covering row per active (scenario, client), objective = expected cost."""
    lp = LinearProgram('sup-poly')
    stage1 = [lp.add_variable(f"yI_{f}", cost=c)
              for f, c in zip(instance.facilities, instance.stage1_costs)]
    stage2 = {}
    for a, scenario in enumerate(distribution):
        stage2[scenario.id] = [
            lp.add_variable(f"y{a}_{f}", cost=scenario.probability * c)
            for f, c in zip(instance.facilities, scenario.stage2_costs)
        ]
    lp.add_row('budget', dict(enumerate(lp.costs)), Sense.LE, instance.budget)
    for scenario in distribution:
        for j in sorted(scenario.active):
            coefficients = {stage1[i]: 1.0 for i in balls[j]}
            coefficients.update({stage2[scenario.id][i]: 1.0 for i in balls[j]})
            lp.add_row(f"cover:{scenario.id}:{instance.clients[j]}", coefficients, Sense.GE, 1.0)
    return lp, stage1, stage2


def solve_sup_poly(instance: Instance, distribution: ScenarioDistribution,
                   radius: Optional[float] = None,
                   settings: Optional[SolverSettings] = None) -> SupResult:
    """
    Solve the LP relaxation, cluster, and sweep the h+1 stage-I thresholds,
    returning the first ensemble whose expected cost is within the budget.
    Every active client ends within 3R of an open facility.
    """
    settings = settings or SolverSettings()
    if not isinstance(instance.constraint, Unconstrained):
        raise ConstraintMismatch("correlated rounding handles unconstrained stage-I only")
    radius = instance.common_radius if radius is None else float(radius)
    instance = instance.with_radius(radius)
    distribution.validate_for(instance)
    balls = ball_sets(instance, tol=settings.tolerances.distance)

    lp, stage1_vars, stage2_vars = build_sup_lp(instance, distribution, balls)
    solution = solve(lp, settings)
    if not solution.optimal:
        log.info("sup-poly LP %s at R=%g", solution.status.value, radius)
        return SupResult(SolveStatus.INFEASIBLE)
    lp_solution = SupLpSolution(
        stage1=solution.values[stage1_vars],
        stage2={sid: solution.values[idx] for sid, idx in stage2_vars.items()},
        objective=solution.objective,
    )

    mass = lp_solution.ball_mass(balls)
    stage1_clustering = greedy_cluster(balls, range(instance.n), mass)
    assignment = stage1_clustering.assignment
    ball_mass = {j: float(mass[j]) for j in range(instance.n)}
    clusterings = {s.id: _scenario_clustering(balls, s, assignment, ball_mass) for s in distribution}
    order = tuple(sorted(stage1_clustering.representatives, key=lambda j: (ball_mass[j], j)))
    cheapest = {j: cheapest_in_ball(balls[j], instance.stage1_costs) for j in order}

    for ell in range(1, len(order) + 2):
        if ell <= len(order):
            threshold = ball_mass[order[ell - 1]]
            stage1 = frozenset(cheapest[j] for j in order if ball_mass[j] >= threshold)
        else:
            stage1 = frozenset()
        stage2 = {s.id: _open_stage2(balls, s, clusterings[s.id], stage1, assignment)
                  for s in distribution}
        cost = math.fsum(
            s.probability * (set_cost(instance.stage1_costs, stage1)
                             + set_cost(s.stage2_costs, stage2[s.id]))
            for s in distribution
        )
        if cost <= instance.budget + settings.tolerances.budget:
            certificate = SupCertificate(stage1, dict(assignment), ball_mass, radius)
            strategy = Strategy(stage1, stage2, SupExtension(instance, certificate, balls))
            state = SupRoundingState(stage1_clustering, clusterings, order, ell)
            log.info("sup-poly: threshold %d of %d passes with expected cost %.6g",
                     ell, len(order) + 1, cost)
            return SupResult(SolveStatus.FEASIBLE, strategy, certificate, lp_solution, state, cost)

    log.info("sup-poly: no threshold within budget %.6g", instance.budget)
    return SupResult(SolveStatus.INFEASIBLE, lp=lp_solution)


def extend_sup(instance: Instance, certificate: SupCertificate, scenario: Scenario,
               balls: Optional[Sequence[frozenset]] = None) -> frozenset:
    """Stage-II set for any scenario: open i^A_j for representatives whose π^I ball misses F_I."""
    if balls is None:
        balls = ball_sets(instance, certificate.radius)
    clustering = _scenario_clustering(balls, scenario, certificate.assignment, certificate.ball_mass)
    return _open_stage2(balls, scenario, clustering, certificate.stage1, certificate.assignment)


def strategy_class_bound(n: int) -> int:
    """(n+1)!, the number of strategies the extension can produce."""
    if n < 0:
        raise ValueError("client count must be non-negative")
    return math.factorial(n + 1)


def log_strategy_class_bound(n: int) -> float:
    if n < 0:
        raise ValueError("client count must be non-negative")
    return math.lgamma(n + 2)


__all__ = [
    'SupLpSolution',
    'SupCertificate',
    'SupRoundingState',
    'SupExtension',
    'SupResult',
    'build_sup_lp',
    'solve_sup_poly',
    'extend_sup',
    'strategy_class_bound',
    'log_strategy_class_bound',
]
