"""
Named two-stage algorithms that SAA can drive: each one solves an explicit
scenario list and hands back a strategy that extends to unseen scenarios.
"""

import math
from dataclasses import dataclass
from typing import Callable

from models.instance import Instance, ScenarioDistribution
from solvers.errors import ConstraintMismatch, InvalidConfig
from solvers.matroid import KnapsackSystem, Matroid, Unconstrained
from solvers.reduction import reduce_and_solve
from solvers.robust_outlier import RW_SOLVERS
from solvers.settings import SolverSettings
from solvers.sup_rounding import log_strategy_class_bound, solve_sup_poly


def _log_two_power_m(n: int, m: int) -> float:
    return m * math.log(2.0)


@dataclass(frozen=True)
class InnerAlgorithm:
    """An efficiently generalizable algorithm with coverage factor η and log of its class size ψ."""
    name:        str
    eta:         float
    solve:       Callable
    log_psi:     Callable[[int, int], float]
    homogeneous: bool
    structures:  tuple

    def check(self, instance: Instance):
        if not isinstance(instance.constraint, self.structures):
            kinds = ', '.join(s.__name__ for s in self.structures)
            raise ConstraintMismatch(
                f"{self.name} needs a stage-I structure of type {kinds}, "
                f"got {type(instance.constraint).__name__}")
        if self.homogeneous and not instance.homogeneous:
            raise ConstraintMismatch(f"{self.name} needs homogeneous radii")

    def run(self, instance: Instance, distribution: ScenarioDistribution,
            settings: SolverSettings):
        self.check(instance)
        return self.solve(instance, distribution, settings)


def _sup3(instance, distribution, settings):
    return solve_sup_poly(instance, distribution, settings=settings)


def _reduction(rw_name):
    def run(instance, distribution, settings):
        return reduce_and_solve(instance, distribution, RW_SOLVERS[rw_name], settings)
    return run


INNER_ALGORITHMS = {
    'sup3': InnerAlgorithm('sup3', 3.0, _sup3, lambda n, m: log_strategy_class_bound(n),
                           True, (Unconstrained,)),
    'matsup5': InnerAlgorithm('matsup5', 5.0, _reduction('rw3'), _log_two_power_m,
                              True, (Matroid, Unconstrained)),
    'musup5': InnerAlgorithm('musup5', 5.0, _reduction('rw3'), _log_two_power_m,
                             True, (KnapsackSystem,)),
    'matsup11': InnerAlgorithm('matsup11', 11.0, _reduction('rw9'), _log_two_power_m,
                               False, (Matroid, Unconstrained)),
}


def get_inner(name: str) -> InnerAlgorithm:
    try:
        return INNER_ALGORITHMS[name]
    except KeyError:
        raise InvalidConfig(f"unknown algorithm {name!r}; choose from {sorted(INNER_ALGORITHMS)}") from None


__all__ = ['InnerAlgorithm', 'INNER_ALGORITHMS', 'get_inner']
