"""
Solver settings shared by every algorithm module.

The Flask config is the source of truth when running under the CLI; library
callers get the same defaults from ``SolverSettings()``.
"""

import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping

from solvers.errors import InvalidConfig


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances (absolute)."""
    feasibility:  float = 1e-7
    reduced_cost: float = 1e-9
    integrality:  float = 1e-6
    distance:     float = 1e-9
    budget:       float = 1e-7


@dataclass(frozen=True)
class BruteForceCaps:
    """Hard size limits for the exhaustive oracles."""
    facilities:    int = 12
    scenarios:     int = 8
    clients:       int = 16
    cover:         int = 12
    rw_facilities: int = 15

    @classmethod
    def from_string(cls, text: str) -> 'BruteForceCaps':
        """Parse ``"facilities=10,scenarios=6"``; unnamed caps keep defaults."""
        known = {f.name for f in fields(cls)}
        values = {}
        for chunk in filter(None, (part.strip() for part in text.split(','))):
            key, sep, raw = chunk.partition('=')
            key = key.strip()
            if not sep or key not in known:
                raise InvalidConfig(f"unknown cap entry {chunk!r}")
            try:
                values[key] = int(raw)
            except ValueError:
                raise InvalidConfig(f"cap {key} must be an integer, got {raw!r}") from None
            if values[key] < 0:
                raise InvalidConfig(f"cap {key} must be non-negative")
        return cls(**values)

    @classmethod
    def from_env(cls, variable: str = 'STOCHSUP_CAPS') -> 'BruteForceCaps':
        text = os.environ.get(variable)
        return cls.from_string(text) if text else cls()


@dataclass(frozen=True)
class SolverSettings:
    tolerances: Tolerances = field(default_factory=Tolerances)
    caps:       BruteForceCaps = field(default_factory=BruteForceCaps.from_env)

    lp_max_pivots:         int = 50_000
    separation_max_rounds: int = 500
    rw_cut_limit_factor:   int = 10

    matroid_intersection:        str = 'augmenting'   # or 'exhaustive'
    explicit_matroid_max_ground: int = 20
    knapsack_table_cap:          int = 10 ** 7

    saa_sample_constant: float = 1.0
    saa_delta_constant:  float = 3.0
    penalty_weighting:   str = 'probability'          # or 'listing'

    def __post_init__(self):
        if self.matroid_intersection not in ('augmenting', 'exhaustive'):
            raise InvalidConfig(f"unknown matroid intersection mode {self.matroid_intersection!r}")
        if self.penalty_weighting not in ('probability', 'listing'):
            raise InvalidConfig(f"unknown penalty weighting {self.penalty_weighting!r}")

    @classmethod
    def from_mapping(cls, config: Mapping[str, Any]) -> 'SolverSettings':
        """Build settings from an upper-case mapping such as ``app.config``."""
        def pick(key, default, cast):
            value = config.get(key)
            return default if value is None else cast(value)

        base = cls(caps=BruteForceCaps())
        tol = Tolerances(
            feasibility=pick('LP_FEASIBILITY_TOL', base.tolerances.feasibility, float),
            reduced_cost=pick('LP_REDUCED_COST_TOL', base.tolerances.reduced_cost, float),
            integrality=pick('INTEGRALITY_TOL', base.tolerances.integrality, float),
            distance=pick('DISTANCE_TOL', base.tolerances.distance, float),
            budget=pick('BUDGET_TOL', base.tolerances.budget, float),
        )
        caps_text = config.get('STOCHSUP_CAPS')
        return replace(
            base,
            tolerances=tol,
            caps=BruteForceCaps.from_string(caps_text) if caps_text else BruteForceCaps(),
            lp_max_pivots=pick('LP_MAX_PIVOTS', base.lp_max_pivots, int),
            separation_max_rounds=pick('SEPARATION_MAX_ROUNDS', base.separation_max_rounds, int),
            rw_cut_limit_factor=pick('RW_CUT_LIMIT_FACTOR', base.rw_cut_limit_factor, int),
            matroid_intersection=pick('MATROID_INTERSECTION', base.matroid_intersection, str),
            explicit_matroid_max_ground=pick('EXPLICIT_MATROID_MAX_GROUND',
                                             base.explicit_matroid_max_ground, int),
            knapsack_table_cap=pick('KNAPSACK_TABLE_CAP', base.knapsack_table_cap, int),
            saa_sample_constant=pick('SAA_SAMPLE_CONSTANT', base.saa_sample_constant, float),
            saa_delta_constant=pick('SAA_DELTA_CONSTANT', base.saa_delta_constant, float),
            penalty_weighting=pick('PENALTY_WEIGHTING', base.penalty_weighting, str),
        )

    def to_dict(self) -> dict:
        return asdict(self)


__all__ = ['Tolerances', 'BruteForceCaps', 'SolverSettings']
