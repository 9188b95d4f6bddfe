"""
Embedded LP engine.

Dense two-phase tableau simplex with Bland's rule, returning basic (vertex)
optimal solutions, and a row-generation driver for LPs whose constraints are
produced by a separation oracle.
"""

import enum
import logging
import math
import re
from dataclasses import dataclass, replace
from typing import Callable, List, Mapping, Optional

import numpy as np

from solvers.errors import IterationLimitExceeded, SeparationError
from solvers.settings import SolverSettings

log = logging.getLogger(__name__)

PIVOT_EPS = 1e-11


# ── ENUMS ─────────────────────────────────────────────────────────────────────

class Sense(enum.Enum):
    LE = '<='
    GE = '>='
    EQ = '='


class LpStatus(enum.Enum):
    OPTIMAL    = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED  = "unbounded"


_FLIPPED = {Sense.LE: Sense.GE, Sense.GE: Sense.LE, Sense.EQ: Sense.EQ}


# ── MODEL ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Row:
    """Named linear constraint Σ coefficients[k]·x_k (sense) rhs."""
    name:         str
    coefficients: Mapping[int, float]
    sense:        Sense
    rhs:          float

    def activity(self, values) -> float:
        return math.fsum(float(c) * float(values[k]) for k, c in self.coefficients.items())

    def violation(self, values) -> float:
        """Positive when the row is violated at ``values``."""
        gap = self.activity(values) - float(self.rhs)
        if self.sense is Sense.LE:
            return gap
        if self.sense is Sense.GE:
            return -gap
        return abs(gap)


class LinearProgram:
    """Builder for a bounded LP; variables are addressed by the index add_variable returns."""

    def __init__(self, name: str = 'lp'):
        self.name = name
        self.names: List[str] = []
        self.lower: List[float] = []
        self.upper: List[float] = []
        self.costs: List[float] = []
        self.rows: List[Row] = []
        self.maximize = False
        self.objective_constant = 0.0

    @property
    def num_variables(self) -> int:
        return len(self.names)

    def add_variable(self, name: str, lower: float = 0.0, upper: float = 1.0,
                     cost: float = 0.0) -> int:
        if not math.isfinite(lower):
            raise ValueError(f"variable {name}: lower bound must be finite")
        self.names.append(name)
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.costs.append(float(cost))
        return len(self.names) - 1

    def set_bounds(self, index: int, lower: Optional[float] = None,
                   upper: Optional[float] = None):
        if lower is not None:
            self.lower[index] = float(lower)
        if upper is not None:
            self.upper[index] = float(upper)

    def add_row(self, name: str, coefficients: Mapping[int, float], sense: Sense,
                rhs: float) -> Row:
        clean = {}
        for k, c in coefficients.items():
            k = int(k)
            if not 0 <= k < self.num_variables:
                raise ValueError(f"row {name}: unknown variable index {k}")
            clean[k] = clean.get(k, 0.0) + float(c)
        row = Row(name, clean, sense, float(rhs))
        self.rows.append(row)
        return row

    def add_cut(self, row: Row) -> Row:
        return self.add_row(row.name, row.coefficients, row.sense, row.rhs)

    def set_objective(self, coefficients: Mapping[int, float], maximize: bool = False,
                      constant: float = 0.0):
        self.costs = [0.0] * self.num_variables
        for k, c in coefficients.items():
            self.costs[int(k)] += float(c)
        self.maximize = maximize
        self.objective_constant = float(constant)

    def copy(self) -> 'LinearProgram':
        other = LinearProgram(self.name)
        other.names = list(self.names)
        other.lower = list(self.lower)
        other.upper = list(self.upper)
        other.costs = list(self.costs)
        other.rows = list(self.rows)
        other.maximize = self.maximize
        other.objective_constant = self.objective_constant
        return other

    def to_lp_format(self) -> str:
        """CPLEX LP text, for cross-checking with external solvers."""
        def ident(text):
            return re.sub(r'[^A-Za-z0-9_.]', '_', text)

        def expression(coefficients):
            parts = []
            for k, c in sorted(coefficients.items()):
                if c == 0:
                    continue
                sign = '-' if c < 0 else '+'
                parts.append(f"{sign} {abs(c):.12g} {ident(self.names[k])}")
            if not parts:
                return f"0 {ident(self.names[0])}" if self.names else "0"
            text = ' '.join(parts)
            return text[2:] if text.startswith('+ ') else text

        lines = [f"\\ {self.name}", 'Maximize' if self.maximize else 'Minimize',
                 f" obj: {expression(dict(enumerate(self.costs)))}", 'Subject To']
        for row in self.rows:
            lines.append(f" {ident(row.name)}: {expression(row.coefficients)} "
                         f"{row.sense.value} {row.rhs:.12g}")
        lines.append('Bounds')
        for name, lo, hi in zip(self.names, self.lower, self.upper):
            if math.isfinite(hi):
                lines.append(f" {lo:.12g} <= {ident(name)} <= {hi:.12g}")
            else:
                lines.append(f" {ident(name)} >= {lo:.12g}")
        lines.append('End')
        return '\n'.join(lines) + '\n'


@dataclass(frozen=True, eq=False)
class LpSolution:
    status:     LpStatus
    values:     Optional[np.ndarray] = None
    objective:  Optional[float] = None
    tight_rows: tuple = ()
    pivots:     int = 0
    rounds:     int = 1
    cuts:       tuple = ()

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def __repr__(self):
        return f'<LpSolution {self.status.value} obj={self.objective} pivots={self.pivots}>'


# ── SIMPLEX ───────────────────────────────────────────────────────────────────

class _Tableau:
    """Rows 0..r-1 are constraints, the last row holds reduced costs and -z."""

    def __init__(self, table: np.ndarray, basis: np.ndarray, max_pivots: int):
        self.table = table
        self.basis = basis
        self.max_pivots = max_pivots
        self.pivots = 0

    def price(self, cost: np.ndarray):
        t = self.table
        t[-1, :-1] = cost
        t[-1, -1] = 0.0
        t[-1] -= cost[self.basis] @ t[:-1]

    def pivot(self, row: int, col: int):
        t = self.table
        t[row] /= t[row, col]
        column = t[:, col].copy()
        column[row] = 0.0
        t -= np.outer(column, t[row])
        t[:, col] = 0.0
        t[row, col] = 1.0
        np.maximum(t[:-1, -1], 0.0, out=t[:-1, -1])
        self.basis[row] = col
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise IterationLimitExceeded(f"simplex exceeded {self.max_pivots} pivots")

    def iterate(self, reduced_cost_tol: float) -> LpStatus:
        t = self.table
        while True:
            entering = np.flatnonzero(t[-1, :-1] < -reduced_cost_tol)
            if not entering.size:
                return LpStatus.OPTIMAL
            col = int(entering[0])
            column = t[:-1, col]
            positive = np.flatnonzero(column > PIVOT_EPS)
            if not positive.size:
                return LpStatus.UNBOUNDED
            ratios = t[positive, -1] / column[positive]
            best = ratios.min()
            ties = positive[ratios <= best + PIVOT_EPS * max(1.0, abs(best))]
            row = int(ties[np.argmin(self.basis[ties])])
            self.pivot(row, col)


def solve(lp: LinearProgram, settings: Optional[SolverSettings] = None) -> LpSolution:
    """Basic optimal solution of ``lp``, or an INFEASIBLE / UNBOUNDED status."""
    settings = settings or SolverSettings()
    tol = settings.tolerances
    n = lp.num_variables
    lo = np.asarray(lp.lower, dtype=float)
    hi = np.asarray(lp.upper, dtype=float)
    cost = np.asarray(lp.costs, dtype=float)
    if np.any(lo > hi + tol.feasibility):
        return LpSolution(LpStatus.INFEASIBLE)

    # Shift to x' = x - lo ≥ 0; finite upper bounds become explicit rows.
    matrix, senses, rhs = [], [], []
    for row in lp.rows:
        vec = np.zeros(n)
        for k, c in row.coefficients.items():
            vec[k] += c
        matrix.append(vec)
        senses.append(row.sense)
        rhs.append(row.rhs - float(vec @ lo))
    for k in np.flatnonzero(np.isfinite(hi)):
        vec = np.zeros(n)
        vec[k] = 1.0
        matrix.append(vec)
        senses.append(Sense.LE)
        rhs.append(hi[k] - lo[k])
    a = np.array(matrix, dtype=float).reshape(len(rhs), n)
    b = np.array(rhs, dtype=float)
    for i in np.flatnonzero(b < 0):
        a[i] *= -1.0
        b[i] *= -1.0
        senses[i] = _FLIPPED[senses[i]]

    r = len(b)
    n_slack = sum(1 for s in senses if s is not Sense.EQ)
    n_art = sum(1 for s in senses if s is not Sense.LE)
    width = n + n_slack + n_art
    table = np.zeros((r + 1, width + 1))
    table[:r, :n] = a
    table[:r, -1] = b
    basis = np.zeros(r, dtype=np.int64)
    slack, art = n, n + n_slack
    for i, sense in enumerate(senses):
        if sense is Sense.LE:
            table[i, slack] = 1.0
            basis[i] = slack
            slack += 1
        elif sense is Sense.GE:
            table[i, slack] = -1.0
            slack += 1
            table[i, art] = 1.0
            basis[i] = art
            art += 1
        else:
            table[i, art] = 1.0
            basis[i] = art
            art += 1

    tableau = _Tableau(table, basis, settings.lp_max_pivots)
    real = n + n_slack
    if n_art:
        phase_one = np.zeros(width)
        phase_one[real:] = 1.0
        tableau.price(phase_one)
        tableau.iterate(tol.reduced_cost)
        if -tableau.table[-1, -1] > tol.feasibility:
            log.debug("%s: phase one ended at %.3g, infeasible", lp.name, -tableau.table[-1, -1])
            return LpSolution(LpStatus.INFEASIBLE, pivots=tableau.pivots)
        redundant = []
        for i in range(r):
            if tableau.basis[i] >= real:
                candidates = np.flatnonzero(np.abs(tableau.table[i, :real]) > 1e-9)
                if candidates.size:
                    tableau.pivot(i, int(candidates[0]))
                else:
                    redundant.append(i)
        keep = [i for i in range(r) if i not in redundant]
        tableau.table = np.delete(tableau.table[keep + [r]], np.s_[real:width], axis=1)
        tableau.basis = tableau.basis[keep]

    phase_two = np.zeros(real)
    phase_two[:n] = -cost if lp.maximize else cost
    tableau.price(phase_two)
    status = tableau.iterate(tol.reduced_cost)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, pivots=tableau.pivots)

    shifted = np.zeros(real)
    shifted[tableau.basis] = tableau.table[:-1, -1]
    values = np.minimum(np.maximum(lo + shifted[:n], lo), hi)
    objective = float(cost @ values) + lp.objective_constant

    tight = [row.name for row in lp.rows if abs(row.activity(values) - row.rhs) <= tol.feasibility]
    for k, name in enumerate(lp.names):
        if values[k] - lo[k] <= tol.feasibility:
            tight.append(f"lb:{name}")
        if math.isfinite(hi[k]) and hi[k] - values[k] <= tol.feasibility:
            tight.append(f"ub:{name}")
    log.debug("%s: optimal %.9g after %d pivots", lp.name, objective, tableau.pivots)
    return LpSolution(LpStatus.OPTIMAL, values, objective, tuple(tight), tableau.pivots)


SeparationOracle = Callable[[np.ndarray], Optional[Row]]


def solve_with_separation(lp: LinearProgram, oracle: SeparationOracle,
                          settings: Optional[SolverSettings] = None,
                          max_rounds: Optional[int] = None) -> LpSolution:
    """
    Row generation: solve, ask the oracle for a violated row, add it, repeat.

    The caller's LP is not modified; the added rows come back on the solution.
    """
    settings = settings or SolverSettings()
    limit = settings.separation_max_rounds if max_rounds is None else max_rounds
    work = lp.copy()
    cuts = []
    pivots = 0
    while True:
        solution = solve(work, settings)
        pivots += solution.pivots
        if not solution.optimal:
            return replace(solution, rounds=len(cuts) + 1, cuts=tuple(cuts), pivots=pivots)
        row = oracle(solution.values)
        if row is None:
            return replace(solution, rounds=len(cuts) + 1, cuts=tuple(cuts), pivots=pivots)
        violation = row.violation(solution.values)
        if violation <= settings.tolerances.feasibility:
            raise SeparationError(f"oracle row {row.name} is not violated ({violation:.3g})")
        if len(cuts) >= limit:
            raise IterationLimitExceeded(f"separation exceeded {limit} rounds")
        log.debug("%s: adding %s (violation %.3g)", lp.name, row.name, violation)
        cuts.append(work.add_cut(row))


__all__ = [
    'Sense',
    'LpStatus',
    'Row',
    'LinearProgram',
    'LpSolution',
    'solve',
    'solve_with_separation',
]
