"""
Robust weighted supplier: pick S in the stage-I structure so that facility
weight plus the penalties of far-away clients stays within V.

Two solvers live here: a solve-or-cut loop for homogeneous radii (matroid or
knapsack structure, 3R coverage) and iterative rounding for arbitrary radii
under a matroid (9R coverage).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from models.instance import DISTANCE_TOL, SolveStatus
from solvers.cluster import greedy_cluster, greedy_cluster_by_radius
from solvers.errors import (
    ConstraintMismatch,
    InvalidInstance,
    InvariantViolation,
    IterationLimitExceeded,
    NoIntegralClientFound,
    RoundingError,
)
from solvers.lp import LinearProgram, Row, Sense, solve, solve_with_separation
from solvers.matroid import (
    Constraint,
    KnapsackSystem,
    Matroid,
    as_matroid,
    minimize_psi,
)
from solvers.settings import SolverSettings

log = logging.getLogger(__name__)


# ── MODEL ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class RwInstance:
    """Clients with radii R_j and penalties v_j, facilities with weights w_i, structure M, budget V."""
    distances:  np.ndarray
    radii:      np.ndarray
    penalties:  np.ndarray
    weights:    np.ndarray
    constraint: Constraint
    budget:     float
    clients:    tuple = None
    facilities: tuple = None

    def __post_init__(self):
        distances = np.array(self.distances, dtype=float)
        if distances.ndim != 2:
            raise InvalidInstance("RW distances must be an n x m matrix")
        n, m = distances.shape
        radii = np.array(self.radii, dtype=float).reshape(n)
        penalties = np.array(self.penalties, dtype=float).reshape(n)
        weights = np.array(self.weights, dtype=float).reshape(m)
        for name, arr in (('distances', distances), ('radii', radii),
                          ('penalties', penalties), ('weights', weights)):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InvalidInstance(f"RW {name} must be finite and non-negative")
        budget = float(self.budget)
        if not math.isfinite(budget) or budget < 0:
            raise InvalidInstance("RW budget must be finite and non-negative")
        if self.constraint.ground_size != m:
            raise InvalidInstance("stage-I structure ground set must match the facilities")
        clients = tuple(self.clients) if self.clients is not None else tuple(f"c{j}" for j in range(n))
        facilities = (tuple(self.facilities) if self.facilities is not None
                      else tuple(f"f{i}" for i in range(m)))
        if len(clients) != n or len(facilities) != m:
            raise InvalidInstance("RW labels must match the distance matrix")
        for arr in (distances, radii, penalties, weights):
            arr.setflags(write=False)
        object.__setattr__(self, 'distances', distances)
        object.__setattr__(self, 'radii', radii)
        object.__setattr__(self, 'penalties', penalties)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'budget', budget)
        object.__setattr__(self, 'clients', tuple(str(c) for c in clients))
        object.__setattr__(self, 'facilities', tuple(str(f) for f in facilities))

    @classmethod
    def from_instance(cls, instance, penalties, weights=None, budget=None, radii=None) -> 'RwInstance':
        """RW view of a supplier instance; weights default to c^I and V to B."""
        return cls(
            distances=instance.distances,
            radii=instance.radii if radii is None else radii,
            penalties=penalties,
            weights=instance.stage1_costs if weights is None else weights,
            constraint=instance.constraint,
            budget=instance.budget if budget is None else budget,
            clients=instance.clients,
            facilities=instance.facilities,
        )

    @property
    def n(self) -> int:
        return self.distances.shape[0]

    @property
    def m(self) -> int:
        return self.distances.shape[1]

    @property
    def homogeneous(self) -> bool:
        return self.n == 0 or bool(np.all(self.radii == self.radii[0]))

    @property
    def common_radius(self) -> float:
        if not self.homogeneous:
            raise ConstraintMismatch("RW radii are not homogeneous")
        return float(self.radii[0]) if self.n else 0.0

    def balls(self, radius: Optional[float] = None, tol: float = DISTANCE_TOL) -> tuple:
        r = self.radii if radius is None else np.full(self.n, float(radius))
        inside = self.distances <= r[:, None] + tol
        return tuple(frozenset(int(i) for i in np.flatnonzero(row)) for row in inside)

    def __repr__(self):
        return f'<RwInstance n={self.n} m={self.m} V={self.budget:g}>'


@dataclass(frozen=True)
class RwCheck:
    budget_used: float
    outliers:    frozenset
    ok:          bool
    admissible:  bool


@dataclass(frozen=True, eq=False)
class IterRoundState:
    """Client partition and Main LP solution after one rounding iteration."""
    iteration: int
    outliers:  frozenset
    committed: frozenset
    undecided: frozenset
    z:         np.ndarray = field(repr=False)
    objective: float
    picked:    Optional[int] = None
    evicted:   frozenset = frozenset()


@dataclass(frozen=True, eq=False)
class RwResult:
    status:         SolveStatus
    selection:      frozenset = frozenset()
    rho:            float = 3.0
    rounds:         int = 0
    cuts:           tuple = ()
    trace:          tuple = ()
    ever_committed: frozenset = frozenset()

    @property
    def feasible(self) -> bool:
        return self.status is SolveStatus.FEASIBLE


# ── CHECKER ───────────────────────────────────────────────────────────────────

def check_rw_solution(rw: RwInstance, selection, rho: float, tol: float = DISTANCE_TOL,
                      budget_tol: float = 1e-7) -> RwCheck:
    """w(S) plus the penalties of clients farther than ρR_j from S, compared to V."""
    chosen = sorted(int(i) for i in selection)
    if any(i < 0 or i >= rw.m for i in chosen):
        raise InvalidInstance("selection contains an unknown facility")
    outliers = []
    for j in range(rw.n):
        distance = float(rw.distances[j, chosen].min()) if chosen else math.inf
        if distance > rho * float(rw.radii[j]) + tol:
            outliers.append(j)
    used = math.fsum([float(rw.weights[i]) for i in chosen]
                     + [float(rw.penalties[j]) for j in outliers])
    return RwCheck(
        budget_used=used,
        outliers=frozenset(outliers),
        ok=used <= rw.budget + budget_tol,
        admissible=rw.constraint.admits(chosen),
    )


# ── LP PIECES ─────────────────────────────────────────────────────────────────

def _structure_rows(lp: LinearProgram, constraint: Constraint, variables):
    """Rows describing the LP relaxation of the stage-I structure over ``variables``."""
    if isinstance(constraint, KnapsackSystem):
        for ell, cap in enumerate(constraint.budgets):
            coefficients = {variables[i]: float(w) for i, w in enumerate(constraint.weights[ell]) if w}
            lp.add_row(f"knapsack:{ell}", coefficients, Sense.LE, cap)
    elif isinstance(constraint, Matroid):
        for k, (subset, r) in enumerate(constraint.polytope_rows()):
            lp.add_row(f"rank:{k}", {variables[i]: 1.0 for i in subset}, Sense.LE, r)


def covering_lp(rw: RwInstance, balls, name: str):
    """min Σ w y + Σ v x  s.t. budget row ≤ V and x_j + y(G_j) ≥ 1."""
    lp = LinearProgram(name)
    y = [lp.add_variable(f"y_{f}", cost=w) for f, w in zip(rw.facilities, rw.weights)]
    x = [lp.add_variable(f"x_{c}", cost=v) for c, v in zip(rw.clients, rw.penalties)]
    lp.add_row('budget', dict(enumerate(lp.costs)), Sense.LE, rw.budget)
    for j, label in enumerate(rw.clients):
        coefficients = {y[i]: 1.0 for i in balls[j]}
        coefficients[x[j]] = 1.0
        lp.add_row(f"cover:{label}", coefficients, Sense.GE, 1.0)
    return lp, y, x


# ── SOLVE-OR-CUT ──────────────────────────────────────────────────────────────

def solve_rw_homogeneous(rw: RwInstance, radius: Optional[float] = None,
                         settings: Optional[SolverSettings] = None) -> RwResult:
    """
    Solve-or-cut for a common radius R.

    Each round clusters the clients by increasing x*_j, minimizes Ψ over the
    structure and either returns S (coverage 3R) or adds the cut
    Σ_{j∈H} (w(y ∩ G_j) + t_j x_j) ≥ min Ψ, which the current point violates.
    """
    settings = settings or SolverSettings()
    tol = settings.tolerances
    radius = rw.common_radius if radius is None else float(radius)
    balls = rw.balls(radius, tol.distance)
    lp, y, x = covering_lp(rw, balls, 'rw-solve-or-cut')
    _structure_rows(lp, rw.constraint, y)
    limit = settings.rw_cut_limit_factor * (rw.n + rw.m)

    cuts = []
    while True:
        solution = solve(lp, settings)
        if not solution.optimal:
            log.info("solve-or-cut: LP %s after %d cuts", solution.status.value, len(cuts))
            return RwResult(SolveStatus.INFEASIBLE, rho=3.0, rounds=len(cuts) + 1, cuts=tuple(cuts))
        x_star = solution.values[x]
        clustering = greedy_cluster(balls, range(rw.n), -x_star)
        penalties = clustering.weights(rw.penalties)
        clusters = clustering.balls(balls)
        psi = minimize_psi(rw.constraint, clusters, rw.weights, penalties, settings)
        if psi.value <= rw.budget + tol.budget:
            if not rw.constraint.admits(psi.selection):
                raise InvariantViolation("Ψ minimizer is outside the stage-I structure")
            log.info("solve-or-cut: Ψ=%.6g within V=%.6g after %d cuts",
                     psi.value, rw.budget, len(cuts))
            return RwResult(SolveStatus.FEASIBLE, psi.selection, 3.0, len(cuts) + 1, tuple(cuts))

        if len(cuts) >= limit:
            raise IterationLimitExceeded(f"solve-or-cut exceeded {limit} cuts")
        coefficients = {}
        for j in clustering.representatives:
            for i in balls[j]:
                coefficients[y[i]] = coefficients.get(y[i], 0.0) + float(rw.weights[i])
            coefficients[x[j]] = coefficients.get(x[j], 0.0) + penalties[j]
        cut = Row(f"psi-cut:{len(cuts)}", coefficients, Sense.GE, psi.value)
        violation = cut.violation(solution.values)
        if violation <= tol.budget:
            # Ψ* > V yet the LP point already meets it: the tie is within tolerance
            log.warning("solve-or-cut: Ψ=%.6g cut not violated (%.3g), reporting INFEASIBLE",
                        psi.value, violation)
            return RwResult(SolveStatus.INFEASIBLE, rho=3.0, rounds=len(cuts) + 1, cuts=tuple(cuts))
        log.debug("solve-or-cut: Ψ=%.6g > V, cut violated by %.3g", psi.value, violation)
        cuts.append(lp.add_cut(cut))


# ── ITERATIVE ROUNDING ────────────────────────────────────────────────────────

def _rank_oracle(matroid: Matroid, y, tol: float):
    def oracle(values) -> Optional[Row]:
        found = matroid.separate(values[y], tol)
        if found is None:
            return None
        members = sorted(found.subset)
        return Row(f"rank:{'.'.join(map(str, members))}",
                   {y[i]: 1.0 for i in members}, Sense.LE, found.rank)
    return oracle


def _main_lp(rw: RwInstance, matroid: Matroid, balls, outliers, committed, undecided) -> LinearProgram:
    """Σ w z + Σ_{C_0} v + Σ_{C_s} v (1 - z(G_j)) over the matroid polytope."""
    lp = LinearProgram('rw-main')
    z = [lp.add_variable(f"z_{f}") for f in rw.facilities]
    for j in outliers:
        for i in balls[j]:
            lp.set_bounds(z[i], upper=0.0)
    _structure_rows(lp, matroid, z)
    for j in sorted(committed):
        lp.add_row(f"commit:{rw.clients[j]}", {z[i]: 1.0 for i in balls[j]}, Sense.GE, 1.0)
    for j in sorted(undecided):
        lp.add_row(f"open:{rw.clients[j]}", {z[i]: 1.0 for i in balls[j]}, Sense.LE, 1.0)

    costs = {z[i]: float(w) for i, w in enumerate(rw.weights)}
    for j in undecided:
        for i in balls[j]:
            costs[z[i]] -= float(rw.penalties[j])
    constant = math.fsum(float(rw.penalties[j]) for j in sorted(set(outliers) | set(undecided)))
    lp.set_objective(costs, constant=constant)
    return lp


def _check_partition(balls, outliers, committed, undecided):
    if outliers & committed or outliers & undecided or committed & undecided:
        raise InvariantViolation("outlier, committed and undecided clients overlap")
    ordered = sorted(committed)
    for a, j in enumerate(ordered):
        for k in ordered[a + 1:]:
            if not balls[j].isdisjoint(balls[k]):
                raise InvariantViolation(f"committed clients {j} and {k} have intersecting balls")


def solve_rw_matsup_inhomogeneous(rw: RwInstance,
                                  settings: Optional[SolverSettings] = None) -> RwResult:
    """
    Iterative rounding for a matroid structure and per-client radii.

    The returned S is independent and every client outside the final
    outlier set is within 9R_j of S; clients that were ever committed are
    within 3R_j.
    """
    settings = settings or SolverSettings()
    tol = settings.tolerances
    matroid = as_matroid(rw.constraint)
    balls = rw.balls(tol=tol.distance)
    radii = rw.radii

    lp, y, _ = covering_lp(rw, balls, 'rw-relaxation')
    solution = solve_with_separation(lp, _rank_oracle(matroid, y, tol.feasibility), settings)
    if not solution.optimal:
        log.info("iterative rounding: relaxation %s", solution.status.value)
        return RwResult(SolveStatus.INFEASIBLE, rho=9.0, rounds=solution.rounds, cuts=solution.cuts)
    y_values = solution.values[y]
    mass = [float(y_values[sorted(b)].sum()) if b else 0.0 for b in balls]

    heavy = [j for j in range(rw.n) if mass[j] > 1.0 + tol.feasibility]
    committed = set(greedy_cluster_by_radius(balls, heavy, radii).representatives)
    undecided = {
        j for j in range(rw.n)
        if mass[j] <= 1.0 + tol.feasibility
        and all(balls[j].isdisjoint(balls[k]) or radii[j] < radii[k] / 2 for k in committed)
    }
    outliers = set()
    ever_committed = set(committed)
    _check_partition(balls, outliers, committed, undecided)

    trace = []
    previous = rw.budget
    iteration = 0
    while True:
        main = _main_lp(rw, matroid, balls, outliers, committed, undecided)
        current = solve(main, settings)
        if not current.optimal:
            raise RoundingError(f"Main LP {current.status.value} at iteration {iteration}")
        if current.objective > previous + tol.budget:
            raise InvariantViolation(
                f"Main LP objective rose to {current.objective:.9g} (bound {previous:.9g})")
        previous = current.objective
        z = current.values

        if not undecided:
            break
        iteration += 1
        picked = None
        for j in sorted(undecided):
            total = float(z[sorted(balls[j])].sum()) if balls[j] else 0.0
            if abs(total) <= tol.integrality or abs(total - 1.0) <= tol.integrality:
                picked, opened = j, total > 0.5
                break
        if picked is None:
            raise NoIntegralClientFound(f"no undecided client has an integral ball at iteration {iteration}")

        undecided.discard(picked)
        if opened:
            committed.add(picked)
            ever_committed.add(picked)
            evicted = {k for k in (committed | undecided) - {picked}
                       if not balls[picked].isdisjoint(balls[k]) and radii[k] >= radii[picked] / 2}
            committed -= evicted
            undecided -= evicted
        else:
            evicted = set()
            outliers.add(picked)
        _check_partition(balls, outliers, committed, undecided)
        trace.append(IterRoundState(iteration, frozenset(outliers), frozenset(committed),
                                    frozenset(undecided), z.copy(), current.objective, picked,
                                    frozenset(evicted)))
        log.debug("iterative rounding: step %d %s client %s", iteration,
                  'committed' if opened else 'dropped', rw.clients[picked])

    fractional = np.flatnonzero(np.minimum(z, 1.0 - z) > tol.integrality)
    if fractional.size:
        raise RoundingError(f"final Main LP solution is fractional at {fractional.size} facilities")
    selection = frozenset(int(i) for i in np.flatnonzero(z > 0.5))
    if not matroid.is_independent(selection):
        raise InvariantViolation("rounded selection is not independent")
    trace.append(IterRoundState(iteration + 1, frozenset(outliers), frozenset(committed),
                                frozenset(), z.copy(), current.objective))
    log.info("iterative rounding: %d steps, |S|=%d, objective %.6g",
             iteration, len(selection), current.objective)
    return RwResult(SolveStatus.FEASIBLE, selection, 9.0, solution.rounds, solution.cuts,
                    tuple(trace), frozenset(ever_committed))


# ── SOLVER TABLE ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class RwSolver:
    name:        str
    rho:         float
    run:         Callable[[RwInstance, SolverSettings], RwResult]
    homogeneous: bool


RW_SOLVERS = {
    'rw3': RwSolver('rw3', 3.0, lambda rw, settings: solve_rw_homogeneous(rw, settings=settings), True),
    'rw9': RwSolver('rw9', 9.0, lambda rw, settings: solve_rw_matsup_inhomogeneous(rw, settings), False),
}


__all__ = [
    'RwInstance',
    'RwCheck',
    'IterRoundState',
    'RwResult',
    'RwSolver',
    'RW_SOLVERS',
    'check_rw_solution',
    'covering_lp',
    'solve_rw_homogeneous',
    'solve_rw_matsup_inhomogeneous',
]
