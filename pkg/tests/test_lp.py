import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from solvers.errors import IterationLimitExceeded, SeparationError
from solvers.lp import LinearProgram, LpStatus, Row, Sense, solve, solve_with_separation
from solvers.matroid import PartitionMatroid, UniformMatroid
from solvers.settings import SolverSettings


def _random_lp(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    rows = int(rng.integers(1, 6))
    lp = LinearProgram(f'random-{seed}')
    for k in range(n):
        lp.add_variable(f"x{k}", 0.0, float(rng.integers(1, 4)), float(rng.uniform(-2, 2)))
    a = rng.integers(-3, 4, size=(rows, n)).astype(float)
    b = rng.integers(-2, 6, size=rows).astype(float)
    senses = rng.choice([Sense.LE, Sense.GE], size=rows)
    for i in range(rows):
        lp.add_row(f"r{i}", dict(enumerate(a[i])), senses[i], b[i])
    return lp, a, b, senses


def _scipy(lp, a, b, senses):
    sign = np.array([1.0 if s is Sense.LE else -1.0 for s in senses])
    return linprog(lp.costs, A_ub=a * sign[:, None], b_ub=b * sign,
                   bounds=list(zip(lp.lower, lp.upper)), method='highs')


@settings(deadline=None, max_examples=200)
@given(st.integers(0, 10 ** 6))
def test_simplex_matches_scipy(seed):
    lp, a, b, senses = _random_lp(seed)
    ours = solve(lp)
    reference = _scipy(lp, a, b, senses)
    if reference.status == 2:
        assert ours.status is LpStatus.INFEASIBLE
        return
    assert reference.status == 0
    assert ours.optimal
    assert ours.objective == pytest.approx(reference.fun, abs=1e-6)
    for row in lp.rows:
        assert row.violation(ours.values) <= 1e-7


@settings(deadline=None, max_examples=100)
@given(st.integers(0, 10 ** 6))
def test_solution_is_a_vertex(seed):
    lp, a, b, senses = _random_lp(seed)
    ours = solve(lp)
    if not ours.optimal:
        return
    x = ours.values
    active = [a[i] for i in range(len(b)) if abs(a[i] @ x - b[i]) <= 1e-7]
    for k in range(lp.num_variables):
        if abs(x[k] - lp.lower[k]) <= 1e-7 or abs(x[k] - lp.upper[k]) <= 1e-7:
            active.append(np.eye(lp.num_variables)[k])
    assert np.linalg.matrix_rank(np.array(active)) == lp.num_variables


def test_objective_constant_and_maximize():
    lp = LinearProgram('toy')
    x = lp.add_variable('x', 0.0, 4.0)
    y = lp.add_variable('y', 0.0, 4.0)
    lp.add_row('cap', {x: 1.0, y: 2.0}, Sense.LE, 6.0)
    lp.set_objective({x: 1.0, y: 1.0}, maximize=True, constant=10.0)
    solution = solve(lp)
    assert solution.optimal
    assert solution.objective == pytest.approx(15.0)
    assert solution.values == pytest.approx([4.0, 1.0])
    assert 'cap' in solution.tight_rows


def test_infeasible_and_unbounded_are_statuses():
    lp = LinearProgram()
    x = lp.add_variable('x', 0.0, 1.0)
    lp.add_row('too-much', {x: 1.0}, Sense.GE, 2.0)
    assert solve(lp).status is LpStatus.INFEASIBLE

    free = LinearProgram()
    z = free.add_variable('z', 0.0, np.inf, cost=-1.0)
    free.add_row('floor', {z: 1.0}, Sense.GE, 1.0)
    assert solve(free).status is LpStatus.UNBOUNDED


def test_pivot_cap():
    lp = LinearProgram()
    x = lp.add_variable('x', 0.0, 1.0)
    lp.add_row('force', {x: 1.0}, Sense.GE, 1.0)
    with pytest.raises(IterationLimitExceeded):
        solve(lp, SolverSettings(lp_max_pivots=0))


def _polytope_lp(weights):
    lp = LinearProgram('polytope')
    for i, w in enumerate(weights):
        lp.add_variable(f"z{i}", 0.0, 1.0, cost=-w)
    return lp


def _rank_oracle(matroid):
    def oracle(z):
        hit = matroid.separate(z)
        if hit is None:
            return None
        return Row(f"rank{sorted(hit.subset)}", {i: 1.0 for i in hit.subset}, Sense.LE, hit.rank)
    return oracle


@settings(deadline=None, max_examples=100)
@given(st.integers(0, 10 ** 6))
def test_separation_matches_materialized_rows(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 7))
    labels = rng.integers(0, 3, size=m)
    blocks = [frozenset(np.flatnonzero(labels == b).tolist()) for b in range(3)]
    blocks = [b for b in blocks if b]
    matroid = PartitionMatroid(m, tuple(blocks), tuple(int(rng.integers(0, len(b) + 1)) for b in blocks))
    weights = rng.uniform(-1, 3, size=m)

    materialized = _polytope_lp(weights)
    for members, bound in matroid.polytope_rows():
        materialized.add_row('rank', {i: 1.0 for i in members}, Sense.LE, bound)
    expected = solve(materialized)
    separated = solve_with_separation(_polytope_lp(weights), _rank_oracle(matroid))
    assert separated.optimal
    assert separated.objective == pytest.approx(expected.objective, abs=1e-6)


def test_oracle_must_return_violated_rows():
    lp = _polytope_lp([1.0, 1.0])

    def lazy(z):
        return Row('slack', {0: 1.0}, Sense.LE, 5.0)

    with pytest.raises(SeparationError):
        solve_with_separation(lp, lazy)


def test_separation_round_cap():
    matroid = UniformMatroid(4, 1)
    lp = _polytope_lp([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(IterationLimitExceeded):
        solve_with_separation(lp, _rank_oracle(matroid), max_rounds=0)


def test_lp_text_dump():
    lp = LinearProgram('dump me')
    x = lp.add_variable('y[f1]', cost=2.0)
    lp.add_row('cover:A1:c1', {x: 1.0}, Sense.GE, 1.0)
    text = lp.to_lp_format()
    assert text.startswith('\\ dump me\nMinimize\n obj: 2 y_f1_')
    assert ' cover_A1_c1: y_f1_ >= 1' in text
    assert text.rstrip().endswith('End')
