import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solvers.errors import CapExceeded, InvalidMatroid, TableCapExceeded
from solvers.matroid import (
    ExplicitMatroid,
    KnapsackSystem,
    PartitionMatroid,
    Unconstrained,
    UniformMatroid,
    mask_members,
    min_weight_common_independent,
    minimize_psi,
    minimize_psi_knapsack,
    psi_value,
    subset_mask,
)
from solvers.settings import SolverSettings


def _random_structure(rng, m, kind):
    if kind == 'uniform':
        return UniformMatroid(m, int(rng.integers(0, m + 1)))
    if kind == 'partition':
        labels = rng.integers(0, 2, size=m)
        blocks = [np.flatnonzero(labels == b).tolist() for b in range(2)]
        blocks = [b for b in blocks if b]
        return PartitionMatroid(m, tuple(blocks), tuple(int(rng.integers(0, len(b) + 1)) for b in blocks))
    if kind == 'explicit':
        k = int(rng.integers(0, m + 1))
        return ExplicitMatroid.from_bases(itertools.combinations(range(m), k), m)
    if kind == 'knapsack':
        rows = int(rng.integers(1, 3))
        return KnapsackSystem(rng.integers(0, 4, size=(rows, m)), tuple(int(b) for b in rng.integers(0, 5, size=rows)))
    return Unconstrained(m)


def _random_clusters(rng, m):
    labels = rng.integers(-1, 3, size=m)
    clusters = {}
    for label in range(3):
        members = frozenset(np.flatnonzero(labels == label).tolist())
        if members:
            clusters[label * 5] = members
    return clusters


def _brute_psi(constraint, m, clusters, weights, penalties):
    best = None
    for mask in range(1 << m):
        members = mask_members(mask)
        if constraint.admits(members):
            value = psi_value(members, clusters, weights, penalties)
            best = value if best is None else min(best, value)
    return best


@settings(deadline=None, max_examples=500)
@given(st.integers(0, 10 ** 6), st.sampled_from(['uniform', 'partition', 'explicit', 'knapsack', 'none']))
def test_psi_minimizers_match_brute_force(seed, kind):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 7))
    constraint = _random_structure(rng, m, kind)
    clusters = _random_clusters(rng, m)
    weights = rng.integers(0, 6, size=m).astype(float)
    penalties = {j: float(rng.integers(0, 8)) for j in clusters}

    result = minimize_psi(constraint, clusters, weights, penalties, SolverSettings())
    assert constraint.admits(result.selection)
    assert result.value == pytest.approx(psi_value(result.selection, clusters, weights, penalties))
    assert result.value == pytest.approx(_brute_psi(constraint, m, clusters, weights, penalties))


@settings(deadline=None, max_examples=150)
@given(st.integers(0, 10 ** 6))
def test_intersection_modes_agree(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 7))
    first = _random_structure(rng, m, 'partition')
    second = _random_structure(rng, m, 'uniform')
    weights = rng.uniform(-3, 1, size=m)
    fast = min_weight_common_independent(first, second, weights, 'augmenting')
    slow = min_weight_common_independent(first, second, weights, 'exhaustive')
    assert first.is_independent(fast) and second.is_independent(fast)
    assert weights[sorted(fast)].sum() == pytest.approx(weights[sorted(slow)].sum(), abs=1e-9)


def test_explicit_matroid_matches_uniform_rank():
    explicit = ExplicitMatroid.from_bases([(0, 1), (0, 2), (1, 2)], 3)
    uniform = UniformMatroid(3, 2)
    for mask in range(8):
        members = mask_members(mask)
        assert explicit.rank(members) == uniform.rank(members)
    assert explicit.bases() == [[0, 1], [0, 2], [1, 2]]
    assert explicit.polytope_rows() == [(frozenset({0, 1, 2}), 2)]


def test_explicit_matroid_rejects_non_matroids():
    with pytest.raises(InvalidMatroid):
        ExplicitMatroid.from_bases([(0, 1), (2,)], 3)


def test_explicit_matroid_size_cap():
    with pytest.raises(CapExceeded):
        ExplicitMatroid.from_bases([()], 21)


def test_partition_blocks_must_be_disjoint():
    with pytest.raises(InvalidMatroid):
        PartitionMatroid(3, ((0, 1), (1, 2)), (1, 1))


def test_separation_finds_the_overfull_block():
    matroid = PartitionMatroid(4, ((0, 1), (2, 3)), (1, 2))
    hit = matroid.separate([0.8, 0.7, 1.0, 1.0])
    assert hit.subset == {0, 1}
    assert hit.rank == 1
    assert hit.violation == pytest.approx(0.5)
    assert matroid.separate([0.5, 0.5, 1.0, 1.0]) is None


def test_knapsack_table_cap():
    system = KnapsackSystem(np.ones((2, 3), dtype=int), (99, 99))
    with pytest.raises(TableCapExceeded):
        minimize_psi_knapsack(system, {0: frozenset({0})}, [1.0, 1.0, 1.0], {0: 5.0}, table_cap=100)


def test_subset_masks():
    assert subset_mask({0, 3}) == 9
    assert mask_members(9) == {0, 3}
