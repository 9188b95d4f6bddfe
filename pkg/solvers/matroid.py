"""
Stage-I feasibility structures and the Ψ(S) minimizers.

Facilities are the ground set and are addressed by their index 0..m-1.
Three matroid variants are supported (uniform, partition, explicit small
ground set), plus a multi-knapsack system and the unconstrained structure.
"""

import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from solvers.errors import (
    CapExceeded,
    ConstraintMismatch,
    InvalidInstance,
    InvalidMatroid,
    InvariantViolation,
    TableCapExceeded,
)

log = logging.getLogger(__name__)

LENGTH_EPS = 1e-12


def _as_set(subset: Iterable[int]) -> frozenset:
    return frozenset(int(i) for i in subset)


def subset_mask(subset: Iterable[int]) -> int:
    mask = 0
    for i in subset:
        mask |= 1 << int(i)
    return mask


def mask_members(mask: int) -> frozenset:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


def _popcounts(size: int) -> np.ndarray:
    idx = np.arange(1 << size, dtype=np.int64)
    counts = np.zeros(1 << size, dtype=np.int64)
    for b in range(size):
        counts += (idx >> b) & 1
    return counts


def subset_sums(values: np.ndarray) -> np.ndarray:
    """sums[mask] = Σ values[i] for i in mask, for every mask."""
    size = len(values)
    sums = np.zeros(1 << size, dtype=float)
    for b in range(size):
        view = sums.reshape(-1, 2, 1 << b)
        view[:, 1, :] += values[b]
    return sums


# ── RESULT TYPES ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class RankViolation:
    """A set U with z(U) > r(U)."""
    subset:    frozenset
    rank:      int
    violation: float


@dataclass(frozen=True)
class PsiResult:
    selection: frozenset
    value:     float


# ── MATROIDS ──────────────────────────────────────────────────────────────────

class Matroid(ABC):
    """Rank-oracle matroid over facility indices."""

    ground_size: int

    @abstractmethod
    def rank(self, subset: Iterable[int]) -> int:
        ...

    @abstractmethod
    def polytope_rows(self) -> list:
        """Rank rows (U, r(U)) that, with 0 ≤ z ≤ 1, describe the matroid polytope."""

    @abstractmethod
    def separate(self, z: Sequence[float], tol: float = 1e-7) -> Optional[RankViolation]:
        """Most violated rank row at z, or None when z(U) ≤ r(U) + tol everywhere."""

    def is_independent(self, subset: Iterable[int]) -> bool:
        members = _as_set(subset)
        return self.rank(members) == len(members)

    def admits(self, subset: Iterable[int]) -> bool:
        return self.is_independent(subset)


@dataclass(frozen=True)
class UniformMatroid(Matroid):
    """Every set of at most k facilities is independent."""
    ground_size: int
    k:           int

    def __post_init__(self):
        if self.ground_size < 0 or self.k < 0:
            raise InvalidMatroid("uniform matroid needs non-negative size and rank")

    def rank(self, subset):
        return min(len(_as_set(subset)), self.k)

    def polytope_rows(self):
        if self.k >= self.ground_size:
            return []
        return [(frozenset(range(self.ground_size)), self.k)]

    def separate(self, z, tol=1e-7):
        z = np.asarray(z, dtype=float)
        support = frozenset(int(i) for i in np.flatnonzero(z > 0))
        bound = min(len(support), self.k)
        violation = float(z[sorted(support)].sum()) - bound if support else 0.0
        if violation > tol:
            return RankViolation(support, bound, violation)
        return None


@dataclass(frozen=True)
class PartitionMatroid(Matroid):
    """At most capacities[b] facilities from blocks[b]; facilities outside every block are free."""
    ground_size: int
    blocks:      tuple
    capacities:  tuple

    def __post_init__(self):
        blocks = tuple(_as_set(b) for b in self.blocks)
        object.__setattr__(self, 'blocks', blocks)
        object.__setattr__(self, 'capacities', tuple(int(c) for c in self.capacities))
        if len(blocks) != len(self.capacities):
            raise InvalidMatroid("partition matroid needs one capacity per block")
        seen = set()
        for block in blocks:
            if seen & block:
                raise InvalidMatroid("partition blocks must be disjoint")
            if any(i < 0 or i >= self.ground_size for i in block):
                raise InvalidMatroid("partition block element outside the ground set")
            seen |= block
        if any(c < 0 for c in self.capacities):
            raise InvalidMatroid("partition capacities must be non-negative")
        object.__setattr__(self, '_covered', frozenset(seen))

    def rank(self, subset):
        members = _as_set(subset)
        total = len(members - self._covered)
        for block, cap in zip(self.blocks, self.capacities):
            total += min(len(members & block), cap)
        return total

    def polytope_rows(self):
        return [(block, cap) for block, cap in zip(self.blocks, self.capacities)
                if cap < len(block)]

    def separate(self, z, tol=1e-7):
        z = np.asarray(z, dtype=float)
        chosen, bound, violation = set(), 0, 0.0
        for block, cap in zip(self.blocks, self.capacities):
            support = [i for i in sorted(block) if z[i] > 0]
            excess = float(z[support].sum()) - min(len(support), cap) if support else 0.0
            if excess > 0:
                chosen.update(support)
                bound += min(len(support), cap)
                violation += excess
        if violation > tol:
            return RankViolation(frozenset(chosen), bound, violation)
        return None


@dataclass(frozen=True, eq=False)
class ExplicitMatroid(Matroid):
    """Matroid given by its full independence table (small ground sets only)."""
    ground_size: int
    independent: np.ndarray = field(repr=False)

    def __post_init__(self):
        size = self.ground_size
        table = np.asarray(self.independent, dtype=bool)
        if table.shape != (1 << size,):
            raise InvalidMatroid("independence table must have 2**ground_size entries")
        if not table[0]:
            raise InvalidMatroid("the empty set must be independent")
        for b in range(size):
            view = table.reshape(-1, 2, 1 << b)
            if np.any(view[:, 1, :] & ~view[:, 0, :]):
                raise InvalidMatroid("independence table is not closed under subsets")
        counts = _popcounts(size)
        ranks = np.where(table, counts, 0)
        for b in range(size):
            view = ranks.reshape(-1, 2, 1 << b)
            np.maximum(view[:, 1, :], view[:, 0, :], out=view[:, 1, :])
        self._check_axioms(ranks)
        object.__setattr__(self, 'independent', table)
        object.__setattr__(self, '_ranks', ranks)
        object.__setattr__(self, '_counts', counts)

    @classmethod
    def from_bases(cls, bases: Iterable[Iterable[int]], ground_size: int,
                   max_ground: int = 20) -> 'ExplicitMatroid':
        """Expand maximal independent sets into the full table, then validate."""
        if ground_size > max_ground:
            raise CapExceeded(f"explicit matroid ground set {ground_size} exceeds {max_ground}")
        table = np.zeros(1 << ground_size, dtype=bool)
        table[0] = True
        for base in bases:
            members = _as_set(base)
            if any(i < 0 or i >= ground_size for i in members):
                raise InvalidMatroid("base element outside the ground set")
            table[subset_mask(members)] = True
        for b in range(ground_size):
            view = table.reshape(-1, 2, 1 << b)
            view[:, 0, :] |= view[:, 1, :]
        return cls(ground_size, table)

    def _check_axioms(self, ranks: np.ndarray):
        idx = np.arange(1 << self.ground_size, dtype=np.int64)
        for e in range(self.ground_size):
            bit_e = 1 << e
            without_e = idx[(idx & bit_e) == 0]
            step = ranks[without_e | bit_e] - ranks[without_e]
            if np.any(step > 1):
                raise InvalidMatroid("rank grows by more than one on a single element")
            for f in range(e + 1, self.ground_size):
                bit_f = 1 << f
                base = without_e[(without_e & bit_f) == 0]
                lhs = ranks[base | bit_e] + ranks[base | bit_f]
                rhs = ranks[base | bit_e | bit_f] + ranks[base]
                if np.any(lhs < rhs):
                    raise InvalidMatroid("rank function is not submodular")

    def rank(self, subset):
        return int(self._ranks[subset_mask(subset)])

    def is_independent(self, subset):
        return bool(self.independent[subset_mask(subset)])

    def bases(self) -> list:
        full = int(self._ranks[-1])
        masks = np.flatnonzero(self.independent & (self._counts == full))
        return [sorted(mask_members(int(m))) for m in masks]

    def polytope_rows(self):
        # Flats with r(U) < |U|; every other rank row is implied by these and the bounds.
        idx = np.arange(1 << self.ground_size, dtype=np.int64)
        closed = np.ones(len(idx), dtype=bool)
        for e in range(self.ground_size):
            bit = 1 << e
            without = (idx & bit) == 0
            closed[without] &= self._ranks[idx[without] | bit] > self._ranks[idx[without]]
        rows = np.flatnonzero(closed & (self._ranks < self._counts))
        return [(mask_members(int(m)), int(self._ranks[m])) for m in rows]

    def separate(self, z, tol=1e-7):
        z = np.asarray(z, dtype=float)
        excess = subset_sums(z) - self._ranks
        best = int(np.argmax(excess))
        if excess[best] > tol:
            return RankViolation(mask_members(best), int(self._ranks[best]), float(excess[best]))
        return None


# ── NON-MATROID STRUCTURES ────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class KnapsackSystem:
    """Σ_{i∈S} weights[ℓ, i] ≤ budgets[ℓ] for every knapsack row ℓ."""
    weights: np.ndarray
    budgets: tuple

    def __post_init__(self):
        weights = np.asarray(self.weights)
        if weights.ndim != 2 or len(weights) != len(self.budgets):
            raise InvalidInstance("knapsack weights must be an L x m array matching the budgets")
        if not np.all(np.equal(np.mod(weights, 1), 0)) or np.any(weights < 0):
            raise InvalidInstance("knapsack weights must be non-negative integers")
        budgets = tuple(int(b) for b in self.budgets)
        if any(b < 0 for b in budgets) or any(b != float(r) for b, r in zip(budgets, self.budgets)):
            raise InvalidInstance("knapsack budgets must be non-negative integers")
        object.__setattr__(self, 'weights', weights.astype(np.int64))
        object.__setattr__(self, 'budgets', budgets)

    @property
    def ground_size(self) -> int:
        return self.weights.shape[1]

    @property
    def table_size(self) -> int:
        """Λ = ∏(W_ℓ + 1), the dynamic-program table size."""
        return math.prod(b + 1 for b in self.budgets)

    def admits(self, subset: Iterable[int]) -> bool:
        members = sorted(_as_set(subset))
        if not members:
            return True
        load = self.weights[:, members].sum(axis=1)
        return bool(np.all(load <= np.asarray(self.budgets)))


@dataclass(frozen=True)
class Unconstrained:
    ground_size: int

    def admits(self, subset: Iterable[int]) -> bool:
        return True


Constraint = Union[Matroid, KnapsackSystem, Unconstrained]


def as_matroid(constraint: Constraint) -> Matroid:
    """View a constraint as a matroid; the unconstrained case is the free matroid."""
    if isinstance(constraint, Matroid):
        return constraint
    if isinstance(constraint, Unconstrained):
        return UniformMatroid(constraint.ground_size, constraint.ground_size)
    raise ConstraintMismatch("a matroid stage-I structure is required")


def rank(matroid: Matroid, subset: Iterable[int]) -> int:
    return matroid.rank(subset)


def separate_matroid_polytope(matroid: Matroid, z: Sequence[float],
                              tol: float = 1e-7) -> Optional[RankViolation]:
    return matroid.separate(z, tol)


# ── MATROID INTERSECTION ──────────────────────────────────────────────────────

def _shorter(candidate, incumbent) -> bool:
    if candidate[0] < incumbent[0] - LENGTH_EPS:
        return True
    return abs(candidate[0] - incumbent[0]) <= LENGTH_EPS and candidate[1] < incumbent[1]


def _augmenting_path(first: Matroid, second: Matroid, current: set,
                     candidates: Sequence[int], gain: Mapping[int, float]):
    """Shortest path (by vertex length, then hops) in the exchange graph, or None."""
    outside = [x for x in candidates if x not in current]
    inside = sorted(current)
    sources = [x for x in outside if first.is_independent(current | {x})]
    sinks = {x for x in outside if second.is_independent(current | {x})}
    if not sources or not sinks:
        return None

    arcs = {v: [] for v in itertools.chain(inside, outside)}
    for y in inside:
        rest = current - {y}
        for x in outside:
            swapped = rest | {x}
            if first.is_independent(swapped):
                arcs[y].append(x)
            if second.is_independent(swapped):
                arcs[x].append(y)

    def length(v):
        return gain[v] if v in current else -gain[v]

    nodes = sorted(arcs)
    best = {v: (math.inf, math.inf) for v in nodes}
    parent = {}
    for s in sources:
        best[s] = (length(s), 0)
        parent[s] = None
    for _ in range(len(nodes)):
        changed = False
        for u in nodes:
            if best[u][0] == math.inf:
                continue
            for v in arcs[u]:
                candidate = (best[u][0] + length(v), best[u][1] + 1)
                if _shorter(candidate, best[v]):
                    best[v] = candidate
                    parent[v] = u
                    changed = True
        if not changed:
            break

    reachable = [x for x in sorted(sinks) if best[x][0] < math.inf]
    if not reachable:
        return None
    target = reachable[0]
    for x in reachable[1:]:
        if _shorter(best[x], best[target]):
            target = x

    path, node, seen = [], target, set()
    while node is not None:
        if node in seen:
            raise InvariantViolation("exchange graph path reconstruction looped")
        seen.add(node)
        path.append(node)
        node = parent[node]
    return best[target][0], path[::-1]


def _exhaustive_intersection(first, second, weights, candidates, max_items=20):
    if len(candidates) > max_items:
        raise CapExceeded(f"{len(candidates)} candidate items exceed the exhaustive limit {max_items}")
    best_set, best_weight = frozenset(), 0.0
    for size in range(1, len(candidates) + 1):
        for combo in itertools.combinations(candidates, size):
            total = float(sum(weights[i] for i in combo))
            if total < best_weight - LENGTH_EPS and first.is_independent(combo) \
                    and second.is_independent(combo):
                best_set, best_weight = frozenset(combo), total
    return best_set


def min_weight_common_independent(first: Matroid, second: Matroid,
                                  weights: Sequence[float],
                                  mode: str = 'augmenting') -> frozenset:
    """Minimum-weight set independent in both matroids (the empty set is allowed)."""
    weights = np.asarray(weights, dtype=float)
    candidates = [int(i) for i in np.flatnonzero(weights < 0)]
    if not candidates:
        return frozenset()
    if mode == 'exhaustive':
        return _exhaustive_intersection(first, second, weights, candidates)

    gain = {i: -float(weights[i]) for i in candidates}
    current: set = set()
    while True:
        found = _augmenting_path(first, second, current, candidates, gain)
        if found is None or found[0] >= -LENGTH_EPS:
            break
        for v in found[1]:
            current ^= {v}
        if not (first.is_independent(current) and second.is_independent(current)):
            raise InvariantViolation("augmentation left the common independent sets")
    return frozenset(current)


# ── Ψ MINIMIZATION ────────────────────────────────────────────────────────────

def psi_value(selection: Iterable[int], clusters: Mapping[int, frozenset],
              weights: Sequence[float], penalties: Mapping[int, float]) -> float:
    """Ψ(S) = Σ_j w(S∩G_j) + max(0, 1 - |S∩G_j|)·t_j over the cluster centres j."""
    chosen = _as_set(selection)
    terms = []
    for j in sorted(clusters):
        hit = chosen & clusters[j]
        terms.extend(float(weights[i]) for i in hit)
        if not hit:
            terms.append(float(penalties[j]))
    return math.fsum(terms)


def _cluster_partition(ground_size: int, clusters: Mapping[int, frozenset]) -> PartitionMatroid:
    blocks = [clusters[j] for j in sorted(clusters)]
    capacities = [1] * len(blocks)
    rest = frozenset(range(ground_size)).difference(*blocks) if blocks else frozenset(range(ground_size))
    if rest:
        blocks.append(rest)
        capacities.append(0)
    return PartitionMatroid(ground_size, tuple(blocks), tuple(capacities))


def minimize_psi_matroid(matroid: Matroid, clusters: Mapping[int, frozenset],
                         weights: Sequence[float], penalties: Mapping[int, float],
                         mode: str = 'augmenting') -> PsiResult:
    """
    Minimize Ψ over S ∈ M with balls pairwise disjoint.

    Reduces to a min-weight common independent set of M and the partition
    matroid {|S ∩ G_j| ≤ 1}, item weight w_i - t_j for i ∈ G_j.
    """
    item_weights = np.zeros(matroid.ground_size, dtype=float)
    for j, ball in clusters.items():
        for i in ball:
            item_weights[i] = float(weights[i]) - float(penalties[j])
    partition = _cluster_partition(matroid.ground_size, clusters)
    selection = min_weight_common_independent(matroid, partition, item_weights, mode)
    return PsiResult(selection, psi_value(selection, clusters, weights, penalties))


def minimize_psi_knapsack(system: KnapsackSystem, clusters: Mapping[int, frozenset],
                          weights: Sequence[float], penalties: Mapping[int, float],
                          table_cap: int = 10 ** 7) -> PsiResult:
    """
    Dynamic program over the cluster centres with the used-capacity vector as state.

    States are encoded mixed-radix in one index of size Λ = ∏(W_ℓ + 1). Each
    cluster either pays its penalty or opens exactly one ball facility.
    """
    size = system.table_size
    if size > table_cap:
        raise TableCapExceeded(f"knapsack table size {size} exceeds cap {table_cap}")

    budgets = np.asarray(system.budgets, dtype=np.int64)
    radix = budgets + 1
    strides = np.ones(len(budgets), dtype=np.int64)
    for ell in range(1, len(budgets)):
        strides[ell] = strides[ell - 1] * radix[ell - 1]
    states = np.arange(size, dtype=np.int64)
    used = (states[:, None] // strides) % radix

    cost = np.full(size, math.inf)
    cost[0] = 0.0
    trail = []
    for j in sorted(clusters):
        step = cost + float(penalties[j])
        choice = np.full(size, -1, dtype=np.int64)
        parent = states.copy()
        for i in sorted(clusters[j]):
            load = system.weights[:, i]
            if np.any(load > budgets):
                continue
            fits = np.isfinite(cost) & np.all(used + load <= budgets, axis=1)
            src = states[fits]
            dst = src + int(load @ strides)
            candidate = cost[src] + float(weights[i])
            better = candidate < step[dst]
            step[dst[better]] = candidate[better]
            choice[dst[better]] = i
            parent[dst[better]] = src[better]
        trail.append((choice, parent))
        cost = step

    state = int(np.argmin(cost))
    selection = set()
    for choice, parent in reversed(trail):
        if choice[state] >= 0:
            selection.add(int(choice[state]))
        state = int(parent[state])
    selection = frozenset(selection)
    return PsiResult(selection, psi_value(selection, clusters, weights, penalties))


def minimize_psi_unconstrained(clusters: Mapping[int, frozenset], weights: Sequence[float],
                               penalties: Mapping[int, float]) -> PsiResult:
    selection = set()
    for j in sorted(clusters):
        if not clusters[j]:
            continue
        cheapest = min(sorted(clusters[j]), key=lambda i: float(weights[i]))
        if float(weights[cheapest]) < float(penalties[j]):
            selection.add(cheapest)
    selection = frozenset(selection)
    return PsiResult(selection, psi_value(selection, clusters, weights, penalties))


def minimize_psi(constraint: Constraint, clusters: Mapping[int, frozenset],
                 weights: Sequence[float], penalties: Mapping[int, float],
                 settings=None) -> PsiResult:
    mode = settings.matroid_intersection if settings else 'augmenting'
    cap = settings.knapsack_table_cap if settings else 10 ** 7
    if isinstance(constraint, KnapsackSystem):
        return minimize_psi_knapsack(constraint, clusters, weights, penalties, cap)
    if isinstance(constraint, Unconstrained):
        return minimize_psi_unconstrained(clusters, weights, penalties)
    return minimize_psi_matroid(constraint, clusters, weights, penalties, mode)


__all__ = [
    'subset_mask',
    'mask_members',
    'subset_sums',
    'RankViolation',
    'PsiResult',
    'Matroid',
    'UniformMatroid',
    'PartitionMatroid',
    'ExplicitMatroid',
    'KnapsackSystem',
    'Unconstrained',
    'Constraint',
    'as_matroid',
    'rank',
    'separate_matroid_polytope',
    'min_weight_common_independent',
    'psi_value',
    'minimize_psi_matroid',
    'minimize_psi_knapsack',
    'minimize_psi_unconstrained',
    'minimize_psi',
]
