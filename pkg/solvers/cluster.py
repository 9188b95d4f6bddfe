"""
GreedyCluster: pick representatives in decreasing priority and let each one
absorb every remaining client whose ball meets its own.
"""

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Clustering:
    """Representatives H (selection order) and the assignment π: client → representative."""
    representatives: tuple
    assignment:      Mapping[int, int]

    def members(self, representative: int) -> list:
        return sorted(j for j, rep in self.assignment.items() if rep == representative)

    def balls(self, balls: Sequence[frozenset]) -> dict:
        """Representative → its ball, in ascending representative order."""
        return {j: balls[j] for j in sorted(self.representatives)}

    def weights(self, values: Sequence[float]) -> dict:
        """t_j = Σ_{π j' = j} values[j'] for every representative j."""
        totals = {j: 0.0 for j in self.representatives}
        for client, rep in self.assignment.items():
            totals[rep] += float(values[client])
        return totals


def greedy_cluster(balls: Sequence[frozenset], clients: Iterable[int],
                   priority) -> Clustering:
    """
    Cluster ``clients`` by decreasing ``priority[j]``, ties by ascending index.

    ``balls[j]`` is the facility set of client j; ``priority`` is anything
    indexable by client (array, list or mapping).
    """
    order = sorted(set(int(j) for j in clients), key=lambda j: (-float(priority[j]), j))
    remaining = dict.fromkeys(order)
    representatives, assignment = [], {}
    for j in order:
        if j not in remaining:
            continue
        representatives.append(j)
        ball = balls[j]
        absorbed = [k for k in remaining if k == j or not ball.isdisjoint(balls[k])]
        for k in absorbed:
            assignment[k] = j
            del remaining[k]
    return Clustering(tuple(representatives), assignment)


def greedy_cluster_by_radius(balls: Sequence[frozenset], clients: Iterable[int],
                             radii: Sequence[float]) -> Clustering:
    """GreedyCluster with g = -R, so that R_{πj} ≤ R_j."""
    return greedy_cluster(balls, clients, -np.asarray(radii, dtype=float))


__all__ = ['Clustering', 'greedy_cluster', 'greedy_cluster_by_radius']
