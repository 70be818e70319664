"""Euclidean clustering: transitive closure of the within-radius relation."""

from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .search import (
    DEFAULT_SAFETY_FACTOR,
    SearchStats,
    radius_search_baseline,
    radius_search_bonsai,
)
from .tree import KdTree

__all__ = ["ClusterParams", "ClusterSet", "extract_clusters"]


@dataclass(frozen=True)
class ClusterParams:
    """Clustering tolerance (the search radius) and the size filter."""

    tolerance: float
    min_cluster_size: int = 1
    max_cluster_size: int = sys.maxsize

    def __post_init__(self) -> None:
        if not (np.isfinite(self.tolerance) and self.tolerance > 0):
            raise ValueError("tolerance must be positive and finite")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")
        if self.max_cluster_size < self.min_cluster_size:
            raise ValueError("max_cluster_size below min_cluster_size")


@dataclass
class ClusterSet:
    """Clusters as sorted index arrays, ordered by smallest member index."""

    clusters: list = field(default_factory=list)
    noise: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))

    @property
    def sizes(self) -> list:
        return [len(c) for c in self.clusters]


def extract_clusters(
    tree: KdTree,
    params: ClusterParams,
    mode: str = "baseline",
    safety_factor: float = DEFAULT_SAFETY_FACTOR,
) -> tuple[ClusterSet, SearchStats]:
    """Grow clusters by BFS from each unvisited point in index order.

    Every point seeds at most one expansion, so each point is queried
    exactly once and the output is deterministic: clusters come out
    ordered by their smallest index. Components outside the size filter
    are reassigned to noise after expansion. Both modes walk the same
    order; with fallback intact they produce identical partitions.
    """
    if mode not in ("baseline", "bonsai"):
        raise ValueError(f"unknown mode {mode!r}")
    xyz = tree.cloud.xyz
    n = len(tree.cloud)
    visited = np.zeros(n, dtype=bool)
    stats = SearchStats()
    result = ClusterSet()
    noise: list[int] = []

    for seed in range(n):
        if visited[seed]:
            continue
        visited[seed] = True
        members = [seed]
        queue = deque((seed,))
        while queue:
            j = queue.popleft()
            if mode == "bonsai":
                neighbors, s = radius_search_bonsai(
                    tree, xyz[j], params.tolerance, safety_factor
                )
                stats.merge(s)
            else:
                neighbors = radius_search_baseline(tree, xyz[j], params.tolerance, stats)
            fresh = neighbors[~visited[neighbors]]
            visited[fresh] = True
            members.extend(int(i) for i in fresh)
            queue.extend(int(i) for i in fresh)
        members.sort()
        if params.min_cluster_size <= len(members) <= params.max_cluster_size:
            result.clusters.append(np.asarray(members, dtype=np.intp))
        else:
            noise.extend(members)

    result.noise = np.asarray(sorted(noise), dtype=np.intp)
    return result, stats
