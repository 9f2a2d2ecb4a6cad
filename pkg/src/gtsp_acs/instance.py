"""Problem data model for the symmetric GTSP.

Nodes are 0-based internally. File formats and the CLI use the 1-based
TSPLIB numbering; conversion happens only at those boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Intra-cluster entries of the distance matrix. Never read by any algorithm.
FORBIDDEN = -1


class InfeasibleTourError(ValueError):
    """A node sequence does not visit every cluster exactly once."""


class InstanceError(ValueError):
    """The instance data violates the cluster partition or distance contract."""


@dataclass(frozen=True, eq=False)
class GtspInstance:
    """Nodes partitioned into clusters plus a symmetric distance matrix.

    ``dist`` is a full ``n x n`` matrix; entries between two nodes of the
    same cluster hold :data:`FORBIDDEN`.
    """

    name: str
    dist: np.ndarray
    clusters: tuple[tuple[int, ...], ...]
    coords: np.ndarray | None = None
    edge_weight_type: str | None = None
    cluster_of: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        dist = np.asarray(self.dist)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise InstanceError(f"distance matrix must be square, got shape {dist.shape}")
        n = dist.shape[0]
        if not np.issubdtype(dist.dtype, np.integer):
            dist = dist.astype(np.float64)
        else:
            dist = dist.astype(np.int64)
        clusters = tuple(tuple(sorted(int(v) for v in c)) for c in self.clusters)
        if len(clusters) < 2:
            raise InstanceError(f"need at least 2 clusters, got {len(clusters)}")

        cluster_of = np.full(n, -1, dtype=np.int64)
        for ci, members in enumerate(clusters):
            if not members:
                raise InstanceError(f"cluster {ci + 1} is empty")
            for v in members:
                if not 0 <= v < n:
                    raise InstanceError(f"node {v + 1} of cluster {ci + 1} is outside 1..{n}")
                if cluster_of[v] != -1:
                    raise InstanceError(
                        f"node {v + 1} is assigned to clusters {cluster_of[v] + 1} and {ci + 1}"
                    )
                cluster_of[v] = ci
        orphans = np.flatnonzero(cluster_of == -1)
        if orphans.size:
            listed = ", ".join(str(v + 1) for v in orphans[:10])
            raise InstanceError(f"node(s) {listed} are not assigned to any cluster")

        same = cluster_of[:, None] == cluster_of[None, :]
        inter = dist[~same]
        if inter.size and inter.min() < 0:
            raise InstanceError("distances must be non-negative")
        if not np.array_equal(np.where(same, 0, dist), np.where(same, 0, dist).T):
            raise InstanceError("distance matrix is not symmetric")
        dist = dist.copy()
        dist[same] = FORBIDDEN
        dist.setflags(write=False)
        cluster_of.setflags(write=False)

        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "clusters", clusters)
        object.__setattr__(self, "cluster_of", cluster_of)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def m(self) -> int:
        return len(self.clusters)

    @property
    def s(self) -> int:
        """Size of the largest cluster."""
        return max(len(c) for c in self.clusters)

    @property
    def gamma(self) -> int:
        """Size of the smallest cluster."""
        return min(len(c) for c in self.clusters)

    @property
    def is_integral(self) -> bool:
        return np.issubdtype(self.dist.dtype, np.integer)

    def arrays(self) -> "KernelArrays":
        """Flat arrays consumed by the compiled kernels (cached)."""
        cached = self.__dict__.get("_arrays")
        if cached is None:
            cached = KernelArrays.build(self)
            object.__setattr__(self, "_arrays", cached)
        return cached


@dataclass(frozen=True)
class KernelArrays:
    dist: np.ndarray  # float64 copy of the distance matrix
    cluster_of: np.ndarray
    cluster_ptr: np.ndarray  # CSR offsets into cluster_nodes
    cluster_nodes: np.ndarray

    @classmethod
    def build(cls, inst: GtspInstance) -> "KernelArrays":
        sizes = [len(c) for c in inst.clusters]
        ptr = np.zeros(inst.m + 1, dtype=np.int64)
        ptr[1:] = np.cumsum(sizes)
        nodes = np.fromiter((v for c in inst.clusters for v in c), dtype=np.int64, count=inst.n)
        return cls(
            dist=np.ascontiguousarray(inst.dist, dtype=np.float64),
            cluster_of=np.ascontiguousarray(inst.cluster_of),
            cluster_ptr=ptr,
            cluster_nodes=nodes,
        )


@dataclass(frozen=True)
class Tour:
    """One node per cluster, in visiting order. ``weight`` is cached."""

    nodes: tuple[int, ...]
    weight: float

    def __len__(self) -> int:
        return len(self.nodes)


def check_feasible(instance: GtspInstance, nodes: Sequence[int]) -> None:
    if len(nodes) != instance.m:
        raise InfeasibleTourError(f"tour has {len(nodes)} nodes, instance has {instance.m} clusters")
    idx = np.asarray(nodes, dtype=np.int64)
    bad = (idx < 0) | (idx >= instance.n)
    if bad.any():
        raise InfeasibleTourError(f"node {int(idx[bad][0]) + 1} does not exist")
    counts = np.bincount(instance.cluster_of[idx], minlength=instance.m)
    if counts.max() > 1:
        raise InfeasibleTourError(f"cluster {int(np.argmax(counts)) + 1} is visited twice")


def tour_weight(instance: GtspInstance, nodes: Sequence[int]) -> int | float:
    """Closed-cycle weight of a feasible node sequence."""
    check_feasible(instance, nodes)
    idx = np.asarray(nodes, dtype=np.int64)
    total = instance.dist[idx, np.roll(idx, -1)].sum()
    return total.item()


def make_tour(instance: GtspInstance, nodes: Sequence[int]) -> Tour:
    nodes = tuple(int(v) for v in nodes)
    return Tour(nodes, tour_weight(instance, nodes))


def canonical(nodes: Sequence[int]) -> tuple[int, ...]:
    """Rotate to start at the lowest id; orient so the second id is below the last."""
    nodes = list(nodes)
    k = nodes.index(min(nodes))
    nodes = nodes[k:] + nodes[:k]
    if len(nodes) > 2 and nodes[1] > nodes[-1]:
        nodes = [nodes[0]] + nodes[:0:-1]
    return tuple(nodes)


def relative_error(w: float, best: float) -> float:
    """Percentage by which ``w`` exceeds ``best``. Negative means ``w`` is better."""
    if not best > 0:
        raise ValueError(f"reference weight must be positive, got {best}")
    if w == best:
        return 0.0
    return 100.0 * (w - best) / best


def cluster_count(n: int) -> int:
    return math.ceil(n / 5)
