"""Construction heuristic and the exact enumerator used as a test oracle."""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import _kernels
from .instance import GtspInstance, Tour, make_tour

DEFAULT_BUDGET = 10_000_000


class BudgetExceededError(RuntimeError):
    """Exhaustive search would exceed the configured work budget."""


def nearest_neighbor(instance: GtspInstance) -> Tour:
    """Greedy tour from every start node; the shortest one wins.

    Each greedy step moves to the closest node of a cluster not yet visited.
    Ties go to the lowest node id, both within a step and between starts.
    """
    arr = instance.arrays()
    nodes, _ = _kernels.nearest_neighbor(arr.dist, arr.cluster_of, instance.m)
    return make_tour(instance, nodes.tolist())


def enumeration_size(instance: GtspInstance) -> float:
    node_choices = math.prod(len(c) for c in instance.clusters)
    return node_choices * max(1, math.factorial(instance.m - 1) // 2)


def _best_for_order(instance: GtspInstance, order: tuple[int, ...]) -> tuple[float, tuple[int, ...]]:
    # plain-python layered DP, kept separate from the compiled one on purpose
    d = instance.dist
    clusters = instance.clusters
    best_w, best_nodes = math.inf, ()
    for src in clusters[order[0]]:
        layer = {v: (d[src, v], (src, v)) for v in clusters[order[1]]}
        for ci in order[2:]:
            layer = {
                v: min(((w + d[u, v], path + (v,)) for u, (w, path) in layer.items()), key=lambda x: x[0])
                for v in clusters[ci]
            }
        for u, (w, path) in layer.items():
            total = w + d[u, src]
            if total < best_w:
                best_w, best_nodes = total, path
    return best_w, best_nodes


def brute_force_optimum(
    instance: GtspInstance, budget: float = DEFAULT_BUDGET, method: str = "dp"
) -> Tour:
    """Globally optimal tour by exhaustive enumeration of cluster orders.

    The first cluster is fixed and mirrored orders are skipped. For every
    order the node choice is resolved either by a layered DP (``"dp"``) or
    by enumerating the full Cartesian product (``"product"``).
    """
    m = instance.m
    if m > 8:
        raise BudgetExceededError(f"exhaustive search supports m <= 8, instance has m = {m}")
    size = enumeration_size(instance)
    if size > budget:
        raise BudgetExceededError(f"{size:.3g} candidate tours exceed the budget of {budget:.3g}")
    if method not in ("dp", "product"):
        raise ValueError(f"unknown method {method!r}")

    best_w, best_nodes = math.inf, None
    for rest in itertools.permutations(range(1, m)):
        if len(rest) > 1 and rest[0] > rest[-1]:
            continue
        order = (0,) + rest
        if method == "dp" and m >= 3:
            w, nodes = _best_for_order(instance, order)
        else:
            w, nodes = _product_min(instance, order)
        if w < best_w:
            best_w, best_nodes = w, nodes
    return make_tour(instance, best_nodes)


def _product_min(instance: GtspInstance, order: tuple[int, ...]) -> tuple[float, tuple[int, ...]]:
    d = instance.dist
    best_w, best_nodes = math.inf, ()
    for nodes in itertools.product(*(instance.clusters[c] for c in order)):
        idx = np.asarray(nodes)
        w = d[idx, np.roll(idx, -1)].sum()
        if w < best_w:
            best_w, best_nodes = w, nodes
    return best_w, best_nodes
