import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_instance, random_tour
from oracles import cycle_weight

from gtsp_acs.instance import (
    FORBIDDEN,
    GtspInstance,
    InfeasibleTourError,
    InstanceError,
    canonical,
    check_feasible,
    cluster_count,
    relative_error,
    tour_weight,
)


def triangle():
    d = np.array([[0, 1, 3], [1, 0, 2], [3, 2, 0]])
    return GtspInstance("tri", d, ((0,), (1,), (2,)))


def test_weight_of_triangle_is_sum_of_edges():
    assert tour_weight(triangle(), [0, 1, 2]) == 6


def test_weight_stays_integral():
    w = tour_weight(triangle(), [0, 1, 2])
    assert isinstance(w, int)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 9), k=st.integers(0, 20))
def test_weight_invariant_under_rotation_and_reversal(seed, m, k):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, m, 1, 4)
    t = random_tour(rng, inst)
    w = tour_weight(inst, t)
    k %= m
    assert w == tour_weight(inst, t[k:] + t[:k])
    assert w == tour_weight(inst, t[::-1])
    assert w == cycle_weight(inst.dist, t)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 12))
def test_partition_is_disjoint_and_covers_all_nodes(seed, m):
    inst = random_instance(np.random.default_rng(seed), m, 1, 5)
    covered = np.zeros(inst.n, dtype=np.int64)
    for c in inst.clusters:
        covered[list(c)] += 1
    assert (covered == 1).all()
    assert sum(len(c) for c in inst.clusters) == inst.n


def test_intra_cluster_entries_are_forbidden():
    rng = np.random.default_rng(0)
    inst = random_instance(rng, 4, 2, 3)
    for c in inst.clusters:
        for u in c:
            for v in c:
                assert inst.dist[u, v] == FORBIDDEN


def test_instance_is_read_only():
    inst = triangle()
    with pytest.raises(ValueError):
        inst.dist[0, 1] = 7


def test_node_in_two_clusters_is_rejected():
    d = np.ones((3, 3), dtype=int)
    with pytest.raises(InstanceError, match="node 2"):
        GtspInstance("x", d, ((0, 1), (1, 2)))


def test_orphan_node_is_named():
    d = np.ones((4, 4), dtype=int)
    with pytest.raises(InstanceError, match="node\\(s\\) 4"):
        GtspInstance("x", d, ((0, 1), (2,)))


def test_asymmetric_matrix_is_rejected():
    d = np.array([[0, 1, 2], [5, 0, 1], [2, 1, 0]])
    with pytest.raises(InstanceError, match="symmetric"):
        GtspInstance("x", d, ((0,), (1,), (2,)))


def test_single_cluster_is_rejected():
    with pytest.raises(InstanceError):
        GtspInstance("x", np.zeros((2, 2), dtype=int), ((0, 1),))


@pytest.mark.parametrize("tour", [[0, 0, 1], [0, 1], [0, 1, 2, 0], [0, 1, 7]])
def test_infeasible_sequences_raise(tour):
    with pytest.raises(InfeasibleTourError):
        check_feasible(triangle(), tour)


def test_relative_error_examples():
    assert relative_error(10557, 10557) == 0.0
    assert relative_error(13406, 13406) == 0.0
    assert relative_error(200, 100) == 100.0
    assert relative_error(90, 100) == pytest.approx(-10.0)


@pytest.mark.parametrize("best", [0, -5])
def test_relative_error_needs_positive_reference(best):
    with pytest.raises(ValueError):
        relative_error(10, best)


@given(st.integers(1, 10**9))
def test_relative_error_of_reference_is_exactly_zero(best):
    assert relative_error(best, best) == 0


def test_canonical_form():
    assert canonical([5, 3, 9, 1, 7]) == (1, 7, 5, 3, 9)
    assert canonical([2, 0, 1]) == (0, 1, 2)
    assert canonical((4, 8)) == (4, 8)


def test_cluster_count():
    assert cluster_count(198) == 40
    assert cluster_count(1084) == 217
