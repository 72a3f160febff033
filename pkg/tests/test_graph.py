import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flexflock.errors import InvalidArgument
from flexflock.field import FieldModel, gradient
from flexflock.graph import (
    EdgeEvent,
    EventKind,
    Mode,
    Topology,
    canonical,
    complete_edges,
    in_range_edges,
    is_connected,
    mu,
    neighbor_set,
    update_edges,
)


def test_mu_examples():
    assert mu((0, 0), (3, 4)) == 5.0
    assert mu((1, 1), (1, 1)) == 0.0
    X = gradient(FieldModel.quadratic_bowl(), np.array([[0.0, 0.0], [1.0, 2.0]]))
    assert mu(X[0], X[1]) == pytest.approx(math.sqrt(20), abs=1e-12)
    assert mu(X[0], X[1]) == pytest.approx(4.4721, abs=1e-4)


def test_neighbor_set_examples():
    X = [(0.0, 0.0), (3.0, 4.0)]
    assert neighbor_set(0, X, Topology.dynamic(2, 10.0)) == {1}
    # mu == r exactly is out of range
    assert neighbor_set(0, X, Topology.dynamic(2, 5.0)) == set()
    k5 = Topology.static(5, complete_edges(5))
    assert neighbor_set(0, [(0, 0)] * 5, k5) == {1, 2, 3, 4}
    with pytest.raises(InvalidArgument):
        neighbor_set(5, [(0, 0)] * 5, k5)
    with pytest.raises(InvalidArgument):
        neighbor_set(0, [(0, 0)] * 4, k5)


def test_topology_validation():
    with pytest.raises(InvalidArgument):
        Topology.static(3, [(0, 3)])
    with pytest.raises(InvalidArgument):
        Topology.static(3, [(1, 1)])
    with pytest.raises(InvalidArgument):
        Topology(Mode.DYNAMIC, 3, set(), None)
    topo = Topology.static(3, [(2, 0), (0, 2), (1, 2)])
    assert topo.edges == {(0, 2), (1, 2)}
    A = topo.adjacency
    assert (A == A.T).all() and not A.diagonal().any()
    assert topo.degree(2) == 2


def test_edge_event_is_canonical():
    with pytest.raises(InvalidArgument):
        EdgeEvent(0.0, (2, 1), EventKind.ADDED)
    assert canonical(3, 1) == (1, 3)


def test_update_edges_adds_then_flags_removals():
    topo = Topology.dynamic(3, 10.0, [(0, 0), (20, 0), (40, 0)])
    assert topo.edges == set()
    events = update_edges(topo, [(0, 0), (9, 0), (30, 0)], 7.0)
    assert events == [EdgeEvent(7.0, (0, 1), EventKind.ADDED)]
    events = update_edges(topo, [(0, 0), (10, 0), (30, 0)], 7.5)
    assert events == [EdgeEvent(7.5, (0, 1), EventKind.REMOVED_VIOLATION)]
    assert topo.edges == set()


def test_update_edges_requires_dynamic_mode():
    with pytest.raises(InvalidArgument):
        update_edges(Topology.static(2, [(0, 1)]), [(0, 0), (1, 0)], 0.0)


@pytest.mark.parametrize(
    "n, edges, expected",
    [
        (5, complete_edges(5), True),
        (5, [(0, 1), (2, 3)], False),
        (5, [(0, 1), (1, 2), (2, 3), (3, 4)], True),
        (1, [], True),
    ],
)
def test_is_connected_examples(n, edges, expected):
    assert is_connected(Topology.static(n, edges)) is expected


def closure_connected(n, edges):
    # Warshall transitive closure as an independent oracle
    R = np.eye(n, dtype=bool)
    for i, j in edges:
        R[i, j] = R[j, i] = True
    for k in range(n):
        R = R | (R[:, [k]] & R[[k], :])
    return bool(R.all())


@pytest.mark.parametrize("n", range(1, 7))
def test_is_connected_exhaustive(n):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        edges = [p for b, p in enumerate(pairs) if mask >> b & 1]
        assert is_connected(Topology.static(n, edges)) == closure_connected(n, edges)


gradients = st.lists(st.tuples(st.floats(-20, 20), st.floats(-20, 20)), min_size=2, max_size=8)


@given(gradients, st.floats(0.1, 30))
def test_neighbor_sets_symmetric(X, r):
    topo = Topology.dynamic(len(X), r)
    N = [neighbor_set(i, X, topo) for i in range(len(X))]
    for i, Ni in enumerate(N):
        assert i not in Ni
        for j in Ni:
            assert i in N[j]


@given(gradients, st.floats(0.1, 30))
def test_update_edges_matches_neighbor_sets(X, r):
    topo = Topology.dynamic(len(X), r)
    update_edges(topo, X, 0.0)
    assert topo.edges == in_range_edges(X, r)
    for i in range(len(X)):
        assert neighbor_set(i, X, topo) == {b if a == i else a for a, b in topo.edges if i in (a, b)}
