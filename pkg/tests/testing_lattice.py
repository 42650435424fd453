"""
testing_lattice module
===================
This module tests the functions and classes inside the 'lattice.py'
module.
"""

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ising_crossover.lattice import (
    PLANAR, VERTICAL, EdgeGraph, Step, build_box, cancelled_set,
    concatenate_paths, indices_of, mask_from_indices, path_from_vertices,
    popcount, random_graph, slab_of
)


def four_cycle() -> EdgeGraph:
    return EdgeGraph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])


def triangle_tail() -> EdgeGraph:
    """
    Path 0-1 with a triangle 1-2-3 and a pendant edge 1-4.
    """
    return EdgeGraph(5, [(0, 1), (1, 2), (2, 3), (1, 3), (1, 4)])


def test_bitset_helpers():
    """
    This function tests that bit vectors are built from and decoded to
    the same sorted index list.
    """
    mask = mask_from_indices([5, 0, 3])
    assert mask == 0b101001
    assert indices_of(mask) == [0, 3, 5]
    assert popcount(mask) == 3
    assert indices_of(0) == []


def test_box_sizes():
    """
    This function tests the vertex and edge counts of small boxes and
    their planar/vertical classification.

    The (1+1) box with N = 1 has 9 vertices and 12 edges, half planar
    and half vertical; the (2+1) box has 27 vertices and 54 edges.
    """
    box = build_box(1, 1, 1)
    assert box.n_vertices == 9
    assert box.num_edges == 12
    assert box.edge_classes.count(PLANAR) == 6
    assert box.edge_classes.count(VERTICAL) == 6

    box = build_box(2, 1, 1)
    assert box.n_vertices == 27
    assert box.num_edges == 54
    assert box.edge_classes.count(VERTICAL) == 18


def test_box_validation():
    """
    This function tests that invalid box parameters are rejected and
    that a box beyond the edge cap is built with a warning.
    """
    with pytest.raises(TypeError):
        build_box(1.0, 1, 1)
    with pytest.raises(ValueError):
        build_box(-1, 1, 1)
    with pytest.raises(ValueError):
        build_box(0, 0, 1)
    with pytest.warns(UserWarning):
        box = build_box(2, 1, 2)
    assert box.num_edges == 300


def test_step_order_at_center():
    """
    This function tests that the steps out of a vertex follow the order
    +e_1, -e_1, +f_1, -f_1.
    """
    box = build_box(1, 1, 1)
    center = box.center()
    assert box.coords(center) == (0, 0)
    heads = [box.coords(head) for _, head in box.incident_steps(center)]
    assert heads == [(1, 0), (-1, 0), (0, 1), (0, -1)]


def test_cancelled_set():
    """
    This function tests that a step cancels its own edge and every edge
    of the earlier steps at its tail.

    At the center of the (1+1) box the step +f_1 comes third, so it
    cancels the two planar edges and itself.
    """
    box = build_box(1, 1, 1)
    center = box.center()
    up = box.index_of((0, 1))
    cancelled = cancelled_set(box, Step(center, up))
    assert popcount(cancelled) == 3
    assert cancelled >> box.edge_between(center, up) & 1
    assert cancelled >> box.edge_between(center, box.index_of((1, 0))) & 1
    assert not cancelled >> box.edge_between(center, box.index_of((0, -1))) & 1
    with pytest.raises(ValueError):
        cancelled_set(box, Step(center, box.index_of((1, 1))))


def test_slab_of():
    """
    This function tests the vertex and planar edge sets of a slab and
    the validation of its vertical coordinate.
    """
    box = build_box(1, 1, 1)
    slab = slab_of(box, 0)
    assert len(slab.vertex_indices) == 3
    assert popcount(slab.edge_mask) == 2
    assert slab_of(box, (0,)).edge_mask == slab.edge_mask
    for e in indices_of(slab.edge_mask):
        assert box.edge_classes[e] == PLANAR
    with pytest.raises(ValueError):
        slab_of(box, 2)
    with pytest.raises(ValueError):
        slab_of(box, (0, 0))


def test_consistent_path_with_revisit():
    """
    This function tests that a path may revisit a vertex as long as it
    never uses a cancelled edge.

    On the triangle with a tail, 0-1-2-3-1-4 is consistent while
    0-1-3-2-1-4 is not: leaving 1 towards 3 cancels the edge {1, 2}.
    """
    graph = triangle_tail()
    path = path_from_vertices(graph, [0, 1, 2, 3, 1, 4])
    assert path.length == 5
    assert path.start == 0 and path.end == 4
    assert path.cancelled == graph.full_mask
    with pytest.raises(ValueError):
        path_from_vertices(graph, [0, 1, 3, 2, 1, 4])


def test_inconsistent_and_invalid_paths():
    """
    This function tests that backtracking along an edge and jumping
    between non adjacent vertices are rejected.
    """
    graph = four_cycle()
    with pytest.raises(ValueError):
        path_from_vertices(graph, [0, 1, 0])
    with pytest.raises(ValueError):
        path_from_vertices(graph, [0, 2])
    with pytest.raises(ValueError):
        path_from_vertices(graph, [])
    assert path_from_vertices(graph, [2]).length == 0


def test_concatenate_paths():
    """
    This function tests that concatenation joins the vertex sequences
    and requires matching end points.
    """
    graph = four_cycle()
    first = path_from_vertices(graph, [0, 3])
    second = path_from_vertices(graph, [3, 2, 1])
    whole = concatenate_paths(graph, first, second)
    assert whole.vertices == (0, 3, 2, 1)
    assert whole.cancelled == first.cancelled | second.cancelled
    with pytest.raises(ValueError):
        concatenate_paths(graph, second, first)


def test_edge_graph_validation():
    """
    This function tests that loops and out of range endpoints are
    rejected.
    """
    with pytest.raises(ValueError):
        EdgeGraph(3, [(1, 1)])
    with pytest.raises(ValueError):
        EdgeGraph(3, [(0, 3)])
    with pytest.raises(ValueError):
        EdgeGraph(0, [])
    with pytest.raises(ValueError):
        build_box(1, 1, 1).index_of((2, 0))


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(min_value=2, max_value=9),
    extra=st.integers(min_value=0, max_value=12),
    seed=st.integers(min_value=0, max_value=2**32 - 1)
)
def test_random_graph_connected(n, extra, seed):
    """
    This function tests that random graphs are connected, simple and
    have the requested number of edges.
    """
    n_edges = min(n - 1 + extra, n * (n - 1) // 2)
    graph = random_graph(np.random.default_rng(seed), n, n_edges)
    assert graph.num_edges == n_edges
    assert len(set(graph.edges)) == n_edges
    reference = nx.Graph(list(graph.edges))
    reference.add_nodes_from(range(n))
    assert nx.is_connected(reference)
