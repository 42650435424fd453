"""
testing_backbone module
===================
This module tests the functions and classes inside the
'expansion/backbone.py' module.
"""

import math

import numpy as np
import pytest

from ising_crossover.data_io import read_fixture_paths
from ising_crossover.expansion.backbone import (
    backbone_expansion_check, backbone_partition_check, check_property_a,
    check_property_b, check_slab_gks, check_splitting_bound, check_tanh_bound,
    enumerate_consistent_paths, rho, split_path, splitting_bound
)
from ising_crossover.expansion.currents import CurrentExpansion
from ising_crossover.expansion.spin_oracle import Couplings, couplings_weights
from ising_crossover.lattice import (
    EdgeGraph, SizeCapError, build_box, path_from_vertices
)
from ising_crossover.susceptibility.susceptibility_functions import strip_graph
from tests.testing_lattice import four_cycle, triangle_tail


def fixtures_by_name() -> dict:
    return {fixture.name: fixture for fixture in read_fixture_paths()}


def test_four_cycle_paths():
    """
    This function tests that C_01 on the 4-cycle holds the direct edge
    and the long way round, with weights t / (1 + t^4) and
    t^3 / (1 + t^4).
    """
    graph = four_cycle()
    weights = np.full(4, 0.4)
    t = math.tanh(0.4)
    paths = enumerate_consistent_paths(graph, graph.full_mask, 0, 1)
    assert [path.vertices for path in paths] == [(0, 1), (0, 3, 2, 1)]
    expansion = CurrentExpansion(graph, weights)
    values = [rho(graph, graph.full_mask, weights, p, expansion) for p in paths]
    assert np.isclose(values[0], t / (1 + t ** 4), rtol=1e-12)
    assert np.isclose(values[1], t ** 3 / (1 + t ** 4), rtol=1e-12)


def test_single_edge_rho():
    """
    This function tests that the only backbone of a single edge has
    weight tanh(J).
    """
    graph = EdgeGraph(2, [(0, 1)])
    path = path_from_vertices(graph, [0, 1])
    assert np.isclose(rho(graph, 1, [0.7], path), math.tanh(0.7), rtol=1e-12)
    report = backbone_expansion_check(graph, 1, [0.7], 0, 1)
    assert report.passed
    assert len(report.contributions) == 1


def test_enumeration_errors():
    """
    This function tests that equal end points, unknown vertices and too
    many paths are rejected.
    """
    graph = four_cycle()
    with pytest.raises(ValueError):
        enumerate_consistent_paths(graph, graph.full_mask, 2, 2)
    with pytest.raises(ValueError):
        enumerate_consistent_paths(graph, graph.full_mask, 0, 7)
    with pytest.raises(SizeCapError):
        enumerate_consistent_paths(graph, graph.full_mask, 0, 1, max_paths=1)


def test_paths_reach_y_once():
    """
    This function tests that every enumerated path on the 3×3 grid ends
    at y, visits y only there and is consistent.
    """
    grid = strip_graph(3, 3)
    paths = enumerate_consistent_paths(grid, grid.full_mask, 4, 0)
    assert paths
    for path in paths:
        assert path.end == 0
        assert 0 not in path.vertices[:-1]
        assert path_from_vertices(grid, path.vertices) == path


def expansion_instances():
    box = build_box(1, 1, 1)
    return [
        (four_cycle(), np.full(4, 0.4), 0, 2),
        (triangle_tail(), np.array([0.6, 0.3, 0.9, 0.45, 0.25]), 0, 4),
        (triangle_tail(), np.array([0.6, 0.3, 0.9, 0.45, 0.25]), 2, 3),
        (strip_graph(3, 3), np.full(12, 0.3), 0, 8),
        (box, couplings_weights(box, Couplings(0.3, 0.1)),
         box.center(), box.index_of((1, 1)))
    ]


@pytest.mark.parametrize("graph, weights, x, y", expansion_instances())
def test_backbone_expansion(graph, weights, x, y):
    """
    This function tests that the backbone weights sum to the two-point
    function of the spin oracle.
    """
    report = backbone_expansion_check(graph, graph.full_mask, weights, x, y)
    assert report.passed
    assert report.relative_error <= 1e-10


@pytest.mark.parametrize("graph, weights, x, y", expansion_instances())
def test_backbone_partition(graph, weights, x, y):
    """
    This function tests that grouping the sourced parity classes by their
    backbone gives back ρ for every backbone and the full sourced sum.
    """
    report = backbone_partition_check(graph, graph.full_mask, weights, x, y)
    assert report.passed
    assert report.backbones_enumerated
    assert report.n_backbones <= report.n_classes


def test_partition_without_vertical_coupling():
    """
    This function tests the backbone partition on the (1+1) box at
    J_s = 0: across slabs every class weighs zero, inside a slab the
    backbones through vertical edges carry zero weight.
    """
    box = build_box(1, 1, 1)
    weights = couplings_weights(box, Couplings(0.3, 0.0))
    expansion = CurrentExpansion(box, weights)
    across = backbone_partition_check(
        box, box.full_mask, weights, box.index_of((-1, -1)),
        box.index_of((1, 1)), expansion
    )
    assert across.passed
    assert across.sourced_total == 0.0
    inside = backbone_partition_check(
        box, box.full_mask, weights, box.index_of((-1, 0)),
        box.index_of((1, 0)), expansion
    )
    assert inside.passed
    assert np.isclose(inside.sourced_total / expansion.partition(box.full_mask),
                      math.tanh(0.3) ** 2, rtol=1e-10)


def test_triangle_partition_counts():
    """
    This function tests that the triangle with a tail has two sourced
    classes between 0 and 4, with two distinct backbones.
    """
    graph = triangle_tail()
    report = backbone_partition_check(
        graph, graph.full_mask, [0.6, 0.3, 0.9, 0.45, 0.25], 0, 4
    )
    assert report.n_classes == 2
    assert report.n_backbones == 2


def test_property_a():
    """
    This function tests that ρ does not increase when the edge set grows,
    and that the containments are enforced.
    """
    graph = four_cycle()
    weights = np.full(4, 0.4)
    path = path_from_vertices(graph, [0, 1])
    assert check_property_a(graph, 0b0001, graph.full_mask, weights, path)
    assert check_property_a(graph, 0b0011, 0b1011, weights, path)
    with pytest.raises(ValueError):
        check_property_a(graph, 0b0011, 0b0001, weights, path)
    with pytest.raises(ValueError):
        check_property_a(graph, 0b0010, graph.full_mask, weights, path)


def test_property_b():
    """
    This function tests the factorization of ρ along a concatenation,
    here through the revisited vertex of the triangle with a tail.
    """
    graph = triangle_tail()
    weights = np.array([0.6, 0.3, 0.9, 0.45, 0.25])
    first = path_from_vertices(graph, [0, 1])
    second = path_from_vertices(graph, [1, 2, 3, 1, 4])
    expansion = CurrentExpansion(graph, weights)
    assert check_property_b(graph, graph.full_mask, weights, first, second, expansion)
    first = path_from_vertices(graph, [0, 1, 2])
    second = path_from_vertices(graph, [2, 3, 1, 4])
    assert check_property_b(graph, graph.full_mask, weights, first, second, expansion)


def test_tanh_bound_on_grid():
    """
    This function tests that ρ never exceeds the product of tanh over
    the path.
    """
    grid = strip_graph(3, 3)
    weights = np.full(12, 0.8)
    expansion = CurrentExpansion(grid, weights)
    for path in enumerate_consistent_paths(grid, grid.full_mask, 0, 5):
        assert check_tanh_bound(grid, grid.full_mask, weights, path, expansion)


def test_rho_rejects_foreign_paths():
    """
    This function tests that a path outside the edge set and a cached
    expansion of another graph are rejected.
    """
    graph = four_cycle()
    weights = np.full(4, 0.4)
    path = path_from_vertices(graph, [0, 3, 2, 1])
    with pytest.raises(ValueError):
        rho(graph, 0b0001, weights, path)
    with pytest.raises(ValueError):
        rho(graph, graph.full_mask, weights, path, CurrentExpansion(four_cycle(), weights))


def test_split_fixtures():
    """
    This function tests that splitting every fixture path gives the
    expected number of vertical steps, planar pieces each inside one slab
    and the original vertex sequence once the pieces are joined.
    """
    for fixture in read_fixture_paths():
        split = split_path(fixture.path, fixture.box)
        assert split.n == fixture.n_vertical, fixture.name
        assert len(split.pieces) == split.n + 1
        assert split.vertices() == fixture.path.vertices
        for piece, t in zip(split.pieces, split.anchors_t):
            for v in piece.vertices:
                assert fixture.box.vertical_coordinate(v) == t


def test_split_three_slabs():
    """
    This function tests the anchors and offsets of a path climbing
    through the three slabs of the (1+1) box.
    """
    fixture = fixtures_by_name()["three_slabs"]
    split = split_path(fixture.path, fixture.box)
    assert split.anchors_t == ((-1,), (0,), (1,))
    assert split.anchors_u == ((-1,), (-1,), (0,), (1,))
    assert split.offsets == ((1,), (1,))
    assert split.piece_starts == (0, 1, 3)
    assert [piece.length for piece in split.pieces] == [0, 1, 1]


def test_split_needs_vertical_dimension():
    """
    This function tests that a box without vertical dimension cannot be
    split.
    """
    box = build_box(1, 0, 1)
    path = path_from_vertices(box, [0, 1])
    with pytest.raises(ValueError):
        split_path(path, box)


def test_splitting_bound_values():
    """
    This function tests the bound on two simple paths: a single vertical
    step gives tanh(J_s) and a planar path across a slab gives
    tanh(J_d)^2.
    """
    fixtures = fixtures_by_name()
    box = fixtures["vertical"].box
    couplings = Couplings(0.4, 0.2)
    weights = couplings_weights(box, couplings)
    expansion = CurrentExpansion(box, weights)
    assert np.isclose(
        splitting_bound(box, box.full_mask, weights, fixtures["vertical"].path, expansion),
        math.tanh(0.2), rtol=1e-12
    )
    assert np.isclose(
        splitting_bound(box, box.full_mask, weights, fixtures["planar"].path, expansion),
        math.tanh(0.4) ** 2, rtol=1e-12
    )


def test_splitting_bound_holds():
    """
    This function tests the slab-by-slab bound on the planar fixtures of
    the (1+1) box and on every path from the center to a corner.
    """
    box = build_box(1, 1, 1)
    weights = couplings_weights(box, Couplings(0.4, 0.2))
    expansion = CurrentExpansion(box, weights)
    paths = [f.path for f in read_fixture_paths() if f.box.d == 1]
    paths += enumerate_consistent_paths(
        box, box.full_mask, box.center(), box.index_of((1, 1))
    )
    for path in paths:
        assert check_splitting_bound(box, box.full_mask, weights, path, expansion)


def test_splitting_bound_random_weights():
    """
    This function tests the slab-by-slab bound on (1+1) boxes whose edge
    weights are drawn log-uniformly in [0.05, 1.5], for every path
    leaving the center.
    """
    rng = np.random.default_rng(2024)
    box = build_box(1, 1, 1)
    for _ in range(10):
        weights = np.exp(rng.uniform(math.log(0.05), math.log(1.5), box.num_edges))
        expansion = CurrentExpansion(box, weights)
        for y in range(box.n_vertices):
            if y == box.center():
                continue
            for path in enumerate_consistent_paths(
                box, box.full_mask, box.center(), y
            ):
                assert check_splitting_bound(
                    box, box.full_mask, weights, path, expansion
                )


def test_slab_gks():
    """
    This function tests that removing edges of a slab does not increase
    a correlation inside it, and that the end points must share a slab.
    """
    box = build_box(1, 1, 1)
    weights = couplings_weights(box, Couplings(0.4, 0.2))
    x = box.index_of((-1, 0))
    y = box.index_of((1, 0))
    removed = 1 << box.edge_between(box.index_of((0, 0)), y)
    assert check_slab_gks(box, removed, weights, x, y)
    assert check_slab_gks(box, 0, weights, x, y)
    with pytest.raises(ValueError):
        check_slab_gks(box, 0, weights, x, box.index_of((1, 1)))
