"""
backbone module
===================
This module implements the consistent-path (backbone) side of the
random-current representation.

It enumerates the consistent paths C_xy, evaluates their weights

    ρ_E(ω) = Π_{b∈ω} tanh(J_b) × (weight of sourceless currents even on ω*) / Z_E,

checks the backbone expansion ⟨σ_x σ_y⟩_E = Σ_{ω∈C_xy} ρ_E(ω) against the
spin oracle, checks the monotonicity (property a), factorization
(property b) and tanh bounds on ρ, and splits a path of a box into planar
pieces joined by vertical steps to check the slab-by-slab bound used for
the susceptibility.

C_xy contains the consistent paths from x to y that reach y only at their
last vertex, which are exactly the values taken by the backbone map.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ising_crossover.expansion.currents import (
    CurrentExpansion, ParityConfig, backbone_map
)
from ising_crossover.expansion.spin_oracle import two_point_spin
from ising_crossover.lattice import (
    VERTICAL, BoxGeometry, ConsistentPath, EdgeGraph, SizeCapError, Step,
    concatenate_paths, path_from_vertices, popcount, slab_of
)

MAX_PATHS = 200_000
RELATIVE_TOLERANCE = 1e-10
ABSOLUTE_SLACK = 1e-12


def enumerate_consistent_paths(
    graph: EdgeGraph,
    edges: int,
    x: int,
    y: int,
    max_len: int = None,
    max_paths: int = MAX_PATHS
) -> list:
    """
    Enumerates C_xy, the consistent paths from x to y inside `edges`.

    The search is depth first, trying steps in the step order of each
    vertex, and a branch is closed as soon as it reaches y. Since
    consistent paths never repeat an edge, `max_len = |edges|` makes the
    enumeration exhaustive.

    Parameters
    ----------
    graph: EdgeGraph
        Graph carrying the step order.
    edges: int
        Bit vector of the usable edges.
    x, y: int
        Distinct end points.
    max_len: int, optional
        Maximal number of steps; |edges| by default.
    max_paths: int
        Cap on the number of returned paths.

    Returns
    -------
    list of ConsistentPath
        Paths in depth-first order.

    Raises
    ------
    ValueError
        If x = y or an end point is not a vertex of the graph.
    SizeCapError
        If more than `max_paths` paths exist.
    """
    if x == y:
        raise ValueError("C_xy is only enumerated for x != y.")
    for v in (x, y):
        if not 0 <= v < graph.n_vertices:
            raise ValueError(f"Vertex {v} is not in the graph.")
    if max_len is None:
        max_len = popcount(edges)

    paths = []
    vertices = [x]
    steps = []

    def extend(cancelled: int) -> None:
        if len(steps) == max_len:
            return
        current = vertices[-1]
        for edge, head in graph.incident_steps(current):
            if not edges >> edge & 1 or cancelled >> edge & 1:
                continue
            extended = cancelled | graph.cancelled(current, edge)
            vertices.append(head)
            steps.append(edge)
            if head == y:
                paths.append(
                    ConsistentPath(tuple(vertices), tuple(steps), extended)
                )
                if len(paths) > max_paths:
                    raise SizeCapError(
                        "number of consistent paths", len(paths), max_paths
                    )
            else:
                extend(extended)
            vertices.pop()
            steps.pop()

    extend(0)
    return paths


def _expansion(graph, weights, expansion):
    if expansion is None:
        return CurrentExpansion(graph, weights)
    if expansion.graph is not graph:
        raise ValueError("The cached expansion belongs to another graph.")
    return expansion


def _check_path(graph: EdgeGraph, edges: int, path: ConsistentPath) -> None:
    if path.edge_mask & ~edges:
        raise ValueError(
            f"Path {path.vertices} uses edges outside the given edge set."
        )
    rebuilt = path_from_vertices(graph, path.vertices)
    if rebuilt.cancelled != path.cancelled or rebuilt.edges != path.edges:
        raise ValueError(f"Path record {path.vertices} is corrupted.")


def rho(
    graph: EdgeGraph,
    edges: int,
    weights,
    path: ConsistentPath,
    expansion: CurrentExpansion = None
) -> float:
    """
    Backbone weight ρ_E(ω) of a consistent path.

    Parameters
    ----------
    graph: EdgeGraph
        Graph carrying the step order.
    edges: int
        Edge set E.
    weights: array_like
        Coupling of every edge of `graph`.
    path: ConsistentPath
        ω, contained in E.
    expansion: CurrentExpansion, optional
        Cached expansion of the same graph and weights.

    Returns
    -------
    float
        Π_{b∈ω} tanh(J_b) × constrained_sourceless_ratio(E, ω* ∩ E).

    Raises
    ------
    ValueError
        If the path leaves E or is not consistent.
    """
    expansion = _expansion(graph, weights, expansion)
    _check_path(graph, edges, path)
    tanh_product = float(np.prod(np.tanh(expansion.weights[list(path.edges)])))
    if tanh_product == 0.0:
        return 0.0
    return tanh_product * expansion.constrained_sourceless_ratio(
        edges, path.cancelled & edges
    )


@dataclass
class ExpansionReport:
    """
    Outcome of one backbone expansion check for the pair (x, y).
    """
    x: int
    y: int
    lhs: float
    rhs: float
    contributions: list = field(default_factory=list)
    passed: bool = False

    @property
    def relative_error(self) -> float:
        if self.rhs == 0.0:
            return abs(self.lhs)
        return abs(self.lhs - self.rhs) / self.rhs


def backbone_expansion_check(
    graph: EdgeGraph,
    edges: int,
    weights,
    x: int,
    y: int,
    expansion: CurrentExpansion = None,
    max_paths: int = MAX_PATHS,
    tolerance: float = RELATIVE_TOLERANCE
) -> ExpansionReport:
    """
    Compares Σ_{ω∈C_xy} ρ_E(ω) with the spin-oracle value of ⟨σ_x σ_y⟩_E.

    Returns
    -------
    ExpansionReport
        Both sides, the per-path contributions (vertex sequence, ρ) and
        the verdict at relative tolerance `tolerance`.
    """
    expansion = _expansion(graph, weights, expansion)
    contributions = [
        (path.vertices, rho(graph, edges, weights, path, expansion))
        for path in enumerate_consistent_paths(
            graph, edges, x, y, max_paths=max_paths
        )
    ]
    lhs = math.fsum(value for _, value in contributions)
    summed = set(graph.mask_vertices(edges)) | {x, y}
    rhs = two_point_spin(graph, edges, expansion.weights, x, y, vertices=summed)
    report = ExpansionReport(x, y, lhs, rhs, contributions)
    report.passed = abs(lhs - rhs) <= tolerance * rhs + ABSOLUTE_SLACK
    return report


def check_property_a(
    graph: EdgeGraph,
    edges_u: int,
    edges_e: int,
    weights,
    path: ConsistentPath,
    expansion: CurrentExpansion = None
) -> bool:
    """
    Checks ρ_E(ω) ≤ ρ_U(ω) for ω ⊂ U ⊂ E.

    Raises
    ------
    ValueError
        If the containments ω ⊂ U ⊂ E fail.
    """
    if edges_u & ~edges_e:
        raise ValueError("U must be contained in E.")
    if path.edge_mask & ~edges_u:
        raise ValueError("The path must be contained in U.")
    expansion = _expansion(graph, weights, expansion)
    return (
        rho(graph, edges_e, weights, path, expansion)
        <= rho(graph, edges_u, weights, path, expansion) + ABSOLUTE_SLACK
    )


def check_property_b(
    graph: EdgeGraph,
    edges: int,
    weights,
    first: ConsistentPath,
    second: ConsistentPath,
    expansion: CurrentExpansion = None
) -> bool:
    """
    Checks ρ_E(ω_1 ∘ ω_2) = ρ_E(ω_1) ρ_{E∖ω_1*}(ω_2).

    Raises
    ------
    ValueError
        If ω_1 ∘ ω_2 is not a consistent path inside E.
    """
    expansion = _expansion(graph, weights, expansion)
    whole = concatenate_paths(graph, first, second)
    lhs = rho(graph, edges, weights, whole, expansion)
    rhs = (
        rho(graph, edges, weights, first, expansion)
        * rho(graph, edges & ~first.cancelled, weights, second, expansion)
    )
    return math.isclose(
        lhs, rhs, rel_tol=RELATIVE_TOLERANCE, abs_tol=ABSOLUTE_SLACK
    )


def check_tanh_bound(
    graph: EdgeGraph,
    edges: int,
    weights,
    path: ConsistentPath,
    expansion: CurrentExpansion = None
) -> bool:
    """
    Checks ρ_E(ω) ≤ Π_{b∈ω} tanh(J_b).
    """
    expansion = _expansion(graph, weights, expansion)
    bound = float(np.prod(np.tanh(expansion.weights[list(path.edges)])))
    return rho(graph, edges, weights, path, expansion) <= bound + ABSOLUTE_SLACK


@dataclass(frozen=True)
class PathSplit:
    """
    Decomposition ω = ω_1 ∘ s_1 ∘ ω_2 ∘ ... ∘ s_n ∘ ω_{n+1}.

    Attributes
    ----------
    pieces: tuple of ConsistentPath
        Planar pieces ω_1 ... ω_{n+1}, each inside one slab; a piece may
        have zero length.
    vertical_steps: tuple of Step
        s_1 ... s_n.
    offsets: tuple of tuple of int
        Unit vertical displacement of each s_k.
    anchors_u: tuple
        u_0 ... u_{n+1}: planar coordinates of the start of ω and of the
        end of each piece.
    anchors_t: tuple
        t_0 ... t_n: vertical coordinate of the slab of each piece.
    piece_starts: tuple of int
        Position, in the vertex sequence of ω, of the first vertex of
        each piece.
    """
    pieces: tuple
    vertical_steps: tuple
    offsets: tuple
    anchors_u: tuple
    anchors_t: tuple
    piece_starts: tuple

    @property
    def n(self) -> int:
        return len(self.vertical_steps)

    def vertices(self) -> tuple:
        """
        Vertex sequence of the re-concatenated path.
        """
        sequence = ()
        for piece in self.pieces:
            sequence += piece.vertices
        return sequence


def split_path(path: ConsistentPath, box: BoxGeometry) -> PathSplit:
    """
    Splits a path of a (d+s) box into maximal planar pieces and vertical
    steps.

    Each piece ends at the last vertex of its slab visited before the
    next vertical step.

    Raises
    ------
    ValueError
        If the box has no vertical dimension.
    """
    if box.s < 1:
        raise ValueError("Splitting needs a box with s >= 1.")
    piece_vertices = [[path.vertices[0]]]
    piece_starts = [0]
    steps = []
    offsets = []
    for k, edge in enumerate(path.edges):
        tail, head = path.vertices[k], path.vertices[k + 1]
        if box.edge_classes[edge] == VERTICAL:
            steps.append(Step(tail, head))
            offsets.append(tuple(
                int(c) for c in np.subtract(
                    box.vertical_coordinate(head), box.vertical_coordinate(tail)
                )
            ))
            piece_vertices.append([head])
            piece_starts.append(k + 1)
        else:
            piece_vertices[-1].append(head)

    pieces = tuple(path_from_vertices(box, vs) for vs in piece_vertices)
    anchors_u = (box.planar_coordinate(path.start),) + tuple(
        box.planar_coordinate(piece.end) for piece in pieces
    )
    anchors_t = tuple(box.vertical_coordinate(piece.start) for piece in pieces)
    return PathSplit(
        pieces, tuple(steps), tuple(offsets), anchors_u, anchors_t,
        tuple(piece_starts)
    )


def splitting_bound(
    box: BoxGeometry,
    edges: int,
    weights,
    path: ConsistentPath,
    expansion: CurrentExpansion = None,
    split: PathSplit = None
) -> float:
    """
    Right-hand side Π_k tanh(J_{s_k}) Π_k ρ_{E^{t_{k-1}} ∖ F_k*}(ω_k).

    F_k* is the set of edges cancelled by the part of ω preceding the
    piece ω_k, and E^{t} the planar edges of the slab t inside `edges`.
    Under class couplings the vertical factor is tanh(J_s)^n.
    """
    expansion = _expansion(box, weights, expansion)
    if split is None:
        split = split_path(path, box)
    bound = 1.0
    for step in split.vertical_steps:
        bound *= math.tanh(expansion.weights[box.edge_between(step.tail, step.head)])
    for piece, start, t in zip(split.pieces, split.piece_starts, split.anchors_t):
        prefix = path_from_vertices(box, path.vertices[:start + 1]).cancelled
        region = slab_of(box, t).edge_mask & edges & ~prefix
        bound *= rho(box, region, weights, piece, expansion)
    return bound


def check_splitting_bound(
    box: BoxGeometry,
    edges: int,
    weights,
    path: ConsistentPath,
    expansion: CurrentExpansion = None
) -> bool:
    """
    Checks ρ_E(ω) ≤ tanh(J_s)^n Π_k ρ_{E^{t_{k-1}} ∖ F_k*}(ω_k).
    """
    expansion = _expansion(box, weights, expansion)
    lhs = rho(box, edges, weights, path, expansion)
    return lhs <= splitting_bound(box, edges, weights, path, expansion) + ABSOLUTE_SLACK


def check_slab_gks(
    box: BoxGeometry,
    removed: int,
    weights,
    x: int,
    y: int,
    expansion: CurrentExpansion = None
) -> bool:
    """
    Checks ⟨σ_x σ_y⟩ on a slab minus `removed` ≤ ⟨σ_x σ_y⟩ on the full slab.

    Raises
    ------
    ValueError
        If x and y lie in different slabs.
    """
    if box.vertical_coordinate(x) != box.vertical_coordinate(y):
        raise ValueError("x and y must lie in the same slab.")
    expansion = _expansion(box, weights, expansion)
    slab = slab_of(box, box.vertical_coordinate(x))
    restricted = expansion.two_point(slab.edge_mask & ~removed, x, y)
    return restricted <= expansion.two_point(slab.edge_mask, x, y) + ABSOLUTE_SLACK


@dataclass
class PartitionReport:
    """
    Outcome of grouping the sourced parity classes by their backbone.
    """
    n_classes: int
    n_backbones: int
    sourced_total: float
    grouped_total: float
    max_group_error: float
    backbones_enumerated: bool
    passed: bool


def backbone_partition_check(
    graph: EdgeGraph,
    edges: int,
    weights,
    x: int,
    y: int,
    expansion: CurrentExpansion = None,
    tolerance: float = RELATIVE_TOLERANCE
) -> PartitionReport:
    """
    Groups all parity classes with sources {x, y} by their backbone.

    For every backbone ω the summed class weights divided by Z must equal
    ρ_E(ω), every backbone must belong to the enumerated C_xy, and the
    grouped total must reproduce the sourced sum.
    """
    expansion = _expansion(graph, weights, expansion)
    groups = {}
    for odd in expansion.sourced_classes(edges, x, y):
        omega = backbone_map(graph, ParityConfig(odd, edges), x, y)
        groups.setdefault(omega, []).append(expansion.odd_weight(edges, odd))

    z = expansion.partition(edges)
    enumerated = set(enumerate_consistent_paths(graph, edges, x, y))
    max_error = 0.0
    grouped_total = 0.0
    for omega, values in groups.items():
        group = math.fsum(values)
        grouped_total += group
        expected = rho(graph, edges, weights, omega, expansion)
        if expected == 0.0:
            # zero-coupling edges on ω: the whole group must vanish
            error = abs(group / z)
        else:
            error = abs(group / z - expected) / expected
        max_error = max(max_error, error)
    sourced_total = expansion.sourced_sum(edges, x, y)
    total_ok = math.isclose(grouped_total, sourced_total, rel_tol=tolerance)
    in_enumeration = set(groups) <= enumerated
    return PartitionReport(
        sum(len(values) for values in groups.values()), len(groups),
        sourced_total, grouped_total, max_error, in_enumeration,
        total_ok and in_enumeration and max_error <= tolerance
    )
