"""
spin_oracle module
===================
This module computes partition functions and correlation functions by
direct summation over all spin configurations.

It is the ground truth against which every expansion of the package is
checked. For a vertex set V and an edge set E the partition function is
taken with the normalized product measure,

    Z = 2^(-|V|) Σ_σ Π_{b={x,y} ∈ E} exp(J_b σ_x σ_y),

at inverse temperature 1. Configurations are integers whose bits are the
spins; they are summed chunk by chunk in a fixed order, so repeated
calls give bit-identical results.
"""

import math
from dataclasses import dataclass

import numpy as np

from ising_crossover.lattice import (
    PLANAR, BoxGeometry, EdgeGraph, SizeCapError, indices_of
)

MAX_SPINS = 24
CHUNK_BITS = 14


@dataclass(frozen=True)
class Couplings:
    """
    Planar coupling `J_d` and vertical coupling `J_s`.

    Zero is admitted for either coupling as a degenerate test value
    (J_s = 0 decouples the slabs).
    """
    J_d: float
    J_s: float

    def __post_init__(self):
        for name in ("J_d", "J_s"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(
                    f"Coupling {name} must be a finite non-negative "
                    f"number, got {value}."
                )


def couplings_weights(graph: EdgeGraph, couplings: Couplings) -> np.ndarray:
    """
    Per-edge coupling J_b: `J_d` on planar edges, `J_s` on vertical ones.
    """
    return np.array([
        couplings.J_d if edge_class == PLANAR else couplings.J_s
        for edge_class in graph.edge_classes
    ], dtype=float)


def check_weights(graph: EdgeGraph, weights) -> np.ndarray:
    """
    Validates an edge weight assignment and returns it as a float array.

    Raises
    ------
    ValueError
        If the array has the wrong length or contains negative or
        non-finite values.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (graph.num_edges,):
        raise ValueError(
            f"Expected {graph.num_edges} edge weights, got shape "
            f"{weights.shape}."
        )
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise ValueError("Edge weights must be finite and non-negative.")
    return weights


def _spin_sums(
    graph: EdgeGraph,
    edges: int,
    weights,
    vertices,
    max_spins: int,
    pair=None,
    matrix: bool = False
):
    weights = check_weights(graph, weights)
    if vertices is None:
        vertices = range(graph.n_vertices)
    vertices = sorted(set(int(v) for v in vertices))
    n = len(vertices)
    if n > max_spins:
        raise SizeCapError("number of spins", n, max_spins)
    position = {v: k for k, v in enumerate(vertices)}

    edge_ids = indices_of(edges)
    for e in edge_ids:
        a, b = graph.edges[e]
        if a not in position or b not in position:
            raise ValueError(
                f"Edge {graph.edges[e]} has an endpoint outside the "
                "summed vertex set."
            )
    left = np.array([position[graph.edges[e][0]] for e in edge_ids], dtype=int)
    right = np.array([position[graph.edges[e][1]] for e in edge_ids], dtype=int)
    couplings = weights[edge_ids]
    shift = float(np.sum(couplings))

    if pair is not None:
        px, py = position[pair[0]], position[pair[1]]
    bit_shifts = np.arange(n, dtype=np.int64)
    chunk = 1 << min(n, CHUNK_BITS)
    total = 0.0
    pair_total = 0.0
    correlations = np.zeros((n, n))
    for start in range(0, 1 << n, chunk):
        configurations = np.arange(start, start + chunk, dtype=np.int64)
        spins = 1.0 - 2.0 * ((configurations[:, None] >> bit_shifts) & 1)
        energy = (spins[:, left] * spins[:, right]) @ couplings
        boltzmann = np.exp(energy - shift)
        total += boltzmann.sum()
        if pair is not None:
            pair_total += np.sum(spins[:, px] * spins[:, py] * boltzmann)
        if matrix:
            correlations += spins.T @ (spins * boltzmann[:, None])

    log_z = shift + math.log(total) - n * math.log(2.0)
    return vertices, log_z, pair_total / total, correlations / total


def partition_spin(
    graph: EdgeGraph,
    edges: int,
    weights,
    vertices=None,
    max_spins: int = MAX_SPINS
) -> float:
    """
    Partition function Z_U by summation over all spin configurations.

    Parameters
    ----------
    graph: EdgeGraph
        Graph owning the edge and vertex indices.
    edges: int
        Bit vector of the coupled edges.
    weights: array_like
        Coupling J_b of every edge of `graph`.
    vertices: iterable of int, optional
        Summed vertex set U; all vertices of `graph` by default. Vertices
        touched by no edge contribute a factor 1.
    max_spins: int
        Hard cap on |U|.

    Returns
    -------
    float
        2^(-|U|) Σ_σ Π_b exp(J_b σ_x σ_y), strictly positive.

    Raises
    ------
    SizeCapError
        If |U| exceeds `max_spins`.
    ValueError
        If an edge leaves U or the weights are invalid.
    """
    _, log_z, _, _ = _spin_sums(graph, edges, weights, vertices, max_spins)
    return math.exp(log_z)


def two_point_spin(
    graph: EdgeGraph,
    edges: int,
    weights,
    x: int,
    y: int,
    vertices=None,
    max_spins: int = MAX_SPINS
) -> float:
    """
    Two-point function ⟨σ_x σ_y⟩ by summation over spin configurations.

    Returns 1 when x = y. Arguments are as in `partition_spin`; `x` and
    `y` must belong to the summed vertex set.

    Raises
    ------
    ValueError
        If `x` or `y` is not summed.
    """
    if vertices is not None and not {x, y} <= set(int(v) for v in vertices):
        raise ValueError(f"Vertices {x} and {y} must belong to the summed set.")
    if not (0 <= x < graph.n_vertices and 0 <= y < graph.n_vertices):
        raise ValueError(f"Vertices {x} and {y} must belong to the graph.")
    if x == y:
        return 1.0
    _, _, value, _ = _spin_sums(
        graph, edges, weights, vertices, max_spins, pair=(x, y)
    )
    return float(value)


def two_point_matrix_spin(
    graph: EdgeGraph,
    edges: int,
    weights,
    vertices=None,
    max_spins: int = MAX_SPINS
) -> tuple:
    """
    All two-point functions of the summed vertex set in a single pass.

    Returns
    -------
    tuple of (list, ndarray)
        The sorted vertex list and the matrix of ⟨σ_x σ_y⟩ in that order.
    """
    vertices, _, _, correlations = _spin_sums(
        graph, edges, weights, vertices, max_spins, matrix=True
    )
    return vertices, correlations


def susceptibility_finite_spin(
    box: BoxGeometry,
    couplings: Couplings,
    max_spins: int = MAX_SPINS
) -> float:
    """
    Finite-volume susceptibility χ_ΛN(J_d, J_s) from the spin oracle.

    The supremum over x of Σ_y ⟨σ_x σ_y⟩ is taken over every vertex of
    the box, since the free boundary breaks translation invariance.
    """
    _, correlations = two_point_matrix_spin(
        box, box.full_mask, couplings_weights(box, couplings),
        max_spins=max_spins
    )
    return float(np.max(correlations.sum(axis=1)))
