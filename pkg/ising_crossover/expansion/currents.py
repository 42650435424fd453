"""
currents module
===================
This module computes the random-current representation exactly, by
parity classes.

Summing the current weights W(η) = Π_b J_b^η_b / η_b! over all integer
currents with a given set of odd edges Γ gives Π_{b∈Γ} sinh(J_b)
Π_{b∉Γ} cosh(J_b). Sourceless currents therefore reduce to even
subgraphs (the cycle space of the edge set) and currents with sources
{x, y} to one reference x-y path xor the cycle space. Both families are
enumerated as bit vectors, with weights accumulated in log space, so the
infinite current sums are never truncated.
"""

from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.special import logsumexp

from ising_crossover.expansion.spin_oracle import check_weights
from ising_crossover.lattice import (
    ConsistentPath, EdgeGraph, SizeCapError, indices_of, path_from_vertices
)

MAX_CYCLOMATIC = 22
MAX_EDGES = 64


@dataclass(frozen=True)
class ParityConfig:
    """
    Parity class of a current: the set `odd` of edges carrying an odd
    current, inside the edge set `universe`.
    """
    odd: int
    universe: int

    def sources(self, graph: EdgeGraph) -> frozenset:
        """
        ∂η, the vertices of odd degree in the subgraph `odd`.
        """
        return graph.odd_vertices(self.odd)


@dataclass(frozen=True)
class CycleSpaceBasis:
    """
    Fundamental cycles of the working edge set `edges`.

    Every even subgraph of `edges` is a unique xor-combination of the
    cycles; their number is |E| - |V| + (number of components).
    """
    edges: int
    cycles: tuple
    n_vertices: int
    n_components: int

    @property
    def dimension(self) -> int:
        return len(self.cycles)


def _working_graph(graph: EdgeGraph, edge_ids) -> nx.Graph:
    working = nx.Graph()
    for e in edge_ids:
        a, b = graph.edges[e]
        if working.has_edge(a, b):
            raise ValueError(
                f"Edge {graph.edges[e]} is repeated; the current expansion "
                "runs on simple graphs only."
            )
        working.add_edge(a, b, index=e)
    return working


def _path_mask(working: nx.Graph, nodes) -> int:
    mask = 0
    for a, b in zip(nodes, nodes[1:]):
        mask |= 1 << working[a][b]["index"]
    return mask


def cycle_space_basis(
    graph: EdgeGraph,
    edges: int,
    max_edges: int = MAX_EDGES
) -> CycleSpaceBasis:
    """
    Builds a cycle-space basis of the subgraph `edges` from a spanning
    forest.

    Raises
    ------
    SizeCapError
        If the subgraph has more than `max_edges` edges.
    ValueError
        If the subgraph repeats an edge.
    """
    edge_ids = indices_of(edges)
    if len(edge_ids) > max_edges:
        raise SizeCapError("number of edges", len(edge_ids), max_edges)
    working = _working_graph(graph, edge_ids)
    cycles = tuple(
        _path_mask(working, cycle + cycle[:1])
        for cycle in nx.cycle_basis(working)
    )
    return CycleSpaceBasis(
        edges, cycles, working.number_of_nodes(),
        nx.number_connected_components(working)
    )


class CurrentExpansion:
    """
    Exact parity-class sums for one graph and one weight assignment.

    Log partition functions are cached by edge set, so the many
    restricted sums needed by the backbone weights are computed once.

    Parameters
    ----------
    graph: EdgeGraph
        Simple graph owning the edge indices.
    weights: array_like
        Coupling J_b of every edge.
    max_cyclomatic: int
        Cap on the cycle-space dimension (2^cap subgraphs).
    max_edges: int
        Cap on the size of a working edge set.
    """

    def __init__(
        self,
        graph: EdgeGraph,
        weights,
        max_cyclomatic: int = MAX_CYCLOMATIC,
        max_edges: int = MAX_EDGES
    ):
        self.graph = graph
        self.weights = check_weights(graph, weights)
        self.max_cyclomatic = max_cyclomatic
        self.max_edges = max_edges
        with np.errstate(divide="ignore"):
            self._log_tanh = np.log(np.tanh(self.weights))
        self._log_cosh = np.log(np.cosh(self.weights))
        self._log_partitions = {}

    def even_subgraphs(self, edges: int) -> tuple:
        """
        All even subgraphs of `edges` in local bit coordinates.

        Returns
        -------
        tuple of (list, ndarray, nx.Graph)
            Edge indices (local bit k is edge `edge_ids[k]`), the uint64
            masks of the even subgraphs and the working networkx graph.

        Raises
        ------
        SizeCapError
            If the cycle space is larger than 2^max_cyclomatic.
        """
        basis = cycle_space_basis(self.graph, edges, self.max_edges)
        if basis.dimension > self.max_cyclomatic:
            raise SizeCapError(
                "cyclomatic number", basis.dimension, self.max_cyclomatic
            )
        edge_ids = indices_of(edges)
        local = {e: k for k, e in enumerate(edge_ids)}
        masks = np.zeros(1, dtype=np.uint64)
        for cycle in basis.cycles:
            local_cycle = np.uint64(
                sum(1 << local[e] for e in indices_of(cycle))
            )
            masks = np.concatenate([masks, masks ^ local_cycle])
        return edge_ids, masks, _working_graph(self.graph, edge_ids)

    def _log_tanh_products(self, edge_ids, masks: np.ndarray) -> np.ndarray:
        # Byte-wise lookup tables of Σ log tanh over the set bits.
        log_tanh = self._log_tanh[edge_ids]
        totals = np.zeros(masks.shape[0])
        for offset in range(0, len(edge_ids), 8):
            chunk = log_tanh[offset:offset + 8]
            bits = (np.arange(256)[:, None] >> np.arange(len(chunk))) & 1
            table = np.where(bits.astype(bool), chunk[None, :], 0.0).sum(axis=1)
            byte = (masks >> np.uint64(offset)) & np.uint64(255)
            totals = totals + table[byte.astype(np.intp)]
        return totals

    def _log_sum(self, edge_ids, masks: np.ndarray) -> float:
        with np.errstate(divide="ignore"):
            return float(logsumexp(self._log_tanh_products(edge_ids, masks)))

    def log_partition(self, edges: int) -> float:
        """
        log of Σ_{Γ even} Π_{b∈Γ} sinh(J_b) Π_{b∉Γ} cosh(J_b) over `edges`.
        """
        if edges not in self._log_partitions:
            edge_ids, masks, _ = self.even_subgraphs(edges)
            self._log_partitions[edges] = (
                float(np.sum(self._log_cosh[edge_ids]))
                + self._log_sum(edge_ids, masks)
            )
        return self._log_partitions[edges]

    def partition(self, edges: int) -> float:
        return float(np.exp(self.log_partition(edges)))

    def log_sourced(self, edges: int, x: int, y: int) -> float:
        """
        log of the sum over subgraphs with odd degree exactly at {x, y}.

        Returns -inf when x and y are not connected by `edges`.
        """
        if x == y:
            raise ValueError("Sourced sums need two distinct sources.")
        edge_ids, masks, working = self.even_subgraphs(edges)
        if not (x in working and y in working and nx.has_path(working, x, y)):
            return -np.inf
        reference = self._local_mask(edge_ids, _path_mask(
            working, nx.shortest_path(working, x, y)
        ))
        return (
            float(np.sum(self._log_cosh[edge_ids]))
            + self._log_sum(edge_ids, masks ^ reference)
        )

    def sourced_sum(self, edges: int, x: int, y: int) -> float:
        return float(np.exp(self.log_sourced(edges, x, y)))

    def two_point(self, edges: int, x: int, y: int) -> float:
        """
        ⟨σ_x σ_y⟩ on the subgraph `edges` as a ratio of parity-class sums.
        """
        if x == y:
            return 1.0
        return float(np.exp(
            self.log_sourced(edges, x, y) - self.log_partition(edges)
        ))

    def constrained_sourceless_ratio(self, edges: int, even_on: int) -> float:
        """
        Fraction of the sourceless weight carried by currents even on
        `even_on`.

        Returns
        -------
        float
            [Π_{b∈even_on} cosh(J_b) × Z(edges ∖ even_on)] / Z(edges),
            a value in (0, 1].

        Raises
        ------
        ValueError
            If `even_on` is not contained in `edges`.
        """
        if even_on & ~edges:
            raise ValueError("The constrained edge set must lie inside the edge set.")
        return float(np.exp(
            float(np.sum(self._log_cosh[indices_of(even_on)]))
            + self.log_partition(edges & ~even_on)
            - self.log_partition(edges)
        ))

    def two_point_matrix(self, edges: int, vertices) -> np.ndarray:
        """
        Matrix of ⟨σ_x σ_y⟩ for `vertices`, enumerating the cycle space once.
        """
        vertices = [int(v) for v in vertices]
        edge_ids, masks, working = self.even_subgraphs(edges)
        log_z = self._log_sum(edge_ids, masks)
        matrix = np.eye(len(vertices))
        for i, x in enumerate(vertices):
            if x not in working:
                continue
            paths = nx.single_source_shortest_path(working, x)
            for j in range(i + 1, len(vertices)):
                y = vertices[j]
                if y not in paths:
                    continue
                reference = self._local_mask(
                    edge_ids, _path_mask(working, paths[y])
                )
                value = np.exp(self._log_sum(edge_ids, masks ^ reference) - log_z)
                matrix[i, j] = matrix[j, i] = value
        return matrix

    def sourced_classes(self, edges: int, x: int, y: int) -> list:
        """
        Every subgraph of `edges` with odd degree exactly at {x, y}, as
        global bit vectors, in enumeration order.
        """
        edge_ids, masks, working = self.even_subgraphs(edges)
        if not (x in working and y in working and nx.has_path(working, x, y)):
            return []
        reference = self._local_mask(edge_ids, _path_mask(
            working, nx.shortest_path(working, x, y)
        ))
        classes = []
        for local in (masks ^ reference).tolist():
            classes.append(sum(1 << edge_ids[k] for k in indices_of(int(local))))
        return classes

    def odd_weight(self, edges: int, odd: int) -> float:
        """
        Π_{b∈odd} sinh(J_b) Π_{b∈edges∖odd} cosh(J_b), the total weight of
        the currents whose odd set is `odd`.
        """
        return float(np.exp(
            np.sum(self._log_cosh[indices_of(edges)])
            + np.sum(self._log_tanh[indices_of(odd)])
        ))

    @staticmethod
    def _local_mask(edge_ids, mask: int) -> np.uint64:
        local = {e: k for k, e in enumerate(edge_ids)}
        return np.uint64(sum(1 << local[e] for e in indices_of(mask)))


def partition_currents(
    graph: EdgeGraph,
    edges: int,
    weights,
    max_cyclomatic: int = MAX_CYCLOMATIC
) -> float:
    """
    Z = Σ_{η: ∂η=∅} W(η), summed as even subgraphs of `edges`.

    Equals `spin_oracle.partition_spin` on the same edge set.

    Raises
    ------
    SizeCapError
        If the cycle-space dimension exceeds `max_cyclomatic`.
    """
    return CurrentExpansion(graph, weights, max_cyclomatic).partition(edges)


def sourced_sum(
    graph: EdgeGraph,
    edges: int,
    weights,
    x: int,
    y: int,
    max_cyclomatic: int = MAX_CYCLOMATIC
) -> float:
    """
    Σ_{η: ∂η={x,y}} W(η); zero when x and y are not connected.

    Raises
    ------
    ValueError
        If x = y.
    """
    return CurrentExpansion(graph, weights, max_cyclomatic).sourced_sum(edges, x, y)


def constrained_sourceless_ratio(
    graph: EdgeGraph,
    edges: int,
    weights,
    even_on: int,
    max_cyclomatic: int = MAX_CYCLOMATIC
) -> float:
    """
    Weight of sourceless currents even on `even_on`, divided by Z(edges).

    See `CurrentExpansion.constrained_sourceless_ratio`.
    """
    return CurrentExpansion(
        graph, weights, max_cyclomatic
    ).constrained_sourceless_ratio(edges, even_on)


def two_point_matrix_currents(
    graph: EdgeGraph,
    edges: int,
    weights,
    vertices=None,
    max_cyclomatic: int = MAX_CYCLOMATIC
) -> tuple:
    """
    All two-point functions of `vertices` from the current expansion.

    Returns
    -------
    tuple of (list, ndarray)
        The vertex list and the correlation matrix in that order.
    """
    if vertices is None:
        vertices = range(graph.n_vertices)
    vertices = sorted(set(int(v) for v in vertices))
    expansion = CurrentExpansion(graph, weights, max_cyclomatic)
    return vertices, expansion.two_point_matrix(edges, vertices)


def backbone_map(
    graph: EdgeGraph,
    config: ParityConfig,
    x: int,
    y: int
) -> ConsistentPath:
    """
    Backbone Ω(η) of a current with sources {x, y}.

    Starting at x, the walk repeatedly takes the minimal step (in the
    step order of the current vertex) along an odd edge not traversed
    yet, and stops on its first arrival at y. Only edges of the odd
    component joining x and y can be reached. By parity the walk can
    always leave a vertex other than y, so it terminates at y.

    Parameters
    ----------
    graph: EdgeGraph
        Graph carrying the step order.
    config: ParityConfig
        Parity class with ∂ = {x, y}.
    x, y: int
        Sources; the backbone runs from x to y.

    Returns
    -------
    ConsistentPath
        The backbone, a consistent path made of odd edges.

    Raises
    ------
    ValueError
        If x = y, the odd set leaves the universe, or ∂ ≠ {x, y}.
    """
    if x == y:
        raise ValueError("The backbone needs two distinct sources.")
    if config.odd & ~config.universe:
        raise ValueError("The odd edge set must lie inside the universe.")
    sources = config.sources(graph)
    if sources != frozenset((x, y)):
        raise ValueError(
            f"The parity class has sources {sorted(sources)}, expected "
            f"{sorted((x, y))}."
        )

    remaining = config.odd
    walk = [x]
    current = x
    while current != y:
        for edge, head in graph.incident_steps(current):
            if remaining >> edge & 1:
                break
        else:
            raise RuntimeError(
                f"Backbone walk stuck at vertex {current}; the parity "
                "class is inconsistent."
            )
        remaining &= ~(1 << edge)
        current = head
        walk.append(head)
    return path_from_vertices(graph, walk)


def sourced_classes(
    graph: EdgeGraph,
    edges: int,
    x: int,
    y: int,
    max_cyclomatic: int = MAX_CYCLOMATIC
) -> list:
    """
    All parity classes of `edges` with sources {x, y}.
    """
    weights = np.ones(graph.num_edges)
    return CurrentExpansion(graph, weights, max_cyclomatic).sourced_classes(edges, x, y)
