"""
lattice module
===================
This module builds the finite graphs on which every exact computation of
the package runs.

It provides a general edge-indexed graph (`EdgeGraph`) with a fixed step
order at each vertex, the finite boxes Λ_N of Z^(d+s) (`BoxGeometry`) with
their planar/vertical edge classification and their slabs, the sets of
edges cancelled by a step and the consistent paths built out of steps.
Subsets of edges are always represented as Python integers used as bit
vectors: bit `e` is set iff the edge with dense index `e` belongs to the
subset.
"""

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_EDGES = 64

PLANAR = "planar"
VERTICAL = "vertical"


class SizeCapError(ValueError):
    """
    Raised when an exact enumeration would exceed one of its size caps.
    """

    def __init__(self, quantity: str, value: int, cap: int):
        self.quantity = quantity
        self.value = value
        self.cap = cap
        super().__init__(
            f"{quantity} = {value} exceeds the enumeration cap {cap}. "
            "Reduce the instance or raise the cap in settings.json "
            "(or through the ISING_CROSSOVER_* environment variables)."
        )


def mask_from_indices(indices) -> int:
    """
    Builds the bit vector whose set bits are `indices`.
    """
    mask = 0
    for index in indices:
        mask |= 1 << int(index)
    return mask


def indices_of(mask: int) -> list:
    """
    Returns the sorted list of the set bits of `mask`.
    """
    indices = []
    position = 0
    while mask:
        if mask & 1:
            indices.append(position)
        mask >>= 1
        position += 1
    return indices


def popcount(mask: int) -> int:
    return bin(mask).count("1")


class EdgeGraph:
    """
    Finite graph with dense vertex and edge indices and a step order.

    Each vertex carries a total order on the steps leaving it. For a
    plain `EdgeGraph` the order is by index of the neighbour (then by edge
    index, for repeated edges); subclasses can override `_step_key` to
    impose a geometric order. The set of edges cancelled by every step is
    precomputed at construction.

    Attributes
    ----------
    n_vertices: int
        Number of vertices, labelled 0 ... n_vertices - 1.
    edges: tuple of (int, int)
        Edge endpoints, stored with the smaller index first.
    edge_classes: tuple of str
        'planar' or 'vertical' for every edge.
    """

    def __init__(self, n_vertices: int, edges, edge_classes=None):
        if n_vertices < 1:
            raise ValueError("A graph needs at least one vertex.")
        normalized = []
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"Loop at vertex {a} is not allowed.")
            if not (0 <= a < n_vertices and 0 <= b < n_vertices):
                raise ValueError(
                    f"Edge ({a}, {b}) has an endpoint outside "
                    f"0 ... {n_vertices - 1}."
                )
            normalized.append((min(a, b), max(a, b)))
        self.n_vertices = int(n_vertices)
        self.edges = tuple(normalized)
        if edge_classes is None:
            edge_classes = (PLANAR,) * len(self.edges)
        self.edge_classes = tuple(edge_classes)
        if len(self.edge_classes) != len(self.edges):
            raise ValueError("One edge class per edge is required.")

        incident = [[] for _ in range(self.n_vertices)]
        self._edge_index = {}
        for e, (a, b) in enumerate(self.edges):
            incident[a].append((e, b))
            incident[b].append((e, a))
            self._edge_index.setdefault((a, b), e)
        self._incident = tuple(
            tuple(sorted(steps, key=lambda step, v=v: self._step_key(v, *step)))
            for v, steps in enumerate(incident)
        )

        self._rank = {}
        self._gamma = {}
        for v, steps in enumerate(self._incident):
            cumulative = 0
            for rank, (e, _) in enumerate(steps):
                cumulative |= 1 << e
                self._rank[(v, e)] = rank
                self._gamma[(v, e)] = cumulative

    def _step_key(self, tail: int, edge: int, head: int):
        return (head, edge)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.edges)) - 1

    def incident_steps(self, vertex: int) -> tuple:
        """
        Steps `(edge, head)` leaving `vertex`, in increasing step order.
        """
        return self._incident[vertex]

    def edge_between(self, a: int, b: int) -> int:
        """
        Returns the index of the edge {a, b}.

        Raises
        ------
        ValueError
            If `a` and `b` are not adjacent.
        """
        try:
            return self._edge_index[(min(a, b), max(a, b))]
        except KeyError:
            raise ValueError(
                f"Vertices {a} and {b} are not adjacent."
            ) from None

    def step_rank(self, tail: int, edge: int) -> int:
        return self._rank[(tail, edge)]

    def cancelled(self, tail: int, edge: int) -> int:
        """
        Bit vector of the edges cancelled by the step along `edge` out of
        `tail`: the edges at `tail` whose step precedes or equals it.
        """
        return self._gamma[(tail, edge)]

    def other_end(self, edge: int, vertex: int) -> int:
        a, b = self.edges[edge]
        return b if vertex == a else a

    def odd_vertices(self, mask: int) -> frozenset:
        """
        Vertices with odd degree in the subgraph `mask`.
        """
        odd = set()
        for e in indices_of(mask):
            for v in self.edges[e]:
                odd ^= {v}
        return frozenset(odd)

    def mask_vertices(self, mask: int) -> list:
        touched = set()
        for e in indices_of(mask):
            touched.update(self.edges[e])
        return sorted(touched)

    def edges_within(self, vertices) -> int:
        """
        Bit vector of the edges with both endpoints in `vertices`.
        """
        inside = set(int(v) for v in vertices)
        return mask_from_indices(
            e for e, (a, b) in enumerate(self.edges)
            if a in inside and b in inside
        )

    def class_mask(self, edge_class: str) -> int:
        return mask_from_indices(
            e for e, c in enumerate(self.edge_classes) if c == edge_class
        )


@dataclass(frozen=True)
class Vertex:
    """
    Vertex x = (u, t) of Z^(d+s): planar coordinates `u`, vertical `t`.
    """
    u: tuple
    t: tuple

    @property
    def coords(self) -> tuple:
        return tuple(self.u) + tuple(self.t)


@dataclass(frozen=True)
class Step:
    """
    Step from `tail` to the adjacent vertex `head` (dense vertex indices).
    """
    tail: int
    head: int


@dataclass(frozen=True)
class StepOrder:
    """
    Order on the unit directions of Z^(d+s), identical at every vertex.

    The directions are +e_1, -e_1, ..., +e_d, -e_d followed by
    +f_1, -f_1, ..., +f_s, -f_s, where e are the planar and f the
    vertical unit vectors.
    """
    d: int
    s: int

    @property
    def directions(self) -> tuple:
        return tuple(
            (axis, sign)
            for axis in range(self.d + self.s)
            for sign in (+1, -1)
        )

    def rank(self, delta) -> int:
        """
        Rank of the unit displacement `delta` (a coordinate difference).

        Raises
        ------
        ValueError
            If `delta` is not a unit vector.
        """
        nonzero = [(axis, c) for axis, c in enumerate(delta) if c != 0]
        if len(nonzero) != 1 or abs(nonzero[0][1]) != 1:
            raise ValueError(f"{tuple(delta)} is not a unit step.")
        axis, sign = nonzero[0]
        return 2 * axis + (0 if sign > 0 else 1)


class BoxGeometry(EdgeGraph):
    """
    The box Λ_N = [-N, N]^(d+s) with free boundary.

    Vertices are indexed lexicographically on (u, t); edges are produced
    vertex by vertex, in increasing axis order, towards the positive
    direction. An edge is planar when its endpoints differ in a u
    coordinate and vertical when they differ in a t coordinate. The step
    order at each vertex is the one of `StepOrder`.

    Attributes
    ----------
    d, s, N: int
        Planar dimension, vertical dimension and half side.
    vertices: tuple of Vertex
        Vertex list, position = dense index.
    step_order: StepOrder
        Order on unit directions.
    """

    def __init__(self, d: int, s: int, N: int):
        self.d = d
        self.s = s
        self.N = N
        self.step_order = StepOrder(d, s)
        side = range(-N, N + 1)
        self._coords = tuple(itertools.product(side, repeat=d + s))
        self._index = {c: i for i, c in enumerate(self._coords)}
        self.vertices = tuple(Vertex(c[:d], c[d:]) for c in self._coords)

        edges = []
        classes = []
        for i, c in enumerate(self._coords):
            for axis in range(d + s):
                if c[axis] < N:
                    neighbour = c[:axis] + (c[axis] + 1,) + c[axis + 1:]
                    edges.append((i, self._index[neighbour]))
                    classes.append(PLANAR if axis < d else VERTICAL)
        super().__init__(len(self._coords), edges, classes)

    def _step_key(self, tail: int, edge: int, head: int):
        delta = np.subtract(self._coords[head], self._coords[tail])
        return self.step_order.rank(delta)

    def coords(self, index: int) -> tuple:
        return self._coords[index]

    def index_of(self, vertex) -> int:
        """
        Dense index of a `Vertex` or of a coordinate tuple (u..., t...).

        Raises
        ------
        ValueError
            If the vertex lies outside the box.
        """
        key = vertex.coords if isinstance(vertex, Vertex) else tuple(vertex)
        try:
            return self._index[tuple(int(c) for c in key)]
        except KeyError:
            raise ValueError(
                f"Vertex {key} is not in the box with N = {self.N}."
            ) from None

    def vertical_coordinate(self, index: int) -> tuple:
        return self._coords[index][self.d:]

    def planar_coordinate(self, index: int) -> tuple:
        return self._coords[index][:self.d]

    def center(self) -> int:
        return self.index_of((0,) * (self.d + self.s))


@dataclass(frozen=True)
class Slab:
    """
    The d-dimensional slab Λ_N^w = {(u, t): t = w} of a box.

    Attributes
    ----------
    parent: BoxGeometry
        Box containing the slab.
    w: tuple of int
        Vertical coordinate of the slab.
    vertex_indices: tuple of int
        Dense indices (in the parent) of the slab vertices.
    edge_mask: int
        Bit vector of E_N^w, the planar edges inside the slab.
    """
    parent: BoxGeometry
    w: tuple
    vertex_indices: tuple
    edge_mask: int


def build_box(
    d: int,
    s: int,
    N: int,
    max_edges: int = DEFAULT_MAX_EDGES
) -> BoxGeometry:
    """
    Builds the box Λ_N of Z^(d+s) with its edge classification.

    Parameters
    ----------
    d: int
        Number of planar dimensions.
    s: int
        Number of vertical dimensions.
    N: int
        Half side: coordinates range over [-N, N].
    max_edges: int
        Enumeration cap of the downstream exact modules. A larger box is
        still built, but a warning is issued.

    Returns
    -------
    BoxGeometry
        Box with (2N+1)^(d+s) vertices and deterministic indices.

    Raises
    ------
    TypeError
        If a size parameter is not an integer.
    ValueError
        If a size parameter is negative or d + s = 0.
    UserWarning
        If the edge count exceeds `max_edges`.
    """
    for name, value in (("d", d), ("s", s), ("N", N)):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise TypeError(f"'{name}' must be an integer, got {value!r}.")
        if value < 0:
            raise ValueError(f"'{name}' must be non-negative, got {value}.")
    if d + s == 0:
        raise ValueError("The box needs at least one dimension (d + s >= 1).")

    dimension = d + s
    edge_count = dimension * 2 * N * (2 * N + 1) ** (dimension - 1)
    if edge_count > max_edges:
        warnings.warn(
            f"The box (d={d}, s={s}, N={N}) has {edge_count} edges, more "
            f"than the enumeration cap {max_edges}. Exact operations on "
            "it will refuse to run.", UserWarning
        )
    return BoxGeometry(int(d), int(s), int(N))


def slab_of(box: BoxGeometry, w) -> Slab:
    """
    Returns the slab Λ_N^w of `box` and its planar edge set E_N^w.

    Parameters
    ----------
    box: BoxGeometry
        Parent box.
    w: int or sequence of int
        Vertical coordinate; an integer is accepted when s = 1.

    Raises
    ------
    ValueError
        If `w` has the wrong length or lies outside [-N, N]^s.
    """
    if isinstance(w, (int, np.integer)):
        w = (int(w),)
    w = tuple(int(c) for c in w)
    if len(w) != box.s:
        raise ValueError(
            f"The vertical coordinate needs {box.s} components, got {len(w)}."
        )
    if any(abs(c) > box.N for c in w):
        raise ValueError(f"Vertical coordinate {w} is outside [-{box.N}, {box.N}].")

    vertex_indices = tuple(
        i for i in range(box.n_vertices) if box.vertical_coordinate(i) == w
    )
    edge_mask = box.edges_within(vertex_indices) & box.class_mask(PLANAR)
    return Slab(box, w, vertex_indices, edge_mask)


def cancelled_set(graph: EdgeGraph, step: Step) -> int:
    """
    Returns Γ_(x,z), the edges cancelled by the step `step`.

    These are the edges {x, y} of the graph at x = `step.tail` whose step
    (x, y) precedes or equals (x, z) in the step order; the step's own
    edge is always included.

    Raises
    ------
    ValueError
        If the step does not join adjacent vertices.
    """
    edge = graph.edge_between(step.tail, step.head)
    return graph.cancelled(step.tail, edge)


@dataclass(frozen=True)
class ConsistentPath:
    """
    Consistent path ω with its cancelled set ω*.

    Attributes
    ----------
    vertices: tuple of int
        z_0, ..., z_k.
    edges: tuple of int
        Edge index of each step.
    cancelled: int
        ω*, union of the cancelled sets of the steps (bit vector).
    """
    vertices: tuple
    edges: tuple
    cancelled: int

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def edge_mask(self) -> int:
        return mask_from_indices(self.edges)


def path_from_vertices(graph: EdgeGraph, vertices) -> ConsistentPath:
    """
    Builds a `ConsistentPath` from its vertex sequence.

    A path is consistent when no step uses an edge cancelled by one of
    the previous steps; such a path never repeats an edge.

    Parameters
    ----------
    graph: EdgeGraph
        Graph carrying the step order.
    vertices: sequence of int
        Vertex sequence, at least one vertex.

    Returns
    -------
    ConsistentPath
        The path with its cancelled set.

    Raises
    ------
    ValueError
        If consecutive vertices are not adjacent or the path is not
        consistent.
    """
    vertices = tuple(int(v) for v in vertices)
    if not vertices:
        raise ValueError("A path needs at least one vertex.")
    cancelled = 0
    edges = []
    for k in range(1, len(vertices)):
        tail = vertices[k - 1]
        edge = graph.edge_between(tail, vertices[k])
        if cancelled >> edge & 1:
            raise ValueError(
                f"Path {vertices} is not consistent: step {k} uses edge "
                f"{graph.edges[edge]} cancelled by an earlier step."
            )
        cancelled |= graph.cancelled(tail, edge)
        edges.append(edge)
    return ConsistentPath(vertices, tuple(edges), cancelled)


def concatenate_paths(
    graph: EdgeGraph,
    first: ConsistentPath,
    second: ConsistentPath
) -> ConsistentPath:
    """
    Returns first ∘ second.

    Raises
    ------
    ValueError
        If `second` does not start where `first` ends or the
        concatenation is not consistent.
    """
    if first.end != second.start:
        raise ValueError(
            f"Cannot concatenate: first path ends at {first.end}, "
            f"second starts at {second.start}."
        )
    return path_from_vertices(graph, first.vertices + second.vertices[1:])


def random_graph(
    rng: np.random.Generator,
    n_vertices: int,
    n_edges: int
) -> EdgeGraph:
    """
    Draws a connected simple graph with the given numbers of vertices
    and edges.

    A random recursive tree is drawn first; the remaining edges are drawn
    uniformly among the missing pairs. The cyclomatic number of the
    result is n_edges - n_vertices + 1.

    Raises
    ------
    ValueError
        If `n_edges` is smaller than a spanning tree or larger than the
        complete graph.
    """
    max_edges = n_vertices * (n_vertices - 1) // 2
    if not n_vertices - 1 <= n_edges <= max_edges:
        raise ValueError(
            f"A connected simple graph on {n_vertices} vertices has between "
            f"{n_vertices - 1} and {max_edges} edges, got {n_edges}."
        )
    edges = set()
    for v in range(1, n_vertices):
        edges.add((int(rng.integers(0, v)), v))
    missing = [
        (a, b) for a in range(n_vertices) for b in range(a + 1, n_vertices)
        if (a, b) not in edges
    ]
    extra = rng.choice(len(missing), size=n_edges - len(edges), replace=False)
    for k in sorted(int(k) for k in extra):
        edges.add(missing[k])
    return EdgeGraph(n_vertices, sorted(edges))
