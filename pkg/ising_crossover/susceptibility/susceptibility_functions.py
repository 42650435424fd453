"""
susceptibility_functions module
===================
This module contains the functions that estimate the susceptibility
χ = sup_x Σ_y ⟨σ_x σ_y⟩ of the isotropic d-dimensional model.

Four estimators are available: the closed form of the infinite chain,
exact enumeration on a finite region (box, slab or arbitrary graph),
row-to-row transfer matrices on free-boundary strips of Z^2 and a
ratio-of-increments extrapolation over square strips. Each estimate
carries its provenance, so downstream consumers can tell a certified
value from an estimate.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ising_crossover.expansion.currents import (
    MAX_CYCLOMATIC, two_point_matrix_currents
)
from ising_crossover.expansion.spin_oracle import (
    MAX_SPINS, Couplings, couplings_weights, two_point_matrix_spin
)
from ising_crossover.lattice import EdgeGraph, SizeCapError, Slab

MAX_STRIP_WIDTH = 12

EXACT_CLOSED_FORM = "exact-closed-form"
EXACT_ENUMERATION = "exact-enumeration"
TRANSFER_MATRIX = "transfer-matrix"
EXTRAPOLATED = "extrapolated"


@dataclass(frozen=True)
class ChiEstimate:
    """
    Susceptibility value with its provenance.

    Attributes
    ----------
    value: float
        χ, at least 1.
    provenance: str
        'exact-closed-form', 'exact-enumeration', 'transfer-matrix' or
        'extrapolated'.
    volume: dict
        Descriptor of the finite volume (empty for infinite volume).
    """
    value: float
    provenance: str
    volume: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.value >= 1.0 - 1e-12:
            raise ValueError(f"A susceptibility is at least 1, got {self.value}.")


def _check_coupling(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ValueError(
            f"Coupling {name} must be a finite non-negative number, got {value}."
        )
    return value


def chi_1d_exact(J: float) -> ChiEstimate:
    """
    Susceptibility of the infinite Ising chain.

    Σ_{r∈Z} tanh(J)^|r| = (1 + tanh J) / (1 - tanh J) = e^(2J).

    Parameters
    ----------
    J: float
        Nearest-neighbour coupling, non-negative.

    Returns
    -------
    ChiEstimate
        e^(2J), provenance 'exact-closed-form'.

    Raises
    ------
    ValueError
        If J is negative or not finite.
    """
    J = _check_coupling("J", J)
    return ChiEstimate(math.exp(2.0 * J), EXACT_CLOSED_FORM)


def chi_finite_exact(
    region,
    J_d: float,
    J_s: float = 0.0,
    method: str = "currents",
    max_spins: int = MAX_SPINS,
    max_cyclomatic: int = MAX_CYCLOMATIC
) -> ChiEstimate:
    """
    Finite-volume susceptibility by exact enumeration.

    The supremum over x is taken over every vertex of the region, since
    free boundaries break translation invariance.

    Parameters
    ----------
    region: EdgeGraph or Slab
        A box (planar coupling `J_d`, vertical coupling `J_s`), a slab of
        a box (its planar edges only) or any graph whose edges are all
        planar.
    J_d, J_s: float
        Couplings.
    method: str
        'currents' (even-subgraph enumeration) or 'spin' (configuration
        sum).
    max_spins, max_cyclomatic: int
        Enumeration caps of the two methods.

    Returns
    -------
    ChiEstimate
        Max row sum of the two-point matrix, provenance
        'exact-enumeration'.

    Raises
    ------
    TypeError
        If `method` is not valid or `region` has the wrong type.
    SizeCapError
        If the selected method exceeds its cap.
    """
    couplings = Couplings(_check_coupling("J_d", J_d), _check_coupling("J_s", J_s))
    if isinstance(region, Slab):
        graph = region.parent
        edges = region.edge_mask
        vertices = region.vertex_indices
        volume = {"N": graph.N, "slab": region.w}
    elif isinstance(region, EdgeGraph):
        graph = region
        edges = region.full_mask
        vertices = range(region.n_vertices)
        volume = {"N": getattr(region, "N", None), "vertices": region.n_vertices}
    else:
        raise TypeError(
            f"Expected a graph, a box or a slab, got {type(region).__name__}."
        )
    weights = couplings_weights(graph, couplings)

    method_dict = {
        "currents": lambda: two_point_matrix_currents(
            graph, edges, weights, vertices, max_cyclomatic
        ),
        "spin": lambda: two_point_matrix_spin(
            graph, edges, weights, vertices, max_spins
        )
    }
    try:
        matrix_func = method_dict[method.lower()]
    except KeyError:
        raise TypeError(
            "Invalid value for 'method'. Use 'currents' or 'spin'."
        ) from None
    _, correlations = matrix_func()
    return ChiEstimate(
        float(np.max(correlations.sum(axis=1))), EXACT_ENUMERATION, volume
    )


def strip_graph(width: int, length: int) -> EdgeGraph:
    """
    Free-boundary width × length grid of Z^2.

    Vertex (i, j), with row i < length and column j < width, has index
    i * width + j. All edges are planar.
    """
    edges = []
    for i in range(length):
        for j in range(width):
            v = i * width + j
            if j + 1 < width:
                edges.append((v, v + 1))
            if i + 1 < length:
                edges.append((v, v + width))
    return EdgeGraph(width * length, edges)


def _row_spins(width: int) -> np.ndarray:
    # Row state c has bit (width - 1 - j) for column j, matching a C-order
    # reshape to (2,) * width.
    states = np.arange(1 << width)[:, None]
    bits = (states >> (width - 1 - np.arange(width))) & 1
    return 1.0 - 2.0 * bits


def _apply_inter_row(vector: np.ndarray, kernel: np.ndarray, width: int) -> np.ndarray:
    tensor = vector.reshape((2,) * width)
    for axis in range(width):
        tensor = np.moveaxis(
            np.tensordot(kernel, tensor, axes=([1], [axis])), 0, axis
        )
    return tensor.reshape(-1)


def chi_2d_strip(
    width: int,
    length: int,
    J_d: float,
    max_width: int = MAX_STRIP_WIDTH
) -> ChiEstimate:
    """
    Susceptibility of the free-boundary width × length strip of Z^2.

    The strip is swept row by row with the transfer matrix
    T = A ⊗ ... ⊗ A, A = [[1, e^(-2J)], [e^(-2J), 1]], and the diagonal
    intra-row weight. Forward and backward partial sums are carried
    together with their magnetization-weighted counterparts, so that
    ⟨σ_x M⟩ is available for every site x of every row. All vectors are
    renormalized at each row.

    Parameters
    ----------
    width: int
        Number of columns, 1 ≤ width ≤ `max_width`.
    length: int
        Number of rows, at least `width`.
    J_d: float
        Coupling.
    max_width: int
        Cap on the width (vectors of size 2^width).

    Returns
    -------
    ChiEstimate
        max_x ⟨σ_x M⟩, provenance 'transfer-matrix'.

    Raises
    ------
    TypeError
        If a size is not an integer.
    ValueError
        If width < 1 or length < width.
    SizeCapError
        If width > `max_width`.
    """
    for name, value in (("width", width), ("length", length)):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise TypeError(f"'{name}' must be an integer, got {value!r}.")
    if width < 1:
        raise ValueError(f"'width' must be at least 1, got {width}.")
    if width > max_width:
        raise SizeCapError("strip width", width, max_width)
    if length < width:
        raise ValueError(
            f"'length' must be at least the width {width}, got {length}."
        )
    J = _check_coupling("J_d", J_d)

    spins = _row_spins(width)
    magnetization = spins.sum(axis=1)
    bond_sum = np.sum(spins[:, :-1] * spins[:, 1:], axis=1)
    diagonal = np.exp(J * (bond_sum - (width - 1)))
    kernel = np.array([[1.0, math.exp(-2.0 * J)], [math.exp(-2.0 * J), 1.0]])

    forward = np.empty((length, 1 << width))
    forward_m = np.empty_like(forward)
    current = diagonal.copy()
    current_m = diagonal * magnetization
    for i in range(length):
        if i > 0:
            current = diagonal * _apply_inter_row(forward[i - 1], kernel, width)
            current_m = (
                diagonal * _apply_inter_row(forward_m[i - 1], kernel, width)
                + magnetization * current
            )
        scale = current.sum()
        forward[i] = current / scale
        forward_m[i] = current_m / scale

    backward = np.ones(1 << width)
    backward_m = np.zeros(1 << width)
    chi = 1.0
    for i in range(length - 1, -1, -1):
        if i < length - 1:
            weighted = diagonal * backward
            weighted_m = diagonal * (backward_m + magnetization * backward)
            backward = _apply_inter_row(weighted, kernel, width)
            backward_m = _apply_inter_row(weighted_m, kernel, width)
            scale = backward.sum()
            backward /= scale
            backward_m /= scale
        normalization = np.dot(forward[i], backward)
        row = spins.T @ (forward_m[i] * backward + forward[i] * backward_m)
        chi = max(chi, float(np.max(row)) / normalization)
    return ChiEstimate(
        chi, TRANSFER_MATRIX, {"width": int(width), "length": int(length)}
    )


def chi_2d_extrapolated(
    widths,
    J_d: float,
    max_width: int = MAX_STRIP_WIDTH
) -> ChiEstimate:
    """
    Ratio-of-increments extrapolation of square-strip susceptibilities.

    With χ_k the transfer-matrix value of the w_k × w_k strip and
    Δ_k = χ_k - χ_(k-1), the last two increments define the ratio
    r = Δ_last / Δ_prev and the geometric tail χ_last + Δ_last r / (1 - r).
    When r is not in (0, 1) the tail is dropped and the largest strip
    value is returned, with a warning.

    Parameters
    ----------
    widths: sequence of int
        At least three distinct strip widths.
    J_d: float
        Coupling.
    max_width: int
        Cap on the strip width.

    Returns
    -------
    ChiEstimate
        Extrapolated value, provenance 'extrapolated'.

    Raises
    ------
    ValueError
        If fewer than three widths are given.
    """
    widths = sorted(set(int(w) for w in widths))
    if len(widths) < 3:
        raise ValueError("The extrapolation needs at least three strip widths.")
    values = [chi_2d_strip(w, w, J_d, max_width).value for w in widths]
    increments = np.diff(values)
    value = values[-1]
    if increments[-2] > 0 and 0 < increments[-1] / increments[-2] < 1:
        ratio = increments[-1] / increments[-2]
        value += increments[-1] * ratio / (1.0 - ratio)
    else:
        warnings.warn(
            f"Strip increments at J_d = {J_d} are not geometric; the "
            "largest strip value is used without extrapolation.", UserWarning
        )
    return ChiEstimate(float(value), EXTRAPOLATED, {"widths": tuple(widths)})
