"""
bound_curve module
===================
This module contains the sub-criticality bound for the anisotropic model
and the functions that verify it on finite boxes.

If the d-dimensional susceptibility χ_d(J_d) is finite, the (d+s)
susceptibility stays finite as long as 2s tanh(J_s) χ_d(J_d) < 1, since

    χ_(d+s)(J_d, J_s) ≤ Σ_(n≥0) (2s tanh J_s)^n χ_d(J_d)^(n+1).

The module evaluates the geometric bound and its truncations, turns a
susceptibility estimator into a curve J_s bound(J_d) and checks the
whole inequality chain (exact χ, path-split bound, geometric bound) on
boxes small enough to enumerate.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ising_crossover.expansion.backbone import (
    MAX_PATHS, enumerate_consistent_paths, split_path, splitting_bound
)
from ising_crossover.expansion.currents import CurrentExpansion
from ising_crossover.expansion.spin_oracle import (
    MAX_SPINS, Couplings, couplings_weights, two_point_matrix_spin
)
from ising_crossover.lattice import BoxGeometry, build_box, slab_of
from ising_crossover.susceptibility import susceptibility_functions as sf

RELATIVE_SLACK = 1e-10


def artanh_guarded(x: float) -> float:
    """
    artanh(x) = 0.5 ln((1 + x) / (1 - x)) for 0 ≤ x < 1.

    Raises
    ------
    ValueError
        If x is outside [0, 1).
    """
    if not 0.0 <= x < 1.0:
        raise ValueError(f"artanh is only evaluated on [0, 1), got {x}.")
    return 0.5 * math.log((1.0 + x) / (1.0 - x))


def _series_ratio(chi_d: float, s: int, J_s: float) -> float:
    if not chi_d >= 1.0:
        raise ValueError(f"'chi_d' must be at least 1, got {chi_d}.")
    if isinstance(s, bool) or not isinstance(s, (int, np.integer)) or s < 1:
        raise ValueError(f"'s' must be a positive integer, got {s!r}.")
    if not math.isfinite(J_s) or J_s < 0:
        raise ValueError(f"'J_s' must be finite and non-negative, got {J_s}.")
    return 2.0 * s * math.tanh(J_s) * chi_d


def geometric_bound(chi_d: float, s: int, J_s: float) -> float:
    """
    Sum of the series Σ_n (2s tanh J_s)^n χ_d^(n+1).

    Parameters
    ----------
    chi_d: float
        Slab susceptibility, at least 1.
    s: int
        Number of vertical dimensions.
    J_s: float
        Vertical coupling.

    Returns
    -------
    float
        χ_d / (1 - 2s tanh(J_s) χ_d) when the ratio is below 1, `math.inf`
        otherwise.

    Raises
    ------
    ValueError
        If a parameter is outside its domain.
    """
    ratio = _series_ratio(chi_d, s, J_s)
    if ratio >= 1.0:
        return math.inf
    return chi_d / (1.0 - ratio)


@dataclass(frozen=True)
class SeriesTruncation:
    """
    Partial sum of the geometric series up to n = `terms` - 1 and the
    bound on the omitted tail (`math.inf` when the series diverges).
    """
    partial_sum: float
    tail_bound: float
    terms: int


def truncated_series(chi_d: float, s: int, J_s: float, n_max: int) -> SeriesTruncation:
    """
    Σ_(n≤n_max) (2s tanh J_s)^n χ_d^(n+1) with the tail
    (2s tanh J_s χ_d)^(n_max+1) χ_d / (1 - 2s tanh J_s χ_d).
    """
    if n_max < 0:
        raise ValueError(f"'n_max' must be non-negative, got {n_max}.")
    ratio = _series_ratio(chi_d, s, J_s)
    partial_sum = math.fsum(chi_d * ratio ** n for n in range(n_max + 1))
    if ratio >= 1.0:
        return SeriesTruncation(partial_sum, math.inf, n_max + 1)
    tail = ratio ** (n_max + 1) * chi_d / (1.0 - ratio)
    return SeriesTruncation(partial_sum, tail, n_max + 1)


def js_bound(chi_d: float, s: int) -> float:
    """
    artanh(1 / (2s χ_d)), or `math.inf` when 1 / (2s χ_d) ≥ 1.
    """
    x = 1.0 / (2.0 * s * chi_d)
    if x >= 1.0:
        return math.inf
    return artanh_guarded(x)


@dataclass(frozen=True)
class BoundCurvePoint:
    """
    One point of the sub-criticality curve.

    Attributes
    ----------
    J_d: float
        Planar coupling.
    chi: ChiEstimate
        Estimate of χ_d(J_d) used for the bound.
    js_bound: float
        Largest vertical coupling covered by the bound, `math.inf` when
        every J_s is covered.
    s: int
        Number of vertical dimensions.
    """
    J_d: float
    chi: sf.ChiEstimate
    js_bound: float
    s: int

    @property
    def certified(self) -> bool:
        return self.chi.provenance == sf.EXACT_CLOSED_FORM

    @property
    def provenance_label(self) -> str:
        return "certified" if self.certified else "estimated"


def _chi_estimator(estimator: str, d: int, options: dict):
    estimator_dict = {
        "exact1d": (
            (1,), sf.chi_1d_exact
        ),
        "enumeration": (
            (1, 2), lambda J_d: sf.chi_finite_exact(
                build_box(d, 0, options["N"]), J_d,
                max_cyclomatic=options["max_cyclomatic"]
            )
        ),
        "transfer": (
            (2,), lambda J_d: sf.chi_2d_strip(
                options["width"], options["length"], J_d, options["max_width"]
            )
        ),
        "extrapolated": (
            (2,), lambda J_d: sf.chi_2d_extrapolated(
                options["extrapolation_widths"], J_d, options["max_width"]
            )
        )
    }
    try:
        dimensions, chi_func = estimator_dict[estimator.lower()]
    except KeyError:
        raise TypeError(
            "Invalid value for 'estimator'. Use 'exact1d', 'enumeration', "
            "'transfer' or 'extrapolated'."
        ) from None
    if d not in dimensions:
        raise ValueError(
            f"Estimator '{estimator}' is not available for d = {d}; it "
            f"supports d in {dimensions}."
        )
    return chi_func


def bound_curve(
    d: int,
    s: int,
    grid,
    estimator: str = "exact1d",
    workers: int = 1,
    N: int = 2,
    width: int = 8,
    length: int = 16,
    extrapolation_widths=(4, 5, 6, 7, 8),
    max_width: int = sf.MAX_STRIP_WIDTH,
    max_cyclomatic: int = 22
) -> list:
    """
    Evaluates the bound J_s(J_d) = artanh(1 / (2s χ_d(J_d))) on a grid.

    Only curves built on 'exact1d' are certified; every other estimator
    yields a finite-volume or extrapolated value of χ_2, which is a lower
    bound on the true value and makes the curve an estimate.

    Parameters
    ----------
    d: int
        Planar dimension, 1 or 2.
    s: int
        Vertical dimension, at least 1.
    grid: iterable of float
        Positive J_d values.
    estimator: str
        'exact1d' (d = 1), 'enumeration' (box of half side `N`, d = 1, 2),
        'transfer' (width × length strip, d = 2) or 'extrapolated'
        (square strips of `extrapolation_widths`, d = 2).
    workers: int
        Number of threads evaluating grid points.
    N, width, length, extrapolation_widths, max_width, max_cyclomatic:
        Estimator parameters.

    Returns
    -------
    list of BoundCurvePoint
        One point per grid value, ordered by J_d.

    Raises
    ------
    ValueError
        If a grid value is not positive, d is not 1 or 2, s < 1 or the
        estimator does not support d.
    TypeError
        If the estimator keyword is not valid.
    """
    if d not in (1, 2):
        raise ValueError(f"Bound curves are available for d = 1, 2, got d = {d}.")
    if isinstance(s, bool) or not isinstance(s, (int, np.integer)) or s < 1:
        raise ValueError(f"'s' must be a positive integer, got {s!r}.")
    grid = sorted(float(J) for J in grid)
    for J_d in grid:
        if not (math.isfinite(J_d) and J_d > 0):
            raise ValueError(f"Grid values must be positive, got {J_d}.")
    options = {
        "N": N, "width": width, "length": length,
        "extrapolation_widths": extrapolation_widths,
        "max_width": max_width, "max_cyclomatic": max_cyclomatic
    }
    chi_func = _chi_estimator(estimator, d, options)

    def point(J_d):
        chi = chi_func(J_d)
        return BoundCurvePoint(J_d, chi, js_bound(chi.value, s), s)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(point, grid))
    return [point(J_d) for J_d in grid]


def bound_scaling_slopes(curve) -> np.ndarray:
    """
    Slopes d log(J_s bound) / d log(χ_d) between consecutive finite points.

    As χ_d grows the bound behaves as 1 / (2s χ_d), so the slopes approach
    -1. Pairs with equal χ_d values are skipped.
    """
    finite = [p for p in curve if math.isfinite(p.js_bound) and p.js_bound > 0]
    slopes = []
    for first, second in zip(finite, finite[1:]):
        d_chi = math.log(second.chi.value) - math.log(first.chi.value)
        if d_chi == 0.0:
            continue
        slopes.append(
            (math.log(second.js_bound) - math.log(first.js_bound)) / d_chi
        )
    return np.array(slopes)


@dataclass
class ChainReport:
    """
    Outcome of the inequality chain (i) ≤ (ii) ≤ (iii) on one box.

    Attributes
    ----------
    exact: float
        (i) exact χ of the box.
    path_split: float
        (ii) max over x of the summed path-split bounds.
    geometric: float
        (iii) geometric bound built on the slab susceptibility.
    chi_slab: float
        Susceptibility of the central slab.
    by_n: dict
        Path-split total of the maximizing x, grouped by the number of
        vertical steps, next to the series term (2s tanh J_s)^n χ^(n+1).
    passed: bool
        Verdict at relative slack `RELATIVE_SLACK`.
    """
    exact: float
    path_split: float
    geometric: float
    chi_slab: float
    by_n: dict = field(default_factory=dict)
    passed: bool = False


def theorem_chain_check(
    box: BoxGeometry,
    couplings: Couplings,
    n_max: int = None,
    path_cache: dict = None,
    max_spins: int = MAX_SPINS,
    max_paths: int = MAX_PATHS
) -> ChainReport:
    """
    Verifies χ_box ≤ path-split bound ≤ geometric bound on a small box.

    (i) comes from the spin oracle. (ii) sums, for every x, 1 plus the
    splitting bound of every consistent path from x to every y ≠ x.
    (iii) is `geometric_bound` with the susceptibility of the central
    slab.

    Parameters
    ----------
    box: BoxGeometry
        Box with s ≥ 1.
    couplings: Couplings
        J_d on planar edges, J_s on vertical edges.
    n_max: int, optional
        Largest number of vertical steps listed in `by_n`; all by default.
        The chain itself always uses every path.
    path_cache: dict, optional
        Enumerated paths keyed by (x, y), reused across couplings.
    max_spins, max_paths: int
        Enumeration caps.

    Returns
    -------
    ChainReport

    Raises
    ------
    ValueError
        If the box has no vertical dimension.
    SizeCapError
        If the box exceeds an enumeration cap.
    """
    if box.s < 1:
        raise ValueError("The inequality chain needs a box with s >= 1.")
    if path_cache is None:
        path_cache = {}
    weights = couplings_weights(box, couplings)
    expansion = CurrentExpansion(box, weights)
    full = box.full_mask

    _, correlations = two_point_matrix_spin(box, full, weights, max_spins=max_spins)
    exact = float(np.max(correlations.sum(axis=1)))

    slab = slab_of(box, (0,) * box.s)
    _, slab_correlations = two_point_matrix_spin(
        box, slab.edge_mask, weights, vertices=slab.vertex_indices,
        max_spins=max_spins
    )
    chi_slab = float(np.max(slab_correlations.sum(axis=1)))

    path_split = -math.inf
    best_by_n = {}
    for x in range(box.n_vertices):
        by_n = {0: 1.0}
        for y in range(box.n_vertices):
            if y == x:
                continue
            if (x, y) not in path_cache:
                path_cache[(x, y)] = enumerate_consistent_paths(
                    box, full, x, y, max_paths=max_paths
                )
            for path in path_cache[(x, y)]:
                split = split_path(path, box)
                by_n[split.n] = by_n.get(split.n, 0.0) + splitting_bound(
                    box, full, weights, path, expansion, split
                )
        total = math.fsum(by_n.values())
        if total > path_split:
            path_split = total
            best_by_n = by_n

    geometric = geometric_bound(chi_slab, box.s, couplings.J_s)
    ratio = 2.0 * box.s * math.tanh(couplings.J_s)
    listed = sorted(best_by_n) if n_max is None else range(n_max + 1)
    report = ChainReport(
        exact, path_split, geometric, chi_slab,
        {
            n: (best_by_n.get(n, 0.0), ratio ** n * chi_slab ** (n + 1))
            for n in listed
        }
    )
    report.passed = (
        exact <= path_split * (1.0 + RELATIVE_SLACK)
        and path_split <= geometric * (1.0 + RELATIVE_SLACK)
    )
    return report


def chain_grid(
    box: BoxGeometry,
    J_d_values,
    J_s_values,
    workers: int = 1,
    **kwargs
) -> list:
    """
    Runs `theorem_chain_check` over a grid of couplings, sharing the
    enumerated paths. Returns ((J_d, J_s), ChainReport) pairs in grid
    order.
    """
    path_cache = {}
    pairs = [(float(a), float(b)) for a in J_d_values for b in J_s_values]
    # Fill the shared cache once before any concurrent reader.
    check = partial(theorem_chain_check, box, path_cache=path_cache, **kwargs)
    if not pairs:
        return []
    first = check(Couplings(*pairs[0]))
    rest = pairs[1:]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            reports = list(executor.map(lambda p: check(Couplings(*p)), rest))
    else:
        reports = [check(Couplings(*p)) for p in rest]
    return list(zip(pairs, [first] + reports))
