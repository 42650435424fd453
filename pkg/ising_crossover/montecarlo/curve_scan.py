"""
curve_scan module
===================
This module runs the Monte Carlo samplers just below a bound curve.

For every curve point the vertical coupling is set to
(1 - margin) × J_s bound and the susceptibility proxy is estimated on
tori of increasing side. A proxy whose relative change between the two
largest sides stays below a threshold is reported as saturating, which
is what a sub-critical point looks like. The scan is a diagnostic: it
does not certify or refute the bound.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

from ising_crossover.expansion.spin_oracle import Couplings
from ising_crossover.montecarlo import montecarlo_functions as mc

SATURATION_THRESHOLD = 0.1


@dataclass
class ScanRecord:
    """
    Proxy table of one coupling pair.

    Attributes
    ----------
    J_d, J_s: float
        Simulated couplings.
    js_bound: float
        Bound of the curve point (NaN for a free-standing point).
    estimates: dict
        McEstimate per torus side L.
    relative_change: float
        |proxy(L_max) - proxy(L_prev)| / proxy(L_prev).
    saturates: bool
        `relative_change` below the threshold.
    """
    J_d: float
    J_s: float
    js_bound: float
    estimates: dict = field(default_factory=dict)
    relative_change: float = math.nan
    saturates: bool = False


def _sampler(algorithm: str):
    sampler_dict = {
        "metropolis": mc.run_metropolis,
        "wolff": mc.run_wolff
    }
    try:
        return sampler_dict[algorithm.lower()]
    except KeyError:
        raise TypeError(
            "Invalid value for 'algorithm'. Use 'metropolis' or 'wolff'."
        ) from None


def scan_point(
    template: mc.McConfig,
    J_d: float,
    J_s: float,
    sizes,
    algorithm: str = "wolff",
    threshold: float = SATURATION_THRESHOLD,
    js_bound: float = math.nan
) -> ScanRecord:
    """
    Estimates the proxy at (J_d, J_s) for every torus side in `sizes`.

    Raises
    ------
    ValueError
        If fewer than two sizes are given.
    TypeError
        If the algorithm keyword is not valid.
    """
    sizes = sorted(set(int(L) for L in sizes))
    if len(sizes) < 2:
        raise ValueError("A saturation test needs at least two torus sides.")
    sampler = _sampler(algorithm)
    record = ScanRecord(J_d, J_s, js_bound)
    for L in sizes:
        cfg = replace(template, L=L, couplings=Couplings(J_d, J_s))
        record.estimates[L] = sampler(cfg)
    previous = record.estimates[sizes[-2]].proxy
    record.relative_change = abs(record.estimates[sizes[-1]].proxy - previous) / previous
    record.saturates = record.relative_change < threshold
    return record


def scan_curve(
    template: mc.McConfig,
    curve,
    margin: float,
    sizes=(8, 16, 32),
    algorithm: str = "wolff",
    threshold: float = SATURATION_THRESHOLD
) -> list:
    """
    Runs `scan_point` at J_s = (1 - margin) × J_s bound for every point.

    Parameters
    ----------
    template: McConfig
        Dimensions, sweeps, chains and seed; L and the couplings are
        replaced for each run.
    curve: sequence of BoundCurvePoint
        Points from `bound_curve`.
    margin: float
        Relative distance below the bound, in [0, 1].
    sizes: sequence of int
        Torus sides.
    algorithm: str
        'metropolis' or 'wolff'.
    threshold: float
        Saturation threshold on the relative change.

    Returns
    -------
    list of ScanRecord
        In curve order. Points with an unbounded J_s are skipped with a
        warning.

    Raises
    ------
    ValueError
        If `margin` is outside [0, 1].
    """
    if not 0.0 <= margin <= 1.0:
        raise ValueError(f"'margin' must lie in [0, 1], got {margin}.")
    records = []
    for point in curve:
        if not math.isfinite(point.js_bound):
            warnings.warn(
                f"The bound at J_d = {point.J_d} is unbounded; the point is "
                "not scanned.", UserWarning
            )
            continue
        records.append(scan_point(
            template, point.J_d, (1.0 - margin) * point.js_bound, sizes,
            algorithm, threshold, point.js_bound
        ))
    return records
