"""
testing_susceptibility module
===================
This module tests the functions inside the
'susceptibility/susceptibility_functions.py' module.
"""

import math
import warnings

import numpy as np
import pytest

from ising_crossover.lattice import SizeCapError, build_box, slab_of
from ising_crossover.susceptibility.susceptibility_functions import (
    EXACT_CLOSED_FORM, EXACT_ENUMERATION, EXTRAPOLATED, TRANSFER_MATRIX,
    ChiEstimate, chi_1d_exact, chi_2d_extrapolated, chi_2d_strip,
    chi_finite_exact, strip_graph
)


def test_chi_1d_exact():
    """
    This function tests the closed form e^(2J) of the infinite chain.
    """
    assert chi_1d_exact(0.0).value == 1.0
    estimate = chi_1d_exact(0.5)
    assert np.isclose(estimate.value, math.e, rtol=1e-15)
    assert estimate.provenance == EXACT_CLOSED_FORM
    assert np.isclose(chi_1d_exact(1.0).value, math.exp(2.0), rtol=1e-15)
    for J in (-0.1, math.inf, math.nan):
        with pytest.raises(ValueError):
            chi_1d_exact(J)


def test_estimate_lower_bound():
    """
    This function tests that an estimate below 1 cannot be built.
    """
    with pytest.raises(ValueError):
        ChiEstimate(0.5, EXACT_ENUMERATION)


@pytest.mark.parametrize("method", ["currents", "spin"])
def test_three_site_chain(method):
    """
    This function tests that both enumeration methods give 1 + 2 tanh(J)
    on the 3-site chain, and 1 at zero coupling.
    """
    box = build_box(1, 0, 1)
    estimate = chi_finite_exact(box, 0.5, method=method)
    assert np.isclose(estimate.value, 1 + 2 * math.tanh(0.5), rtol=1e-12)
    assert estimate.provenance == EXACT_ENUMERATION
    assert np.isclose(chi_finite_exact(box, 0.0, method=method).value, 1.0)


def test_methods_agree_on_grid():
    """
    This function tests that the two enumeration methods agree on the
    3×3 grid.
    """
    grid = strip_graph(3, 3)
    currents = chi_finite_exact(grid, 0.3, method="currents").value
    spin = chi_finite_exact(grid, 0.3, method="spin").value
    assert np.isclose(currents, spin, rtol=1e-10)


def test_slab_susceptibility():
    """
    This function tests that a slab of the (1+1) box only uses its planar
    edges, whatever the vertical coupling.
    """
    box = build_box(1, 1, 1)
    estimate = chi_finite_exact(slab_of(box, 0), 0.5, 0.9)
    assert np.isclose(estimate.value, 1 + 2 * math.tanh(0.5), rtol=1e-12)
    assert estimate.volume["slab"] == (0,)


def test_finite_volume_monotone():
    """
    This function tests that the chain susceptibility grows with the
    half side N and stays below e^(2J).
    """
    values = [chi_finite_exact(build_box(1, 0, N), 0.4).value for N in range(1, 5)]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert values[-1] < math.exp(0.8)


def test_long_chain_matches_closed_form():
    """
    This function tests that the 61-site chain reproduces e^(2J) within
    1e-8.
    """
    estimate = chi_finite_exact(build_box(1, 0, 30), 0.3)
    assert abs(estimate.value - math.exp(0.6)) < 1e-8


def test_invalid_arguments():
    """
    This function tests that unknown methods and regions raise TypeError
    and negative couplings raise ValueError.
    """
    box = build_box(1, 0, 1)
    with pytest.raises(TypeError):
        chi_finite_exact(box, 0.3, method="montecarlo")
    with pytest.raises(TypeError):
        chi_finite_exact("box", 0.3)
    with pytest.raises(ValueError):
        chi_finite_exact(box, -0.3)


def test_strip_width_one_is_a_chain():
    """
    This function tests that a width-1 strip of length 7 is the 7-site
    chain.
    """
    strip = chi_2d_strip(1, 7, 0.45)
    chain = chi_finite_exact(build_box(1, 0, 3), 0.45)
    assert np.isclose(strip.value, chain.value, rtol=1e-10)
    assert strip.provenance == TRANSFER_MATRIX
    assert strip.volume == {"width": 1, "length": 7}


@pytest.mark.parametrize("width, length", [(2, 2), (3, 3), (3, 4), (2, 5)])
def test_strip_matches_enumeration(width, length):
    """
    This function tests the transfer matrix against enumeration on the
    same free-boundary strip.
    """
    strip = chi_2d_strip(width, length, 0.35).value
    exact = chi_finite_exact(strip_graph(width, length), 0.35, method="spin").value
    assert np.isclose(strip, exact, rtol=1e-9)


def test_strip_monotone_in_length():
    """
    This function tests that a longer strip has a larger susceptibility.
    """
    assert chi_2d_strip(3, 3, 0.3).value < chi_2d_strip(3, 6, 0.3).value


def test_strip_errors():
    """
    This function tests the validation of the strip sizes.
    """
    with pytest.raises(ValueError):
        chi_2d_strip(0, 3, 0.3)
    with pytest.raises(ValueError):
        chi_2d_strip(3, 2, 0.3)
    with pytest.raises(TypeError):
        chi_2d_strip(2.0, 3, 0.3)
    with pytest.raises(SizeCapError):
        chi_2d_strip(13, 13, 0.3)
    with pytest.raises(SizeCapError):
        chi_2d_strip(5, 5, 0.3, max_width=4)


def test_extrapolation():
    """
    This function tests that the extrapolated value is at least the
    largest strip value and that three widths are required.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        estimate = chi_2d_extrapolated((3, 4, 5), 0.3)
    assert estimate.provenance == EXTRAPOLATED
    assert estimate.value >= chi_2d_strip(5, 5, 0.3).value
    assert estimate.volume == {"widths": (3, 4, 5)}
    with pytest.raises(ValueError):
        chi_2d_extrapolated((3, 3, 4), 0.3)


def test_square_box_value():
    """
    This function tests the susceptibility of the 3×3 box at J = 0.3
    against its stored value, for both enumeration methods.
    """
    box = build_box(2, 0, 1)
    for method in ("currents", "spin"):
        estimate = chi_finite_exact(box, 0.3, method=method)
        assert np.isclose(estimate.value, 3.087481225324779, rtol=1e-10)
