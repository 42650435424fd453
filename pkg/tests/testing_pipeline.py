"""
testing_pipeline module
===================
This module checks that the module
*verification/verification_pipeline.py* builds the correct pipeline of
check suites and that the suites run on named instances.
"""

from functools import partial

import pytest

from ising_crossover import data_io
from ising_crossover import smart_file as sm
from ising_crossover.verification import verification_functions, verification_pipeline


def get_func_name(
    func_list: list
) -> list:
    """
    Returns a list of strings with the path of the functions inside.

    This function generates a list with the path of the functions
    inside `func_list` converted to strings. It internally checks
    whether the function is a partial function or not.

    Parameters
    ----------
    func_list: list
        list containing the callable functions

    Returns
    --------
    list
        list containing the function names converted in strings
    """
    function_name_list = []
    for func in func_list:
        if isinstance(func, partial):
            func = func.func
        function_name_list.append(func.__module__ + "." + func.__name__)
    return function_name_list


MODULE = "ising_crossover.verification.verification_functions."


def settings() -> dict:
    return data_io.load_settings(environ={})


def test_all_scope():
    """
    This function tests that the 'all' scope runs the four suites in
    order.
    """
    pipeline = verification_pipeline.build_verification_pipeline(
        settings(), sm.SmartFile(), "all"
    )
    assert get_func_name(pipeline) == [
        MODULE + "identity_suite", MODULE + "backbone_suite",
        MODULE + "property_suite", MODULE + "chain_suite"
    ]


@pytest.mark.parametrize("scope, name", [
    ("identities", "identity_suite"),
    ("backbone", "backbone_suite"),
    ("Properties", "property_suite"),
    ("chain", "chain_suite")
])
def test_single_scope(scope, name):
    """
    This function tests that a single scope selects its suite, whatever
    the case of the keyword.
    """
    pipeline = verification_pipeline.build_verification_pipeline(
        settings(), sm.SmartFile(), scope
    )
    assert get_func_name(pipeline) == [MODULE + name]


def test_invalid_scope():
    """
    This function tests that an invalid scope raises TypeError.
    """
    with pytest.raises(TypeError):
        verification_pipeline.build_verification_pipeline(
            settings(), sm.SmartFile(), "everything"
        )


def test_named_instance_runs():
    """
    This function tests the number of checks run on named instances:
    two identities per instance, one backbone expansion per pair, one
    record per path inequality and no chain check off the box.
    """
    config = settings()
    results_file = sm.SmartFile()
    names = ["single-edge", "four-cycle"]
    identities, backbone, properties, chain = (
        suite() for suite in verification_pipeline.build_verification_pipeline(
            config, results_file, "all", names
        )
    )
    assert len(identities) == 4
    assert len(backbone) == 1 + 6
    assert len(properties) == 6
    assert chain == []
    assert all(record.passed for record in identities + backbone + properties)


def test_box_instance_runs_the_chain():
    """
    This function tests that the (1+1) box runs the inequality chain on
    the coupling grid, with the splitting bound among its path checks.
    """
    config = settings()
    names = ["box-1+1-N1"]
    chain = verification_functions.chain_suite(config, sm.SmartFile(), names)
    grid = config["verification"]["chain_couplings"]
    assert sum(r.check == "chain_exact_le_split" for r in chain) == len(grid) ** 2
    assert all(record.passed for record in chain)
    properties = verification_functions.property_suite(config, sm.SmartFile(), names)
    assert [r.check for r in properties] == [
        "tanh_bound", "property_a", "property_b", "splitting_bound"
    ]
    assert all(record.passed for record in properties)


def test_unknown_instance():
    """
    This function tests that an unknown instance name raises ValueError.
    """
    with pytest.raises(ValueError):
        verification_functions.identity_suite(settings(), sm.SmartFile(), ["cube"])


def test_random_boxes_check_the_splitting_bound():
    """
    This function tests that the randomized property run includes boxes
    with random edge weights, each with a passing splitting bound record.
    """
    config = settings()
    config["verification"].update(
        random_property_instances=2, random_box_instances=3, gks_trials=2
    )
    records = verification_functions.property_suite(config, sm.SmartFile())
    splitting = [
        r for r in records
        if r.check == "splitting_bound" and r.instance.startswith("random-box-")
    ]
    assert [r.instance for r in splitting] == [
        "random-box-0", "random-box-1", "random-box-2"
    ]
    assert all(r.passed and r.rhs > 0 for r in splitting)
    assert all(record.passed for record in records)


def test_series_records_flag_the_starting_terms():
    """
    This function tests that every series record states whether the
    configured number of terms already reached the tail target: far
    from the radius of convergence it does, close to it more terms are
    needed.
    """
    records = verification_functions.chain_suite(
        settings(), sm.SmartFile(), ["box-1+1-N1"]
    )
    series = {
        r.instance.split(" terms=")[0]: r for r in records
        if r.check == "series_tail"
    }
    assert all(record.passed for record in series.values())
    assert series["box-1+1-N1 J_d=0.05 J_s=0.05"].instance.endswith(
        "within_start=yes"
    )
    slow = series["box-1+1-N1 J_d=0.1625 J_s=0.275"]
    assert slow.instance.endswith("within_start=no")
    assert int(slow.instance.split("terms=")[1].split()[0]) > 51
