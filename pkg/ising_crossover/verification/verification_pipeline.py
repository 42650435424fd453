"""
verification_pipeline module
===================
This module contains a single function that creates the pipeline
of verification suites.

Based on the requested scope, the function selects the suites of the
'verification_functions' module to run and fixes their arguments.
"""

from functools import partial

from ising_crossover import smart_file as sm
from . import verification_functions

SUITE_ORDER = ("identities", "backbone", "properties", "chain")


def build_verification_pipeline(
    settings: dict,
    results_file: sm.SmartFile,
    scope: str,
    names=None
) -> list:
    """
    Builds the pipeline of verification suites for a scope.

    Each keyword of `scope_dict` is associated with the suites of the
    `verification_functions` module it runs. Every returned function
    takes no argument and returns its list of CheckRecord, writing them
    to `results_file`.

    Parameters
    ----------
    settings: dict
        Settings with the 'caps' and 'verification' sections.
    results_file: SmartFile
        File-like object that records results if its internal `enabled`
        flag is True.
    scope: str
        'identities', 'backbone', 'properties', 'chain' or 'all'.
    names: list of str, optional
        Restricts the suites to these fixed instances.

    Returns
    -------
    list
        Partial functions to be executed in order.

    Raises
    ------
    TypeError
        If the scope keyword is not valid.

    See Also
    --------
    verification_functions: module with the check suites.
    functools.partial: class to create partial functions to fix some
    arguments.
    """
    suite_dict = {
        "identities": verification_functions.identity_suite,
        "backbone": verification_functions.backbone_suite,
        "properties": verification_functions.property_suite,
        "chain": verification_functions.chain_suite
    }
    scope_dict = {key: (key,) for key in SUITE_ORDER}
    scope_dict["all"] = SUITE_ORDER

    try:
        selected = scope_dict[scope.lower()]
    except KeyError:
        raise TypeError(
            "Invalid value for 'scope'. Use 'identities', 'backbone', "
            "'properties', 'chain' or 'all'."
        ) from None

    return [
        partial(suite_dict[key], settings, results_file, names)
        for key in selected
    ]
