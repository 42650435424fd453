"""
verification_functions module
===================
This module contains the check suites run by the 'verify' command.

Each suite takes the settings dictionary and a SmartFile, runs its checks
on a fixed list of small instances (single edge, tree, 4-cycle, 3×3 grid,
the (1+1) box with N = 1, ...) and, unless the run is restricted to named
instances, on seeded random instances. Every check produces a
`CheckRecord` that is written to the results file.

Suites
------
identity_suite
    Partition and two-point functions from the current expansion against
    the spin oracle; agreement of the susceptibility estimators.
backbone_suite
    Backbone expansion against the spin oracle; grouping of the sourced
    parity classes by their backbone.
property_suite
    tanh bound, properties a and b and the splitting bound on enumerated
    paths; GKS monotonicity; split/concatenate identity on the fixtures.
chain_suite
    Inequality chain on the (1+1) box over a grid of couplings, series
    truncation, 1-d closed form and bound inversion.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from ising_crossover import data_io
from ising_crossover import smart_file as sm
from ising_crossover.expansion import backbone as bb
from ising_crossover.expansion.currents import CurrentExpansion
from ising_crossover.expansion.spin_oracle import (
    Couplings, couplings_weights, partition_spin, two_point_spin
)
from ising_crossover.lattice import (
    BoxGeometry, EdgeGraph, build_box, indices_of, mask_from_indices,
    path_from_vertices, random_graph, slab_of
)
from ising_crossover.susceptibility import bound_curve as bc
from ising_crossover.susceptibility import susceptibility_functions as sf

LOG_WEIGHT_RANGE = (math.log(0.05), math.log(1.5))
CHI_TOLERANCE = 1e-9
CHAIN_TOLERANCE = 1e-8
INVERSION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CheckRecord:
    """
    One verification check.

    Attributes
    ----------
    check: str
        Name of the checked identity or inequality.
    instance: str
        Instance descriptor.
    lhs, rhs: float
        The two compared quantities. Aggregated inequality checks store
        the number of violations and the number of checked cases.
    tolerance: float
        Relative tolerance or absolute slack of the comparison.
    passed: bool
        Verdict.
    """
    check: str
    instance: str
    lhs: float
    rhs: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        record = asdict(self)
        for key in ("lhs", "rhs"):
            record[key] = float(record[key])
            if not math.isfinite(record[key]):
                record[key] = data_io.format_value(record[key])
        record["passed"] = bool(record["passed"])
        return record

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict} {self.check} [{self.instance}] "
            f"lhs = {self.lhs:.12g} rhs = {self.rhs:.12g} "
            f"tolerance = {self.tolerance:g}"
        )


@dataclass(frozen=True)
class Instance:
    """
    A named graph with its edge weights.
    """
    name: str
    graph: EdgeGraph
    weights: np.ndarray


def fixed_instances() -> list:
    """
    The deterministic instances shared by the suites.
    """
    box = build_box(1, 1, 1)
    return [
        Instance("single-edge", EdgeGraph(2, [(0, 1)]), np.array([0.7])),
        Instance(
            "tree", EdgeGraph(6, [(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)]),
            np.array([0.3, 0.8, 0.5, 1.1, 0.2])
        ),
        Instance(
            "four-cycle", EdgeGraph(4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
            np.full(4, 0.4)
        ),
        Instance(
            "triangle-tail",
            EdgeGraph(5, [(0, 1), (1, 2), (2, 3), (1, 3), (1, 4)]),
            np.array([0.6, 0.3, 0.9, 0.45, 0.25])
        ),
        Instance("grid-3x3", sf.strip_graph(3, 3), np.full(12, 0.3)),
        Instance(
            "box-1+1-N1", box, couplings_weights(box, Couplings(0.3, 0.1))
        )
    ]


def select_instances(names=None, max_edges: int = None) -> list:
    """
    Fixed instances, restricted to `names` and to at most `max_edges`
    edges.

    Raises
    ------
    ValueError
        If a name is unknown.
    """
    instances = fixed_instances()
    if names is not None:
        known = {instance.name for instance in instances}
        unknown = set(names) - known
        if unknown:
            raise ValueError(
                f"Unknown instance(s) {sorted(unknown)}. Use one of "
                f"{sorted(known)}."
            )
        instances = [i for i in instances if i.name in names]
    if max_edges is not None:
        instances = [i for i in instances if i.graph.num_edges <= max_edges]
    return instances


def random_instance(
    rng: np.random.Generator,
    name: str,
    max_vertices: int,
    max_edges: int,
    max_cyclomatic: int
) -> Instance:
    """
    Random connected graph with weights log-uniform in [0.05, 1.5].
    """
    n = min(int(rng.integers(3, max_vertices + 1)), max_edges + 1)
    cyclomatic = int(rng.integers(0, max_cyclomatic + 1))
    n_edges = min(n - 1 + cyclomatic, max_edges, n * (n - 1) // 2)
    graph = random_graph(rng, n, n_edges)
    weights = np.exp(rng.uniform(*LOG_WEIGHT_RANGE, size=graph.num_edges))
    return Instance(name, graph, weights)


def random_box_instance(rng: np.random.Generator, name: str) -> Instance:
    """
    The (1+1) box with N = 1 and per-edge weights log-uniform in
    [0.05, 1.5].
    """
    box = build_box(1, 1, 1)
    weights = np.exp(rng.uniform(*LOG_WEIGHT_RANGE, size=box.num_edges))
    return Instance(name, box, weights)


def _random_instances(rng, count, max_vertices, max_edges, max_cyclomatic):
    return [
        random_instance(
            rng, f"random-{k}", max_vertices, max_edges, max_cyclomatic
        )
        for k in range(count)
    ]


def _random_pair(rng, graph: EdgeGraph) -> tuple:
    x, y = rng.choice(graph.n_vertices, size=2, replace=False)
    return int(x), int(y)


def _close(lhs: float, rhs: float, tolerance: float, slack: float) -> bool:
    return abs(lhs - rhs) <= tolerance * abs(rhs) + slack


def _emit(records: list, results_file: sm.SmartFile, record: CheckRecord):
    records.append(record)
    results_file.record(record)


def _expansion(instance: Instance, caps: dict) -> CurrentExpansion:
    return CurrentExpansion(
        instance.graph, instance.weights, caps["max_cyclomatic"],
        caps["max_edges"]
    )


def identity_suite(
    settings: dict,
    results_file: sm.SmartFile,
    names=None
) -> list:
    """
    Compares the current expansion with the spin oracle.

    For every instance the partition function and one two-point function
    are computed both ways. Unless `names` restricts the run, seeded
    random graphs follow, and the exact susceptibility estimators are
    compared with each other (currents against spin sums, transfer matrix
    against enumeration).

    Parameters
    ----------
    settings: dict
        Settings with the 'caps' and 'verification' sections.
    results_file: SmartFile
        File-like object that records results if its internal `enabled`
        flag is True.
    names: list of str, optional
        Restricts the run to these fixed instances.

    Returns
    -------
    list of CheckRecord
    """
    caps = settings["caps"]
    params = settings["verification"]
    tolerance = params["relative_tolerance"]
    slack = params["absolute_slack"]
    rng = np.random.default_rng([params["seed"], 0])

    instances = select_instances(names, caps["max_edges"])
    if names is None:
        instances += _random_instances(
            rng, params["random_graphs"], params["max_vertices"],
            min(params["max_random_edges"], caps["max_edges"]),
            params["max_random_cyclomatic"]
        )

    records = []
    for instance in instances:
        graph, weights = instance.graph, instance.weights
        full = graph.full_mask
        expansion = _expansion(instance, caps)
        z_currents = expansion.partition(full)
        z_spin = partition_spin(graph, full, weights, max_spins=caps["max_spins"])
        _emit(records, results_file, CheckRecord(
            "partition", instance.name, z_currents, z_spin, tolerance,
            _close(z_currents, z_spin, tolerance, slack)
        ))
        x, y = _random_pair(rng, graph)
        ratio = expansion.two_point(full, x, y)
        oracle = two_point_spin(
            graph, full, weights, x, y, max_spins=caps["max_spins"]
        )
        _emit(records, results_file, CheckRecord(
            "two_point", f"{instance.name} x={x} y={y}", ratio, oracle,
            tolerance, _close(ratio, oracle, tolerance, slack)
        ))

    if names is not None:
        return records

    for d, s, N, J_d, J_s in ((1, 0, 1, 0.5, 0.0), (2, 0, 1, 0.3, 0.0),
                              (1, 1, 1, 0.3, 0.1)):
        box = build_box(d, s, N)
        by_currents = sf.chi_finite_exact(
            box, J_d, J_s, "currents", max_cyclomatic=caps["max_cyclomatic"]
        )
        by_spins = sf.chi_finite_exact(
            box, J_d, J_s, "spin", max_spins=caps["max_spins"]
        )
        _emit(records, results_file, CheckRecord(
            "chi_currents_vs_spin", f"box d={d} s={s} N={N} J_d={J_d} J_s={J_s}",
            by_currents.value, by_spins.value, CHI_TOLERANCE,
            _close(by_currents.value, by_spins.value, CHI_TOLERANCE, slack)
        ))
    for width, length, J_d in ((2, 2, 0.3), (3, 3, 0.3), (3, 4, 0.25)):
        transfer = sf.chi_2d_strip(width, length, J_d, caps["max_strip_width"])
        enumeration = sf.chi_finite_exact(
            sf.strip_graph(width, length), J_d,
            max_cyclomatic=caps["max_cyclomatic"]
        )
        _emit(records, results_file, CheckRecord(
            "chi_transfer_vs_enumeration",
            f"strip {width}x{length} J_d={J_d}", transfer.value,
            enumeration.value, CHI_TOLERANCE,
            _close(transfer.value, enumeration.value, CHI_TOLERANCE, slack)
        ))
    return records


def backbone_suite(
    settings: dict,
    results_file: sm.SmartFile,
    names=None
) -> list:
    """
    Checks ⟨σ_x σ_y⟩ = Σ_(ω∈C_xy) ρ(ω) for every pair x < y of every fixed
    instance. Unless `names` restricts the run, random graphs of small
    cyclomatic number follow, each with one expansion check and one
    backbone partition check.

    Returns
    -------
    list of CheckRecord
    """
    caps = settings["caps"]
    params = settings["verification"]
    tolerance = params["relative_tolerance"]
    rng = np.random.default_rng([params["seed"], 1])
    property_edges = min(params["property_max_edges"], caps["max_edges"])

    records = []
    for instance in select_instances(names, caps["max_edges"]):
        graph = instance.graph
        expansion = _expansion(instance, caps)
        for x in range(graph.n_vertices):
            for y in range(x + 1, graph.n_vertices):
                report = bb.backbone_expansion_check(
                    graph, graph.full_mask, instance.weights, x, y, expansion,
                    caps["max_paths"], tolerance
                )
                _emit(records, results_file, CheckRecord(
                    "backbone_expansion", f"{instance.name} x={x} y={y}",
                    report.lhs, report.rhs, tolerance, report.passed
                ))
    if names is not None:
        return records

    for instance in _random_instances(
        rng, params["random_property_instances"],
        params["property_max_vertices"], property_edges,
        params["property_max_cyclomatic"]
    ):
        graph = instance.graph
        expansion = _expansion(instance, caps)
        x, y = _random_pair(rng, graph)
        descriptor = f"{instance.name} x={x} y={y}"
        report = bb.backbone_expansion_check(
            graph, graph.full_mask, instance.weights, x, y, expansion,
            caps["max_paths"], tolerance
        )
        _emit(records, results_file, CheckRecord(
            "backbone_expansion", descriptor, report.lhs, report.rhs,
            tolerance, report.passed
        ))
        partition = bb.backbone_partition_check(
            graph, graph.full_mask, instance.weights, x, y, expansion, tolerance
        )
        _emit(records, results_file, CheckRecord(
            "backbone_partition", descriptor, partition.grouped_total,
            partition.sourced_total, tolerance, partition.passed
        ))
    return records


def sample_paths(graph: EdgeGraph, edges: int, limit: int, max_paths: int) -> list:
    """
    Consistent paths of the pairs x < y in order, at most `limit` of them.
    """
    paths = []
    for x in range(graph.n_vertices):
        for y in range(x + 1, graph.n_vertices):
            paths += bb.enumerate_consistent_paths(
                graph, edges, x, y, max_paths=max_paths
            )
            if len(paths) >= limit:
                return paths[:limit]
    return paths


def _path_inequalities(instance, caps, params, rng) -> dict:
    graph, weights = instance.graph, instance.weights
    full = graph.full_mask
    expansion = _expansion(instance, caps)
    checks = {"tanh_bound": [0, 0], "property_a": [0, 0], "property_b": [0, 0]}
    splitting = isinstance(graph, BoxGeometry) and graph.s >= 1
    if splitting:
        checks["splitting_bound"] = [0, 0]

    def tally(name, holds):
        checks[name][0] += not holds
        checks[name][1] += 1

    for path in sample_paths(
        graph, full, params["max_property_paths"], caps["max_paths"]
    ):
        tally("tanh_bound", bb.check_tanh_bound(graph, full, weights, path, expansion))
        dropped = [
            e for e in indices_of(full & ~path.edge_mask) if rng.random() < 0.3
        ]
        tally("property_a", bb.check_property_a(
            graph, full & ~mask_from_indices(dropped), full, weights, path,
            expansion
        ))
        if path.length >= 2:
            k = int(rng.integers(1, path.length))
            first = path_from_vertices(graph, path.vertices[:k + 1])
            second = path_from_vertices(graph, path.vertices[k:])
            tally("property_b", bb.check_property_b(
                graph, full, weights, first, second, expansion
            ))
        if splitting:
            tally("splitting_bound", bb.check_splitting_bound(
                graph, full, weights, path, expansion
            ))
    return checks


def property_suite(
    settings: dict,
    results_file: sm.SmartFile,
    names=None
) -> list:
    """
    Checks the inequalities satisfied by the backbone weights.

    On every instance, for a bounded sample of enumerated paths:
    ρ_E(ω) ≤ Π tanh, ρ_E(ω) ≤ ρ_U(ω) for a random U between ω and E, the
    factorization at a random cut of ω and, on boxes, the splitting
    bound. One aggregated record per instance and inequality stores the
    number of violations (lhs) and of checked paths (rhs). Unless `names`
    restricts the run, random instances, GKS monotonicity trials, the
    slab GKS step and the split/concatenate identity on the fixture paths
    follow.

    Returns
    -------
    list of CheckRecord
    """
    caps = settings["caps"]
    params = settings["verification"]
    slack = params["absolute_slack"]
    rng = np.random.default_rng([params["seed"], 2])
    property_edges = min(params["property_max_edges"], caps["max_edges"])

    instances = select_instances(names, caps["max_edges"])
    if names is None:
        instances += _random_instances(
            rng, params["random_property_instances"],
            params["property_max_vertices"], property_edges,
            params["property_max_cyclomatic"]
        )
        if build_box(1, 1, 1).num_edges <= caps["max_edges"]:
            instances += [
                random_box_instance(rng, f"random-box-{k}")
                for k in range(params["random_box_instances"])
            ]

    records = []
    for instance in instances:
        for check, (violations, checked) in _path_inequalities(
            instance, caps, params, rng
        ).items():
            _emit(records, results_file, CheckRecord(
                check, instance.name, violations, checked, slack,
                violations == 0
            ))
    if names is not None:
        return records

    violations = 0
    for trial in range(params["gks_trials"]):
        instance = random_instance(
            rng, f"gks-{trial}", params["property_max_vertices"],
            property_edges, params["property_max_cyclomatic"]
        )
        graph, weights = instance.graph, instance.weights
        x, y = _random_pair(rng, graph)
        bumped = weights.copy()
        bumped[int(rng.integers(graph.num_edges))] += rng.uniform(0.01, 0.5)
        before = two_point_spin(graph, graph.full_mask, weights, x, y)
        after = two_point_spin(graph, graph.full_mask, bumped, x, y)
        violations += after < before - slack
    _emit(records, results_file, CheckRecord(
        "gks_monotonicity", "random single-coupling increases", violations,
        params["gks_trials"], slack, violations == 0
    ))

    for d in (1, 2):
        box = build_box(d, 1, 1)
        expansion = CurrentExpansion(
            box, couplings_weights(box, Couplings(0.4, 0.2))
        )
        slab = slab_of(box, 0)
        slab_edges = indices_of(slab.edge_mask)
        violations = checked = 0
        for _ in range(10):
            removed = mask_from_indices(
                e for e in slab_edges if rng.random() < 0.4
            )
            for i, x in enumerate(slab.vertex_indices):
                for y in slab.vertex_indices[i + 1:]:
                    violations += not bb.check_slab_gks(
                        box, removed, expansion.weights, x, y, expansion
                    )
                    checked += 1
        _emit(records, results_file, CheckRecord(
            "slab_gks", f"box d={d} s=1 N=1 central slab", violations,
            checked, slack, violations == 0
        ))

    for fixture in data_io.read_fixture_paths():
        split = bb.split_path(fixture.path, fixture.box)
        holds = (
            split.vertices() == fixture.path.vertices
            and split.n == fixture.n_vertical
        )
        _emit(records, results_file, CheckRecord(
            "split_concatenate", f"fixture {fixture.name}", split.n,
            fixture.n_vertical, 0.0, holds
        ))
    return records


def chain_suite(
    settings: dict,
    results_file: sm.SmartFile,
    names=None
) -> list:
    """
    Checks the susceptibility bound machinery.

    On the (1+1) box with N = 1, for every pair of the coupling grid:
    exact χ ≤ path-split bound ≤ geometric bound, and, where the series
    converges, the truncated series reaches a tail below the target
    (doubling the number of terms from the configured start when
    needed). Then the closed-form chain susceptibility against a chain
    of 81 sites and the bound inversion at J_d = 0.5 against bisection.

    Returns
    -------
    list of CheckRecord
    """
    caps = settings["caps"]
    params = settings["verification"]
    tolerance = params["relative_tolerance"]
    if names is not None and "box-1+1-N1" not in names:
        return []

    records = []
    box = build_box(1, 1, 1)
    grid = params["chain_couplings"]
    for (J_d, J_s), report in bc.chain_grid(
        box, grid, grid, max_spins=caps["max_spins"],
        max_paths=caps["max_paths"]
    ):
        descriptor = f"box-1+1-N1 J_d={J_d:g} J_s={J_s:g}"
        _emit(records, results_file, CheckRecord(
            "chain_exact_le_split", descriptor, report.exact,
            report.path_split, tolerance,
            report.exact <= report.path_split * (1.0 + tolerance)
        ))
        _emit(records, results_file, CheckRecord(
            "chain_split_le_geometric", descriptor, report.path_split,
            report.geometric, tolerance,
            report.path_split <= report.geometric * (1.0 + tolerance)
        ))
        if math.isinf(report.geometric):
            continue
        n_max = params["series_terms"]
        series = bc.truncated_series(report.chi_slab, box.s, J_s, n_max)
        # near the radius of convergence the configured start is not enough
        within_start = series.tail_bound < params["series_tail"]
        while series.tail_bound >= params["series_tail"] and n_max < 100_000:
            n_max *= 2
            series = bc.truncated_series(report.chi_slab, box.s, J_s, n_max)
        _emit(records, results_file, CheckRecord(
            "series_tail",
            f"{descriptor} terms={series.terms} "
            f"within_start={'yes' if within_start else 'no'}",
            series.tail_bound, params["series_tail"], tolerance,
            series.tail_bound < params["series_tail"] and math.isclose(
                series.partial_sum + series.tail_bound, report.geometric,
                rel_tol=tolerance
            )
        ))

    if names is not None:
        return records
    for J in (0.1, 0.3, 0.5):
        closed = sf.chi_1d_exact(J).value
        chain = sf.chi_2d_strip(1, 81, J).value
        _emit(records, results_file, CheckRecord(
            "chi_1d_closed_form", f"chain N=40 J={J}", closed, chain,
            CHAIN_TOLERANCE, _close(closed, chain, CHAIN_TOLERANCE, 0.0)
        ))
    point = bc.bound_curve(1, 1, [0.5], "exact1d")[0]
    reference = optimize.bisect(
        lambda j: math.tanh(j) - math.exp(-1.0) / 2.0, 0.0, 1.0,
        xtol=1e-15, maxiter=200
    )
    _emit(records, results_file, CheckRecord(
        "bound_inversion", "d=1 s=1 J_d=0.5", point.js_bound, reference,
        INVERSION_TOLERANCE,
        abs(point.js_bound - reference) <= INVERSION_TOLERANCE
    ))
    return records
