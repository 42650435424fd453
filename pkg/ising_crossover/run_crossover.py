"""
run_crossover module
===================
This module is the main script of the project. It exposes the library
through four subcommands:

    verify  runs the verification suites and writes a check report;
    curve   writes a sub-criticality bound curve as CSV;
    chi     prints a susceptibility value from one or more methods;
    mc      runs the Monte Carlo samplers on a torus.

The run configuration is read from 'settings.json' (see `data_io`), and
every data file is written with a manifest alongside. Exit status is 0
when every check passes, 1 when a check fails and 2 on a usage or
validation error.

Run it with `python -m ising_crossover.run_crossover <command> ...`.
"""

import argparse
import csv
import math
import os
import sys

from ising_crossover import data_io
from ising_crossover import smart_file as sm
from ising_crossover.expansion.spin_oracle import Couplings
from ising_crossover.lattice import build_box
from ising_crossover.montecarlo import curve_scan
from ising_crossover.montecarlo import montecarlo_functions as mc
from ising_crossover.susceptibility import bound_curve as bc
from ising_crossover.susceptibility import susceptibility_functions as sf
from ising_crossover.verification import verification_pipeline

EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

CHI_AGREEMENT = 1e-9
MC_HEADER = ("algorithm", "j_d", "j_s", "L", "proxy", "standard_error", "statistic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        "ising_crossover",
        description="Anisotropic Ising verification lab and bound curves."
    )
    parser.add_argument(
        "--settings", default=None,
        help="Settings file (default: settings.json at the repository root)."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="Run the verification suites.")
    verify.add_argument(
        "--scope", default="all",
        help="identities, backbone, properties, chain or all (default: all)."
    )
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--max-spins", type=int, default=None)
    verify.add_argument("--max-cyclomatic", type=int, default=None)
    verify.add_argument("--max-edges", type=int, default=None)
    verify.add_argument("--max-paths", type=int, default=None)
    verify.add_argument(
        "--instance", action="append", default=None,
        help="Restrict the run to a fixed instance (repeatable)."
    )
    verify.add_argument(
        "--results", nargs="?", const="verification_report.json",
        help="Write the check report to a file (default: "
        "verification_report.json in output_files/)."
    )
    verify.add_argument("--format", default="json", choices=("json", "text"))

    curve = commands.add_parser("curve", help="Write a bound curve as CSV.")
    curve.add_argument("--d", type=int, required=True)
    curve.add_argument("--s", type=int, required=True)
    curve.add_argument("--jd-min", type=float, required=True)
    curve.add_argument("--jd-max", type=float, required=True)
    curve.add_argument("--step", type=float, required=True)
    curve.add_argument(
        "--estimator", default="exact1d",
        help="exact1d, enumeration, transfer or extrapolated."
    )
    curve.add_argument("--out", required=True)
    curve.add_argument("--workers", type=int, default=None)

    chi = commands.add_parser("chi", help="Compute a susceptibility.")
    chi.add_argument("--d", type=int, required=True)
    chi.add_argument("--J", type=float, required=True, help="Coupling J_d.")
    chi.add_argument("--N", type=int, default=None, help="Box half side.")
    chi.add_argument("--width", type=int, default=None)
    chi.add_argument("--length", type=int, default=None)
    chi.add_argument(
        "--method", action="append", default=None,
        choices=("spin", "currents", "transfer", "closed-form"),
        help="Repeat to compare several methods (default: currents)."
    )

    monte_carlo = commands.add_parser("mc", help="Run the Monte Carlo samplers.")
    monte_carlo.add_argument("--d", type=int, required=True)
    monte_carlo.add_argument("--s", type=int, required=True)
    monte_carlo.add_argument("--L", type=int, default=4)
    monte_carlo.add_argument("--jd", type=float, required=True)
    monte_carlo.add_argument("--js", type=float, default=0.0)
    monte_carlo.add_argument("--seed", type=int, required=True)
    monte_carlo.add_argument("--sweeps", type=int, default=None)
    monte_carlo.add_argument("--burn-in", type=int, default=None)
    monte_carlo.add_argument("--chains", type=int, default=None)
    monte_carlo.add_argument(
        "--algorithm", default=None, help="metropolis, wolff or both."
    )
    monte_carlo.add_argument(
        "--compare-exact", action="store_true",
        help="Compare with the exact proxy of the torus (at most 16 sites)."
    )
    monte_carlo.add_argument(
        "--scan", action="store_true",
        help="Scan below the bound at J_d = --jd over the torus sides --sizes."
    )
    monte_carlo.add_argument("--sizes", type=int, nargs="+", default=None)
    monte_carlo.add_argument("--margin", type=float, default=None)
    monte_carlo.add_argument("--out", default=None)
    return parser


def _output_path(file_name: str) -> str:
    output_dir = os.path.join(data_io.BASE_DIR, "output_files")
    os.makedirs(output_dir, exist_ok=True)
    return os.path.join(output_dir, file_name)


def cmd_verify(args, settings: dict) -> int:
    caps = settings["caps"]
    for key in ("max_spins", "max_cyclomatic", "max_edges", "max_paths"):
        value = getattr(args, key)
        if value is not None:
            if value < 1:
                raise ValueError(f"--{key.replace('_', '-')} must be positive.")
            caps[key] = value
    if args.seed is not None:
        settings["verification"]["seed"] = args.seed

    results_file = sm.SmartFile()
    pipeline = verification_pipeline.build_verification_pipeline(
        settings, results_file, args.scope, args.instance
    )
    report_path = _output_path(args.results) if args.results else None
    if report_path:
        results_file.setup(report_path, args.format)
    records = []
    try:
        for suite in pipeline:
            records += suite()
    finally:
        results_file.close()
    if report_path:
        data_io.write_manifest(report_path, "verify", {
            "scope": args.scope, "instances": args.instance,
            "format": args.format, "caps": caps,
            "verification": settings["verification"]
        }, seeds=[settings["verification"]["seed"]])

    failed = [record for record in records if not record.passed]
    for record in failed:
        print(record)
    print(f"{len(records)} checks, {len(failed)} failed.")
    return EXIT_FAILURE if failed else EXIT_PASS


def jd_grid(jd_min: float, jd_max: float, step: float) -> list:
    """
    jd_min, jd_min + step, ... up to jd_max, rounded to 12 decimals.

    Raises
    ------
    ValueError
        If not 0 < jd_min ≤ jd_max or step ≤ 0.
    """
    if not (0 < jd_min <= jd_max):
        raise ValueError(
            f"Need 0 < jd-min <= jd-max, got {jd_min} and {jd_max}."
        )
    if not step > 0:
        raise ValueError(f"'step' must be positive, got {step}.")
    count = int(math.floor((jd_max - jd_min) / step + 1e-9)) + 1
    return [round(jd_min + k * step, 12) for k in range(count)]


def cmd_curve(args, settings: dict) -> int:
    options = settings["curve"]
    grid = jd_grid(args.jd_min, args.jd_max, args.step)
    workers = args.workers if args.workers is not None else options["workers"]
    curve = bc.bound_curve(
        args.d, args.s, grid, args.estimator, workers,
        N=options["N"], width=options["width"], length=options["length"],
        extrapolation_widths=options["extrapolation_widths"],
        max_width=settings["caps"]["max_strip_width"],
        max_cyclomatic=settings["caps"]["max_cyclomatic"]
    )
    data_io.write_curve_csv(args.out, curve)
    data_io.write_manifest(args.out, "curve", {
        "d": args.d, "s": args.s, "jd_min": args.jd_min,
        "jd_max": args.jd_max, "step": args.step,
        "estimator": args.estimator, "curve": options
    })
    print(f"{len(curve)} points written to {args.out}.")
    return EXIT_PASS


def cmd_chi(args, settings: dict) -> int:
    caps = settings["caps"]
    methods = args.method or ["currents"]
    if args.width is not None or args.length is not None:
        if args.d != 2 or args.width is None or args.length is None:
            raise ValueError("Strips need --d 2 with both --width and --length.")
        region = sf.strip_graph(args.width, args.length)
    elif args.N is not None:
        region = build_box(args.d, 0, args.N, caps["max_edges"])
    else:
        region = None

    method_dict = {
        "spin": lambda: sf.chi_finite_exact(
            _required(region), args.J, method="spin",
            max_spins=caps["max_spins"]
        ),
        "currents": lambda: sf.chi_finite_exact(
            _required(region), args.J, method="currents",
            max_cyclomatic=caps["max_cyclomatic"]
        ),
        "transfer": lambda: sf.chi_2d_strip(
            _strip_width(args), args.length, args.J, caps["max_strip_width"]
        ),
        "closed-form": lambda: _closed_form(args)
    }
    estimates = {}
    for method in methods:
        estimates[method] = method_dict[method]()
        estimate = estimates[method]
        print(
            f"{method}: chi = {data_io.format_value(estimate.value)} "
            f"({estimate.provenance})"
        )

    finite = [
        estimates[m] for m in ("spin", "currents", "transfer") if m in estimates
    ]
    for estimate in finite[1:]:
        if abs(estimate.value - finite[0].value) > CHI_AGREEMENT * finite[0].value:
            print("Methods disagree.")
            return EXIT_FAILURE
    return EXIT_PASS


def _required(region):
    if region is None:
        raise ValueError("Enumeration needs --N (box) or --width/--length (strip).")
    return region


def _strip_width(args) -> int:
    if args.d != 2 or args.width is None or args.length is None:
        raise ValueError("The transfer method needs --d 2, --width and --length.")
    return args.width


def _closed_form(args):
    if args.d != 1:
        raise ValueError("The closed form is only available for d = 1.")
    return sf.chi_1d_exact(args.J)


def cmd_mc(args, settings: dict) -> int:
    options = settings["montecarlo"]
    algorithm = (args.algorithm or options["algorithm"]).lower()
    samplers = {
        "metropolis": (mc.run_metropolis,),
        "wolff": (mc.run_wolff,),
        "both": (mc.run_metropolis, mc.run_wolff)
    }
    try:
        selected = samplers[algorithm]
    except KeyError:
        raise TypeError(
            "Invalid value for 'algorithm'. Use 'metropolis', 'wolff' or 'both'."
        ) from None
    template = mc.McConfig(
        args.d, args.s, args.L, Couplings(args.jd, args.js),
        args.sweeps if args.sweeps is not None else options["sweeps"],
        args.burn_in if args.burn_in is not None else options["burn_in"],
        args.chains if args.chains is not None else options["chains"],
        args.seed
    )
    if args.compare_exact and template.chains < 2:
        raise ValueError(
            "--compare-exact needs at least 2 chains for a standard error."
        )

    rows = []
    status = EXIT_PASS
    if args.scan:
        estimator = "exact1d" if args.d == 1 else "transfer"
        curve = bc.bound_curve(
            args.d, args.s, [args.jd], estimator,
            width=settings["curve"]["width"], length=settings["curve"]["length"]
        )
        margin = args.margin if args.margin is not None else options["margin"]
        for run in selected:
            name = "wolff" if run is mc.run_wolff else "metropolis"
            for record in curve_scan.scan_curve(
                template, curve, margin, args.sizes or options["sizes"], name,
                options["saturation_threshold"]
            ):
                rows += [_mc_row(e) for e in record.estimates.values()]
                print(
                    f"{name}: J_d = {record.J_d:g}, J_s = {record.J_s:.6g} "
                    f"(bound {record.js_bound:.6g}), relative change "
                    f"{record.relative_change:.4g}, "
                    f"{'saturating' if record.saturates else 'growing'}"
                )
    else:
        exact = None
        if args.compare_exact:
            exact = mc.torus_proxy_exact(
                args.d, args.s, args.L, template.couplings
            )
            print(f"exact proxy = {data_io.format_value(exact)}")
        for run in selected:
            estimate = run(template)
            rows.append(_mc_row(estimate))
            print(
                f"{estimate.algorithm}: proxy = "
                f"{data_io.format_value(estimate.proxy)} ± "
                f"{data_io.format_value(estimate.standard_error)}"
            )
            if exact is not None and not estimate.agrees_with(exact):
                print(f"{estimate.algorithm} disagrees with the exact proxy.")
                status = EXIT_FAILURE

    if args.out:
        with open(args.out, "w", newline="") as csv_file:
            writer = csv.writer(csv_file, lineterminator="\n")
            writer.writerow(MC_HEADER)
            writer.writerows(rows)
        data_io.write_manifest(
            args.out, "mc", vars(args),
            mc.chain_seeds(template.seed, template.chains)
        )
    return status


def _mc_row(estimate) -> tuple:
    cfg = estimate.config
    return (
        estimate.algorithm, data_io.format_value(cfg.couplings.J_d),
        data_io.format_value(cfg.couplings.J_s), cfg.L,
        data_io.format_value(estimate.proxy),
        data_io.format_value(estimate.standard_error),
        data_io.format_value(estimate.statistic)
    )


def main(argv=None) -> int:
    """
    Parses `argv` and runs the selected command.

    Returns
    -------
    int
        0 when everything passed, 1 on a failed check, 2 on a usage or
        validation error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return EXIT_USAGE if error.code else EXIT_PASS

    command_dict = {
        "verify": cmd_verify,
        "curve": cmd_curve,
        "chi": cmd_chi,
        "mc": cmd_mc
    }
    try:
        settings = data_io.load_settings(args.settings)
        return command_dict[args.command](args, settings)
    except (ValueError, TypeError, FileNotFoundError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
