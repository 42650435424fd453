"""
data_io module
===================
This module contains the functions that read the run configuration and
the input fixtures and write the data files of the project.

The configuration is read from 'settings.json' at the repository root;
the enumeration caps can be overridden through environment variables.
Fixture paths are read from the *input_files/* folder. Bound curves are
written as CSV files with a JSON manifest alongside.
"""

import csv
import datetime
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field

from ising_crossover import __version__
from ising_crossover.lattice import build_box, path_from_vertices

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

CAP_ENVIRONMENT = {
    "max_spins": "ISING_CROSSOVER_MAX_SPINS",
    "max_cyclomatic": "ISING_CROSSOVER_MAX_CYCLOMATIC",
    "max_edges": "ISING_CROSSOVER_MAX_EDGES",
    "max_paths": "ISING_CROSSOVER_MAX_PATHS",
    "max_strip_width": "ISING_CROSSOVER_MAX_STRIP_WIDTH"
}

CURVE_HEADER = ("j_d", "chi_d", "chi_provenance", "j_s_bound")


def load_settings(path: str = None, environ=None) -> dict:
    """
    Reads the settings file and applies the cap overrides.

    Parameters
    ----------
    path: str, optional
        Settings file; 'settings.json' at the repository root by default.
    environ: mapping, optional
        Environment to read the overrides from; `os.environ` by default.

    Returns
    -------
    dict
        The settings, with `settings["caps"]` updated from the
        ISING_CROSSOVER_MAX_* variables that are set.

    Raises
    ------
    FileNotFoundError
        If the settings file does not exist.
    ValueError
        If an override is not a positive integer.
    """
    if path is None:
        path = os.path.join(BASE_DIR, "settings.json")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Settings file {path} not found.")
    with open(path, "r") as settings_file:
        settings = json.load(settings_file)
    if environ is None:
        environ = os.environ

    caps = settings.setdefault("caps", {})
    for key, variable in CAP_ENVIRONMENT.items():
        if variable not in environ:
            continue
        try:
            value = int(environ[variable])
        except ValueError:
            raise ValueError(
                f"Environment variable {variable} must be an integer, got "
                f"{environ[variable]!r}."
            ) from None
        if value < 1:
            raise ValueError(f"Environment variable {variable} must be positive.")
        caps[key] = value
    return settings


def format_value(value: float) -> str:
    """
    Fixed decimal formatting: 12 significant digits, 'inf' when infinite.
    """
    if math.isinf(value):
        return "inf"
    return f"{value:.12g}"


def write_curve_csv(file_path: str, curve) -> None:
    """
    Writes bound curve points as CSV with header
    j_d,chi_d,chi_provenance,j_s_bound.

    The provenance column holds 'certified' for closed-form
    susceptibilities and 'estimated:<provenance>' otherwise.
    """
    with open(file_path, "w", newline="") as csv_file:
        writer = csv.writer(csv_file, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for point in curve:
            label = (
                "certified" if point.certified
                else f"estimated:{point.chi.provenance}"
            )
            writer.writerow((
                format_value(point.J_d), format_value(point.chi.value),
                label, format_value(point.js_bound)
            ))


def file_digest(file_path: str) -> str:
    sha = hashlib.sha256()
    with open(file_path, "rb") as data_file:
        for block in iter(lambda: data_file.read(65536), b""):
            sha.update(block)
    return sha.hexdigest()


@dataclass
class RunManifest:
    """
    Description of one command run and of the files it produced.

    Attributes
    ----------
    command: str
        Subcommand name.
    parameters: dict
        Full parameter set.
    seeds: list
        Seeds used (empty for deterministic commands).
    version: str
        Package version.
    timestamp: str
        UTC time of the run, ISO format.
    digests: dict
        sha256 digest of every output file, keyed by file name.
    """
    command: str
    parameters: dict
    seeds: list = field(default_factory=list)
    version: str = __version__
    timestamp: str = field(
        default_factory=lambda: datetime.datetime.now(
            datetime.timezone.utc
        ).isoformat()
    )
    digests: dict = field(default_factory=dict)


def write_manifest(
    output_path: str,
    command: str,
    parameters: dict,
    seeds=()
) -> str:
    """
    Writes `<output_path>.manifest.json` next to an output file.

    Returns
    -------
    str
        Path of the manifest.
    """
    manifest = RunManifest(
        command, dict(parameters), list(seeds),
        digests={os.path.basename(output_path): file_digest(output_path)}
    )
    manifest_path = output_path + ".manifest.json"
    with open(manifest_path, "w") as manifest_file:
        json.dump(asdict(manifest), manifest_file, indent=2, default=str)
        manifest_file.write("\n")
    return manifest_path


@dataclass(frozen=True)
class FixturePath:
    """
    A consistent path of a box read from a fixture file, with the number
    of vertical steps it is expected to contain.
    """
    name: str
    box: object
    path: object
    n_vertical: int


def _parse_vertex(token: str, d: int, s: int) -> tuple:
    planar, _, vertical = token.partition("|")
    u = tuple(int(c) for c in planar.split(",")) if planar else ()
    t = tuple(int(c) for c in vertical.split(",")) if vertical else ()
    if len(u) != d or len(t) != s:
        raise ValueError(f"Vertex token {token!r} does not match d = {d}, s = {s}.")
    return u + t


def read_fixture_paths(file_name: str = "backbone_fixtures.txt") -> list:
    """
    Reads fixture paths from the *input_files/* folder.

    Each non-empty line not starting with '#' reads

        name d s N n_vertical v_0 v_1 ... v_k

    where every vertex token is 'u_1,...,u_d|t_1,...,t_s'.

    Returns
    -------
    list of FixturePath

    Raises
    ------
    FileNotFoundError
        If the file is not in *input_files/*.
    ValueError
        If a line is malformed or its path is not consistent.
    """
    file_path = os.path.join(BASE_DIR, "input_files", file_name)
    if not os.path.isfile(file_path):
        raise FileNotFoundError(f"File {file_name} not found in path {file_path}")
    boxes = {}
    fixtures = []
    with open(file_path, "r") as fixture_file:
        for number, line in enumerate(fixture_file, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            try:
                name = tokens[0]
                d, s, N, n_vertical = (int(token) for token in tokens[1:5])
                coords = [_parse_vertex(token, d, s) for token in tokens[5:]]
            except (IndexError, ValueError) as error:
                raise ValueError(
                    f"{file_name}, line {number}: malformed fixture ({error})."
                ) from None
            if (d, s, N) not in boxes:
                boxes[(d, s, N)] = build_box(d, s, N)
            box = boxes[(d, s, N)]
            path = path_from_vertices(box, [box.index_of(c) for c in coords])
            fixtures.append(FixturePath(name, box, path, n_vertical))
    return fixtures
