"""
testing_data_io module
===================
This module tests the functions inside the 'data_io.py' and
'smart_file.py' modules.
"""

import csv
import json

import pytest

from ising_crossover import data_io, smart_file
from ising_crossover.susceptibility.bound_curve import bound_curve
from ising_crossover.verification.verification_functions import CheckRecord


def test_load_settings():
    """
    This function tests that the repository settings are read and the
    caps keep their defaults without overrides.
    """
    settings = data_io.load_settings(environ={})
    assert settings["caps"]["max_spins"] == 24
    assert settings["caps"]["max_cyclomatic"] == 22
    assert settings["verification"]["seed"] == 7


def test_cap_overrides():
    """
    This function tests the environment overrides of the caps and the
    rejection of invalid values.
    """
    settings = data_io.load_settings(environ={
        "ISING_CROSSOVER_MAX_SPINS": "12",
        "ISING_CROSSOVER_MAX_PATHS": "500"
    })
    assert settings["caps"]["max_spins"] == 12
    assert settings["caps"]["max_paths"] == 500
    with pytest.raises(ValueError):
        data_io.load_settings(environ={"ISING_CROSSOVER_MAX_EDGES": "many"})
    with pytest.raises(ValueError):
        data_io.load_settings(environ={"ISING_CROSSOVER_MAX_EDGES": "0"})


def test_missing_settings(tmp_path):
    """
    This function tests that a missing settings file raises
    FileNotFoundError.
    """
    with pytest.raises(FileNotFoundError):
        data_io.load_settings(str(tmp_path / "settings.json"), environ={})


def test_format_value():
    """
    This function tests the fixed decimal formatting of CSV values.
    """
    assert data_io.format_value(float("inf")) == "inf"
    assert data_io.format_value(0.1) == "0.1"
    assert data_io.format_value(1 / 3) == "0.333333333333"


def test_curve_csv_and_manifest(tmp_path):
    """
    This function tests the CSV columns, the provenance labels and the
    digest recorded in the manifest.
    """
    out = tmp_path / "curve.csv"
    curve = bound_curve(1, 1, [0.1, 0.5])
    data_io.write_curve_csv(str(out), curve)
    with open(out, newline="") as csv_file:
        rows = list(csv.reader(csv_file))
    assert tuple(rows[0]) == data_io.CURVE_HEADER
    assert len(rows) == 3
    assert rows[1][2] == "certified"
    assert float(rows[2][3]) == pytest.approx(0.18606, abs=1e-5)

    manifest_path = data_io.write_manifest(
        str(out), "curve", {"d": 1, "s": 1}, seeds=[3]
    )
    with open(manifest_path) as manifest_file:
        manifest = json.load(manifest_file)
    assert manifest["command"] == "curve"
    assert manifest["seeds"] == [3]
    assert manifest["digests"]["curve.csv"] == data_io.file_digest(str(out))

    estimated = bound_curve(1, 1, [0.1], estimator="enumeration", N=1)
    data_io.write_curve_csv(str(out), estimated)
    with open(out, newline="") as csv_file:
        rows = list(csv.reader(csv_file))
    assert rows[1][2] == "estimated:exact-enumeration"


def test_read_fixtures():
    """
    This function tests that the shipped fixtures are read as consistent
    paths of their boxes.
    """
    fixtures = data_io.read_fixture_paths()
    names = [fixture.name for fixture in fixtures]
    assert names == ["planar", "vertical", "three_slabs", "zigzag", "corner"]
    corner = fixtures[-1]
    assert (corner.box.d, corner.box.s) == (2, 1)
    assert corner.path.length == 4
    assert fixtures[0].box is fixtures[1].box


def test_malformed_fixtures(tmp_path):
    """
    This function tests that missing files, malformed lines and
    inconsistent paths are rejected.
    """
    with pytest.raises(FileNotFoundError):
        data_io.read_fixture_paths("no_such_file.txt")
    bad = tmp_path / "bad.txt"
    bad.write_text("broken 1 1 1 0 0,0|0\n")
    with pytest.raises(ValueError):
        data_io.read_fixture_paths(str(bad))
    bad.write_text("backtrack 1 1 1 0 0|0 1|0 0|0\n")
    with pytest.raises(ValueError):
        data_io.read_fixture_paths(str(bad))


def test_smart_file_modes(tmp_path):
    """
    This function tests that a disabled SmartFile writes nothing, a text
    file holds one line per record and a json file a list of records.
    """
    record = CheckRecord("partition", "single-edge", 1.0, 1.0, 1e-10, True)
    disabled = smart_file.SmartFile()
    disabled.record(record)
    disabled.close()
    assert disabled.records == []

    text_path = tmp_path / "report.txt"
    text = smart_file.SmartFile()
    text.setup(str(text_path))
    text.write("header")
    text.record(record)
    text.close()
    lines = text_path.read_text().splitlines()
    assert lines[0] == "header"
    assert lines[1].startswith("PASS")

    json_path = tmp_path / "report.json"
    report = smart_file.SmartFile()
    report.setup(str(json_path), "json")
    report.write("ignored")
    report.record(record)
    report.close()
    records = json.loads(json_path.read_text())
    assert records == [record.as_dict()]

    with pytest.raises(TypeError):
        smart_file.SmartFile().setup(str(tmp_path / "x"), "xml")
