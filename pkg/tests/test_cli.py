import csv
import json

import pytest

from cuspidal_atlas import classifier, cli
from cuspidal_atlas.classifier import ClassificationReport
from cuspidal_atlas.errors import ClassificationError, CurveTracingError
from cuspidal_atlas.services import RASTER_HEADER, SWEEP_HEADER


def binary_report(params, run_config=None):
    return ClassificationReport(params=params, kind="binary", generic=True, n_aspects=2, n_cusps=0,
                                cuspidal=False, max_postures=2)


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


@pytest.mark.parametrize("argv", [
    ["classify", "--d3", "-1", "--r2", "0.2", "--d4", "0.3"],
    ["classify", "--d3", "1.0"],
    ["classify", "--reference", "z"],
    ["bogus"],
    ["scan", "--start", "1,2", "--end", "1,1,1"],
])
def test_usage_errors_exit_1(argv, tmp_path):
    assert cli.main(argv + (["--out", str(tmp_path)] if argv[0] != "bogus" else [])) == cli.EXIT_USAGE


def test_classification_failure_exits_2(monkeypatch, tmp_path):
    def failing(params, run_config=None):
        raise ClassificationError("classification failed: untraceable curve", CurveTracingError("untraceable curve"))

    monkeypatch.setattr(cli, "classify", failing)
    assert cli.main(["classify", "--reference", "a", "--out", str(tmp_path)]) == cli.EXIT_CLASSIFICATION


def test_classify_writes_report(monkeypatch, tmp_path, capsys):
    monkeypatch.setattr(cli, "classify", binary_report)
    assert cli.main(["classify", "--reference", "a", "--out", str(tmp_path)]) == cli.EXIT_OK
    payload = json.loads((tmp_path / "classify_a.json").read_text())
    assert payload["class"] == "binary"
    assert payload["cuspidal"] is False
    assert list(payload)[:6] == ["d3", "r2", "d4", "kind", "generic", "witness"]
    assert (tmp_path / "classify_a.txt").read_text() == capsys.readouterr().out


def test_empty_sweep_writes_header_only(tmp_path):
    assert cli.main(["sweep", "--out", str(tmp_path)]) == cli.EXIT_OK
    assert read_csv(tmp_path / "sweep.csv") == [SWEEP_HEADER]


def test_partial_ranges_are_a_usage_error(tmp_path):
    assert cli.main(["sweep", "--d3-range", "0.1", "0.2", "0.1", "--out", str(tmp_path)]) == cli.EXIT_USAGE


def test_table_sweep(monkeypatch, tmp_path):
    monkeypatch.setattr(classifier, "classify", binary_report)
    assert cli.main(["sweep", "--table", "--threads", "2", "--out", str(tmp_path)]) == cli.EXIT_OK
    rows = read_csv(tmp_path / "sweep.csv")
    assert rows[0] == SWEEP_HEADER
    assert len(rows) == 9
    assert rows[1][:3] == ["0.20999999999999999", "0.10000000000000001", "0.050000000000000003"]
    assert all(row[-1] == "ok" for row in rows[1:])
    assert (tmp_path / "sweep.checkpoint.jsonl").exists()


def test_section_outputs(tmp_path):
    assert cli.main(["section", "--reference", "a", "--resolution", "128", "--out", str(tmp_path)]) == cli.EXIT_OK
    rows = read_csv(tmp_path / "section_a.csv")
    assert rows[0] == RASTER_HEADER
    assert len(rows) == 128 * 128 + 1
    assert {row[2] for row in rows[1:]} <= {"0", "2"}
    svg = (tmp_path / "section_a.svg").read_text()
    assert svg.startswith("<?xml")
    assert "</svg>" in svg


def test_format_subset_limits_outputs(tmp_path):
    argv = ["section", "--reference", "a", "--resolution", "128", "--format", "csv", "--out", str(tmp_path)]
    assert cli.main(argv) == cli.EXIT_OK
    assert (tmp_path / "section_a.csv").exists()
    assert not (tmp_path / "section_a.svg").exists()


def test_unknown_format_is_a_usage_error(tmp_path):
    argv = ["section", "--reference", "a", "--format", "png", "--out", str(tmp_path)]
    assert cli.main(argv) == cli.EXIT_USAGE


def test_cusps_outputs(tmp_path, capsys):
    assert cli.main(["cusps", "--reference", "d", "--out", str(tmp_path)]) == cli.EXIT_OK
    assert len(read_csv(tmp_path / "cusps_d.csv")) == 5
    payload = json.loads((tmp_path / "cusps_d.json").read_text())
    assert len(payload["cusps"]) == 4
    assert "4 cusps" in capsys.readouterr().out


def test_jointspace_outputs(tmp_path):
    assert cli.main(["jointspace", "--reference", "d", "--resolution", "64", "--out", str(tmp_path)]) == cli.EXIT_OK
    rows = read_csv(tmp_path / "jointspace_d.csv")
    assert rows[0] == ["curve", "factor", "theta2", "theta3"]
    assert {row[0] for row in rows[1:]} == {"0", "1"}
    assert "A1" in (tmp_path / "jointspace_d.svg").read_text()


@pytest.mark.slow
def test_classify_outputs_are_byte_identical(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    for out in (first, second):
        assert cli.main(["classify", "--reference", "d", "--out", str(out)]) == cli.EXIT_OK
    for name in ("classify_d.json", "classify_d.txt"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_table_sweep_writes_summary(monkeypatch, tmp_path, capsys):
    monkeypatch.setattr(classifier, "classify", binary_report)
    assert cli.main(["sweep", "--table", "--threads", "1", "--out", str(tmp_path)]) == cli.EXIT_OK
    payload = json.loads((tmp_path / "sweep_summary.json").read_text())
    assert payload["signatures"] == {"binary/generic/2 aspects/0 cusps/binary": 8}
    assert payload["failed"] == 0
    assert sum(zone["zones"] for zone in payload["zones_by_d4"]) == 8
    text = (tmp_path / "sweep_summary.txt").read_text()
    assert "     8  binary/generic/2 aspects/0 cusps/binary" in text
    assert text in capsys.readouterr().out


@pytest.mark.slow
def test_classify_reference_d_end_to_end(tmp_path, capsys):
    assert cli.main(["classify", "--reference", "d", "--out", str(tmp_path)]) == cli.EXIT_OK
    payload = json.loads((tmp_path / "classify_d.json").read_text())
    assert payload["kind"] == "quaternary"
    assert payload["generic"] is True
    assert payload["aspects"] == 2
    assert payload["cusps"] == 4
    assert payload["class"] == "2(1,0)"
    assert len(payload["cusp_points"]) == 4
    assert payload["meta_rule_violations"] == []
    assert payload["tolerances"]["eps_ik"] == pytest.approx(1e-8)
    assert "2(1,0)" in capsys.readouterr().out
