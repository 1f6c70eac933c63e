"""Command-line interface: exit codes, CSV contracts, reproducibility."""

from __future__ import annotations

import json

import numpy as np
import pytest

from immse.cli import main

SCALAR_DOC = {
    "A": [[-1.0]],
    "B": [[1.0]],
    "distortion": {"grid": [0.1, 0.25, 0.5, 1.0]},
    "sim": {"dt": 1e-3, "horizon": 20.0, "trials": 16, "seed": 7},
    "zdsc": {"tau": 0.1, "delta": [2.0, 4.0, 8.0], "horizon": 1.0, "trials": 64},
}


@pytest.fixture()
def scalar_config(tmp_path):
    path = tmp_path / "scalar.json"
    path.write_text(json.dumps(SCALAR_DOC))
    return str(path)


def _data_rows(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                rows.append(line)
    return rows[0], rows[1:]


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["rd-curve", str(tmp_path / "absent.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_invalid_grid_exits_3(tmp_path, capsys):
    path = tmp_path / "bad.json"
    doc = dict(SCALAR_DOC)
    doc["distortion"] = {"grid": [-0.5, 1.0]}
    path.write_text(json.dumps(doc))
    assert main(["rd-curve", str(path)]) == 3
    assert "validation" in capsys.readouterr().err


def test_malformed_json_exits_2(tmp_path):
    path = tmp_path / "mangled.json"
    path.write_text("{this is not json")
    assert main(["rd-curve", str(path)]) == 2


def test_rd_curve_golden_rows(scalar_config, tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["rd-curve", scalar_config, "--out", str(out)]) == 0
    header, rows = _data_rows(str(out))
    assert header == "D,R_nats_per_time,trace_P,gap,are_residual,detectable,C_row_major"
    assert len(rows) == 4
    expected_R = [4.0, 1.0, 0.0, 0.0]
    expected_C = [np.sqrt(80.0), 2.0 * np.sqrt(2.0)]
    for row, want in zip(rows, expected_R):
        fields = row.split(",", 6)
        assert abs(float(fields[1]) - want) <= 1e-6
        assert fields[5] == "true"
        assert fields[6].startswith('"') and fields[6].endswith('"')
    for row, want in zip(rows[:2], expected_C):
        gain = float(row.split(",", 6)[6].strip('"'))
        assert abs(gain - want) <= 1e-3


def test_rd_curve_idempotent_modulo_timestamp(scalar_config, tmp_path):
    out = tmp_path / "curve.csv"
    argv = ["rd-curve", scalar_config, "--out", str(out)]
    assert main(argv) == 0
    first = out.read_text()
    assert main(argv) == 0
    second = out.read_text()

    def stripped(text):
        return [l for l in text.splitlines() if not l.startswith("# generated:")]

    assert stripped(first) == stripped(second)
    volatile_first = [l for l in first.splitlines() if l.startswith("# generated:")]
    assert len(volatile_first) == 1


def test_rd_curve_gnuplot_stub(scalar_config, tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["rd-curve", scalar_config, "--out", str(out), "--gnuplot-stub"]) == 0
    stub = tmp_path / "curve.csv.gp"
    assert stub.exists()
    assert "plot" in stub.read_text()
    # The stub needs a file target to sit next to.
    assert main(["rd-curve", scalar_config, "--gnuplot-stub"]) == 3


def test_rd_curve_threads_match_serial(scalar_config, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["rd-curve", scalar_config, "--out", str(a)]) == 0
    assert main(["rd-curve", scalar_config, "--out", str(b), "--threads", "2"]) == 0
    _, rows_a = _data_rows(str(a))
    _, rows_b = _data_rows(str(b))
    assert rows_a == rows_b


def test_validate_passes_at_design_point(scalar_config, tmp_path):
    out = tmp_path / "report.txt"
    code = main(["validate", scalar_config, "--D", "0.25", "--out", str(out)])
    text = out.read_text()
    assert code == 0, text
    assert "PASS duncan-identity" in text
    assert "PASS stationary-mmse" in text
    assert "PASS stationary-info" in text
    assert text.strip().endswith("result: PASS")


def test_validate_needs_single_budget(scalar_config, capsys):
    assert main(["validate", scalar_config]) == 3
    assert "--D" in capsys.readouterr().err


def test_validate_requires_sim_block(tmp_path):
    doc = {k: v for k, v in SCALAR_DOC.items() if k != "sim"}
    path = tmp_path / "nosim.json"
    path.write_text(json.dumps(doc))
    assert main(["validate", str(path), "--D", "0.25"]) == 3


def test_validate_gain_override_divergence_reported(tmp_path, capsys):
    doc = {
        "A": [[1.0]],
        "B": [[1.0]],
        "distortion": {"value": 0.25},
        "sim": {"dt": 1e-3, "horizon": 20.0, "trials": 4, "seed": 1},
    }
    path = tmp_path / "unstable.json"
    path.write_text(json.dumps(doc))
    assert main(["validate", str(path), "--gain-override", "0"]) == 4
    assert "divergence" in capsys.readouterr().err


def test_validate_gain_override_happy_path(scalar_config, tmp_path):
    out = tmp_path / "report.txt"
    code = main(
        [
            "validate",
            scalar_config,
            "--gain-override",
            "2.8284271247461903",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    assert "sensor: gain-override" in out.read_text()


def test_validate_dump_paths(scalar_config, tmp_path):
    dump_dir = tmp_path / "paths"
    out = tmp_path / "report.txt"
    code = main(
        [
            "validate",
            scalar_config,
            "--D",
            "0.25",
            "--out",
            str(out),
            "--dump-paths",
            str(dump_dir),
        ]
    )
    assert code == 0
    files = sorted(dump_dir.glob("trial_*.csv"))
    assert len(files) == SCALAR_DOC["sim"]["trials"]
    header = files[0].read_text().splitlines()[0]
    assert header == "t,x_1,xhat_1,y_1"


def test_validate_seed_override_changes_measurement(scalar_config, tmp_path):
    out1 = tmp_path / "r1.txt"
    out2 = tmp_path / "r2.txt"
    main(["validate", scalar_config, "--D", "0.25", "--out", str(out1)])
    main(
        ["validate", scalar_config, "--D", "0.25", "--seed", "99", "--out", str(out2)]
    )

    def measured(path):
        for line in path.read_text().splitlines():
            if "stationary-mmse" in line:
                return line.split("measured=")[1].split()[0]
        raise AssertionError("no stationary-mmse line")

    assert measured(out1) != measured(out2)


def test_zdsc_rows_and_trend(scalar_config, tmp_path):
    out = tmp_path / "z.csv"
    assert main(["zdsc", scalar_config, "--out", str(out)]) == 0
    header, rows = _data_rows(str(out))
    assert header == "tau,delta_1,rate_nats_per_time,distortion,R_of_distortion,gap"
    assert len(rows) == 3
    parsed = [list(map(float, r.split(","))) for r in rows]
    distortion = [p[3] for p in parsed]
    assert distortion == sorted(distortion, reverse=True), "ladder trend"
    # The gap column is reported, never sign-asserted (open conjecture).
    assert "unverified bound direction" in out.read_text()


def test_zdsc_missing_block_exits_3(tmp_path):
    doc = {k: v for k, v in SCALAR_DOC.items() if k != "zdsc"}
    path = tmp_path / "noz.json"
    path.write_text(json.dumps(doc))
    assert main(["zdsc", str(path)]) == 3


def test_care_json_payload(scalar_config, capsys):
    code = main(["care", scalar_config, "--gain-override", "2.8284271247461903"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["P"][0][0] == pytest.approx(0.25, abs=1e-9)
    assert payload["residual"] <= 1e-7
    assert payload["info_rate_nats_per_time"] == pytest.approx(1.0, abs=1e-9)
    assert payload["closed_loop_spectrum"][0][0] == pytest.approx(-3.0, abs=1e-6)


def test_care_requires_gain(scalar_config):
    assert main(["care", scalar_config]) == 3


def test_care_rejects_wrong_gain_arity(scalar_config):
    assert main(["care", scalar_config, "--gain-override", "1,2,3"]) == 3


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == 2
    capsys.readouterr()
