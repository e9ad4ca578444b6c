import csv
import io
import json
import subprocess
import sys

import pytest

from wigner_opo import __version__
from wigner_opo.cli import HEADER, SWEEP_COLUMNS, curl_defect, _flipped_drift, main
from wigner_opo.model import OpoParams


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def test_header_line(capsys):
    code, out, _ = run(capsys, "sweep", "--mu-list", "0.5", "--method", "linearized")
    assert code == 0
    assert out.splitlines()[0] == HEADER == f"# wigner-opo v{__version__}, schema 1"
    table = rows(out)
    assert table[0] == SWEEP_COLUMNS
    assert table[1][:7] == ["0.5", "linearized", "2", "0.66666666666666652", "0.66666666666666652", "2",
                            "1.333333333333333"]


def test_sweep_row_failure_and_all_failed(capsys):
    code, out, _ = run(capsys, "sweep", "--mu-list", "0.5,1.0", "--method", "linearized")
    assert code == 0
    failed = rows(out)[2]
    assert failed[-1].startswith("DomainError") and failed[2] == ""
    code, _, _ = run(capsys, "sweep", "--mu-list", "1.0", "--method", "linearized")
    assert code == 1


def test_sweep_deterministic(capsys, tmp_path):
    args = ["sweep", "--mu-list", "0.5,1.5", "--method", "importance", "--n-samples", "20000",
            "--seed", "11"]
    run(capsys, *args, "--out", str(tmp_path / "a.csv"))
    run(capsys, *args, "--out", str(tmp_path / "b.csv"))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sweep_json(capsys):
    code, out, _ = run(capsys, "sweep", "--mu-list", "0.5,1.0", "--method", "linearized",
                       "--format", "json")
    doc = json.loads(out)
    assert doc["schema"] == 1
    assert doc["rows"][0]["exp_xpsq"] == 2.0
    assert doc["rows"][1]["exp_xpsq"] is None and "DomainError" in doc["rows"][1]["error"]


def test_range_and_method_validation(capsys):
    code, out, _ = run(capsys, "sweep", "--mu-range", "0.2:0.6:3", "--method", "linearized")
    assert [r[0] for r in rows(out)[1:]] == ["0.20000000000000001", "0.40000000000000002",
                                            "0.59999999999999998"]
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--mu-list", "0.5", "--method", "nope"])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["slice", "--g2", "-0.1"],
    ["slice", "--mu", "-1"],
    ["slice", "--points", "15"],
    ["slice", "--bound", "0"],
    ["sweep", "--mu-list", "a,b"],
    ["bogus"],
])
def test_bad_flags_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_tail_exit_3(capsys):
    code, _, err = run(capsys, "marginal", "--mu", "1.5", "--bound", "5", "--points", "32")
    assert code == 3
    assert "increase bound" in err


def test_slice_csv(capsys):
    code, out, _ = run(capsys, "slice", "--mu", "0.5", "--bound", "4", "--points", "16")
    assert code == 0
    table = rows(out)
    assert table[0] == ["x1", "x2", "W"]
    assert len(table) == 1 + 16 * 16
    assert max(float(r[2]) for r in table[1:]) == 1.0


def test_marginal_profile_and_grid(capsys):
    code, out, _ = run(capsys, "marginal", "--mu", "0.8", "--points", "32", "--samples", "11",
                       "--format", "json")
    doc = json.loads(out)
    assert len(doc["r2"]) == 11 and doc["r2"][0] == 0.0
    assert doc["W"][0] == max(doc["W"])
    code, out, _ = run(capsys, "marginal", "--mu", "0.8", "--points", "32", "--samples", "5",
                       "--grid2d")
    assert rows(out)[0] == ["x2", "y2", "W"] and len(rows(out)) == 26


def test_check_report_and_mutation(capsys):
    code, out, _ = run(capsys, "check", "--skip-cross", "--points", "32")
    report = json.loads(out)
    names = [c["name"] for c in report["checks"]]
    assert names == ["curl_symmetry", "stationarity_scaling", "normalization_stability"]
    assert code == (0 if report["passed"] else 1)
    norm = report["checks"][2]
    assert norm["passed"]
    code, out, _ = run(capsys, "check", "--skip-cross", "--points", "32", "--inject-drift-sign-flip")
    mutated = json.loads(out)
    assert code == 1 and mutated["mutated_drift"]
    assert mutated["checks"][0]["value"] > 10 * report["checks"][0]["value"]


def test_curl_detector_flags_mutation():
    p = OpoParams(0.8, 0.01)
    assert curl_defect(p, n_points=5, drift_fn=_flipped_drift) > 0.5


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "wigner_opo.cli", "--version"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == f"wigner-opo {__version__}"
