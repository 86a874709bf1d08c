import csv
import io
import json
import math
import subprocess
import sys

import pytest

from oukernels.cli import main, render, make_record

COARSE = ["--t-steps", "5", "--x-steps", "9", "--y-steps", "17"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_mehler(capsys):
    code, out, _ = run(capsys, "eval", "--t", "1", "--N", "0", "--dim", "1", "--x", "0", "--y", "0")
    rec = json.loads(out)
    assert code == 0 and rec["schema_version"] == "1" and rec["command"] == "eval"
    assert rec["rows"][0]["values"]["value"] == pytest.approx((1 - math.exp(-2)) ** -0.5)


def test_eval_with_oracle(capsys):
    code, out, _ = run(capsys, "eval", "--t", "1", "--N", "1", "--x", "0", "--y", "0", "--oracle", "spectral")
    rec = json.loads(out)
    assert code == 0 and rec["status"] == "pass"
    assert rec["rows"][0]["residuals"]["deviation"] < 1e-9


def test_eval_fd_oracle_two_dims(capsys):
    code, out, _ = run(capsys, "eval", "--t", "0.5", "--N", "2", "--dim", "2", "--x", "0.5,-1", "--y", "0,2", "--oracle", "fd")
    assert code == 0 and json.loads(out)["rows"][0]["residuals"]["deviation"] < 1e-5


@pytest.mark.parametrize(
    "argv,message",
    [
        (["eval", "--t", "0", "--N", "1", "--x", "0", "--y", "0"], "t must be positive"),
        (["eval", "--t", "1", "--N", "1", "--dim", "2", "--x", "0", "--y", "0,0"], "--dim is 2"),
        (["table", "--t", "", "--x", "0", "--y", "0"], "empty grid"),
        (["bounds", "--kernel", "K", "--alpha", "64"], "needs --N"),
    ],
)
def test_domain_errors_exit_2(capsys, argv, message):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and message in err
    assert len(err.strip().splitlines()) == 1


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--suite", "nope"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--t", "x", "--N", "1", "--x", "0", "--y", "0"])
    assert exc.value.code == 2


def test_hypothesis_gate_exit_3(capsys):
    code, out, err = run(capsys, "bounds", "--kernel", "K", "--N", "1", "--alpha", "1.5", "--T", "1")
    assert code == 3 and "alpha below largeness threshold" in err


def test_violations_exit_1(capsys):
    code, out, _ = run(capsys, "bounds", "--N", "1", "--alpha", "64", "--constant", "1e-30", *COARSE)
    rec = json.loads(out)
    assert code == 1 and rec["status"] == "fail" and rec["rows"][0]["values"]["violations"] > 0


def test_bounds_sweep(capsys):
    code, out, _ = run(capsys, "bounds", "--kernel", "Ktilde", "--N", "1", "--alpha", "64", "--refine", *COARSE)
    rec = json.loads(out)
    assert code in (0, 1)
    assert [r["inputs"]["grid"] for r in rec["rows"]] == ["base", "refined"]
    assert all(r["values"]["violations"] == 0 for r in rec["rows"])


def test_calderon(capsys):
    code, out, _ = run(capsys, "bounds", "--calderon", "--N", "2", "--alpha", "3", "--n-list", "1,5,40")
    rec = json.loads(out)
    assert code == 0
    assert [r["inputs"]["n"] for r in rec["rows"]] == [1, 5, 40]
    assert rec["rows"][0]["values"]["constant"] == pytest.approx(1 / 27)


def test_exponent_slacks(capsys):
    code, out, _ = run(capsys, "bounds", "--slacks", "--alpha", "10", "--t", "0.5", "--x", "1", "--y", "-1")
    assert code == 0 and json.loads(out)["rows"][0]["values"]["pass"] is True


def test_table_csv(capsys):
    code, out, _ = run(capsys, "table", "--t", "0.5,1", "--x", "0", "--y", "0")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["t", "N", "x1", "y1", "value"]
    assert [r[0] for r in rows[1:]] == ["0.5", "1.0"]
    assert float(rows[2][4]) == pytest.approx((1 - math.exp(-2)) ** -0.5)


def test_table_oracle_and_json(capsys):
    code, out, _ = run(capsys, "table", "--t", "0.3", "--N", "0,2", "--dim", "2", "--x=-1,0.5", "--y", "0",
                       "--oracle", "spectral", "--format", "json")
    rec = json.loads(out)
    assert code == 0 and rec["schema_version"] == "1" and len(rec["rows"]) == 2 * 4
    assert max(r["residuals"]["deviation"] for r in rec["rows"]) < 1e-9
    # lexicographic order: t, N, x, y
    assert [r["inputs"]["N"] for r in rec["rows"]] == [0] * 4 + [2] * 4


@pytest.mark.parametrize("suite", ["stirling", "weyl"])
def test_verify_exact_suites(capsys, suite):
    code, out, _ = run(capsys, "verify", "--suite", suite)
    rec = json.loads(out)
    assert code == 0 and rec["status"] == "pass"
    assert all(r["residuals"]["residual"] == 0 for r in rec["rows"])


def test_verify_tol_override_fails(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "operator", "--tol", "1e-300")
    assert code == 1 and json.loads(out)["status"] == "fail"


def test_render_non_finite():
    rec = make_record("x", {}, [{"inputs": {}, "values": {"v": math.inf}, "residuals": {}}], "info")
    assert json.loads(render(rec, "json"))["rows"][0]["values"]["v"] == "inf"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "oukernels", "eval", "--t", "1", "--N", "0", "--x", "0", "--y", "0"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["command"] == "eval"
