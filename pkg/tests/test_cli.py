"""Command-line behaviour: golden outputs and exit codes.

Set ``UPDATE_GOLDEN=1`` to rewrite the files in ``tests/golden``.
"""

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from tracepoly import __version__
from tracepoly.cli import main

GOLDEN = Path(__file__).parent / "golden"

CASES = {
    "sigma_d1_j2": ["sigma", "-d", "1", "-j", "2"],
    "sigma_d2_j2_json": ["sigma", "-d", "2", "-j", "2", "--json"],
    "det_d2": ["det", "-d", "2"],
    "det_d1_localized": ["det", "-d", "1", "--localize", "x", "--json"],
    "hankel_d2": ["hankel", "-d", "2"],
    "hankel_d1_localized": ["hankel", "-d", "1", "--localize", "x^3"],
    "eval_point": ["eval", "-f", "x-Tr(x)", "--beta0", "2", "--moments", "1"],
    "eval_matrix": ["eval", "-f", "x^2-2*Tr(x)*x+2*Tr(x)^2-Tr(x^2)",
                    "--matrix", '{"n": 2, "entries": [["1", "0"], ["0", "-1"]]}'],
    "x3_d2": ["x3-counterexample", "-d", "2"],
    "verify_true": ["verify", "--lhs", "Tr(x^2)-Tr(x)^2", "--rhs", "Tr((x-Tr(x))^2)"],
    "verify_false": ["verify", "--lhs", "x", "--rhs", "Tr(x)"],
    "falsify_variance": ["falsify", "-f=-Tr(x^2)+Tr(x)^2", "--trials", "100", "--no-witness"],
    "falsify_none": ["falsify", "-f", "Tr(x^2)", "--trials", "500"],
    "witness_small": ["witness", "--beta0", "0.5", "--moments", "0,1", "--eps", "0.3"],
}


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, capsys):
    code, out, _ = run(capsys, CASES[name])
    path = GOLDEN / f"{name}.txt"
    record = f"exit {code}\n{out}"
    if os.environ.get("UPDATE_GOLDEN"):
        path.write_text(record)
    assert record == path.read_text()


def test_deterministic(capsys):
    argv = ["falsify", "-f", "x^2-Tr(x^2)", "--trials", "300", "--seed", "4", "--no-witness"]
    assert run(capsys, argv) == run(capsys, argv)


def test_sigma_text_example(capsys):
    assert run(capsys, ["sigma", "-d", "1", "-j", "2"])[1] == "Tr(x^2)-Tr(x)^2\n"


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["optimize", "--objective", "x^2", "-d", "1", "--constraint", "Tr(x)-1", "--constraint", "1-Tr(x)"], 1.0),
        (["optimize", "--objective", "x^4", "-d", "2", "--constraint", "Tr(x^2)-1", "--constraint", "1-Tr(x^2)"], 1.0),
    ],
)
def test_optimize(argv, expected, capsys):
    code, out, _ = run(capsys, argv)
    doc = json.loads(out)
    assert code == 0 and doc["status"] == "optimal"
    assert abs(doc["value"] - expected) < 1e-6


def test_optimize_statuses(capsys):
    code, out, _ = run(capsys, ["optimize", "--objective", "x", "-d", "1"])
    assert code == 0 and json.loads(out)["status"] == "unbounded"
    code, out, _ = run(capsys, ["optimize", "--objective", "x^2", "-d", "1",
                                "--constraint", "Tr(x)-2", "--constraint", "1-Tr(x)"])
    assert code == 3 and json.loads(out)["status"] == "infeasible"
    code, out, _ = run(capsys, ["optimize", "-d", "2", "--square", "sqrt2*Tr(x)-1"])
    assert code == 2


def test_optimize_square(capsys):
    code, out, _ = run(capsys, ["optimize", "-d", "1", "--square", "Tr(x)-1/2"])
    assert code == 0 and abs(json.loads(out)["value"]) < 1e-6


def test_certificate_file(tmp_path, capsys):
    doc = {"mode": "P", "f": "Tr(x^2)-Tr(x)^2", "k": 1,
           "p1": {"terms": [{"coeff": 1, "factors": [{"kind": "sigma", "payload": {"j": 2, "d": 1}}]}]},
           "p2": {"terms": []}}
    path = tmp_path / "cert.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, ["verify", "--certificate", f"@{path}"])
    assert code == 0 and json.loads(out)["verified"] is True
    doc["mode"] = "Q"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, ["verify", "--certificate", f"@{path}"])
    doc = json.loads(out)
    assert code == 1 and doc["verified"] is False
    assert any("mode Q" in e for e in doc["structural_errors"])


@pytest.mark.parametrize(
    "argv, code",
    [
        (["eval", "-f", "x+"], 2),
        (["eval", "-f", "x", "--moments", "1"], 2),
        (["sigma", "-d", "1", "-j", "5"], 2),
        (["hankel"], 2),
        (["witness", "--beta0", "0", "--moments", "0,0"], 3),
        (["witness", "--beta0", "0", "--moments", "0,1,0"], 2),
        (["x3-counterexample", "-d", "9"], 2),
        (["optimize", "--objective", "x", "-d", "1", "--constraint", "Tr(x)^2"], 2),
        (["verify", "--lhs", "x"], 2),
        (["falsify", "-f", "x", "--constraint", "x"], 2),
    ],
)
def test_exit_codes(argv, code, capsys):
    try:
        got = main(argv)
    except SystemExit as exc:  # argparse usage errors
        got = exc.code
    assert got == code
    assert capsys.readouterr().err


def test_parse_error_message(capsys):
    code, _, err = run(capsys, ["eval", "-f", "x+", "--beta0", "0"])
    assert code == 2 and "byte 2" in err


def test_pretty(capsys):
    code, out, _ = run(capsys, ["det", "-d", "1", "--pretty"])
    assert code == 0 and "Tr(x^2)-Tr(x)^2" in out
    with pytest.raises(json.JSONDecodeError):
        json.loads(out)


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "tracepoly.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == f"tracepoly {__version__}"
