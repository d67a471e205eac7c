import csv
import io
import json
import subprocess
import sys

import pytest

from dobrushin.cli import main
from conftest import SPECS

WORKED = SPECS / "ising_p6.toml"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def sweep_rows(text):
    body = "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def write_spec(tmp_path, h, c, beta=0.3, name="s.toml"):
    p = tmp_path / name
    p.write_text(f"""
[graph]
edges = [["v1", "v2"], ["v2", "v3"], ["v3", "v4"]]
[model]
alphabet = ["-1", "+1"]
h = [{h}, {h}]
ising_beta = {beta}
[criterion]
K = 10
kappa = "auto"
c = {c}
""")
    return p


@pytest.mark.parametrize("spec, code, verdict", [
    ("ising_p6.toml", 0, "Unique"),
    ("ising_p6_indeterminate.toml", 2, "Indeterminate"),
    ("ising_p6_inadmissible.toml", 3, "Inadmissible"),
])
def test_certify_exit_codes(capsys, spec, code, verdict):
    c, out, _ = run(capsys, "certify", "--spec", SPECS / spec)
    assert c == code
    assert f"certificate.verdict: {verdict}" in out


def test_certify_json_and_override(capsys):
    c, out, _ = run(capsys, "certify", "--spec", WORKED, "--json", "--k", "100")
    assert c == 2
    doc = json.loads(out)
    assert doc["certificate"]["verdict"] == "Indeterminate"
    assert doc["header"]["K"] == 100.0


def test_sweep_worked_is_monotone(capsys):
    c, out, _ = run(capsys, "sweep", "--spec", WORKED, "--sweeps", "6")
    assert c == 0
    rows = sweep_rows(out)
    assert [int(r["n"]) for r in rows] == list(range(7))
    norms = [float(r["transformed_norm"]) for r in rows]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert all(float(r["min_slack"]) >= -1e-10 for r in rows[1:])
    assert rows[0]["min_slack"] == ""


def test_sweep_beta_zero_and_zero_sweeps(capsys):
    c, out, _ = run(capsys, "sweep", "--spec", SPECS / "free_p4.toml")
    assert c == 0
    rows = sweep_rows(out)
    assert len(rows) == 2 and float(rows[1]["gamma"]) == 0.0
    c, out, _ = run(capsys, "sweep", "--spec", WORKED, "--sweeps", "0")
    assert c == 0 and len(sweep_rows(out)) == 1


def test_sweep_cap_exceeded(capsys, tmp_path):
    spec = tmp_path / "capped.toml"
    spec.write_text(WORKED.read_text() + "\n[numerics]\ncap = 64\n")
    c, _, err = run(capsys, "sweep", "--spec", spec)
    assert c == 4 and "cap" in err


def test_decay_commands(capsys, tmp_path):
    c, out, _ = run(capsys, "decay", "--spec", WORKED, "v1", "v6")
    assert c == 0
    assert "decay.bound_holds: True" in out and "decay.delta: 5" in out
    c, out, _ = run(capsys, "decay", "--spec", WORKED, "v2", "v4", "--f", "1,1")
    cov = next(line for line in out.splitlines() if line.startswith("decay.covariance:"))
    assert c == 0 and abs(float(cov.split(": ")[1])) < 1e-15
    c, _, _ = run(capsys, "decay", "--spec", SPECS / "ising_p6_indeterminate.toml", "v1", "v6")
    assert c == 2
    c, _, err = run(capsys, "decay", "--spec", WORKED, "v1", "nowhere")
    assert c == 1 and "nowhere" in err
    c, _, err = run(capsys, "decay", "--spec", WORKED, "v1", "v2", "--f", "1,2,3")
    assert c == 1 and "--f" in err


def test_verify_commands(capsys, tmp_path):
    c, out, _ = run(capsys, "verify", "--spec", WORKED)
    assert c == 0 and "passed: True" in out
    c, out, _ = run(capsys, "verify", "--spec", write_spec(tmp_path, 3.0, 0.0))
    assert c == 5 and "site v1: moment bound violated" in out
    c, out, _ = run(capsys, "verify", "--spec", write_spec(tmp_path, 1.0, 0.1, beta=0.0, name="free.toml"))
    assert c == 0 and "sites[0].kappa_slack: 0.0" in out


def test_parse_error_exit(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[graph]\nedges = [['a', 'a']]\n")
    c, _, err = run(capsys, "certify", "--spec", bad)
    assert c == 1 and "graph.edges" in err


def test_out_file(capsys, tmp_path):
    target = tmp_path / "report.txt"
    c, out, _ = run(capsys, "certify", "--spec", WORKED, "--out", target)
    assert c == 0 and out == ""
    assert "certificate.verdict: Unique" in target.read_text()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dobrushin.cli", "certify", "--spec", str(WORKED)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "Unique" in proc.stdout
