"""Command-line interface: exit codes, JSON reports, formatting."""

import json
import os
import subprocess
import sys

import pytest

from riesz.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_ok_and_json(capsys, tmp_path):
    prog = write(tmp_path, "a.rpl", "let m = bernoulli(0.25); expect fn(b) = if b then 1 else 0 of m;\n")
    code, out = run(capsys, "run", prog, "--json")
    assert code == 0
    obj = json.loads(out.out)
    assert obj["schema_version"] == 1
    assert obj["results"][0]["value"] == 0.25
    code, out = run(capsys, "run", prog)
    assert code == 0 and "0.25" in out.out


def test_run_exit_codes(capsys, tmp_path):
    cases = {
        "check equal(bernoulli(0.5), bernoulli(0.9));": 1,
        "let m = bind in;": 2,
        "let m = uniform(2, 1);": 2,
        "let x = @;": 2,
    }
    for text, expected in cases.items():
        code, _ = run(capsys, "run", write(tmp_path, "p.rpl", text))
        assert code == expected, text
    code, out = run(capsys, "run", write(tmp_path, "d.rpl", "expect fn(x) = x of uniform(0, 1);"), "--backend", "exact", "--json")
    assert code == 3
    assert json.loads(out.out)["diagnostics"][0]["code"] == "BackendUnsupported"


def test_run_missing_file(capsys, tmp_path):
    code, out = run(capsys, "run", str(tmp_path / "missing.rpl"))
    assert code == 2


def test_diagnostic_has_span(capsys, tmp_path):
    code, out = run(capsys, "run", write(tmp_path, "e.rpl", "let m = dirac(1);\nlet m = dirac(2);\n"), "--json")
    diag = json.loads(out.out)["diagnostics"][0]
    assert code == 2
    assert diag["code"] == "SpaceError"
    assert diag["span"]["line"] == 2


def test_out_file(capsys, tmp_path):
    prog = write(tmp_path, "a.rpl", "expect fn(x) = x of dirac(3);")
    dest = tmp_path / "report.json"
    code, _ = run(capsys, "run", prog, "--out", str(dest))
    assert code == 0
    assert json.loads(dest.read_text())["results"][0]["value"] == 3


def test_laws_suites(capsys):
    code, out = run(capsys, "laws", "monad", "--trials", "20", "--json")
    assert code == 0
    obj = json.loads(out.out)
    assert obj["verdict"] == "pass"
    names = [r["law_name"] for r in obj["reports"]]
    assert "monad[finite]" in names and "monad[interval]" in names
    code, out = run(capsys, "laws", "affine", "--trials", "10", "--json")
    assert code == 0
    code, out = run(capsys, "laws", "all", "--trials", "0")
    assert code == 0


def test_laws_skip_interval_under_exact(capsys):
    code, out = run(capsys, "laws", "fubini", "--trials", "8", "--backend", "exact", "--json")
    names = [r["law_name"] for r in json.loads(out.out)["reports"]]
    assert code == 0
    assert "fubini[finite]" in names
    assert "fubini[interval]" not in names


def test_converge(capsys, tmp_path, corpus):
    code, out = run(capsys, "converge", "uniform_shrink", "--indices", "1..16")
    assert code == 0
    csv_path = tmp_path / "r.csv"
    code, out = run(capsys, "converge", os.path.join(corpus, "serialized_weak.json"), "--json", "--csv", str(csv_path))
    assert code == 0
    assert json.loads(out.out)["verdict"] == "pass"
    assert csv_path.read_text().startswith("n,residual\n")
    code, _ = run(capsys, "converge", write(tmp_path, "bad.json", "{not json"))
    assert code == 2
    code, _ = run(capsys, "converge", "no_such_family")
    assert code == 2


def test_converge_failure(capsys, tmp_path):
    spec = {"family": "dirac_shrink", "indices": "1..4", "tol": 1e-6}
    code, _ = run(capsys, "converge", write(tmp_path, "s.json", json.dumps(spec)))
    assert code == 1


def test_fmt(capsys, tmp_path):
    messy = write(tmp_path, "m.rpl", "let   m=bernoulli( 0.5 ) ;expect fn(x)=if x then 1 else 0 of m;")
    code, _ = run(capsys, "fmt", messy, "--check")
    assert code == 1
    code, _ = run(capsys, "fmt", messy, "--write")
    assert code == 0
    assert open(messy).read() == "let m = bernoulli(0.5);\nexpect fn(x) = if x then 1 else 0 of m;\n"
    code, _ = run(capsys, "fmt", messy, "--check")
    assert code == 0
    code, out = run(capsys, "fmt", write(tmp_path, "b.rpl", "let = ;"))
    assert code == 2


def test_bad_arguments(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run", "x.rpl", "--seed", "-1"])
    assert info.value.code == 2
    code, _ = run(capsys, "laws", "monad", "--backend", "simpson")
    assert code == 2


def test_reports_identical_across_threads(capsys, tmp_path):
    prog = write(tmp_path, "a.rpl", "expect fn(x) = sin(x) of bind y ~ uniform(0, 1) in uniform(0, 2);")
    code, first = run(capsys, "run", prog, "--backend", "mc:9000", "--threads", "1", "--json")
    code, second = run(capsys, "run", prog, "--backend", "mc:9000", "--threads", "4", "--json")
    assert first.out == second.out


def test_module_entry_point(tmp_path):
    prog = write(tmp_path, "a.rpl", "expect fn(x) = x of dirac(2);")
    proc = subprocess.run([sys.executable, "-m", "riesz.cli", "run", prog, "--json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"][0]["value"] == 2
