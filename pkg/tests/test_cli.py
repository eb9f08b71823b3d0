import csv
import io
import json
from pathlib import Path

import jsonschema
import pytest

from asl.cli import run

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def call(*argv):
    out = io.StringIO()
    code = run([str(a) for a in argv], stdout=out)
    text = out.getvalue()
    return code, (json.loads(text) if text else None), text


def validate(command, doc):
    schema = json.loads((SCHEMAS / f"{command}.json").read_text())
    jsonschema.validate(doc, schema)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- the documented examples -----------------------------------------------------

def test_verify_example():
    code, doc, _ = call("verify", "--case", "p2", "--grid", 50)
    assert code == 0
    validate("verify", doc)
    assert doc["res_21"] < 1e-11


def test_solve_example(tmp_path):
    report = tmp_path / "r.json"
    code, doc, text = call("solve", "--domain", "omega2", "--grid", 64, "--report", report)
    assert code == 0
    validate("solve", doc)
    saved = json.loads(report.read_text())
    assert saved["residual_inf"] < 1e-10
    assert report.read_text() == text


def test_soliton_alpha_example():
    code, doc, _ = call("soliton-alpha")
    assert code == 0
    validate("soliton-alpha", doc)
    assert doc["residual"] < 1e-12
    assert doc["bracket"] == [0.43, 0.44]


# -- every subcommand against its schema ------------------------------------------------

def test_domains(tmp_path):
    code, doc, _ = call("domains")
    assert code == 0
    validate("domains", doc)
    assert [d["name"] for d in doc["domains"]] == ["omega1", "omega2", "omega3"]
    out = tmp_path / "b.csv"
    code, doc, _ = call("domains", "--domain", "omega3", "--samples", 60, "--out", out)
    assert code == 0
    validate("domains", doc)
    rows = read_csv(out)
    assert rows[0] == ["s", "t", "piece", "nx", "ny"] and len(rows) == 61


@pytest.mark.parametrize("emit", ["psi", "hstar"])
def test_transform(tmp_path, emit):
    out = tmp_path / "t.csv"
    code, doc, _ = call("transform", "--case", "p2", "--grid", 64, "--emit", emit, "--out", out)
    assert code == 0
    validate("transform", doc)
    rows = read_csv(out)
    assert rows[0] == ["s", "t", "value"] and len(rows) == doc["rows"] + 1
    if emit == "psi":
        assert doc["max_error_vs_closed_form"] < 1e-10


def test_solve_phi(tmp_path):
    out = tmp_path / "phi.csv"
    code, doc, _ = call("solve", "--domain", "omega2", "--grid", 32, "--k", 2, "--out", out)
    assert code == 0
    validate("solve", doc)
    assert doc["unknown"] == "phi" and read_csv(out)[0] == ["s", "t", "phi"]


def test_fubini_pick(tmp_path):
    out = tmp_path / "fp.csv"
    code, doc, _ = call("fubini-pick", "--domain", "omega2", "--source", "exact",
                        "--points", 16, "--out", out)
    assert code == 0
    validate("fubini-pick", doc)
    rows = read_csv(out)
    assert rows[0] == ["s", "t", "piece", "a1", "f", "fit_residual"] and len(rows) == 17
    assert doc["fitted"] + doc["failed"] == 16


def test_fubini_pick_solved(tmp_path):
    out = tmp_path / "fp.csv"
    code, doc, _ = call("fubini-pick", "--domain", "omega3", "--source", "solve", "--grid", 32,
                        "--points", 12, "--out", out)
    assert code == 0
    validate("fubini-pick", doc)
    assert doc["grid"] == 32


def test_export_contour(tmp_path):
    field = tmp_path / "psi.csv"
    assert call("transform", "--case", "p2", "--grid", 32, "--emit", "psi", "--out", field)[0] == 0
    svg = tmp_path / "psi.svg"
    code, doc, _ = call("export-contour", "--field", field, "--levels", -0.2, -0.1, "--out", svg)
    assert code == 0
    validate("export-contour", doc)
    assert [lv["curves"] for lv in doc["levels"]] == [1, 1]
    assert svg.read_text().startswith("<?xml")


# -- exit codes -------------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["verify", "--case", "p3"],
    ["verify", "--case", "p2", "--bogus"],
    ["solve", "--domain", "omega2", "--grid", "8"],
    ["fubini-pick", "--domain", "omega3", "--source", "exact", "--out", "x.csv"],
    ["domains", "--out", "x.csv"],
])
def test_usage_errors_exit_1(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(argv, stdout=io.StringIO()) == 1
    assert "usage:" in capsys.readouterr().err


def test_unwritable_output_exits_1_before_work(tmp_path, capsys):
    missing = tmp_path / "no" / "such" / "dir" / "out.csv"
    assert run(["solve", "--domain", "omega3", "--grid", "128", "--out", str(missing)],
               stdout=io.StringIO()) == 1
    assert "does not exist" in capsys.readouterr().err


def test_unreadable_field_exits_1(tmp_path):
    code, _, _ = call("export-contour", "--field", tmp_path / "missing.csv", "--out", tmp_path / "x.svg")
    assert code == 1


def test_malformed_field_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("s,t,psi\n0,0,zero\n")
    code, _, _ = call("export-contour", "--field", bad, "--out", tmp_path / "x.svg")
    assert code == 1
    assert "line 2" in capsys.readouterr().err


def test_numerical_failure_exits_2(capsys):
    assert run(["soliton-alpha", "--bracket", "0.5", "0.9"], stdout=io.StringIO()) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_solver_failure_exits_2(capsys):
    assert run(["solve", "--domain", "omega2", "--grid", "16", "--tol", "1e-300"],
               stdout=io.StringIO()) == 2
    assert "residual trace" in capsys.readouterr().err


def test_version():
    assert run(["--version"], stdout=io.StringIO()) == 0


# -- determinism and threads --------------------------------------------------------------

def test_repeated_solve_is_byte_identical(tmp_path):
    csv_path, rep = tmp_path / "psi.csv", tmp_path / "r.json"
    outs = []
    for _ in range(2):
        code, _, text = call("solve", "--domain", "omega3", "--grid", 32, "--out", csv_path, "--report", rep)
        assert code == 0
        outs.append((csv_path.read_bytes(), rep.read_bytes(), text))
    assert outs[0] == outs[1]


def test_coarse_hstar_corner_is_a_numerical_failure(tmp_path, capsys):
    # one-sided differences at the far corner of a coarse sample lose convexity
    out = tmp_path / "t.csv"
    assert call("transform", "--case", "p2", "--grid", 16, "--emit", "hstar", "--out", out)[0] == 2
    assert "not strictly convex" in capsys.readouterr().err


def test_threads_never_change_output(tmp_path, monkeypatch):
    a, b, c = (tmp_path / f"{n}.csv" for n in "abc")
    base = ["fubini-pick", "--domain", "omega1", "--source", "exact", "--points", 24]
    assert call("--threads", 1, *base, "--out", a)[0] == 0
    assert call("--threads", 4, *base, "--out", b)[0] == 0
    monkeypatch.setenv("ASL_THREADS", "3")
    assert call(*base, "--out", c)[0] == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_bad_thread_environment(monkeypatch):
    monkeypatch.setenv("ASL_THREADS", "zero")
    assert call("soliton-alpha")[0] == 1
    monkeypatch.setenv("ASL_THREADS", "0")
    assert call("soliton-alpha")[0] == 1
    # the flag wins over the environment
    assert call("--threads", 2, "soliton-alpha")[0] == 0


def test_console_script_entry_point():
    from importlib.metadata import entry_points
    (ep,) = [e for e in entry_points(group="console_scripts") if e.name == "asl"]
    assert ep.value == "asl.cli:main"
    assert ep.load().__module__ == "asl.cli"
