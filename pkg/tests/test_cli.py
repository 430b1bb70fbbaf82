import json
import os
import subprocess
import sys

import pytest

from clscnd.cli import EXIT_INFEASIBLE, EXIT_LIMIT, canonical_hash, main
from clscnd.domain import instance_to_dict, dumps
from clscnd.instgen import reference_instance

TINY = ["--plants", "2", "--dcs", "2", "--customers", "3", "--recycles", "1", "--disposals", "1",
        "--modes", "2"]


def run(*args, stdin=None):
    proc = subprocess.run([sys.executable, "-m", "clscnd", *args], input=stdin, capture_output=True,
                          text=True, timeout=600)
    return proc


def manifest(stderr):
    lines = [l for l in stderr.splitlines() if l.startswith('{"manifest"')]
    assert len(lines) == 1
    return json.loads(lines[0])["manifest"]


@pytest.fixture(scope="module")
def tiny_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "tiny.json"
    assert run("gen", "--seed", "5", "--out", str(path), *TINY).returncode == 0
    return path


def test_gen_is_deterministic_and_defaults_to_reference_sizes(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    ra = run("gen", "--seed", "1", "--out", str(a))
    run("gen", "--seed", "1", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["generator"]["seed"] == 1
    doc.pop("generator")
    assert doc == json.loads(dumps(instance_to_dict(reference_instance(1))))
    man = manifest(ra.stderr)
    assert man["sizes"][:5] == [5, 8, 20, 3, 3]
    assert man["command"] == "gen" and man["seed"] == 1 and len(man["config_hash"]) == 64


def test_gen_to_stdout_matches_file(tmp_path):
    out = tmp_path / "x.json"
    run("gen", "--seed", "2", "--out", str(out), *TINY)
    assert run("gen", "--seed", "2", *TINY).stdout == out.read_text()


@pytest.mark.parametrize("bad", [["--plants", "0"], ["--modes", "4"], ["--side", "-1"], ["--seed", "x"]])
def test_gen_rejects_bad_values(bad):
    proc = run("gen", *bad)
    assert proc.returncode == 2
    assert "error" in proc.stderr


def test_pareto_flag_validation(tiny_file):
    assert run("pareto", "--instance", str(tiny_file), "--cuts", "1").returncode == 2
    assert run("pareto", "--instance", str(tiny_file), "--epsilon", "0.5").returncode == 2


def test_bad_instance_is_usage_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("solve", "--instance", str(bad)).returncode == 2
    assert run("solve", "--instance", str(tmp_path / "missing.json")).returncode == 2


def test_solve_writes_checked_solution(tiny_file, tmp_path):
    sol = tmp_path / "sol.json"
    proc = run("solve", "--instance", str(tiny_file), "--objective", "economic", "--out", str(sol))
    assert proc.returncode == 0
    for name in ("economic:", "environmental:", "social:", "nodes:", "open:"):
        assert name in proc.stdout
    assert "all positive flows use rail" in proc.stdout
    check = run("check", "--instance", str(tiny_file), "--solution", str(sol))
    assert check.returncode == 0 and "solution: feasible" in check.stdout


def test_solve_reads_stdin_and_writes_stdout(tiny_file):
    proc = run("solve", "--objective", "social", stdin=tiny_file.read_text())
    assert proc.returncode == 0
    doc = json.loads(proc.stdout)
    assert set(doc["open"]) == {"P", "W", "C", "D"}
    assert "social:" in proc.stderr


def test_solve_exports_lp_text_for_the_chosen_objective(tiny_file, tmp_path):
    lp = tmp_path / "m.lp"
    proc = run("solve", "--instance", str(tiny_file), "--objective", "social", "--lp", str(lp))
    assert proc.returncode == 0, proc.stderr
    lines = lp.read_text().splitlines()
    assert lines[:2] == ["\\ objective: social", "Minimize"]
    assert lines[-1] == "End"
    assert sum(l.startswith(" c1_") for l in lines) == 3


def test_solve_infeasible_exit_3(tmp_path):
    doc = json.loads(run("gen", "--seed", "0", *TINY).stdout)
    doc["capacity"]["CPF"] = [1.0, 1.0]
    path = tmp_path / "inf.json"
    path.write_text(json.dumps(doc))
    proc = run("solve", "--instance", str(path))
    assert proc.returncode == EXIT_INFEASIBLE
    assert "infeasible" in proc.stderr


def test_solve_node_limit_exit_4(tiny_file):
    proc = run("solve", "--instance", str(tiny_file), "--node-limit", "2")
    assert proc.returncode == EXIT_LIMIT
    assert "best bound" in proc.stderr


def test_payoff_table_layout(tiny_file, tmp_path):
    out = tmp_path / "payoff.json"
    proc = run("payoff", "--instance", str(tiny_file), "--out", str(out))
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[0].split() == ["Economic", "Environmental", "Social"]
    assert [l.split(")")[0] + ")" for l in lines[1:]] == [
        "Trial 1 (Objective=Economic)", "Trial 2 (Objective=Environmental)", "Trial 3 (Objective=Social)"]
    doc = json.loads(out.read_text())
    for k, row in enumerate(doc["rows"]):
        col = [r["values"][doc["objectives"][k]] for r in doc["rows"]]
        assert row["values"][doc["objectives"][k]] == min(col)


def test_pareto_outputs_and_archive_check(tiny_file, tmp_path):
    files = {k: tmp_path / f"{k}.{ext}" for k, ext in
             [("csv", "csv"), ("report", "json"), ("archive", "json"), ("plot", "svg")]}
    proc = run("pareto", "--instance", str(tiny_file), "--cuts", "3", "--jobs", "1",
               *[a for k, p in files.items() for a in (f"--{k}", str(p))])
    assert proc.returncode == 0
    rep = json.loads(files["report"].read_text())
    assert len(rep["cells"]) == 9
    rows = files["csv"].read_text().splitlines()
    assert rows[0].startswith("economic,environmental,social,e_env,e_soc")
    assert len(rows) - 1 == len(rep["front"])
    assert files["plot"].read_text().startswith("<?xml")
    check = run("check", "--instance", str(tiny_file), "--archive", str(files["archive"]))
    assert check.returncode == 0
    assert "violation" not in check.stdout


def test_check_flags_corrupted_flow(tiny_file, tmp_path):
    sol = tmp_path / "sol.json"
    run("solve", "--instance", str(tiny_file), "--out", str(sol))
    doc = json.loads(sol.read_text())
    doc["flow"]["X"][0][0][0] = -abs(doc["flow"]["X"][0][0][0]) - 1.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    report = tmp_path / "rep.json"
    proc = run("check", "--instance", str(tiny_file), "--solution", str(bad), "--out", str(report))
    assert proc.returncode == EXIT_INFEASIBLE
    assert "constraint (13)" in proc.stdout
    assert 13 in {v["constraint"] for v in json.loads(report.read_text())["reports"][0]["violations"]}


def test_check_flags_missing_returns(tiny_file, tmp_path):
    sol = tmp_path / "sol.json"
    run("solve", "--instance", str(tiny_file), "--out", str(sol))
    doc = json.loads(sol.read_text())
    doc["flow"]["Z"] = [[[0.0 for _ in t] for t in j] for j in doc["flow"]["Z"]]
    bad = tmp_path / "noz.json"
    bad.write_text(json.dumps(doc))
    proc = run("check", "--instance", str(tiny_file), "--solution", str(bad))
    assert proc.returncode == EXIT_INFEASIBLE
    assert "constraint (5)" in proc.stdout


def test_check_needs_exactly_one_source(tiny_file):
    assert run("check", "--instance", str(tiny_file)).returncode == 2


def test_manifest_file_and_log_env(tiny_file, tmp_path):
    path = tmp_path / "man.json"
    proc = subprocess.run([sys.executable, "-m", "clscnd", "--manifest", str(path), "pareto", "--instance",
                           str(tiny_file), "--cuts", "2", "--jobs", "1", "--csv", str(tmp_path / "f.csv")],
                          capture_output=True, text=True, env={**os.environ, "CLSCND_LOG": "INFO"})
    assert proc.returncode == 0
    assert "INFO clscnd: cell 1/4" in proc.stderr
    man = json.loads(path.read_text())["manifest"]
    assert set(man) == {"command", "config_hash", "seed", "sizes", "version", "wall_time", "timings"}
    assert set(man["timings"]) == {"load", "payoff", "grid", "write"}


def test_config_hash_is_canonical():
    assert canonical_hash({"b": 1, "a": [1.5, "x"]}) == canonical_hash({"a": [1.5, "x"], "b": 1})
    assert canonical_hash({"a": 1}) == \
        "015abd7f5cc57a2dd94b7590f04ad8084273905ee33ec5cebeae62276a97f862"


def test_main_in_process(tiny_file, capsys):
    assert main(["solve", "--instance", str(tiny_file), "--objective", "environmental"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["objectives"]["environmental"] > 0
