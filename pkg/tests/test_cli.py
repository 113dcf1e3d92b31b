import json

import pytest

from copocut.cli import main
from copocut.problems import k5_minus_edge


@pytest.fixture
def files(tmp_path):
    mbqp = tmp_path / "ex.json"
    mbqp.write_text(json.dumps({"n": 2, "m": 1, "Q": [[1, -1], [-1, 0]], "c": [0, 0], "A": [[1, 1]],
                                "b": [1], "binary": []}))
    graph = tmp_path / "g.col"
    graph.write_text(k5_minus_edge().to_dimacs())
    matrix = tmp_path / "m.json"
    matrix.write_text(json.dumps({"size": 3, "entries": [[1, -1, -1], [-1, 1, -1], [-1, -1, 1]]}))
    return tmp_path, mbqp, graph, matrix


def test_solve(files, capsys):
    tmp, mbqp, _, _ = files
    report = tmp / "r.json"
    assert main(["solve", str(mbqp), "--bits", "5", "--target-width", "1e-3", "--report", str(report)]) == 0
    lo, hi = json.loads(report.read_text())["lower_bound"], json.loads(report.read_text())["upper_bound"]
    assert lo <= -1 / 3 <= hi
    out = capsys.readouterr().out
    assert str(report) in out and out.startswith("[")


def test_maxclique(files, capsys):
    _, _, graph, _ = files
    assert main(["maxclique", str(graph)]) == 0
    assert capsys.readouterr().out.strip() == "4"
    assert main(["maxclique", str(graph), "--solver", "sa", "--reads", "200", "--escalate"]) == 0
    assert capsys.readouterr().out.strip() == "4"


def test_checkcop(files, capsys):
    _, _, _, matrix = files
    assert main(["checkcop", str(matrix), "--bits", "1"]) == 0
    verdict = json.loads(capsys.readouterr().out)
    assert verdict == {"copositive": False, "value": -3.0, "certificate": [1.0, 1.0, 1.0]}


def test_checkcop_sa(files, capsys):
    _, _, _, matrix = files
    assert main(["checkcop", str(matrix), "--bits", "2", "--solver", "sa", "--sweeps", "20", "--reads", "50",
                 "--seed", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["copositive"] is False


def test_export_milp(files, capsys):
    _, _, graph, _ = files
    assert main(["export-milp", str(graph)]) == 0
    assert " c0: x3 + x4 <= 1" in capsys.readouterr().out.splitlines()


def test_penalty_sweep(files, capsys):
    _, _, graph, _ = files
    assert main(["penalty-sweep", str(graph), "--weights", "0.5,2", "--reads", "50"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "weight,valid_fraction,mean_normalized_size,ground_fraction" and len(lines) == 3


def test_bench(files, capsys):
    tmp, _, _, _ = files
    suite = tmp / "suite.json"
    suite.write_text(json.dumps({"sizes": [6], "densities": [0.5], "seeds": 2, "methods": ["brute-force"]}))
    out = tmp / "res.csv"
    assert main(["bench", str(suite), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3


@pytest.mark.parametrize("argv", [
    ["checkcop", "missing.json"],
    ["solve", "missing.json"],
    ["maxclique", "missing.col"],
    ["frobnicate"],
])
def test_invalid_input_exit_code(argv, capsys):
    assert main(argv) == 2


def test_malformed_documents(files):
    tmp, mbqp, graph, matrix = files
    bad = tmp / "bad.json"
    bad.write_text("{not json")
    assert main(["checkcop", str(bad)]) == 2
    assert main(["solve", str(matrix)]) == 2
    assert main(["maxclique", str(mbqp)]) == 2
    suite = tmp / "suite.json"
    suite.write_text(json.dumps({"methods": []}))
    assert main(["bench", str(suite)]) == 2
    assert main(["penalty-sweep", str(graph), "--weights", "1,-2"]) == 2
    assert main(["checkcop", str(matrix), "--bits", "0"]) == 2


def test_solver_failure_exit_code(files):
    _, _, _, matrix = files
    assert main(["checkcop", str(matrix), "--bits", "9"]) == 3
    assert main(["maxclique", str(files[2]), "--bits", "6"]) == 3
