import json

import pytest

from paretodp import cli
from paretodp.solver import SolverError


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_writes_artifacts(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--game", "experts2", "--beta", 0.5, "--grid", 20,
                       "--iters", 10, "--out", tmp_path)
    assert code == 0
    report = json.loads(out)
    assert report["minmax"] == pytest.approx(0.5, abs=1e-3)
    assert {p.name for p in tmp_path.iterdir()} == {
        "solve.json", "frontier_raw.csv", "frontier_normalized.csv", "bounds.json"}
    blob = json.loads((tmp_path / "solve.json").read_text())
    assert blob["config"]["grid"] == 20 and blob["version"]
    header = (tmp_path / "frontier_raw.csv").read_text().splitlines()[0]
    assert header == "p1,p2,x1,x2"


def test_outputs_are_reproducible(tmp_path, capsys):
    args = ["solve", "--game", "experts3", "--beta", 0.8, "--grid", 3, "--iters", 3]
    names = ("solve.json", "frontier_raw.csv")
    run(capsys, *args, "--out", tmp_path)
    first = [(tmp_path / n).read_bytes() for n in names]
    run(capsys, *args, "--out", tmp_path)
    assert first == [(tmp_path / n).read_bytes() for n in names]


def test_reuse_solution(tmp_path, capsys):
    run(capsys, "solve", "--beta", 0.8, "--grid", 10, "--iters", 5, "--out", tmp_path)
    code, out, _ = run(capsys, "strategy", "--beta", 0.8, "--solution", tmp_path / "solve.json",
                       "--out", tmp_path)
    assert code == 0
    strat = json.loads((tmp_path / "strategy.json").read_text())
    assert len(strat["modes"]) == 21 and json.loads(out)["max_support"] <= 3


def test_evaluate_reports_bounds(tmp_path, capsys):
    code, out, _ = run(capsys, "evaluate", "--beta", 0.8, "--grid", 10, "--iters", 8,
                       "--out", tmp_path)
    rep = json.loads(out)
    assert code == 0
    assert rep["sup_excess_within_allowed"]
    assert (tmp_path / "guarantees.csv").exists()


def test_simulate_and_compare(tmp_path, capsys):
    common = ["--beta", 0.9, "--grid", 10, "--iters", 10, "--runs", 50, "--horizon", 20,
              "--seed", 3, "--adversaries", "A,C", "--out", tmp_path]
    code, out, _ = run(capsys, "simulate", *common)
    assert code == 0
    rows = json.loads(out)["results"]
    assert {(r["forecaster"], r["adversary"]) for r in rows} == {
        (f, a) for f in ("ours", "hedge", "gps") for a in "AC"}
    code, out, err = run(capsys, "compare", *common, "--forecasters", "hedge,gps",
                         "--threads", 2)
    assert code == 0 and "forecaster" in err
    assert (tmp_path / "compare.csv").read_text().count("\n") == 5


def test_example_game_and_target(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--game", "example", "--grid", 8, "--iters", 1,
                       "--out", tmp_path)
    assert code == 0
    code, _, _ = run(capsys, "simulate", "--game", "experts2", "--beta", 0.9, "--grid", 8,
                     "--iters", 4, "--runs", 5, "--horizon", 5, "--target", "prior:0.7,0.3",
                     "--forecasters", "ours", "--out", tmp_path)
    assert code == 0


def test_scalar_game_file(tmp_path, capsys):
    game = tmp_path / "g.json"
    game.write_text(json.dumps({"losses": [[0, 2], [2, 0]], "beta": 0.5}))
    code, out, _ = run(capsys, "solve", "--game", game, "--grid", 20, "--iters", 20,
                       "--out", tmp_path)
    assert code == 0
    # losses doubled: twice the two-expert value
    assert json.loads(out)["minmax"] == pytest.approx(1.0, abs=1e-3)


def test_oracle_check(tmp_path, capsys):
    code, out, _ = run(capsys, "oracle-check", "--grid", 40, "--iters", 20, "--out", tmp_path)
    assert code == 0 and json.loads(out)["within_bound"]


@pytest.mark.parametrize("argv", [
    ["solve", "--beta", "1.5"],
    ["solve", "--grid", "0"],
    ["solve", "--game", "nosuchgame"],
    ["simulate", "--game", "example", "--runs", "2"],
    ["simulate", "--adversaries", "D", "--runs", "2"],
    ["solve", "--target", "prior"],
    ["frobnicate"],
])
def test_config_errors(tmp_path, capsys, argv):
    code, _, err = run(capsys, *argv, "--out", tmp_path) if argv[0] != "frobnicate" else run(
        capsys, *argv)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "config"


def test_io_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "solve", "--grid", 4, "--iters", 1, "--out", blocker / "sub")
    assert code == 4 and json.loads(err)["error"] == "io"


def test_numeric_error(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise SolverError("step program infeasible")
    monkeypatch.setattr(cli, "value_iteration", boom)
    code, _, err = run(capsys, "solve", "--out", tmp_path)
    assert code == 3 and json.loads(err)["error"] == "numeric"
