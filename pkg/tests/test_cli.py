import json

from lrpp import fixture_path
from lrpp.graph_env import load_environment_file
from lrpp.harness.cli import main
from lrpp.harness.experiment import rows_from_csv
from lrpp.policy import PolicyTree


def test_run_writes_csv_and_summary(tmp_path):
    out, summ = tmp_path / "r.csv", tmp_path / "s.json"
    code = main(["run", "--env", str(fixture_path("two_door.json")), "--policy", "optimistic",
                 "--trials", "2", "--tasks", "4", "--seed", "3", "--out", str(out), "--summary", str(summ)])
    assert code == 0
    assert len(rows_from_csv(out.read_text())) == 8
    assert "optimistic" in json.loads(summ.read_text())["controllers"]


def test_run_prints_summary(capsys):
    assert main(["run", "--env", str(fixture_path("three_way.json")), "--policy", "uct", "--rollouts", "5",
                 "--tasks", "3", "--merge", "min-blocked"]) == 0
    assert json.loads(capsys.readouterr().out)["last"] == 10


def test_dump_policy(tmp_path):
    out = tmp_path / "tree.json"
    assert main(["dump-policy", "--env", str(fixture_path("two_door.json")), "--out", str(out)]) == 0
    tree = PolicyTree.from_dict(json.loads(out.read_text()))
    assert tree.start == "s" and tree.goal == "g"


def test_build_graph_roundtrips(tmp_path):
    out = tmp_path / "env.json"
    assert main(["build-graph", "--grid", str(fixture_path("four_rooms_grid.txt")),
                 "--labels", str(fixture_path("four_rooms_labels.txt")), "--out", str(out)]) == 0
    spec = load_environment_file(out)
    assert len(spec.graph.edges) == 8


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["run", "--env", str(tmp_path / "missing.json")]) != 0
    assert "lrpp: error:" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["dump-policy", "--env", str(bad)]) != 0
