from pathlib import Path

import pytest

from lrpp import fixture_path
from lrpp.graph_env import Realization, load_environment_file
from lrpp.harness.experiment import (COLUMNS, ExperimentError, GraphWorld, TrialConfig, optimal_cost,
                                     realization_sequence, rows_from_csv, rows_to_csv, run_experiment,
                                     run_trial, summarize, summary_json, trial_streams)

DATA = Path(__file__).parent / "data"


def test_optimal_cost_examples(load_fixture):
    spec = load_fixture("two_door.json")
    g = spec.graph
    assert optimal_cost(Realization(g.edge_ids), g, g.start, g.goal) == 7  # corridor, orange, right door
    closed = next(r for r in spec.realizations if r.name == "both_closed")
    assert optimal_cost(closed, g, g.start, g.goal) == 12  # corridor and the blue path
    sealed = load_fixture("three_way.json")
    assert optimal_cost(sealed.realizations[2], sealed.graph, "s", "g") is None


def test_optimistic_single_open_realization_is_optimal(load_fixture):
    spec = load_fixture("three_way.json")
    world = GraphWorld(spec)
    cfg = TrialConfig(controller="optimistic", trials=2, tasks=5)
    rows = run_trial(world, cfg, 0, [0] * 5, None)
    assert all(r.percent_of_optimal == 100.0 for r in rows)


@pytest.mark.parametrize("ctl", ["optimistic", "rpp-hybrid", "uct"])
def test_runs_are_byte_identical(tmp_path, ctl):
    env = str(fixture_path("three_way.json"))
    texts = []
    for k in range(2):
        out = tmp_path / f"r{k}.csv"
        run_experiment(TrialConfig(env=env, controller=ctl, trials=2, tasks=6, seed=11, rollouts=10, out=str(out)))
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
    assert texts[0].decode().splitlines()[0] == ",".join(COLUMNS)


def test_controllers_share_realization_sequences():
    env = str(fixture_path("correlated.json"))
    seqs = {}
    for ctl in ("optimistic", "rpp-hybrid", "uct"):
        rows = run_experiment(TrialConfig(env=env, controller=ctl, trials=3, tasks=8, seed=4, rollouts=5))
        seqs[ctl] = [(r.trial, r.task, r.realization) for r in rows]
    assert seqs["optimistic"] == seqs["rpp-hybrid"] == seqs["uct"]


def test_rollout_stream_does_not_move_realizations(load_fixture):
    spec = load_fixture("correlated.json")
    a = [realization_sequence(spec, r, 10) for r, _ in trial_streams(3, 4)]
    streams = trial_streams(3, 4)
    for _, u in streams:
        u.random(1000)  # heavy rollout use
    b = [realization_sequence(spec, r, 10) for r, _ in streams]
    assert a == b


def test_row_invariants():
    env = str(fixture_path("correlated.json"))
    for ctl in ("optimistic", "rpp-hybrid", "uct"):
        rows = run_experiment(TrialConfig(env=env, controller=ctl, trials=2, tasks=15, seed=2, rollouts=5))
        for prev, cur in zip(rows, rows[1:]):
            if prev.trial == cur.trial:
                assert cur.super_maps >= prev.super_maps
        for r in rows:
            if r.percent_of_optimal is not None:
                assert r.percent_of_optimal >= 100 - 1e-6
            if ctl != "rpp-hybrid":
                assert not r.switched


def test_unreachable_rows_leave_percent_empty():
    env = str(fixture_path("three_way.json"))
    rows = run_experiment(TrialConfig(env=env, controller="optimistic", trials=1, tasks=40, seed=0))
    sealed = [r for r in rows if r.realization == 2]
    assert sealed and all(r.optimal_cost is None and r.percent_of_optimal is None for r in sealed)
    fields = rows_to_csv(sealed).splitlines()[1].split(",")
    assert fields[COLUMNS.index("optimal_cost")] == "" and fields[COLUMNS.index("percent_of_optimal")] == ""


def test_csv_roundtrip():
    rows = rows_from_csv((DATA / "three_trials.csv").read_text())
    assert rows_from_csv(rows_to_csv(rows)) == rows


def test_summarize_examples():
    rows = rows_from_csv((DATA / "three_trials.csv").read_text())
    one = [r for r in rows if r.percent_of_optimal == 100.0][:1]
    assert summarize(one)["controllers"]["rpp-hybrid"]["mean_percent"] == 100.0
    a, b = rows[1], rows[2]
    b = type(b)(**{**b.__dict__, "percent_of_optimal": 120.0})
    assert summarize([a, b])["controllers"]["rpp-hybrid"]["mean_percent"] == 110.0
    with pytest.raises(ValueError):
        summarize([])


def test_golden_summary():
    rows = rows_from_csv((DATA / "three_trials.csv").read_text())
    got = summary_json(summarize(rows, last=2, bin_size=2))
    assert got == (DATA / "three_trials_summary.json").read_text()


def test_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(trials=0)
    with pytest.raises(ValueError):
        TrialConfig(controller="greedy")
    with pytest.raises(ValueError):
        TrialConfig(mode="voxel")


def test_runaway_reported_with_context(monkeypatch):
    from lrpp.execution import RunawayPolicyError
    spec = load_environment_file(fixture_path("three_way.json"))

    class Broken(GraphWorld):
        def run(self, controller, index, c_obs):
            raise RunawayPolicyError("loop")

    with pytest.raises(ExperimentError, match="trial 0, task 0"):
        run_trial(Broken(spec), TrialConfig(), 0, [0], None)


def test_grid_mode_experiment():
    env = str(fixture_path("four_rooms_env.json"))
    rows = run_experiment(TrialConfig(env=env, mode="grid", controller="rpp-hybrid", trials=1, tasks=6, seed=5))
    assert len(rows) == 6
    for r in rows:
        assert (r.optimal_cost is None) == (r.realization == 2)
