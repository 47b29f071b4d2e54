"""Multi-trial experiments across controllers, CSV results and summaries."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..execution import execute_task
from ..graph_env import EnvironmentSpec, NavGraph, Realization, sample_realization, shortest_path
from ..map_memory import FIRST_FIT, SuperMapStore, map_filter, normalize_strategy, policy_weights
from ..policy import (EdgeCountModel, HybridController, OptimisticController, PolicyBuildParams,
                      UCTController, build_policy)

log = logging.getLogger(__name__)

CONTROLLERS = ("optimistic", "rpp-hybrid", "uct")
COLUMNS = ("trial", "task", "controller", "realization", "cost", "optimal_cost",
           "percent_of_optimal", "switched", "super_maps")


class ExperimentError(RuntimeError):
    pass


@dataclass
class TrialConfig:
    env: str | None = None
    mode: str = "graph"
    controller: str = "rpp-hybrid"
    trials: int = 1
    tasks: int = 1
    seed: int = 0
    merge: str = FIRST_FIT
    rollouts: int = 50
    out: str | None = None
    params: PolicyBuildParams = field(default_factory=PolicyBuildParams)

    def __post_init__(self):
        if self.trials < 1 or self.tasks < 1:
            raise ValueError("trials and tasks must both be at least 1")
        if self.mode not in ("graph", "grid"):
            raise ValueError(f"mode must be graph or grid, got {self.mode!r}")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}")
        if self.rollouts < 1:
            raise ValueError("rollouts must be at least 1")
        self.merge = normalize_strategy(self.merge)


@dataclass
class ResultsRow:
    trial: int
    task: int
    controller: str
    realization: int
    cost: float
    optimal_cost: float | None
    percent_of_optimal: float | None
    switched: bool
    super_maps: int


def optimal_cost(realization: Realization, graph: NavGraph, v_s: str, v_g: str) -> float | None:
    """Shortest-path cost in the realization; None when the goal is cut off."""
    p = shortest_path(graph, realization.unblocked, v_s, v_g)
    return None if p is None else p.cost


def trial_streams(seed: int, trials: int):
    """Per trial: (realization rng, rollout rng), independent of each other."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        real_ss, uct_ss = child.spawn(2)
        out.append((np.random.default_rng(real_ss), np.random.default_rng(uct_ss)))
    return out


def realization_sequence(spec: EnvironmentSpec, rng, tasks: int) -> list[int]:
    return [sample_realization(spec, rng) for _ in range(tasks)]


class GraphWorld:
    """Graph-mode task runner; the grid layer supplies an object with the same interface."""

    def __init__(self, spec: EnvironmentSpec):
        self.spec = spec
        self.graph = spec.graph

    def run(self, controller, index: int, c_obs: float):
        return execute_task(controller, self.spec.realizations[index], self.graph,
                            self.graph.start, self.graph.goal, c_obs)

    def optimal(self, index: int):
        g = self.graph
        return optimal_cost(self.spec.realizations[index], g, g.start, g.goal)


def make_controller(name: str, graph: NavGraph, store: SuperMapStore, model: EdgeCountModel,
                    rollouts: int, rng, params: PolicyBuildParams):
    if name == "optimistic":
        return OptimisticController()
    if name == "rpp-hybrid":
        tree = build_policy(graph, store, policy_weights(store), graph.start, graph.goal, params)
        return HybridController(tree, store.records())
    return UCTController(model, rollouts, rng)


def run_trial(world, config: TrialConfig, trial: int, sequence, uct_rng) -> list[ResultsRow]:
    graph = world.graph
    store = SuperMapStore.initial(graph.edge_ids)
    model = EdgeCountModel()
    rows = []
    for task, idx in enumerate(sequence):
        ctl = make_controller(config.controller, graph, store, model, config.rollouts, uct_rng, config.params)
        try:
            rec = world.run(ctl, idx, config.params.c_obs)
        except Exception as exc:
            raise ExperimentError(f"trial {trial}, task {task}: {exc}") from exc
        store = map_filter(rec.map, store, config.merge)
        model.update(rec.map)
        opt = world.optimal(idx)
        pct = None if opt is None else 100.0 * rec.total_cost / opt
        rows.append(ResultsRow(trial, task, config.controller, idx, rec.total_cost, opt, pct,
                               rec.switched_to_optimistic, len(store)))
    return rows


def run_experiment(config: TrialConfig, world=None) -> list[ResultsRow]:
    """Run every trial; rows come back in (trial, task) order."""
    if world is None:
        world = load_world(config)
    rows = []
    for trial, (real_rng, uct_rng) in enumerate(trial_streams(config.seed, config.trials)):
        seq = realization_sequence(world.spec, real_rng, config.tasks)
        rows.extend(run_trial(world, config, trial, seq, uct_rng))
    if config.out:
        with open(config.out, "w", newline="", encoding="utf-8") as fh:
            fh.write(rows_to_csv(rows))
    return rows


def load_world(config: TrialConfig):
    if config.env is None:
        raise ValueError("an environment path is required")
    if config.mode == "grid":
        from ..grid.runner import GridEnvironment
        return GridEnvironment.load(config.env)
    from ..graph_env import load_environment_file
    return GraphWorld(load_environment_file(config.env))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(round(x, 9))
    return str(x)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ResultsRow]:
    out = []
    for d in csv.DictReader(io.StringIO(text)):
        f = lambda k: float(d[k]) if d[k] != "" else None  # noqa: E731
        out.append(ResultsRow(int(d["trial"]), int(d["task"]), d["controller"], int(d["realization"]),
                              float(d["cost"]), f("optimal_cost"), f("percent_of_optimal"),
                              d["switched"] == "1", int(d["super_maps"])))
    return out


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return None if not xs else round(math.fsum(xs) / len(xs), 9)


def summarize(rows, last: int = 10, bin_size: int = 10) -> dict:
    """Per-controller aggregates. Averages are grand means over task rows."""
    if not rows:
        raise ValueError("cannot summarize an empty results table")
    out = {}
    for ctl in sorted({r.controller for r in rows}):
        rs = [r for r in rows if r.controller == ctl]
        n_tasks = max(r.task for r in rs) + 1
        tail = [r for r in rs if r.task >= n_tasks - last]
        by_task = [[r for r in rs if r.task == t] for t in range(n_tasks)]
        switch_curve = [_mean([float(r.switched) for r in b]) for b in by_task]
        bins = []
        for start in range(0, n_tasks, bin_size):
            chunk = [r for b in by_task[start:start + bin_size] for r in b]
            bins.append(_mean([float(r.switched) for r in chunk]))
        out[ctl] = {
            "rows": len(rs),
            "mean_percent": _mean([r.percent_of_optimal for r in rs]),
            "last_mean_percent": _mean([r.percent_of_optimal for r in tail]),
            "mean_cost": _mean([r.cost for r in rs]),
            "last_mean_cost": _mean([r.cost for r in tail]),
            "switch_rate": _mean([float(r.switched) for r in rs]),
            "switch_rate_binned": bins,
            "switch_rate_curve": switch_curve,
            "super_map_curve": [_mean([float(r.super_maps) for r in b]) for b in by_task],
        }
    return {"last": last, "bin_size": bin_size, "controllers": out}


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2) + "\n"
