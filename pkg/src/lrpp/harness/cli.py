"""Command-line entry point: run experiments, dump policy trees, build graphs from grids."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..graph_env import EnvironmentSpec, dump_environment, load_environment_file
from ..map_memory import SuperMapStore, policy_weights
from ..policy import PolicyBuildParams, build_policy
from .experiment import TrialConfig, run_experiment, summarize, summary_json


def _params(args) -> PolicyBuildParams:
    return PolicyBuildParams(args.alpha_travel, args.alpha_obs, args.alpha_goal, args.c_obs)


def cmd_run(args) -> int:
    cfg = TrialConfig(env=args.env, mode=args.mode, controller=args.policy, trials=args.trials,
                      tasks=args.tasks, seed=args.seed, merge=args.merge, rollouts=args.rollouts,
                      out=args.out, params=_params(args))
    rows = run_experiment(cfg)
    text = summary_json(summarize(rows))
    if args.summary:
        Path(args.summary).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_dump_policy(args) -> int:
    spec = load_environment_file(args.env)
    g = spec.graph
    if args.store:
        store = SuperMapStore.from_json(Path(args.store).read_text(encoding="utf-8"))
    else:
        store = SuperMapStore.initial(g.edge_ids)
    tree = build_policy(g, store, policy_weights(store), g.start, g.goal, _params(args))
    text = tree.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_build_graph(args) -> int:
    from ..grid.navgraph import build_nav_graph
    from ..grid.world import parse_grid, parse_labels

    base, s, g = parse_grid(Path(args.grid).read_text(encoding="utf-8"))
    labels = parse_labels(Path(args.labels).read_text(encoding="utf-8"), base)
    s = tuple(args.start) if args.start else s
    g = tuple(args.goal) if args.goal else g
    graph, _ = build_nav_graph(base, labels, s, g, args.resolution)
    # A single all-open realization keeps the document loadable as an environment.
    from ..graph_env import Realization
    doc = dump_environment(EnvironmentSpec(graph, (Realization(graph.edge_ids, "open"),), (1.0,))) + "\n"
    if args.out:
        Path(args.out).write_text(doc, encoding="utf-8")
    else:
        sys.stdout.write(doc)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lrpp", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def heuristic(sp):
        sp.add_argument("--alpha-travel", type=float, default=1.0)
        sp.add_argument("--alpha-obs", type=float, default=1.0)
        sp.add_argument("--alpha-goal", type=float, default=1.0)
        sp.add_argument("--c-obs", type=float, default=0.0)

    r = sub.add_parser("run", help="run a multi-trial experiment")
    r.add_argument("--env", required=True)
    r.add_argument("--mode", choices=("graph", "grid"), default="graph")
    r.add_argument("--policy", choices=("optimistic", "rpp-hybrid", "uct"), default="rpp-hybrid")
    r.add_argument("--rollouts", type=int, default=50)
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--tasks", type=int, default=10)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--merge", choices=("first-fit", "min-blocked"), default="first-fit")
    r.add_argument("--out", help="CSV results path")
    r.add_argument("--summary", help="write the JSON summary here instead of stdout")
    heuristic(r)
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("dump-policy", help="build and print a policy tree")
    d.add_argument("--env", required=True)
    d.add_argument("--store", help="super-map store JSON; defaults to the initial store")
    d.add_argument("--out")
    heuristic(d)
    d.set_defaults(func=cmd_dump_policy)

    b = sub.add_parser("build-graph", help="navigation graph from a labeled grid")
    b.add_argument("--grid", required=True)
    b.add_argument("--labels", required=True)
    b.add_argument("--start", type=int, nargs=2, metavar=("ROW", "COL"))
    b.add_argument("--goal", type=int, nargs=2, metavar=("ROW", "COL"))
    b.add_argument("--resolution", type=float, default=1.0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_build_graph)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"lrpp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
