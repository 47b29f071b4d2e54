"""Grid-level task execution: moving cell by cell, sensing and resolving edges on the way."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from ..execution import (OBSERVE, TERMINATE, TRAVERSE, Action, Controller, PolicyViolation, RobotState,
                         RunawayPolicyError, TaskRecord, default_step_budget)
from ..graph_env import (BLOCKED, UNBLOCKED, Edge, EnvironmentSpec, NavGraph, Realization,
                         shortest_path)
from ..map_memory import MapRecord
from .navgraph import GraphGeometry, build_nav_graph, grid_path, octile
from .resolver import apply_verdicts, resolve_edges
from .world import GridFormatError, GridWorld, inflate, parse_grid, parse_labels, sense

TEMP_VERTEX = "__vR__"


def true_unblocked(world: GridWorld, graph: NavGraph, geom: GraphGeometry) -> frozenset[str]:
    """Edges with an in-submap path through true free space."""
    out = set()
    for eid, e in graph.edges.items():
        mask = world.free & geom.region(world.labels, e.submap, e.u, e.v)
        if grid_path(mask, geom.vertex_cells[e.u], geom.vertex_cells[e.v]) is not None:
            out.add(eid)
    return frozenset(out)


def replan_interior(world: GridWorld, graph: NavGraph, geom: GraphGeometry, known_blocked, v: str, v_g: str,
                    submap: str | None = None, exclude=()):
    """Shortest path from the robot's own position, which may lie inside an edge.

    A temporary vertex at the robot connects to `v` and to each vertex reachable
    from `v` by a non-blocked edge of the same submap, at straight-line cost.
    Returns a Path starting at the temporary vertex, or None.
    """
    known_blocked = frozenset(known_blocked)
    if world.robot == geom.vertex_cells[v]:
        return shortest_path(graph, graph.edge_ids - known_blocked, v, v_g)
    S = world.submap(world.robot) if submap is None else submap
    x, y = world.xy(world.robot)
    targets = {} if v in exclude else {v: None}
    for eid in graph.incident(v):
        e = graph.edges[eid]
        w = e.other(v)
        if e.submap == S and eid not in known_blocked and w not in exclude:
            targets.setdefault(w, None)
    temps = []
    for w in sorted(targets):
        wx, wy = graph.positions[w]
        temps.append(Edge(f"{TEMP_VERTEX}:{w}", TEMP_VERTEX, w, max(math.hypot(wx - x, wy - y), 1e-9), S))
    positions = dict(graph.positions)
    positions[TEMP_VERTEX] = (x, y)
    aug = NavGraph(positions, list(graph.edges.values()) + temps, TEMP_VERTEX, v_g)
    allowed = (graph.edge_ids - known_blocked) | {t.id for t in temps}
    return shortest_path(aug, allowed, TEMP_VERTEX, v_g)


class _Run:
    def __init__(self, world, graph, geom, v_s, budget, trace=None):
        self.world, self.graph, self.geom = world, graph, geom
        self.trace = trace
        if trace is not None:
            trace.append(world.robot)
        self.known: dict[str, str] = {}
        self.v = v_s
        self.cost = 0.0
        self.steps = 0
        self.budget = budget
        self.region = world.labels == world.submap(world.robot)
        self.refresh()

    def refresh(self):
        sense(self.world)
        apply_verdicts(self.known, resolve_edges(self.world, self.graph, self.geom))

    def state(self) -> RobotState:
        b = frozenset(e for e, s in self.known.items() if s == BLOCKED)
        u = frozenset(e for e, s in self.known.items() if s == UNBLOCKED)
        return RobotState(self.v, b, u)

    def edge_region(self, eid):
        e = self.graph.edges[eid]
        return self.geom.region(self.world.labels, e.submap, e.u, e.v)

    def step(self, cell):
        self.steps += 1
        if self.steps > self.budget:
            raise RunawayPolicyError(f"grid task exceeded {self.budget} cell moves")
        self.cost += octile(self.world.robot, cell) * self.world.resolution
        self.world.robot = cell
        if self.trace is not None:
            self.trace.append(cell)
        self.refresh()

    def move(self, target, region, stop=lambda: False) -> str:
        """Walk toward `target` inside `region`, replanning as obstacles appear."""
        w = self.world
        region = region.copy()
        region[w.robot] = True
        self.region = region
        while True:
            if w.robot == target:
                return "arrived"
            if stop():
                return "stopped"
            found = grid_path(w.optimistic & region, w.robot, target)
            if found is None:
                return "noroute"
            cells = found[0]
            for k in range(1, len(cells)):
                self.step(cells[k])
                if stop():
                    return "stopped"
                if w.robot == target:
                    return "arrived"
                if any(w.known_obstacle[c] for c in cells[k + 1:]):
                    break

    def go_to_vertex_first(self, region):
        """Return to the current vertex unless the robot already stands in `region`."""
        here = self.world.robot
        if here == self.geom.vertex_cells[self.v] or region[here]:
            return
        self.move(self.geom.vertex_cells[self.v], self.region)

    def traverse(self, eid, v_g):
        e = self.graph.edges[eid]
        u = e.other(self.v)
        region = self.edge_region(eid)
        self.go_to_vertex_first(region)
        res = self.move(self.geom.vertex_cells[u], region, lambda: self.known.get(eid) == BLOCKED)
        if res == "arrived":
            apply_verdicts(self.known, [(eid, UNBLOCKED)])
            self.v = u
            return
        # No optimistic route inside the submap means the edge is blocked.
        apply_verdicts(self.known, [(eid, BLOCKED)])
        self.hop_after_block(e.submap, region, v_g)

    def hop_after_block(self, submap, region, v_g):
        excluded = set()
        while self.world.robot != self.geom.vertex_cells[self.v]:
            blocked = {x for x, s in self.known.items() if s == BLOCKED}
            path = replan_interior(self.world, self.graph, self.geom, blocked, self.v, v_g, submap, excluded)
            if path is None:
                return
            w = path.vertices[1] if path.start == TEMP_VERTEX else self.v
            target = self.geom.vertex_cells[w]
            hop_region = region | (self.world.labels == submap)
            hop_region[target] = True
            if self.move(target, hop_region) == "arrived":
                self.v = w
                return
            excluded.add(w)

    def observe(self, eid):
        if eid in self.known:
            return
        u = self.graph.edges[eid].other(self.v)
        region = self.edge_region(eid)
        self.go_to_vertex_first(region)
        res = self.move(self.geom.vertex_cells[u], region, lambda: eid in self.known)
        if eid not in self.known:
            apply_verdicts(self.known, [(eid, UNBLOCKED if res == "arrived" else BLOCKED)])


def execute_grid_task(controller: Controller, world: GridWorld, graph: NavGraph, geom: GraphGeometry,
                      v_s: str, v_g: str, c_obs: float = 0.0, step_budget: int | None = None,
                      trace: list | None = None) -> TaskRecord:
    """Run one task in the grid; cost is metric distance travelled plus observation costs.

    If `trace` is a list, every cell the robot occupies is appended to it.
    """
    if world.obstacle[geom.vertex_cells[v_s]]:
        raise GridFormatError("start cell is not free")
    world.robot = geom.vertex_cells[v_s]
    budget = 20 * world.shape[0] * world.shape[1] if step_budget is None else step_budget
    run = _Run(world, graph, geom, v_s, budget, trace)
    controller.start(graph, v_s, v_g)
    rec = TaskRecord()
    truth = None
    for _ in range(default_step_budget(graph) + budget):
        state = run.state()
        a = controller.next_action(state)
        if a.kind == TERMINATE:
            if a.success and run.v != v_g:
                raise PolicyViolation(f"terminate(success) at {run.v!r}")
            if not a.success:
                truth = truth or true_unblocked(world, graph, geom)
                if shortest_path(graph, truth, run.v, v_g) is not None:
                    raise PolicyViolation("terminate(failure) although the goal is reachable")
            rec.actions.append((a, 0.0))
            rec.reached_goal = bool(a.success)
            break
        if a.edge not in graph.edges or a.edge not in graph.incident(run.v):
            raise PolicyViolation(f"{a.kind}({a.edge}) is not incident to {run.v!r}")
        before = run.cost
        if a.kind == TRAVERSE:
            if state.known_blocked and a.edge in state.known_blocked:
                raise PolicyViolation(f"traverse({a.edge}) on an edge known to be blocked")
            run.traverse(a.edge, v_g)
            spent = run.cost - before
        elif a.kind == OBSERVE:
            run.observe(a.edge)
            spent = run.cost - before + c_obs
            run.cost += c_obs
        else:
            raise PolicyViolation(f"unknown action kind {a.kind!r}")
        rec.actions.append((a, spent))
    else:
        raise RunawayPolicyError("grid task exceeded its action budget")
    rec.total_cost = run.cost
    st = run.state()
    rec.map = MapRecord(st.known_blocked, st.known_unblocked)
    rec.switched_to_optimistic = bool(getattr(controller, "switched", False))
    return rec


@dataclass
class GridEnvironment:
    """A labeled grid plus a finite set of obstacle overlays with a hidden pmf."""
    world: GridWorld
    graph: NavGraph
    geom: GraphGeometry
    overlays: list
    names: list
    pmf: tuple

    def __post_init__(self):
        reals = []
        for ov, name in zip(self.overlays, self.names):
            w = self.world.new_task(ov, self.geom.vertex_cells["s"])
            reals.append(Realization(true_unblocked(w, self.graph, self.geom), name))
        self.spec = EnvironmentSpec(self.graph, tuple(reals), tuple(self.pmf))

    def task_world(self, index: int) -> GridWorld:
        return self.world.new_task(self.overlays[index], self.geom.vertex_cells[self.graph.start])

    def run(self, controller, index: int, c_obs: float = 0.0) -> TaskRecord:
        g = self.graph
        return execute_grid_task(controller, self.task_world(index), g, self.geom, g.start, g.goal, c_obs)

    def optimal(self, index: int):
        p = shortest_path(self.graph, self.spec.realizations[index].unblocked, self.graph.start, self.graph.goal)
        return None if p is None else p.cost

    @classmethod
    def from_dict(cls, doc: dict, root=".") -> "GridEnvironment":
        root = FsPath(root)
        base, s, g = parse_grid((root / doc["grid"]).read_text(encoding="utf-8"))
        labels = parse_labels((root / doc["labels"]).read_text(encoding="utf-8"), base)
        s = tuple(doc.get("start", s) or ()) or None
        g = tuple(doc.get("goal", g) or ()) or None
        res = float(doc.get("resolution", 1.0))
        graph, geom = build_nav_graph(base, labels, s, g, res)
        world = GridWorld(base, labels, res, float(doc.get("r_max", 5.0)))
        radius = float(doc.get("inflate", 0.0))
        keep = {geom.vertex_cells["s"], geom.vertex_cells["g"]}
        overlays, names = [], []
        for i, rd in enumerate(doc["realizations"]):
            ov = np.zeros_like(base)
            for r, c in rd.get("obstacles", []):
                ov[r, c] = True
            n = int(rd.get("debris", 0))
            if n:
                rng = np.random.default_rng(int(rd.get("debris_seed", i)))
                free = [tuple(p) for p in np.argwhere(~base) if tuple(p) not in keep]
                for k in rng.choice(len(free), size=min(n, len(free)), replace=False):
                    ov[free[k]] = True
            ov = inflate(ov, radius) & ~base
            for c in keep:
                ov[c] = False
            overlays.append(ov)
            names.append(rd.get("name"))
        pmf = tuple(float(p) for p in doc["pmf"])
        return cls(world, graph, geom, overlays, names, pmf)

    @classmethod
    def load(cls, path) -> "GridEnvironment":
        path = FsPath(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)
