"""Observation-tree policies built over a store of super maps."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from ..execution import Action, apply_action, initial_state
from ..graph_env import NavGraph, Path, Realization, distances_from, shortest_path, shortest_paths_from
from ..map_memory import SuperMapStore, to_edge_subsets
from .optimistic import simulate_optimistic

# Order used when alternatives tie on expected cost.
_OBSERVE, _COMMIT, _SWITCH = 0, 1, 2


@dataclass(frozen=True)
class PolicyBuildParams:
    alpha_travel: float = 1.0
    alpha_obs: float = 1.0
    alpha_goal: float = 1.0
    c_obs: float = 0.0
    # Compare each observation subtree against committing or switching at once.
    prune: bool = True

    def __post_init__(self):
        ws = (self.alpha_travel, self.alpha_obs, self.alpha_goal)
        if any(w < 0 for w in ws):
            raise ValueError("heuristic weights must be nonnegative")
        if not any(w > 0 for w in ws):
            raise ValueError("at least one heuristic weight must be positive")
        if self.c_obs < 0:
            raise ValueError("c_obs must be nonnegative")


@dataclass(frozen=True)
class PolicyNode:
    belief: tuple[int, ...]
    vertex: str
    leg: Path
    observation: str | None = None
    children: tuple["PolicyNode", "PolicyNode"] | None = None
    switch: bool = False

    @property
    def is_leaf(self) -> bool:
        return self.observation is None

    def to_dict(self) -> dict:
        d = {"belief": list(self.belief), "vertex": self.vertex, "leg": self.leg.to_dict()}
        if self.observation is not None:
            d["observation"] = self.observation
            d["children"] = {"unblocked": self.children[0].to_dict(),
                             "blocked": self.children[1].to_dict()}
        if self.switch:
            d["switch"] = True
        return d

    @classmethod
    def from_dict(cls, d) -> "PolicyNode":
        children = None
        if d.get("observation") is not None:
            ch = d["children"]
            children = (cls.from_dict(ch["unblocked"]), cls.from_dict(ch["blocked"]))
        return cls(tuple(d["belief"]), d["vertex"], Path.from_dict(d["leg"]),
                   d.get("observation"), children, bool(d.get("switch", False)))


@dataclass(frozen=True)
class PolicyTree:
    root: PolicyNode
    start: str
    goal: str

    def nodes(self):
        stack = [self.root]
        while stack:
            n = stack.pop()
            yield n
            if n.children:
                stack.extend(reversed(n.children))

    def to_dict(self) -> dict:
        return {"start": self.start, "goal": self.goal, "root": self.root.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d) -> "PolicyTree":
        return cls(PolicyNode.from_dict(d["root"]), d["start"], d["goal"])


def _entropy(ws) -> float:
    tot = sum(ws)
    if tot <= 0:
        return 0.0
    return -sum(w / tot * math.log2(w / tot) for w in ws if w > 0)


class _Builder:
    def __init__(self, graph, store, pmf, v_g, params):
        self.graph = graph
        self.records = store.records()
        self.subsets = to_edge_subsets(store, graph)
        self.weights = [float(p) for p in pmf]
        self.v_g = v_g
        self.params = params
        self.surrogate = 2.0 * graph.total_cost
        self.to_goal = [distances_from(graph, s, v_g) for s in self.subsets]
        self._paths = {}
        self._opt = {}
        self.memo = {}

    def norm(self, belief):
        ws = [self.weights[i] for i in belief]
        tot = sum(ws)
        if tot <= 0:
            return {i: 1.0 / len(belief) for i in belief}
        return {i: w / tot for i, w in zip(belief, ws)}

    def goal_path(self, i, v):
        key = (i, v)
        if key not in self._paths:
            self._paths[key] = shortest_path(self.graph, self.subsets[i], v, self.v_g)
        return self._paths[key]

    def switch_cost(self, i, v):
        # Optimistic completion from v in map i, sensing only at v.
        key = (i, v)
        if key not in self._opt:
            real = Realization(self.subsets[i])
            rec = simulate_optimistic(self.graph, real, initial_state(self.graph, real, v), self.v_g,
                                      self.params.c_obs)
            self._opt[key] = rec.total_cost
        return self._opt[key]

    def expected(self, belief, costs):
        q = self.norm(belief)
        return sum(q[i] * costs[i] for i in belief)

    def build(self, belief, v):
        """Return (node whose leg starts at v, per-map cost from v) for a belief set."""
        key = (belief, v)
        if key not in self.memo:
            self.memo[key] = self._build(belief, v)
        return self.memo[key]

    def _switch(self, belief, v):
        return PolicyNode(belief, v, Path.at(v), switch=True), {i: self.switch_cost(i, v) for i in belief}

    def _build(self, belief, v):
        if v == self.v_g:
            return PolicyNode(belief, v, Path.at(v)), {i: 0.0 for i in belief}
        paths = [self.goal_path(i, v) for i in belief]
        if all(p is None for p in paths):
            return self._switch(belief, v)
        if len(belief) == 1 or (None not in paths and len({p.edges for p in paths}) == 1):
            p = paths[0]
            return PolicyNode(belief, self.v_g, p), {i: p.cost for i in belief}

        options = []
        obs = self._observe(belief, v)
        if obs is not None:
            options.append((self.expected(belief, obs[1]), _OBSERVE, obs))
        if self.params.prune or obs is None:
            common = frozenset.intersection(*(self.subsets[i] for i in belief))
            cp = shortest_path(self.graph, common, v, self.v_g)
            if cp is not None:
                options.append((cp.cost, _COMMIT, (PolicyNode(belief, self.v_g, cp), {i: cp.cost for i in belief})))
            sw = self._switch(belief, v)
            options.append((self.expected(belief, sw[1]), _SWITCH, sw))
        options.sort(key=lambda o: (round(o[0], 9), o[1]))
        return options[0][2]

    def _observe(self, belief, v):
        g, prm = self.graph, self.params
        q = self.norm(belief)
        common = frozenset.intersection(*(self.subsets[i] for i in belief))
        legs = shortest_paths_from(g, common, v)
        best = None
        for w in sorted(legs):
            leg = legs[w]
            if w == self.v_g or self.v_g in leg.vertices:
                continue
            e_goal = sum(q[i] * self.to_goal[i].get(w, self.surrogate) for i in belief)
            cost_term = prm.alpha_travel * leg.cost + prm.alpha_obs * prm.c_obs + prm.alpha_goal * e_goal
            for e in g.incident(w):
                U = tuple(i for i in belief if e in self.records[i].unblocked)
                B = tuple(i for i in belief if e in self.records[i].blocked)
                if not U or not B:
                    continue
                # Maps that never saw e stay in both branches.
                Q = tuple(i for i in belief if i not in U and i not in B)
                if_open = tuple(sorted(U + Q))
                if_blocked = tuple(sorted(B + Q))
                pu = sum(q[i] for i in if_open)
                pb = sum(q[i] for i in B)
                h = pu * _entropy([q[i] for i in if_open]) + pb * _entropy([q[i] for i in if_blocked])
                key = (round(h * cost_term, 9), round(cost_term, 9), w, e)
                if best is None or key < best[0]:
                    best = (key, w, e, leg, if_open, if_blocked)
        if best is None:
            return None
        _, w, e, leg, if_open, if_blocked = best
        cu, costs_u = self.build(if_open, w)
        cb, costs_b = self.build(if_blocked, w)
        costs = {i: leg.cost + prm.c_obs + (costs_u if e in self.subsets[i] else costs_b)[i] for i in belief}
        return PolicyNode(belief, w, leg, e, (cu, cb)), costs


def build_policy(graph: NavGraph, store: SuperMapStore, pmf, v_s: str, v_g: str,
                 params: PolicyBuildParams | None = None) -> PolicyTree:
    """Build an observation tree over the super maps in `store`.

    `pmf` holds normalized weights, one per stored map.
    """
    params = params or PolicyBuildParams()
    for name, x in (("start", v_s), ("goal", v_g)):
        if x not in graph.positions:
            raise ValueError(f"{name} vertex {x!r} is not in the graph")
    if len(store) == 0:
        raise ValueError("store is empty")
    if len(pmf) != len(store):
        raise ValueError("pmf length does not match the store")
    b = _Builder(graph, store, pmf, v_g, params)
    root, _ = b.build(tuple(range(len(store))), v_s)
    return PolicyTree(root, v_s, v_g)


def trace_cost(tree: PolicyTree, graph: NavGraph, unblocked, c_obs: float = 0.0):
    """Cost of executing the tree's hybrid controller in the world `unblocked`.

    Returns (cost, reached_goal, switched). Mirrors the runtime controller:
    a blocked leg edge or a switch leaf hands over to the optimistic planner.
    """
    real = Realization(frozenset(unblocked))
    state = initial_state(graph, real, tree.start)
    node, cost = tree.root, 0.0
    while True:
        for e in node.leg.edges:
            if e not in real.unblocked:
                return _finish(graph, real, state, tree.goal, c_obs, cost)
            state, c = apply_action(state, Action.traverse(e), real, graph)
            cost += c
        if node.observation is None:
            if node.switch or state.v != tree.goal:
                return _finish(graph, real, state, tree.goal, c_obs, cost)
            return cost, True, False
        cost += c_obs
        node = node.children[0] if node.observation in real.unblocked else node.children[1]


def _finish(graph, real, state, goal, c_obs, cost):
    rec = simulate_optimistic(graph, real, state, goal, c_obs)
    return cost + rec.total_cost, rec.reached_goal, True


def expected_cost(tree: PolicyTree, store: SuperMapStore, pmf, graph: NavGraph, c_obs: float = 0.0) -> float:
    """Weighted cost of the tree over the stored maps, unknown edges taken as open."""
    subsets = to_edge_subsets(store, graph)
    return float(sum(float(p) * trace_cost(tree, graph, s, c_obs)[0] for p, s in zip(pmf, subsets)))
