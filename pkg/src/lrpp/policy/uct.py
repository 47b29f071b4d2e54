"""Rollout baseline over an independent per-edge blockage model."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..execution import Action, Controller, RobotState, sense
from ..graph_env import NavGraph, Realization, shortest_path
from ..map_memory import MapRecord
from .optimistic import OptimisticController, simulate_optimistic


@dataclass
class EdgeCountModel:
    counts: dict[str, list[int]] = field(default_factory=dict)  # edge -> [unblocked, blocked]

    def update(self, record: MapRecord) -> None:
        for e in record.unblocked:
            self.counts.setdefault(e, [0, 0])[0] += 1
        for e in record.blocked:
            self.counts.setdefault(e, [0, 0])[1] += 1

    def probability(self, eid: str) -> float:
        """Laplace-smoothed probability that the edge is unblocked."""
        u, b = self.counts.get(eid, (0, 0))
        return (u + 1) / (u + b + 2)


def sample_worlds(model: EdgeCountModel, state: RobotState, graph: NavGraph, rollouts: int, rng):
    """Draw `rollouts` unblocked-edge sets consistent with the known sets."""
    unknown = sorted(graph.edge_ids - state.known_blocked - state.known_unblocked)
    probs = np.array([model.probability(e) for e in unknown])
    draws = rng.random((rollouts, len(unknown))) < probs
    return unknown, draws


def completion_cost(graph: NavGraph, world: frozenset, state: RobotState, eid: str, v_g: str,
                    penalty: float) -> float:
    """Cost of traversing `eid` and then finishing optimistically inside `world`."""
    real = Realization(world)
    e = graph.edges[eid]
    if eid not in world:
        # Only possible when incident edges are not sensed on arrival (grid mode).
        here = sense(state.with_observations(blocked=(eid,)), real, graph)
        rec = simulate_optimistic(graph, real, here, v_g)
        return rec.total_cost + (0.0 if rec.reached_goal else penalty)
    nxt = sense(state.with_observations(unblocked=(eid,)).moved_to(e.other(state.v)), real, graph)
    rec = simulate_optimistic(graph, real, nxt, v_g)
    return e.cost + rec.total_cost + (0.0 if rec.reached_goal else penalty)


def rollout_scores(model: EdgeCountModel, state: RobotState, graph: NavGraph, v_g: str, rollouts: int,
                   rng) -> dict[str, float]:
    """Mean sampled completion cost for each edge the robot could take next."""
    cands = [e for e in graph.incident(state.v) if e not in state.known_blocked]
    unknown, draws = sample_worlds(model, state, graph, rollouts, rng)
    penalty = 2.0 * graph.total_cost
    open_edges = graph.edge_ids - state.known_blocked
    cache: dict = {}
    scores = {}
    for e in cands:
        total = 0.0
        for row in draws:
            key = row.tobytes()
            if (e, key) not in cache:
                world = open_edges - {u for u, d in zip(unknown, row) if not d}
                cache[(e, key)] = completion_cost(graph, frozenset(world), state, e, v_g, penalty)
            total += cache[(e, key)]
        scores[e] = total / rollouts
    return scores


def uct_next(model: EdgeCountModel, state: RobotState, graph: NavGraph, v_g: str, rollouts: int, rng) -> Action:
    if rollouts < 1:
        raise ValueError("rollouts must be at least 1")
    if state.v == v_g:
        return Action.terminate(True)
    if shortest_path(graph, graph.edge_ids - state.known_blocked, state.v, v_g) is None:
        return Action.terminate(False)
    cands = [e for e in graph.incident(state.v) if e not in state.known_blocked]
    if len(cands) == 1:
        return Action.traverse(cands[0])
    scores = rollout_scores(model, state, graph, v_g, rollouts, rng)
    best = min(cands, key=lambda e: (round(scores[e], 9), e))
    return Action.traverse(best)


class UCTController(Controller):
    """Rollout controller; after `patience` traversals it falls back to plain optimistic replanning."""

    def __init__(self, model: EdgeCountModel, rollouts: int, rng, patience: int | None = None):
        self.model = model
        self.rollouts = rollouts
        self.rng = rng
        self.patience = patience

    def start(self, graph, v_s, v_g):
        super().start(graph, v_s, v_g)
        self.moves = 0
        self.limit = self.patience if self.patience is not None else 2 * len(graph.positions)
        self._opt: OptimisticController | None = None

    def next_action(self, state: RobotState) -> Action:
        if self._opt is None and self.moves >= self.limit:
            self._opt = OptimisticController()
            self._opt.start(self.graph, state.v, self.v_g)
        if self._opt is not None:
            return self._opt.next_action(state)
        a = uct_next(self.model, state, self.graph, self.v_g, self.rollouts, self.rng)
        if a.kind == "traverse":
            self.moves += 1
        return a
