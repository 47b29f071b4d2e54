"""Optimistic replanner: shortest path assuming every unknown edge is traversable."""
from __future__ import annotations

from ..execution import Action, Controller, RobotState, run_from_state
from ..graph_env import NavGraph, Path, Realization, shortest_path


def optimistic_path(state: RobotState, graph: NavGraph, v_g: str) -> Path | None:
    return shortest_path(graph, graph.edge_ids - state.known_blocked, state.v, v_g)


def optimistic_next(state: RobotState, graph: NavGraph, v_g: str) -> Action:
    """Stateless form: replan from scratch and take the first edge."""
    if state.v == v_g:
        return Action.terminate(True)
    path = optimistic_path(state, graph, v_g)
    if path is None:
        return Action.terminate(False)
    return Action.traverse(path.edges[0])


class OptimisticController(Controller):
    """Follows the current optimistic path and replans only when it is invalidated."""

    def start(self, graph, v_s, v_g):
        super().start(graph, v_s, v_g)
        self.path: Path | None = None
        self.idx = 0
        self.replans = 0

    def _valid(self, state: RobotState) -> bool:
        p = self.path
        if p is None or self.idx >= len(p.edges) or p.vertices[self.idx] != state.v:
            return False
        return not any(e in state.known_blocked for e in p.edges[self.idx:])

    def next_action(self, state: RobotState) -> Action:
        if state.v == self.v_g:
            return Action.terminate(True)
        if not self._valid(state):
            self.path = optimistic_path(state, self.graph, self.v_g)
            self.idx = 0
            self.replans += 1
            if self.path is None:
                return Action.terminate(False)
        e = self.path.edges[self.idx]
        self.idx += 1
        return Action.traverse(e)


def simulate_optimistic(graph: NavGraph, realization: Realization, state: RobotState, v_g: str,
                        c_obs: float = 0.0):
    """Run the optimistic controller from `state`; returns its TaskRecord."""
    ctl = OptimisticController()
    ctl.start(graph, state.v, v_g)
    return run_from_state(ctl, state, realization, graph, v_g, c_obs)
