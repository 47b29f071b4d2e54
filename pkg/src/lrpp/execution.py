"""Single-task execution of a controller against a hidden realization."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .graph_env import NavGraph, Realization, shortest_path
from .map_memory import MapRecord

TRAVERSE = "traverse"
OBSERVE = "observe"
TERMINATE = "terminate"


class PolicyViolation(RuntimeError):
    """An action was illegal in the current state, or a terminate flag was wrong."""


class RunawayPolicyError(RuntimeError):
    """The controller exceeded the step budget; it is not complete."""


@dataclass(frozen=True)
class RobotState:
    v: str
    known_blocked: frozenset[str] = frozenset()
    known_unblocked: frozenset[str] = frozenset()

    def map_record(self) -> MapRecord:
        return MapRecord(self.known_blocked, self.known_unblocked)

    def with_observations(self, blocked=(), unblocked=()) -> "RobotState":
        return RobotState(self.v, self.known_blocked | frozenset(blocked),
                          self.known_unblocked | frozenset(unblocked))

    def moved_to(self, v: str) -> "RobotState":
        return RobotState(v, self.known_blocked, self.known_unblocked)


@dataclass(frozen=True)
class Action:
    kind: str
    edge: str | None = None
    success: bool | None = None

    @classmethod
    def traverse(cls, eid: str) -> "Action":
        return cls(TRAVERSE, eid)

    @classmethod
    def observe(cls, eid: str) -> "Action":
        return cls(OBSERVE, eid)

    @classmethod
    def terminate(cls, success: bool) -> "Action":
        return cls(TERMINATE, None, bool(success))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.edge is not None:
            d["edge"] = self.edge
        if self.success is not None:
            d["success"] = self.success
        return d


class Controller:
    """Base for controllers: `start` once per task, then `next_action` per step."""

    switched = False

    def start(self, graph: NavGraph, v_s: str, v_g: str) -> None:
        self.graph, self.v_s, self.v_g = graph, v_s, v_g

    def next_action(self, state: RobotState) -> Action:
        raise NotImplementedError


@dataclass
class TaskRecord:
    actions: list[tuple[Action, float]] = field(default_factory=list)
    total_cost: float = 0.0
    map: MapRecord = field(default_factory=MapRecord)
    reached_goal: bool = False
    switched_to_optimistic: bool = False

    def to_dict(self) -> dict:
        return {
            "actions": [dict(a.to_dict(), cost=c) for a, c in self.actions],
            "total_cost": self.total_cost,
            "map": self.map.to_dict(),
            "reached_goal": self.reached_goal,
            "switched_to_optimistic": self.switched_to_optimistic,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def sense(state: RobotState, realization: Realization, graph: NavGraph) -> RobotState:
    """Observe every edge incident to the current vertex."""
    inc = graph.incident(state.v)
    ub = [e for e in inc if e in realization.unblocked]
    bl = [e for e in inc if e not in realization.unblocked]
    return state.with_observations(bl, ub)


def initial_state(graph: NavGraph, realization: Realization, v_s: str) -> RobotState:
    return sense(RobotState(v_s), realization, graph)


def apply_action(state: RobotState, action: Action, realization: Realization, graph: NavGraph,
                 c_obs: float = 0.0) -> tuple[RobotState, float]:
    if action.kind == TERMINATE:
        return state, 0.0
    eid = action.edge
    if eid not in graph.edges or eid not in graph.incident(state.v):
        raise PolicyViolation(f"{action.kind}({eid}) is not incident to vertex {state.v!r}")
    if action.kind == OBSERVE:
        if eid in realization.unblocked:
            return state.with_observations(unblocked=(eid,)), c_obs
        return state.with_observations(blocked=(eid,)), c_obs
    if action.kind == TRAVERSE:
        if eid not in realization.unblocked:
            raise PolicyViolation(f"traverse({eid}) attempted on a blocked edge")
        e = graph.edges[eid]
        moved = state.with_observations(unblocked=(eid,)).moved_to(e.other(state.v))
        return sense(moved, realization, graph), e.cost
    raise PolicyViolation(f"unknown action kind {action.kind!r}")


def default_step_budget(graph: NavGraph) -> int:
    return 10 * max(1, len(graph.positions)) * max(1, len(graph.edges))


def execute_task(controller: Controller, realization: Realization, graph: NavGraph, v_s: str, v_g: str,
                 c_obs: float = 0.0, step_budget: int | None = None) -> TaskRecord:
    controller.start(graph, v_s, v_g)
    state = initial_state(graph, realization, v_s)
    return run_from_state(controller, state, realization, graph, v_g, c_obs, step_budget)


def run_from_state(controller: Controller, state: RobotState, realization: Realization, graph: NavGraph,
                   v_g: str, c_obs: float = 0.0, step_budget: int | None = None) -> TaskRecord:
    """Step an already started controller from `state` until it terminates."""
    budget = default_step_budget(graph) if step_budget is None else step_budget
    rec = TaskRecord()
    for _ in range(budget):
        action = controller.next_action(state)
        if action.kind == TERMINATE:
            if action.success and state.v != v_g:
                raise PolicyViolation(f"terminate(success) at {state.v!r}, goal is {v_g!r}")
            if not action.success and shortest_path(graph, realization.unblocked, state.v, v_g) is not None:
                raise PolicyViolation("terminate(failure) although the goal is reachable")
            rec.actions.append((action, 0.0))
            rec.reached_goal = bool(action.success)
            break
        state, cost = apply_action(state, action, realization, graph, c_obs)
        rec.actions.append((action, cost))
        rec.total_cost += cost
    else:
        raise RunawayPolicyError(f"controller exceeded the step budget of {budget} actions")
    rec.map = state.map_record()
    rec.switched_to_optimistic = bool(getattr(controller, "switched", False))
    return rec
