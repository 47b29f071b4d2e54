import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrpp.execution import (Action, Controller, PolicyViolation, RobotState, RunawayPolicyError, apply_action,
                            execute_task, initial_state)
from lrpp.graph_env import Edge, NavGraph, Realization, shortest_path
from lrpp.policy import OptimisticController


def line():
    return NavGraph(["a", "b", "c"], [Edge("ab", "a", "b", 2.5), Edge("bc", "b", "c", 1.0)], "a", "c")


def test_observe_is_free_by_default():
    g = line()
    real = Realization(frozenset({"ab"}))
    s, c = apply_action(RobotState("a"), Action.observe("ab"), real, g)
    assert c == 0 and "ab" in s.known_unblocked


def test_observe_cost_parameter():
    g = line()
    s, c = apply_action(RobotState("a"), Action.observe("ab"), Realization(frozenset()), g, c_obs=0.3)
    assert c == 0.3 and "ab" in s.known_blocked


def test_traverse_moves_and_senses():
    g = line()
    real = Realization(frozenset({"ab"}))
    s, c = apply_action(RobotState("a"), Action.traverse("ab"), real, g)
    assert c == 2.5 and s.v == "b"
    assert "bc" in s.known_blocked and "ab" in s.known_unblocked


def test_traverse_blocked_is_violation():
    g = line()
    with pytest.raises(PolicyViolation):
        apply_action(RobotState("a"), Action.traverse("ab"), Realization(frozenset()), g)


def test_non_incident_is_violation():
    g = line()
    with pytest.raises(PolicyViolation):
        apply_action(RobotState("a"), Action.traverse("bc"), Realization(g.edge_ids), g)


def test_optimistic_unblocked_is_shortest():
    g = line()
    rec = execute_task(OptimisticController(), Realization(g.edge_ids), g, "a", "c")
    assert rec.reached_goal and rec.total_cost == 3.5
    assert rec.total_cost == sum(c for _, c in rec.actions)


def test_two_door_closed_optimistic_trace(load_fixture):
    spec = load_fixture("two_door.json")
    g = spec.graph
    closed = next(r for r in spec.realizations if r.name == "both_closed")
    rec = execute_task(OptimisticController(), closed, g, g.start, g.goal)
    # corridor, orange out, orange back, blue, blue to goal: 2 + 4 + 4 + 5 + 5
    assert rec.total_cost == 20
    assert [a.edge for a, _ in rec.actions[:-1]] == ["corridor", "orange", "orange", "blue", "blue_to_goal"]


def test_disconnected_goal_terminates_false(load_fixture):
    spec = load_fixture("three_way.json")
    g = spec.graph
    sealed = spec.realizations[2]
    rec = execute_task(OptimisticController(), sealed, g, g.start, g.goal)
    assert not rec.reached_goal
    assert shortest_path(g, g.edge_ids - rec.map.blocked, g.start, g.goal) is None
    assert {"a_g", "b_g"} <= rec.map.blocked


class Liar(Controller):
    def __init__(self, flag):
        self.flag = flag

    def next_action(self, state):
        return Action.terminate(self.flag)


def test_wrong_terminate_flags_rejected():
    g = line()
    with pytest.raises(PolicyViolation):
        execute_task(Liar(True), Realization(g.edge_ids), g, "a", "c")
    with pytest.raises(PolicyViolation):
        execute_task(Liar(False), Realization(g.edge_ids), g, "a", "c")


class PingPong(Controller):
    def next_action(self, state):
        return Action.traverse("ab")


def test_runaway_detected():
    g = line()
    with pytest.raises(RunawayPolicyError):
        execute_task(PingPong(), Realization(g.edge_ids), g, "a", "c")


def test_task_record_serializes():
    g = line()
    rec = execute_task(OptimisticController(), Realization(g.edge_ids), g, "a", "c")
    d = json.loads(rec.to_json())
    assert d["total_cost"] == 3.5 and d["actions"][-1] == {"kind": "terminate", "success": True, "cost": 0.0}


@st.composite
def graph_and_world(draw):
    n = draw(st.integers(2, 6))
    vs = [str(i) for i in range(n)]
    edges = []
    for k in range(draw(st.integers(1, 10))):
        u, v = draw(st.sampled_from(vs)), draw(st.sampled_from(vs))
        if u != v:
            edges.append(Edge(f"e{k}", u, v, draw(st.integers(1, 5))))
    g = NavGraph(vs, edges, vs[0], vs[-1])
    real = Realization(frozenset(e for e in sorted(g.edge_ids) if draw(st.booleans())))
    return g, real


@settings(max_examples=150, deadline=None)
@given(graph_and_world())
def test_known_sets_sound_and_monotone(gw):
    g, real = gw

    class Watch(OptimisticController):
        history = []

        def next_action(self, state):
            self.history.append(state)
            return super().next_action(state)

    ctl = Watch()
    ctl.history = []
    rec = execute_task(ctl, real, g, g.start, g.goal)
    for a, b in zip(ctl.history, ctl.history[1:]):
        assert a.known_blocked <= b.known_blocked and a.known_unblocked <= b.known_unblocked
    assert rec.map.unblocked <= real.unblocked and not (rec.map.blocked & real.unblocked)
    assert rec.reached_goal == (shortest_path(g, real.unblocked, g.start, g.goal) is not None)
    assert rec.total_cost == pytest.approx(sum(c for _, c in rec.actions))


def test_initial_state_senses_start():
    g = line()
    s = initial_state(g, Realization(frozenset({"ab"})), "b")
    assert s.known_unblocked == {"ab"} and s.known_blocked == {"bc"}
