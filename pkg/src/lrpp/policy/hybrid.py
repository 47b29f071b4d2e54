"""Tree-following controller that hands over to the optimistic planner when the tree no longer applies."""
from __future__ import annotations

from ..execution import Action, Controller, RobotState
from ..map_memory import MapRecord, agrees
from .optimistic import OptimisticController
from .tree import PolicyNode, PolicyTree


class HybridController(Controller):
    """Follows a policy tree; `switched` becomes True once control passes to the optimistic planner.

    `records` are the super maps the tree was built from, indexed like the
    node beliefs. Belief membership is agreement with the live map.
    """

    def __init__(self, tree: PolicyTree, records: list[MapRecord]):
        self.tree = tree
        self.records = list(records)

    def start(self, graph, v_s, v_g):
        super().start(graph, v_s, v_g)
        self.node: PolicyNode = self.tree.root
        self.idx = 0
        self.observed = False
        self.switched = False
        self.last_edge: str | None = None
        self._opt = OptimisticController()

    def _switch(self, state: RobotState) -> Action:
        self.switched = True
        self._opt.start(self.graph, state.v, self.v_g)
        return self._opt.next_action(state)

    def next_action(self, state: RobotState) -> Action:
        return hybrid_next(self, state)


def hybrid_next(cursor: HybridController, state: RobotState) -> Action:
    """Advance the cursor by one action."""
    if cursor.switched:
        return cursor._opt.next_action(state)
    if state.v == cursor.v_g:
        return Action.terminate(True)
    if cursor.last_edge is not None and cursor.last_edge in state.known_blocked:
        return cursor._switch(state)
    live = state.map_record()
    node = cursor.node
    if not any(agrees(cursor.records[i], live) for i in node.belief):
        return cursor._switch(state)
    leg = node.leg
    if cursor.idx < len(leg.edges):
        e = leg.edges[cursor.idx]
        if state.v != leg.vertices[cursor.idx] or e in state.known_blocked:
            return cursor._switch(state)
        cursor.idx += 1
        cursor.last_edge = e
        return Action.traverse(e)
    if state.v != node.vertex or node.observation is None:
        # Either off the tree or at a leaf that does not end at the goal.
        return cursor._switch(state)
    e = node.observation
    if not cursor.observed and e not in state.known_blocked and e not in state.known_unblocked:
        cursor.observed = True
        return Action.observe(e)
    if e in state.known_unblocked:
        nxt = node.children[0]
    elif e in state.known_blocked:
        nxt = node.children[1]
    else:
        return cursor._switch(state)
    cursor.node, cursor.idx, cursor.observed = nxt, 0, False
    return hybrid_next(cursor, state)
