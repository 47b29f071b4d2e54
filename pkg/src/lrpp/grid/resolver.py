"""Decide navigation-edge states from the free-space masks."""
from __future__ import annotations

import logging
import math

from ..graph_env import BLOCKED, UNBLOCKED, NavGraph
from .navgraph import GraphGeometry, grid_path
from .world import GridWorld

log = logging.getLogger(__name__)


def is_gated(world: GridWorld, graph: NavGraph, geom: GraphGeometry, eid: str) -> bool:
    """An edge is checked if it lies in the robot's submap or an endpoint is within range."""
    e = graph.edges[eid]
    if e.submap == world.submap(world.robot):
        return True
    x, y = world.xy(world.robot)
    for v in (e.u, e.v):
        vx, vy = world.xy(geom.vertex_cells[v])
        if math.hypot(vx - x, vy - y) <= world.r_max + 1e-9:
            return True
    return False


def resolve_edge(world: GridWorld, graph: NavGraph, geom: GraphGeometry, eid: str) -> str | None:
    e = graph.edges[eid]
    cu, cv = geom.vertex_cells[e.u], geom.vertex_cells[e.v]
    region = geom.region(world.labels, e.submap, e.u, e.v)
    c_o = world.optimistic & region
    if not (c_o[cu] and c_o[cv]):
        return BLOCKED
    if grid_path(world.known_free & region, cu, cv) is not None:
        return UNBLOCKED
    if grid_path(c_o, cu, cv) is None:
        return BLOCKED
    return None


def resolve_edges(world: GridWorld, graph: NavGraph, geom: GraphGeometry) -> list[tuple[str, str]]:
    """Verdicts for every gated edge that can be decided; pure in the world state."""
    out = []
    for eid in sorted(graph.edges):
        if is_gated(world, graph, geom, eid):
            s = resolve_edge(world, graph, geom, eid)
            if s is not None:
                out.append((eid, s))
    return out


def apply_verdicts(known: dict, verdicts) -> list[tuple[str, str]]:
    """Record verdicts in `known`; conflicting ones are logged and ignored.

    Returns the verdicts that were new.
    """
    fresh = []
    for eid, s in verdicts:
        old = known.get(eid)
        if old is None:
            known[eid] = s
            fresh.append((eid, s))
        elif old != s:
            log.warning("mapping inconsistency on edge %s: resolved %s, now %s; keeping %s", eid, old, s, old)
    return fresh
