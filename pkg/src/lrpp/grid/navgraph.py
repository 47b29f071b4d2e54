"""Portal extraction and navigation-graph construction from a labeled grid."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..graph_env import Edge, NavGraph
from .world import GridFormatError

SQRT2 = math.sqrt(2.0)
_MOVES = [(-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
          (-1, -1, SQRT2), (-1, 1, SQRT2), (1, -1, SQRT2), (1, 1, SQRT2)]


def octile(a, b) -> float:
    dr, dc = abs(a[0] - b[0]), abs(a[1] - b[1])
    return (SQRT2 - 1.0) * min(dr, dc) + max(dr, dc)


def grid_path(mask: np.ndarray, a, b):
    """A* over 8-connected cells of `mask`; returns (cells, length in cells) or None."""
    a, b = tuple(a), tuple(b)
    if not (mask[a] and mask[b]):
        return None
    h, w = mask.shape
    g = {a: 0.0}
    parent = {a: None}
    heap = [(octile(a, b), 0.0, a)]
    closed = set()
    while heap:
        _, d, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == b:
            cells = []
            while cur is not None:
                cells.append(cur)
                cur = parent[cur]
            return cells[::-1], d
        closed.add(cur)
        r, c = cur
        for dr, dc, step in _MOVES:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and mask[nr, nc]:
                nd = d + step
                nxt = (nr, nc)
                if nd < g.get(nxt, math.inf) - 1e-12:
                    g[nxt] = nd
                    parent[nxt] = cur
                    heapq.heappush(heap, (nd + octile(nxt, b), nd, nxt))
    return None


@dataclass(frozen=True)
class Portal:
    id: str
    cells: tuple[tuple[int, int], ...]
    center: tuple[int, int]
    submaps: tuple[str, str]


@dataclass
class GraphGeometry:
    """Where each navigation-graph vertex sits in the grid."""
    vertex_cells: dict
    portals: list
    resolution: float = 1.0

    def region(self, labels: np.ndarray, submap: str, *endpoints) -> np.ndarray:
        """Cells of one submap plus the given endpoint cells."""
        m = labels == submap
        for v in endpoints:
            m[self.vertex_cells[v]] = True
        return m

    def to_dict(self) -> dict:
        return {"vertex_cells": {v: list(c) for v, c in self.vertex_cells.items()},
                "portals": [{"id": p.id, "cells": [list(c) for c in p.cells], "center": list(p.center),
                             "submaps": list(p.submaps)} for p in self.portals],
                "resolution": self.resolution}


COLOCATED_COST = 1e-6


def find_portals(base: np.ndarray, labels: np.ndarray, reserved=()) -> list[Portal]:
    """A portal is a connected run of cells of the lower label touching the higher label.

    Each portal's center is its cell nearest the centroid, skipping cells already
    used as a center or listed in `reserved` whenever the portal has another cell.
    """
    comps = []
    names = sorted({str(x) for x in np.unique(labels[~base]) if x})
    for i, A in enumerate(names):
        is_a = labels == A
        for B in names[i + 1:]:
            is_b = labels == B
            touch = np.zeros_like(is_a)
            touch[1:, :] |= is_b[:-1, :]
            touch[:-1, :] |= is_b[1:, :]
            touch[:, 1:] |= is_b[:, :-1]
            touch[:, :-1] |= is_b[:, 1:]
            comp, n = ndimage.label(is_a & touch, structure=np.ones((3, 3), dtype=int))
            for k in range(1, n + 1):
                pts = sorted(tuple(int(x) for x in p) for p in np.argwhere(comp == k))
                comps.append((pts, (A, B)))
    taken = {tuple(c) for c in reserved}
    found = []
    for pts, subs in comps:
        cy = sum(p[0] for p in pts) / len(pts)
        cx = sum(p[1] for p in pts) / len(pts)
        ranked = sorted(pts, key=lambda p: ((p[0] - cy) ** 2 + (p[1] - cx) ** 2, p))
        center = next((p for p in ranked if p not in taken), ranked[0])
        taken.add(center)
        found.append(((center[1], center[0]), tuple(pts), center, subs))
    # Number portals by center position: column first, then row.
    found.sort(key=lambda t: (t[0], t[3]))
    return [Portal(str(k + 1), cells, center, subs) for k, (_, cells, center, subs) in enumerate(found)]


def build_nav_graph(base: np.ndarray, labels: np.ndarray, start, goal, resolution: float = 1.0):
    """Return (NavGraph, GraphGeometry) for a labeled grid."""
    base = np.asarray(base, dtype=bool)
    if (~base & (labels == "")).any():
        i, j = np.argwhere(~base & (labels == ""))[0]
        raise GridFormatError(f"free cell ({i}, {j}) has no submap label")
    for name, cell in (("start", start), ("goal", goal)):
        if cell is None:
            raise GridFormatError(f"{name} cell is missing")
        if base[tuple(cell)]:
            raise GridFormatError(f"{name} cell {tuple(cell)} is an obstacle")
    portals = find_portals(base, labels, reserved=(tuple(start), tuple(goal)))
    cells = {p.id: p.center for p in portals}
    cells["s"] = tuple(start)
    cells["g"] = tuple(goal)
    members: dict[str, list[str]] = {}
    for p in portals:
        for S in p.submaps:
            members.setdefault(S, []).append(p.id)
    for v in ("s", "g"):
        members.setdefault(labels[cells[v]], []).append(v)
    geom = GraphGeometry(cells, portals, resolution)
    edges = []
    for S in sorted(members):
        vs = members[S]
        for i, u in enumerate(vs):
            for v in vs[i + 1:]:
                found = grid_path(geom.region(labels, S, u, v), cells[u], cells[v])
                if found is not None:
                    # Co-located vertices still need a positive edge cost.
                    cost = max(found[1], COLOCATED_COST) * resolution
                    edges.append(Edge(f"{S}:{u}-{v}", u, v, cost, S))
    positions = {v: (c[1] * resolution, c[0] * resolution) for v, c in cells.items()}
    return NavGraph(positions, edges, "s", "g"), geom
