"""Discrete environment: navigation graph, realizations, sampling and sensing."""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

BLOCKED = "blocked"
UNBLOCKED = "unblocked"

# Costs closer than this are treated as equal when breaking ties.
COST_EPS = 1e-9


class EnvironmentFormatError(ValueError):
    """Raised when an environment document cannot be parsed or validated."""


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    cost: float
    submap: str | None = None

    def other(self, x: str) -> str:
        if x == self.u:
            return self.v
        if x == self.v:
            return self.u
        raise ValueError(f"vertex {x!r} is not an endpoint of edge {self.id!r}")


@dataclass(frozen=True)
class Path:
    vertices: tuple[str, ...]
    edges: tuple[str, ...]
    cost: float

    @classmethod
    def at(cls, v: str) -> "Path":
        return cls((v,), (), 0.0)

    @property
    def start(self) -> str:
        return self.vertices[0]

    @property
    def end(self) -> str:
        return self.vertices[-1]

    def to_dict(self) -> dict:
        return {"vertices": list(self.vertices), "edges": list(self.edges), "cost": self.cost}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Path":
        return cls(tuple(d["vertices"]), tuple(d["edges"]), float(d["cost"]))


class NavGraph:
    """Undirected multigraph with labeled edges.

    Vertices map to an optional (x, y) position in meters. Edge ids are unique
    even when two edges share endpoints.
    """

    def __init__(self, vertices, edges: Iterable[Edge], start: str, goal: str):
        if isinstance(vertices, Mapping):
            self.positions = {str(k): v for k, v in vertices.items()}
        else:
            self.positions = {str(k): None for k in vertices}
        self.edges: dict[str, Edge] = {}
        for e in edges:
            if e.id in self.edges:
                raise EnvironmentFormatError(f"duplicate edge id {e.id!r}")
            if e.u not in self.positions or e.v not in self.positions:
                raise EnvironmentFormatError(f"edge {e.id!r} references an unknown vertex")
            if not (e.cost > 0 and math.isfinite(e.cost)):
                raise EnvironmentFormatError(f"edge {e.id!r}: cost must be strictly positive, got {e.cost}")
            self.edges[e.id] = e
        for name, v in (("start", start), ("goal", goal)):
            if v not in self.positions:
                raise EnvironmentFormatError(f"{name} vertex {v!r} is not in the vertex set")
        self.start = start
        self.goal = goal
        inc: dict[str, list[str]] = {v: [] for v in self.positions}
        for e in self.edges.values():
            inc[e.u].append(e.id)
            if e.v != e.u:
                inc[e.v].append(e.id)
        self._incident = {v: tuple(sorted(ids)) for v, ids in inc.items()}
        self.total_cost = sum(e.cost for e in self.edges.values())

    @property
    def vertices(self) -> list[str]:
        return list(self.positions)

    @property
    def edge_ids(self) -> frozenset[str]:
        return frozenset(self.edges)

    def incident(self, v: str) -> tuple[str, ...]:
        return self._incident[v]

    def cost(self, eid: str) -> float:
        return self.edges[eid].cost

    def path_cost(self, edge_ids: Iterable[str]) -> float:
        return sum(self.edges[e].cost for e in edge_ids)

    def to_dict(self) -> dict:
        verts = []
        for v, pos in self.positions.items():
            d = {"id": v}
            if pos is not None:
                d["x"], d["y"] = float(pos[0]), float(pos[1])
            verts.append(d)
        edges = []
        for e in self.edges.values():
            d = {"id": e.id, "u": e.u, "v": e.v, "cost": e.cost}
            if e.submap is not None:
                d["submap"] = e.submap
            edges.append(d)
        return {"vertices": verts, "edges": edges, "start": self.start, "goal": self.goal}


@dataclass(frozen=True)
class Realization:
    unblocked: frozenset[str]
    name: str | None = None


@dataclass(frozen=True)
class EnvironmentSpec:
    graph: NavGraph
    realizations: tuple[Realization, ...]
    pmf: tuple[float, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.pmf) != len(self.realizations):
            raise EnvironmentFormatError(
                f"pmf has {len(self.pmf)} entries but there are {len(self.realizations)} realizations")
        if any(p < 0 or not math.isfinite(p) for p in self.pmf):
            raise EnvironmentFormatError("pmf entries must be nonnegative")
        if abs(sum(self.pmf) - 1.0) > 1e-9:
            raise EnvironmentFormatError(f"pmf must sum to 1 within 1e-9, sums to {sum(self.pmf)!r}")
        for i, r in enumerate(self.realizations):
            extra = r.unblocked - self.graph.edge_ids
            if extra:
                raise EnvironmentFormatError(
                    f"realization {i}: unblocked set is not a subset of E (unknown {sorted(extra)})")

    def to_dict(self) -> dict:
        d = self.graph.to_dict()
        d["realizations"] = []
        for r in self.realizations:
            rd = {"unblocked": sorted(r.unblocked)}
            if r.name is not None:
                rd["name"] = r.name
            d["realizations"].append(rd)
        d["pmf"] = list(self.pmf)
        return d


def _require(doc: Mapping, key: str, where: str):
    if key not in doc:
        raise EnvironmentFormatError(f"{where}: missing field {key!r}")
    return doc[key]


def load_environment(text: str) -> EnvironmentSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EnvironmentFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise EnvironmentFormatError("top level must be an object")
    return environment_from_dict(doc)


def environment_from_dict(doc: Mapping) -> EnvironmentSpec:
    vertices = {}
    for i, vd in enumerate(_require(doc, "vertices", "document")):
        vid = str(_require(vd, "id", f"vertices[{i}]"))
        if vid in vertices:
            raise EnvironmentFormatError(f"vertices[{i}]: duplicate vertex id {vid!r}")
        pos = None
        if "x" in vd or "y" in vd:
            try:
                pos = (float(vd["x"]), float(vd["y"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise EnvironmentFormatError(f"vertices[{i}]: x and y must both be numbers") from exc
        vertices[vid] = pos
    edges = []
    for i, ed in enumerate(_require(doc, "edges", "document")):
        where = f"edges[{i}]"
        raw_cost = _require(ed, "cost", where)
        try:
            cost = float(raw_cost)
        except (TypeError, ValueError) as exc:
            raise EnvironmentFormatError(f"{where}: cost must be a number") from exc
        sub = ed.get("submap")
        edges.append(Edge(str(_require(ed, "id", where)), str(_require(ed, "u", where)),
                          str(_require(ed, "v", where)), cost, None if sub is None else str(sub)))
    graph = NavGraph(vertices, edges, str(_require(doc, "start", "document")),
                     str(_require(doc, "goal", "document")))
    reals = []
    for i, rd in enumerate(_require(doc, "realizations", "document")):
        ids = _require(rd, "unblocked", f"realizations[{i}]")
        reals.append(Realization(frozenset(str(e) for e in ids), rd.get("name")))
    raw_pmf = _require(doc, "pmf", "document")
    try:
        pmf = tuple(float(p) for p in raw_pmf)
    except (TypeError, ValueError) as exc:
        raise EnvironmentFormatError("pmf: entries must be numbers") from exc
    meta = {k: v for k, v in doc.items()
            if k not in ("vertices", "edges", "start", "goal", "realizations", "pmf")}
    return EnvironmentSpec(graph, tuple(reals), pmf, meta)


def load_environment_file(path) -> EnvironmentSpec:
    with open(path, encoding="utf-8") as fh:
        return load_environment(fh.read())


def dump_environment(spec: EnvironmentSpec) -> str:
    return json.dumps(spec.to_dict(), indent=2)


def _better(c1, p1, c2, p2) -> bool:
    if c1 < c2 - COST_EPS:
        return True
    return abs(c1 - c2) <= COST_EPS and p1 < p2


def _search(graph: NavGraph, traversable, source: str, target: str | None = None):
    """Label-correcting Dijkstra; best[v] = (cost, edge tuple, vertex tuple).

    Among minimum-cost paths the lexicographically smallest edge-id sequence wins.
    """
    best = {source: (0.0, (), (source,))}
    heap = [(0.0, (), source, (source,))]
    while heap:
        c, edges, v, verts = heapq.heappop(heap)
        cur = best[v]
        if cur[0] != c or cur[1] != edges:
            continue
        if target is not None and target in best and c > best[target][0] + COST_EPS:
            break
        for eid in graph.incident(v):
            if eid not in traversable:
                continue
            e = graph.edges[eid]
            u = e.other(v)
            nc = c + e.cost
            ne = edges + (eid,)
            old = best.get(u)
            if old is None or _better(nc, ne, old[0], old[1]):
                nv = verts + (u,)
                best[u] = (nc, ne, nv)
                heapq.heappush(heap, (nc, ne, u, nv))
    return best


def shortest_path(graph: NavGraph, traversable, a: str, b: str) -> Path | None:
    """Minimum-cost path from a to b using only edges in `traversable`.

    Returns None when b is unreachable.
    """
    if a == b:
        return Path.at(a)
    best = _search(graph, traversable, a, b)
    if b not in best:
        return None
    c, edges, verts = best[b]
    return Path(verts, edges, c)


def shortest_paths_from(graph: NavGraph, traversable, source: str) -> dict[str, Path]:
    return {v: Path(verts, edges, c) for v, (c, edges, verts) in _search(graph, traversable, source).items()}


def distances_from(graph: NavGraph, traversable, source: str) -> dict[str, float]:
    """Plain Dijkstra distances; no path bookkeeping."""
    dist = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for eid in graph.incident(v):
            if eid not in traversable:
                continue
            e = graph.edges[eid]
            u = e.other(v)
            nd = d + e.cost
            if nd < dist.get(u, math.inf):
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


def sample_realization(spec: EnvironmentSpec, rng) -> int:
    """Draw a realization index according to the hidden pmf."""
    if len(spec.pmf) == 1:
        return 0
    return int(rng.choice(len(spec.pmf), p=spec.pmf))


def sense_incident(realization: Realization, graph: NavGraph, v: str) -> dict[str, str]:
    return {eid: (UNBLOCKED if eid in realization.unblocked else BLOCKED) for eid in graph.incident(v)}
