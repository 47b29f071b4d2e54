"""Compressed memory of past realizations (super maps) and pmf estimation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable


class MapConsistencyError(ValueError):
    """A map labels an edge both blocked and unblocked, or two disagreeing maps were merged."""


@dataclass(frozen=True)
class MapRecord:
    blocked: frozenset[str] = frozenset()
    unblocked: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "blocked", frozenset(self.blocked))
        object.__setattr__(self, "unblocked", frozenset(self.unblocked))
        both = self.blocked & self.unblocked
        if both:
            raise MapConsistencyError(f"edges labeled both blocked and unblocked: {sorted(both)}")

    def state(self, eid: str) -> str | None:
        if eid in self.blocked:
            return "blocked"
        if eid in self.unblocked:
            return "unblocked"
        return None

    def to_dict(self) -> dict:
        return {"blocked": sorted(self.blocked), "unblocked": sorted(self.unblocked)}

    @classmethod
    def from_dict(cls, d) -> "MapRecord":
        return cls(frozenset(d.get("blocked", ())), frozenset(d.get("unblocked", ())))


def agrees(m1: MapRecord, m2: MapRecord) -> bool:
    return not (m2.blocked & m1.unblocked) and not (m2.unblocked & m1.blocked)


def merge(m1: MapRecord, m2: MapRecord) -> MapRecord:
    if not agrees(m1, m2):
        raise MapConsistencyError("cannot merge maps that disagree")
    return MapRecord(m1.blocked | m2.blocked, m1.unblocked | m2.unblocked)


@dataclass
class SuperMap:
    record: MapRecord
    merge_count: int = 0


@dataclass
class SuperMapStore:
    maps: list[SuperMap] = field(default_factory=list)
    tasks_completed: int = 0

    @classmethod
    def initial(cls, edge_ids: Iterable[str]) -> "SuperMapStore":
        # Nothing blocked, every edge assumed open.
        return cls([SuperMap(MapRecord(frozenset(), frozenset(edge_ids)), 0)], 0)

    def __len__(self) -> int:
        return len(self.maps)

    def copy(self) -> "SuperMapStore":
        return SuperMapStore([SuperMap(m.record, m.merge_count) for m in self.maps], self.tasks_completed)

    def records(self) -> list[MapRecord]:
        return [m.record for m in self.maps]

    def to_dict(self) -> dict:
        return {
            "maps": [dict(m.record.to_dict(), merge_count=m.merge_count) for m in self.maps],
            "tasks_completed": self.tasks_completed,
        }

    @classmethod
    def from_dict(cls, d) -> "SuperMapStore":
        maps = [SuperMap(MapRecord.from_dict(md), int(md.get("merge_count", 0))) for md in d["maps"]]
        return cls(maps, int(d.get("tasks_completed", 0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SuperMapStore":
        return cls.from_dict(json.loads(text))


FIRST_FIT = "first_fit"
MIN_ADDED_BLOCKED = "min_added_blocked"

_STRATEGY_ALIASES = {
    "first_fit": FIRST_FIT, "first-fit": FIRST_FIT,
    "min_added_blocked": MIN_ADDED_BLOCKED, "min-blocked": MIN_ADDED_BLOCKED,
    "min_blocked": MIN_ADDED_BLOCKED,
}


def normalize_strategy(name: str) -> str:
    try:
        return _STRATEGY_ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown map-merge strategy {name!r}") from None


def map_filter(m: MapRecord, store: SuperMapStore, strategy: str = FIRST_FIT, rng=None) -> SuperMapStore:
    """Add the map from a finished task to the store; returns a new store.

    With `rng` given, ties under min_added_blocked are broken uniformly at
    random instead of by lowest index.
    """
    strategy = normalize_strategy(strategy)
    out = store.copy()
    out.tasks_completed += 1
    candidates = [j for j, s in enumerate(out.maps) if agrees(s.record, m)]
    if not candidates:
        out.maps.append(SuperMap(m, 0))
        return out
    if strategy == FIRST_FIT:
        j = candidates[0]
    else:
        added = [len(out.maps[j].record.blocked | m.blocked) - len(out.maps[j].record.blocked)
                 for j in candidates]
        low = min(added)
        ties = [j for j, a in zip(candidates, added) if a == low]
        j = ties[int(rng.integers(len(ties)))] if rng is not None else ties[0]
    target = out.maps[j]
    out.maps[j] = SuperMap(merge(target.record, m), target.merge_count + 1)
    return out


def estimate_pmf(store: SuperMapStore) -> tuple[list[float], list[float]]:
    """Return (raw, normalized) weights, raw_j = (n_j + 1) / t."""
    t = store.tasks_completed
    if t <= 0:
        raise ValueError("estimate_pmf needs at least one completed task")
    raw = [(m.merge_count + 1) / t for m in store.maps]
    total = sum(raw)
    return raw, [r / total for r in raw]


def policy_weights(store: SuperMapStore) -> list[float]:
    """Normalized weights for policy construction; uniform before the first task."""
    if store.tasks_completed == 0:
        return [1.0 / len(store.maps)] * len(store.maps)
    return estimate_pmf(store)[1]


def to_edge_subsets(store: SuperMapStore, graph) -> list[frozenset[str]]:
    """Traversable edges per super map; unknown edges count as unblocked.

    `graph` is a NavGraph or any iterable of edge ids.
    """
    all_edges = graph.edge_ids if hasattr(graph, "edge_ids") else frozenset(graph)
    return [all_edges - m.record.blocked for m in store.maps]
