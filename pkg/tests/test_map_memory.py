import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrpp.execution import execute_task
from lrpp.graph_env import Edge, NavGraph
from lrpp.map_memory import (FIRST_FIT, MIN_ADDED_BLOCKED, MapConsistencyError, MapRecord, SuperMap,
                             SuperMapStore, agrees, estimate_pmf, map_filter, merge, policy_weights,
                             to_edge_subsets)
from lrpp.policy import OptimisticController

# Three maps over edges (1,2), (2,3), (1,3), (3,4): (a) is partial, (c) extends it, (b) contradicts it.
PARTIAL = MapRecord(frozenset(), frozenset({"12", "23"}))
CONTRARY = MapRecord(frozenset({"12"}), frozenset({"13"}))
EXTENDED = MapRecord(frozenset({"34"}), frozenset({"12", "23", "13"}))


def test_agreement_examples():
    assert agrees(PARTIAL, EXTENDED) and agrees(EXTENDED, PARTIAL)
    assert not agrees(PARTIAL, CONTRARY)
    assert agrees(MapRecord(), CONTRARY)


def test_merge_examples():
    assert merge(PARTIAL, MapRecord()) == PARTIAL
    assert merge(PARTIAL, EXTENDED) == EXTENDED
    assert merge(MapRecord({"e1"}, ()), MapRecord((), {"e2"})) == MapRecord({"e1"}, {"e2"})
    with pytest.raises(MapConsistencyError):
        merge(PARTIAL, CONTRARY)


def test_record_rejects_overlap():
    with pytest.raises(MapConsistencyError):
        MapRecord({"e"}, {"e"})


def test_filter_grows_when_disagreeing():
    store = SuperMapStore.initial(["12", "23", "13"])
    store = map_filter(CONTRARY, store)  # blocks 12, which the initial map has unblocked
    assert len(store) == 2 and store.maps[1].merge_count == 0 and store.tasks_completed == 1


def test_filter_merges_into_m0():
    store = map_filter(PARTIAL, SuperMapStore.initial(["12", "23", "13", "34"]))
    assert len(store) == 1 and store.maps[0].merge_count == 1


def test_min_added_blocked_choice():
    s1 = SuperMap(MapRecord(frozenset(), frozenset({"a"})), 0)
    s2 = SuperMap(MapRecord(frozenset({"c", "d"}), frozenset({"a"})), 0)
    store = SuperMapStore([s1, s2], 2)
    m = MapRecord(frozenset({"c", "d"}), frozenset())
    assert map_filter(m, store, FIRST_FIT).maps[0].merge_count == 1
    out = map_filter(m, store, MIN_ADDED_BLOCKED)
    assert out.maps[1].merge_count == 1 and out.maps[0].merge_count == 0


def test_min_added_blocked_tie_lowest_index_and_seeded_mode():
    store = SuperMapStore([SuperMap(MapRecord(), 0), SuperMap(MapRecord(), 0)], 2)
    m = MapRecord(frozenset({"x"}), frozenset())
    assert map_filter(m, store, "min-blocked").maps[0].merge_count == 1
    picks = {int(np.argmax([s.merge_count for s in map_filter(m, store, MIN_ADDED_BLOCKED,
                                                               np.random.default_rng(k)).maps]))
             for k in range(30)}
    assert picks == {0, 1}


def test_estimate_pmf_examples():
    one = SuperMapStore([SuperMap(MapRecord(), 0)], 1)
    assert estimate_pmf(one) == ([1.0], [1.0])
    two = SuperMapStore([SuperMap(MapRecord(), 3), SuperMap(MapRecord(), 1)], 6)
    raw, norm = estimate_pmf(two)
    assert raw == pytest.approx([4 / 6, 2 / 6]) and norm == pytest.approx([2 / 3, 1 / 3])
    fresh = SuperMapStore([SuperMap(MapRecord(), 8), SuperMap(MapRecord(), 0)], 10)
    assert estimate_pmf(fresh)[0][1] == pytest.approx(0.1)
    with pytest.raises(ValueError):
        estimate_pmf(SuperMapStore.initial(["e"]))
    assert policy_weights(SuperMapStore.initial(["e"])) == [1.0]


def test_edge_subsets():
    E = ["e1", "e2", "e3"]
    store = SuperMapStore([SuperMap(MapRecord(), 0), SuperMap(MapRecord({"e3"}, {"e1"}), 0)], 1)
    assert to_edge_subsets(store, E) == [frozenset(E), frozenset({"e1", "e2"})]


def test_initial_store_all_unblocked():
    store = SuperMapStore.initial(["a", "b"])
    assert store.maps[0].record == MapRecord(frozenset(), frozenset({"a", "b"}))
    assert store.maps[0].merge_count == 0 and store.tasks_completed == 0


def test_store_json_roundtrip():
    store = map_filter(CONTRARY, SuperMapStore.initial(["12", "23", "13"]))
    again = SuperMapStore.from_json(store.to_json())
    assert again == store


maps = st.builds(
    lambda pairs: MapRecord(frozenset(e for e, s in pairs.items() if s == "b"),
                            frozenset(e for e, s in pairs.items() if s == "u")),
    st.dictionaries(st.sampled_from([f"e{i}" for i in range(6)]), st.sampled_from(["b", "u"])))


@settings(max_examples=300, deadline=None)
@given(st.lists(maps, max_size=12), st.sampled_from([FIRST_FIT, MIN_ADDED_BLOCKED]))
def test_filter_invariants(seq, strategy):
    store = SuperMapStore.initial([f"e{i}" for i in range(6)])
    for m in seq:
        store = map_filter(m, store, strategy)
        recs = store.records()
        for i in range(len(recs)):
            assert not (recs[i].blocked & recs[i].unblocked)
            for j in range(i + 1, len(recs)):
                assert not agrees(recs[i], recs[j])
        assert len(store) <= store.tasks_completed + 1
    assert store.tasks_completed == len(seq)


@settings(max_examples=200, deadline=None)
@given(maps, maps, maps)
def test_merge_union_laws(a, b, c):
    if agrees(a, b) and agrees(b, c) and agrees(a, c):
        assert merge(a, b) == merge(b, a)
        assert merge(merge(a, b), c) == merge(a, merge(b, c))


@pytest.mark.parametrize("name", ["two_door.json", "correlated.json", "three_way.json"])
def test_single_realization_store_small(load_fixture, name):
    spec = load_fixture(name)
    g = spec.graph
    for real in spec.realizations:
        store = SuperMapStore.initial(g.edge_ids)
        for _ in range(5):
            store = map_filter(execute_task(OptimisticController(), real, g, g.start, g.goal).map, store)
        assert len(store) <= 2
