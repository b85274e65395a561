import itertools

import pytest

from asynclocal.engine import SchedulingError, execute
from asynclocal.graphs import build_graph
from asynclocal.schedulers import (
    GUARD_ENV,
    SEARCH_PROPERTIES,
    Scheduling,
    _seeded_spec,
    adversary_search,
    enumerate_schedulings,
    make_scheduling,
    read_scheduling,
    write_scheduling,
)
from asynclocal.algorithms import make_algorithm


def take(sched, n):
    return list(itertools.islice(sched.blocks(), n))


class TestSync:
    def test_full_blocks_forever(self):
        graph = build_graph("cycle:4")
        sched = make_scheduling("sync", graph)
        assert sched.kind == "sync"
        assert not sched.finite
        assert take(sched, 3) == [(1, 2, 3, 4)] * 3
        assert sched.support_ever == frozenset({1, 2, 3, 4})
        assert sched.support_forever == frozenset({1, 2, 3, 4})
        assert sched.crash_times == {1: None, 2: None, 3: None, 4: None}

    def test_crashes_shrink_the_blocks(self):
        graph = build_graph("path:3")
        sched = make_scheduling("sync:crashes=2@0|3@2", graph)
        assert take(sched, 4) == [(1, 3), (1, 3), (1,), (1,)]
        assert sched.support_ever == frozenset({1, 3})
        assert sched.support_forever == frozenset({1})
        assert sched.crash_times == {1: None, 2: 0, 3: 2}

    def test_crash_argument_merges_into_the_spec(self):
        graph = build_graph("path:3")
        sched = make_scheduling("sync", graph, crashes={3: 2, 2: 0})
        assert sched.spec == "sync:crashes=2@0|3@2"
        assert take(sched, 3) == [(1, 3), (1, 3), (1,)]

    def test_all_crashed_ends_the_stream(self):
        graph = build_graph("path:2")
        sched = make_scheduling("sync:crashes=1@1|2@2", graph)
        assert list(sched.blocks()) == [(1, 2), (2,)]
        assert sched.finite

    def test_crash_for_unknown_node(self):
        graph = build_graph("path:2")
        with pytest.raises(SchedulingError):
            make_scheduling("sync", graph, crashes={9: 1})

    def test_unknown_parameter(self):
        graph = build_graph("path:2")
        with pytest.raises(SchedulingError):
            make_scheduling("sync:speed=2", graph)


class TestRandom:
    def test_spec_is_canonicalized(self):
        graph = build_graph("cycle:4")
        sched = make_scheduling("random:seed=5", graph)
        assert sched.spec == "random:seed=5,p=0.5,crash=0.0"
        assert sched.seed == 5

    def test_deterministic_and_restartable(self):
        graph = build_graph("cycle:5")
        a = make_scheduling("random:seed=11,p=0.4,crash=0.1", graph)
        b = make_scheduling("random:seed=11,p=0.4,crash=0.1", graph)
        first = take(a, 30)
        assert first == take(b, 30)
        assert first == take(a, 30)  # blocks() restarts from the beginning

    def test_different_seeds_differ(self):
        graph = build_graph("cycle:5")
        streams = {tuple(take(make_scheduling(f"random:seed={s}", graph), 15)) for s in range(6)}
        assert len(streams) > 1

    def test_probability_one_without_crashes_is_sync(self):
        graph = build_graph("cycle:4")
        sched = make_scheduling("random:seed=3,p=1.0,crash=0.0", graph)
        assert take(sched, 5) == [(1, 2, 3, 4)] * 5
        assert sched.support_forever == frozenset(graph.nodes)

    def test_crash_rate_kills_some_nodes(self):
        graph = build_graph("cycle:6")
        found = False
        for seed in range(20):
            sched = make_scheduling(f"random:seed={seed},p=0.5,crash=0.3", graph)
            if sched.support_forever < frozenset(graph.nodes):
                found = True
                crashed = set(graph.nodes) - sched.support_forever
                for v in crashed:
                    t = sched.crash_times[v]
                    assert t is not None
                    for i, blk in enumerate(take(sched, 50), start=1):
                        assert v not in blk or i <= t
        assert found

    def test_missing_seed(self):
        graph = build_graph("path:2")
        with pytest.raises(SchedulingError):
            make_scheduling("random:p=0.5", graph)

    def test_bad_probability(self):
        graph = build_graph("path:2")
        with pytest.raises(SchedulingError):
            make_scheduling("random:seed=1,p=1.5", graph)


class TestExplicitAndReplay:
    def test_explicit_blocks(self):
        graph = build_graph("path:3")
        sched = make_scheduling("explicit:1,3/2", graph)
        assert list(sched.blocks()) == [(1, 3), (2,)]
        assert sched.finite
        assert sched.support_ever == frozenset({1, 2, 3})

    def test_explicit_unknown_node(self):
        graph = build_graph("path:2")
        with pytest.raises(SchedulingError):
            make_scheduling("explicit:1,5", graph)

    def test_replay_round_trip(self, tmp_path):
        graph = build_graph("cycle:4")
        blocks = [(1, 2), (3,), (2, 4)]
        path = tmp_path / "sched.txt"
        write_scheduling(blocks, path)
        assert read_scheduling(path) == blocks
        sched = make_scheduling(f"replay:{path}", graph)
        assert list(sched.blocks()) == blocks
        assert sched.finite

    def test_replay_malformed_line(self, tmp_path):
        path = tmp_path / "sched.txt"
        path.write_text("1 2\nthree\n")
        with pytest.raises(SchedulingError):
            read_scheduling(path)

    def test_unknown_kind(self):
        graph = build_graph("path:2")
        with pytest.raises(SchedulingError):
            make_scheduling("chaotic", graph)


class TestEnumeration:
    def test_depth_one_blocks_in_mask_order(self):
        scheds = list(enumerate_schedulings((1, 2), 1))
        assert [list(s.blocks()) for s in scheds] == [[(1,)], [(2,)], [(1, 2)]]
        assert all(isinstance(s, Scheduling) and s.finite for s in scheds)

    def test_depth_two_counts(self):
        scheds = list(enumerate_schedulings((1, 2), 2))
        assert len(scheds) == 3 + 9
        lengths = [len(list(s.blocks())) for s in scheds]
        assert lengths == [1] * 3 + [2] * 9

    def test_single_node(self):
        scheds = list(enumerate_schedulings((1,), 3))
        assert [list(s.blocks()) for s in scheds] == [
            [(1,)],
            [(1,), (1,)],
            [(1,), (1,), (1,)],
        ]

    def test_guards(self):
        with pytest.raises(ValueError):
            list(enumerate_schedulings(tuple(range(1, 7)), 1))
        with pytest.raises(ValueError):
            list(enumerate_schedulings((1, 2), 7))
        with pytest.raises(ValueError):
            list(enumerate_schedulings((), 1))

    def test_guard_override(self, monkeypatch):
        monkeypatch.setenv(GUARD_ENV, "1")
        scheds = list(enumerate_schedulings(tuple(range(1, 7)), 1))
        assert len(scheds) == 63

    def test_enumerated_schedulings_run(self):
        graph = build_graph("path:2")
        algo = make_algorithm("six")
        for sched in enumerate_schedulings(graph.nodes, 2, graph=graph):
            trace = execute(graph, algo, sched)
            assert trace.step_count <= 2


class TestSearch:
    def test_property_names(self):
        assert set(SEARCH_PROPERTIES) == {
            "proper",
            "proper-coloring",
            "palette",
            "termination-under-periodic-schedules",
            "periodic-termination",
        }

    def test_seeded_specs_cycle_through_parameters(self):
        assert _seeded_spec(0) == "random:seed=0,p=0.5,crash=0.0"
        assert _seeded_spec(5) == "random:seed=5,p=0.3,crash=0.1"

    def test_proper_holds_for_the_cycle_algorithm(self):
        graph = build_graph("cycle:5")
        result = adversary_search(make_algorithm("six"), graph, property="proper", budget=60)
        assert not result.found
        assert result.examined == 60
        assert result.trace is None

    def test_periodic_livelock_found_for_the_flawed_rule(self):
        graph = build_graph("cycle:4")
        result = adversary_search(
            make_algorithm("buggy5"),
            graph,
            property="termination-under-periodic-schedules",
            budget=5000,
        )
        assert result.found
        assert result.certificate is not None
        assert result.certificate.period
        assert result.examined <= 5000
        assert result.scheduling_spec.startswith("explicit:")

    def test_periodic_absent_for_the_terminating_rule(self):
        graph = build_graph("cycle:3")
        result = adversary_search(
            make_algorithm("six"), graph, property="periodic-termination", budget=200
        )
        assert not result.found
        assert result.examined == 200

    def test_budget_counts_livelock_probes(self):
        graph = build_graph("cycle:3")
        result = adversary_search(
            make_algorithm("six"), graph, property="periodic-termination", budget=7
        )
        assert result.examined == 7

    def test_unknown_property(self):
        with pytest.raises(ValueError):
            adversary_search(make_algorithm("six"), build_graph("cycle:3"), property="magic")

    def test_found_trace_property_on_a_rigged_palette(self):
        # save1 on a cycle never emits (2, 0); the plain save rule can, so
        # checking a save trace against the save1 palette must eventually fail
        graph = build_graph("cycle:4")
        algo = make_algorithm("six")
        result = adversary_search(algo, graph, property="palette", budget=50)
        assert not result.found  # six stays within its own palette


def test_scheduling_spec_round_trips():
    graph = build_graph("cycle:4")
    for spec in (
        "sync",
        "sync:crashes=2@0|3@2",
        "random:seed=9,p=0.3,crash=0.1",
        "explicit:1,3/2/4",
    ):
        sched = make_scheduling(spec, graph)
        again = make_scheduling(sched.spec, graph)
        assert take(again, 6) == take(sched, 6)
        assert again.spec == sched.spec
