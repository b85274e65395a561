import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asynclocal.algorithms import Identity, make_algorithm
from asynclocal.engine import (
    Configuration,
    EngineError,
    SchedulingError,
    detect_livelock,
    execute,
    initial_configuration,
    state_from_json,
    state_to_json,
    step,
)
from asynclocal.graphs import build_graph
from asynclocal.schedulers import make_scheduling


def six_on_table_cycle():
    return build_graph("cycle:5", ids=(3, 5, 4, 1, 6)), make_algorithm("six")


class TestStep:
    def test_initial_configuration(self):
        graph, algo = six_on_table_cycle()
        cfg = initial_configuration(graph, algo, {v: v for v in graph.nodes})
        assert all(cfg.old[v] is None for v in graph.nodes)
        assert cfg.new[3] == ("R", (3, 0, 0))

    def test_publish_then_snapshot_within_a_block(self):
        # same-block writers see each other's writes from this very step
        graph = build_graph("path:2")
        algo = make_algorithm("six")
        cfg = initial_configuration(graph, algo, {1: 1, 2: 2})
        cfg = step(graph, algo, cfg, (1, 2))
        assert cfg.new[1] == ("R", (1, 1, 0))
        assert cfg.new[2] == ("R", (2, 0, 1))

    def test_table_step_reads(self):
        graph, algo = six_on_table_cycle()
        cfg = initial_configuration(graph, algo, {v: v for v in graph.nodes})
        cfg = step(graph, algo, cfg, (1, 3, 5))
        assert cfg.new[3] == ("R", (3, 1, 0))
        assert cfg.new[1] == ("T", (0, 0), (1, 0, 0))
        assert cfg.old[4] is None

    def test_terminated_node_is_a_no_op(self):
        graph, algo = six_on_table_cycle()
        cfg = initial_configuration(graph, algo, {v: v for v in graph.nodes})
        cfg = step(graph, algo, cfg, (1, 3, 5))  # node 1 decides here
        before = cfg.copy()
        after = step(graph, algo, cfg, (1,))
        assert after.old == before.old
        assert after.new == before.new
        assert after.step_index == before.step_index + 1

    def test_rejects_bad_blocks(self):
        graph, algo = six_on_table_cycle()
        cfg = initial_configuration(graph, algo, {v: v for v in graph.nodes})
        with pytest.raises(SchedulingError):
            step(graph, algo, cfg, ())
        with pytest.raises(SchedulingError):
            step(graph, algo, cfg, (2,))  # not a node of this graph

    def test_step_is_pure(self):
        graph, algo = six_on_table_cycle()
        cfg = initial_configuration(graph, algo, {v: v for v in graph.nodes})
        step(graph, algo, cfg, (1, 3, 5))
        assert cfg.new[3] == ("R", (3, 0, 0))
        assert cfg.step_index == 0


class TestExecute:
    def test_table_one_decisions_and_runtimes(self):
        graph, algo = six_on_table_cycle()
        trace = execute(graph, algo, [(1, 3, 5), (4, 5), (3, 4), (6,), (6,)])
        assert trace.complete
        assert trace.decisions == {1: (0, 0), 3: (1, 0), 4: (1, 1), 5: (0, 1), 6: (0, 1)}
        assert trace.runtimes == {1: 1, 3: 2, 4: 2, 5: 2, 6: 2}
        assert trace.decision_steps == {1: 1, 5: 2, 3: 3, 4: 3, 6: 5}
        assert trace.max_runtime == 2

    def test_sync_stops_once_everyone_decides(self):
        graph, algo = six_on_table_cycle()
        trace = execute(graph, algo, make_scheduling("sync", graph))
        assert trace.complete
        assert trace.step_count < 20

    def test_decided_at_init_consumes_no_steps(self):
        graph = build_graph("cycle:3")
        trace = execute(graph, Identity(), make_scheduling("sync", graph))
        assert trace.complete
        assert trace.step_count == 0
        assert trace.decision_steps == {1: 0, 2: 0, 3: 0}
        assert trace.runtimes == {1: 0, 2: 0, 3: 0}

    def test_exhausted_blocks_leave_an_incomplete_trace(self):
        graph, algo = six_on_table_cycle()
        trace = execute(graph, algo, [(3, 5)])
        assert not trace.complete
        assert trace.decisions == {}

    def test_lone_appearance_decides_and_completes(self):
        # nodes that never appear count as crashed at the start, so the
        # one scheduled node deciding makes the execution complete
        graph, algo = six_on_table_cycle()
        trace = execute(graph, algo, [(3,)])
        assert trace.complete
        assert trace.decisions == {3: (0, 0)}

    def test_max_steps_cap(self):
        graph, algo = six_on_table_cycle()
        trace = execute(graph, algo, make_scheduling("sync", graph), max_steps=1)
        assert trace.step_count == 1
        assert not trace.complete

    def test_crashed_nodes_stay_undecided(self):
        graph, algo = six_on_table_cycle()
        sched = make_scheduling("sync:crashes=3@1", graph)
        trace = execute(graph, algo, sched)
        assert 3 not in trace.decisions
        assert not trace.complete  # node 3 appeared once, then crashed undecided
        assert set(trace.decisions) == {1, 4, 5, 6}

    def test_initially_crashed_node_is_invisible(self):
        graph, algo = six_on_table_cycle()
        trace = execute(graph, algo, make_scheduling("sync:crashes=3@0", graph))
        assert trace.complete  # node 3 never appears, so completeness is relative
        assert set(trace.decisions) == {1, 4, 5, 6}
        assert trace.final.old[3] is None

    def test_missing_inputs_rejected(self):
        graph, algo = six_on_table_cycle()
        with pytest.raises(EngineError):
            execute(graph, algo, [(1,)], inputs={1: 1})

    def test_record_false_drops_steps_only(self):
        graph, algo = six_on_table_cycle()
        full = execute(graph, algo, make_scheduling("random:seed=3", graph))
        slim = execute(graph, algo, make_scheduling("random:seed=3", graph), record=False)
        assert slim.steps is None and slim.blocks is None
        assert slim.decisions == full.decisions
        assert slim.runtimes == full.runtimes
        assert slim.step_count == full.step_count


class TestTraceFiles:
    def test_dump_is_replayable_byte_for_byte(self, tmp_path):
        graph, algo = six_on_table_cycle()
        trace = execute(graph, algo, make_scheduling("random:seed=11", graph))
        path = tmp_path / "t.jsonl"
        trace.dump(path)
        lines = path.read_text().splitlines()
        again = execute(graph, algo, make_scheduling("random:seed=11", graph))
        assert list(again.jsonl_lines()) == lines

    def test_header_carries_reproduction_data(self):
        graph, algo = six_on_table_cycle()
        trace = execute(graph, algo, make_scheduling("random:seed=2", graph))
        header = trace.header_json()
        assert header["graph_hash"] == graph.hash
        assert header["algo"] == "six"
        assert header["seed"] == 2
        assert header["sched"].startswith("random:seed=2")

    def test_jsonl_requires_recording(self):
        graph, algo = six_on_table_cycle()
        trace = execute(graph, algo, [(1, 3, 5)], record=False)
        with pytest.raises(EngineError):
            list(trace.jsonl_lines())


state_payloads = st.recursive(
    st.integers(-3, 9) | st.none() | st.booleans(),
    lambda inner: st.tuples(inner, inner) | st.tuples(inner, inner, inner),
    max_leaves=6,
)


class TestStateJson:
    @settings(max_examples=80, deadline=None)
    @given(payload=state_payloads)
    def test_running_round_trip(self, payload):
        state = ("R", payload)
        assert state_from_json(state_to_json(state)) == state

    @settings(max_examples=80, deadline=None)
    @given(payload=state_payloads, out=st.integers(0, 5))
    def test_terminated_round_trip(self, payload, out):
        state = ("T", out, payload)
        assert state_from_json(state_to_json(state)) == state

    def test_bottom(self):
        assert state_to_json(None) is None
        assert state_from_json(None) is None


class TestDetectLivelock:
    def test_terminating_period_has_no_certificate(self):
        graph, algo = six_on_table_cycle()
        assert detect_livelock(graph, algo, [(1, 3, 5), (4, 5)], [(3, 4)]) is None

    def test_single_node_period_on_clique_one(self):
        graph = build_graph("clique:1")
        assert detect_livelock(graph, make_algorithm("six"), [], [(1,)]) is None

    def test_empty_period_rejected(self):
        graph, algo = six_on_table_cycle()
        with pytest.raises(SchedulingError):
            detect_livelock(graph, algo, [], [])

    def test_certificate_shape(self):
        graph = build_graph("cycle:4", ids=(3, 4, 2, 1))
        cert = detect_livelock(
            graph, make_algorithm("buggy5"), [(2, 3, 4), (1, 3, 4)], [(3, 4)]
        )
        assert cert is not None
        assert cert.period_applications == cert.repeat_index - cert.matched_index
        assert cert.undecided == (3, 4)
        assert all(v in (3, 4) for v in cert.undecided)
        data = cert.to_json()
        assert data["period"] == [[3, 4]]
        assert data["period_applications"] == 2
