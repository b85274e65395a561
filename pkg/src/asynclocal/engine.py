"""Deterministic execution engine for asynchronous local computation.

Nodes on a communication graph each own a single-writer register readable
by their neighbors.  An execution is driven by a scheduling: a sequence of
nonempty blocks of nodes.  When a block is applied, every not-yet-decided
node in it first publishes its pending state to its register and then
atomically snapshots all neighbor registers (so nodes scheduled together
see each other's fresh writes), computing its next state from the result.
Decided (Terminated) nodes are frozen: scheduling them again is a no-op
and their registers keep the last published Running state.

States are tagged tuples:

* ``None`` -- Bottom: the register was never written.
* ``("R", payload)`` -- Running, with an algorithm-specific payload.
* ``("T", output, payload)`` -- Terminated with a decided output; the
  payload keeps the internal state at decision time.

Everything here is pure and deterministic: replaying the same scheduling
against the same algorithm and graph reproduces a trace bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

from .graphs import Graph

__all__ = [
    "BOTTOM",
    "RUNNING",
    "TERMINATED",
    "DEFAULT_MAX_STEPS",
    "EngineError",
    "AlgorithmViolation",
    "SchedulingError",
    "Configuration",
    "StepRecord",
    "Trace",
    "LivelockCertificate",
    "initial_configuration",
    "step",
    "execute",
    "detect_livelock",
    "state_to_json",
    "state_from_json",
]

BOTTOM = None
RUNNING = "R"
TERMINATED = "T"

DEFAULT_MAX_STEPS = 10**6


class EngineError(RuntimeError):
    """Base class for execution failures."""


class AlgorithmViolation(EngineError):
    """An algorithm hit a state its correctness argument rules out.

    Raised, for example, when a color-reduction round finds its candidate
    set empty.  Executions that raise this are failed runs, never silently
    repaired.
    """


class SchedulingError(EngineError):
    """A scheduling block referenced unknown nodes or was empty."""


# ---------------------------------------------------------------------------
# configurations


@dataclass
class Configuration:
    """Register file (``old``) and pending states (``new``) after a step."""

    old: dict[int, Any]
    new: dict[int, Any]
    step_index: int = 0

    def copy(self) -> "Configuration":
        return Configuration(dict(self.old), dict(self.new), self.step_index)

    def key(self) -> tuple:
        """Hashable canonical form (ignores the step counter)."""
        return tuple((v, self.old[v], self.new[v]) for v in sorted(self.old))

    def decided(self) -> dict[int, Any]:
        return {
            v: st[1] for v, st in self.new.items() if st is not None and st[0] == TERMINATED
        }

    def to_json(self) -> dict:
        return {
            "old": {str(v): state_to_json(self.old[v]) for v in sorted(self.old)},
            "new": {str(v): state_to_json(self.new[v]) for v in sorted(self.new)},
            "step_index": self.step_index,
        }


def initial_configuration(graph: Graph, algo, inputs: dict[int, Any]) -> Configuration:
    new = {}
    for v in graph.nodes:
        st = algo.init(v, inputs[v])
        if st is None or st[0] not in (RUNNING, TERMINATED):
            raise EngineError(f"init for node {v} returned invalid state {st!r}")
        new[v] = st
    return Configuration(old={v: BOTTOM for v in graph.nodes}, new=new, step_index=0)


def _apply_block(graph: Graph, algo, old: dict, new: dict, block: tuple[int, ...]):
    """Publish-then-snapshot for one block, in place.

    Returns ``(reads, decided)`` where ``reads`` maps each active node to
    the snapshot list it consumed and ``decided`` maps nodes that decided
    during this block to their outputs.
    """
    adj = graph.adj
    arity = getattr(algo, "arity", None)
    active = [v for v in block if new[v][0] != TERMINATED]
    for v in active:
        old[v] = new[v]
    reads: dict[int, list] = {}
    decided: dict[int, Any] = {}
    for v in active:
        snaps = [old[u] for u in adj[v]]
        if arity is not None and len(snaps) < arity:
            snaps.extend([BOTTOM] * (arity - len(snaps)))
        st = algo.next(old[v][1], snaps)
        new[v] = st
        reads[v] = snaps
        if st[0] == TERMINATED:
            decided[v] = st[1]
    return reads, decided


def _check_block(block, nodes: frozenset[int]) -> tuple[int, ...]:
    blk = tuple(sorted(set(block)))
    if not blk:
        raise SchedulingError("empty scheduling block")
    for v in blk:
        if v not in nodes:
            raise SchedulingError(f"scheduled node {v} not in the graph")
    return blk


def step(graph: Graph, algo, cfg: Configuration, block: Iterable[int]) -> Configuration:
    """Pure single-step transition: returns a fresh configuration."""
    blk = _check_block(block, frozenset(graph.nodes))
    nxt = cfg.copy()
    _apply_block(graph, algo, nxt.old, nxt.new, blk)
    nxt.step_index = cfg.step_index + 1
    return nxt


# ---------------------------------------------------------------------------
# traces


@dataclass
class StepRecord:
    index: int
    block: tuple[int, ...]
    reads: dict[int, list]
    new_states: dict[int, Any]
    decided: dict[int, Any]

    def to_json(self) -> dict:
        return {
            "type": "step",
            "i": self.index,
            "block": list(self.block),
            "reads": {str(v): [state_to_json(s) for s in snaps] for v, snaps in self.reads.items()},
            "new": {str(v): state_to_json(s) for v, s in self.new_states.items()},
            "decided": {str(v): _out_json(o) for v, o in self.decided.items()},
        }


@dataclass
class Trace:
    """Result of :func:`execute`, replayable from its own contents."""

    graph: Graph
    algo_name: str
    params: dict[str, Any]
    inputs: dict[int, Any]
    sched_spec: str
    seed: int | None
    step_count: int
    complete: bool
    decisions: dict[int, Any]
    decision_steps: dict[int, int]
    runtimes: dict[int, int]
    final: Configuration
    support_forever: frozenset[int] = frozenset()
    blocks: tuple[tuple[int, ...], ...] | None = None
    steps: list[StepRecord] | None = None
    max_steps: int = DEFAULT_MAX_STEPS

    @property
    def max_runtime(self) -> int:
        return max(self.runtimes.values(), default=0)

    def header_json(self) -> dict:
        return {
            "type": "header",
            "format": 1,
            "graph": self.graph.to_dict(),
            "graph_hash": self.graph.hash,
            "algo": self.algo_name,
            "params": dict(self.params),
            "inputs": {str(v): self.inputs[v] for v in sorted(self.inputs)},
            "seed": self.seed,
            "sched": self.sched_spec,
            "max_steps": self.max_steps,
        }

    def end_json(self) -> dict:
        return {
            "type": "end",
            "steps": self.step_count,
            "complete": self.complete,
            "decisions": {str(v): _out_json(o) for v, o in sorted(self.decisions.items())},
            "decision_steps": {str(v): s for v, s in sorted(self.decision_steps.items())},
            "runtimes": {str(v): r for v, r in sorted(self.runtimes.items())},
        }

    def jsonl_lines(self) -> Iterator[str]:
        if self.steps is None:
            raise EngineError("trace was executed without step recording")
        yield _dumps(self.header_json())
        for rec in self.steps:
            yield _dumps(rec.to_json())
        yield _dumps(self.end_json())

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.jsonl_lines():
                fh.write(line + "\n")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _out_json(output):
    return list(output) if isinstance(output, tuple) else output


def state_to_json(state):
    if state is BOTTOM:
        return None
    if state[0] == RUNNING:
        return ["R", _tuples_to_lists(state[1])]
    return ["T", _tuples_to_lists(state[1]), _tuples_to_lists(state[2])]


def state_from_json(data):
    if data is None:
        return BOTTOM
    tag = data[0]
    if tag == "R":
        return ("R", _lists_to_tuples(data[1]))
    return ("T", _lists_to_tuples(data[1]), _lists_to_tuples(data[2]))


def _tuples_to_lists(obj):
    if isinstance(obj, tuple):
        return [_tuples_to_lists(x) for x in obj]
    return obj


def _lists_to_tuples(obj):
    if isinstance(obj, list):
        return tuple(_lists_to_tuples(x) for x in obj)
    return obj


# ---------------------------------------------------------------------------
# execution


class _ExplicitSchedule:
    """Adapter so plain block lists can drive :func:`execute`."""

    def __init__(self, blocks: Iterable[Iterable[int]]):
        self._blocks = [tuple(sorted(set(b))) for b in blocks]
        self.spec = "explicit"
        self.seed = None
        self.finite = True
        self.support_ever = frozenset(v for b in self._blocks for v in b)
        self.support_forever = frozenset()
        self.crash_times = None

    def blocks(self):
        return iter(self._blocks)


def _coerce_scheduling(scheduling):
    if hasattr(scheduling, "blocks") and callable(scheduling.blocks):
        return scheduling
    return _ExplicitSchedule(scheduling)


def _resolve_inputs(graph: Graph, algo, inputs) -> dict[int, Any]:
    if inputs is None:
        return {v: algo.default_input(v) for v in graph.nodes}
    missing = [v for v in graph.nodes if v not in inputs]
    if missing:
        raise EngineError(f"missing inputs for nodes {missing}")
    return {v: inputs[v] for v in graph.nodes}


def execute(
    graph: Graph,
    algo,
    scheduling,
    inputs: dict[int, Any] | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    record: bool = True,
) -> Trace:
    """Run ``algo`` on ``graph`` under ``scheduling``.

    Stops as soon as every node that appears in the scheduling has
    decided, when the scheduling itself is exhausted, when the only
    undecided scheduled nodes have all crashed, or after ``max_steps``
    blocks, whichever comes first.  The returned trace is flagged
    ``complete`` exactly when all appearing nodes decided.

    With ``record=False`` the per-step records and block list are not
    retained (used for large campaigns); decisions, runtimes and the final
    configuration are always kept.
    """
    sched = _coerce_scheduling(scheduling)
    ins = _resolve_inputs(graph, algo, inputs)
    if hasattr(algo, "validate"):
        algo.validate(graph, ins)

    cfg = initial_configuration(graph, algo, ins)
    old, new = cfg.old, cfg.new
    nodes = frozenset(graph.nodes)
    support = frozenset(sched.support_ever)
    crash_times = getattr(sched, "crash_times", None)

    decisions: dict[int, Any] = {}
    decision_steps: dict[int, int] = {}
    runtimes: dict[int, int] = {v: 0 for v in graph.nodes}
    for v, st in new.items():
        if st[0] == TERMINATED:
            decisions[v] = st[1]
            decision_steps[v] = 0

    steps: list[StepRecord] | None = [] if record else None
    blocks_run: list[tuple[int, ...]] | None = [] if record else None

    block_iter = sched.blocks()
    step_index = 0
    while step_index < max_steps:
        undecided = support - decisions.keys()
        if not undecided:
            break
        if crash_times is not None and all(
            crash_times.get(v) is not None and crash_times[v] <= step_index
            for v in undecided
        ):
            break  # every still-undecided scheduled node has crashed
        blk_raw = next(block_iter, None)
        if blk_raw is None:
            break
        blk = _check_block(blk_raw, nodes)
        step_index += 1
        reads, decided_now = _apply_block(graph, algo, old, new, blk)
        for v in reads:
            runtimes[v] += 1
        for v, out in decided_now.items():
            decisions[v] = out
            decision_steps[v] = step_index
        if record:
            blocks_run.append(blk)
            steps.append(StepRecord(step_index, blk, reads, {v: new[v] for v in reads}, decided_now))

    cfg.step_index = step_index
    return Trace(
        graph=graph,
        algo_name=getattr(algo, "name", algo.__class__.__name__),
        params=dict(getattr(algo, "params", lambda: {})()),
        inputs=ins,
        sched_spec=getattr(sched, "spec", "explicit"),
        seed=getattr(sched, "seed", None),
        step_count=step_index,
        complete=support <= decisions.keys(),
        decisions=decisions,
        decision_steps=decision_steps,
        runtimes=runtimes,
        final=cfg,
        support_forever=frozenset(getattr(sched, "support_forever", frozenset())),
        blocks=tuple(blocks_run) if record else None,
        steps=steps,
        max_steps=max_steps,
    )


# ---------------------------------------------------------------------------
# livelock detection


@dataclass
class LivelockCertificate:
    """Witness that a periodic scheduling never lets some node decide.

    The configuration reached after ``repeat_index`` applications of the
    period equals the one after ``matched_index`` applications, while some
    node scheduled by the period is still undecided -- so the execution
    cycles forever without progress.
    """

    prefix: tuple[tuple[int, ...], ...]
    period: tuple[tuple[int, ...], ...]
    matched_index: int
    repeat_index: int
    undecided: tuple[int, ...]
    configuration: Configuration

    @property
    def period_applications(self) -> int:
        return self.repeat_index - self.matched_index

    def to_json(self) -> dict:
        return {
            "prefix": [list(b) for b in self.prefix],
            "period": [list(b) for b in self.period],
            "matched_index": self.matched_index,
            "repeat_index": self.repeat_index,
            "period_applications": self.period_applications,
            "undecided": list(self.undecided),
            "configuration": self.configuration.to_json(),
        }


def detect_livelock(
    graph: Graph,
    algo,
    prefix: Iterable[Iterable[int]],
    period: Iterable[Iterable[int]],
    inputs: dict[int, Any] | None = None,
    bound: int = 64,
) -> LivelockCertificate | None:
    """Search for a configuration repetition under ``prefix + period*``.

    Runs the prefix once, then applies the period up to ``bound`` times,
    hashing the full configuration at every period boundary.  Returns a
    certificate on the first repetition that leaves a node of the period's
    support undecided, and ``None`` if the period's nodes all decide (the
    dynamics then freeze) or no repetition shows up within the bound.
    """
    nodes = frozenset(graph.nodes)
    pre = tuple(_check_block(b, nodes) for b in prefix)
    per = tuple(_check_block(b, nodes) for b in period)
    if not per:
        raise SchedulingError("period must contain at least one block")
    period_support = frozenset(v for b in per for v in b)

    ins = _resolve_inputs(graph, algo, inputs)
    if hasattr(algo, "validate"):
        algo.validate(graph, ins)
    cfg = initial_configuration(graph, algo, ins)
    for blk in pre:
        _apply_block(graph, algo, cfg.old, cfg.new, blk)

    seen = {cfg.key(): 0}
    for k in range(1, bound + 1):
        for blk in per:
            _apply_block(graph, algo, cfg.old, cfg.new, blk)
        key = cfg.key()
        if key in seen:
            undecided = tuple(
                v for v in sorted(period_support) if cfg.new[v][0] != TERMINATED
            )
            if not undecided:
                return None
            return LivelockCertificate(
                prefix=pre,
                period=per,
                matched_index=seen[key],
                repeat_index=k,
                undecided=undecided,
                configuration=cfg.copy(),
            )
        seen[key] = k
    return None
