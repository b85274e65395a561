"""Scheduling construction: synchronous, random crash adversaries, replay,
exhaustive enumeration, and property-directed adversary search.

A scheduling is a (possibly infinite) sequence of nonempty node blocks
plus crash bookkeeping.  Everything is reproducible: random schedulings
are pure functions of their canonical spec string, and every search hit
is returned together with a spec that regenerates it.

Spec strings:

* ``sync`` -- every step schedules all non-crashed nodes.
* ``random:seed=S,p=P,crash=R`` -- each step includes each alive node
  independently with probability P (empty draws are redrawn); each node
  is faulty with probability R, and faulty nodes stop appearing after a
  sampled crash step (possibly 0 = never appear).
* ``replay:PATH`` -- blocks read from a scheduling file (one line per
  block, sorted ids, space-separated).
* ``explicit:1,3/2`` -- blocks inline, slash-separated.

Explicit crash times may be appended as ``crashes=2@0|4@3`` (node@step;
a node with crash step t appears in no block after the t-th).
"""

from __future__ import annotations

import itertools
import os
import random
from dataclasses import dataclass
from typing import Any, Callable, Iterator

from . import verify as _verify
from .engine import (
    DEFAULT_MAX_STEPS,
    LivelockCertificate,
    SchedulingError,
    Trace,
    detect_livelock,
    execute,
)
from .graphs import Graph

__all__ = [
    "GUARD_ENV",
    "Scheduling",
    "make_scheduling",
    "read_scheduling",
    "write_scheduling",
    "enumerate_schedulings",
    "SearchResult",
    "adversary_search",
    "SEARCH_PROPERTIES",
]

GUARD_ENV = "ASYNCLOCAL_GUARD_OVERRIDE"

_CRASH_STOP = 0.3  # geometric parameter for sampled crash steps


@dataclass
class Scheduling:
    """A block source plus the crash/support metadata the engine consumes."""

    kind: str
    spec: str
    nodes: tuple[int, ...]
    finite: bool
    support_ever: frozenset[int]
    support_forever: frozenset[int]
    crash_times: dict[int, int | None]
    seed: int | None
    _factory: Callable[[], Iterator[tuple[int, ...]]]

    def blocks(self) -> Iterator[tuple[int, ...]]:
        """Fresh block iterator; calling again restarts from the beginning."""
        return self._factory()


def _parse_params(text: str) -> dict[str, str]:
    params: dict[str, str] = {}
    for part in text.split(","):
        if not part:
            continue
        if "=" not in part:
            raise SchedulingError(f"malformed scheduling parameter {part!r}")
        key, value = part.split("=", 1)
        params[key] = value
    return params


def _parse_crashes(text: str) -> dict[int, int]:
    out: dict[int, int] = {}
    for item in text.split("|"):
        if not item:
            continue
        try:
            node, step = item.split("@")
            out[int(node)] = int(step)
        except ValueError as exc:
            raise SchedulingError(f"malformed crash entry {item!r}") from exc
    return out


def _crash_body(crashes: dict[int, int]) -> str:
    return "|".join(f"{v}@{t}" for v, t in sorted(crashes.items()))


def _supports(nodes, crash_times):
    ever = frozenset(v for v in nodes if crash_times.get(v) != 0)
    forever = frozenset(v for v in nodes if crash_times.get(v) is None)
    return ever, forever


def make_scheduling(spec: str, graph: Graph, crashes: dict[int, int] | None = None) -> Scheduling:
    """Build a scheduling for ``graph`` from a spec string.

    ``crashes`` adds or overrides explicit crash steps; the returned
    scheduling's ``spec`` is canonical and regenerates it exactly.
    """
    nodes = graph.nodes
    kind, _, rest = spec.partition(":")
    explicit_crashes = dict(crashes or {})
    for v in explicit_crashes:
        if v not in graph.adj:
            raise SchedulingError(f"crash for unknown node {v}")

    if kind == "sync":
        params = _parse_params(rest)
        if set(params) - {"crashes"}:
            raise SchedulingError(f"unknown sync parameters {sorted(set(params) - {'crashes'})}")
        explicit_crashes = {**_parse_crashes(params.get("crashes", "")), **explicit_crashes}
        ct: dict[int, int | None] = {v: explicit_crashes.get(v) for v in nodes}
        canon = "sync" + (f":crashes={_crash_body(explicit_crashes)}" if explicit_crashes else "")

        def factory():
            step = 0
            while True:
                step += 1
                blk = tuple(v for v in nodes if ct[v] is None or ct[v] >= step)
                if not blk:
                    return
                yield blk

        ever, forever = _supports(nodes, ct)
        finite = all(t is not None for t in ct.values())
        return Scheduling("sync", canon, nodes, finite, ever, forever, ct, None, factory)

    if kind == "random":
        params = _parse_params(rest)
        unknown = set(params) - {"seed", "p", "crash", "crashes"}
        if unknown:
            raise SchedulingError(f"unknown random parameters {sorted(unknown)}")
        if "seed" not in params:
            raise SchedulingError("random scheduling needs a seed, e.g. random:seed=7")
        try:
            seed = int(params["seed"])
            p = float(params.get("p", "0.5"))
            rate = float(params.get("crash", "0.0"))
        except ValueError as exc:
            raise SchedulingError(f"malformed random parameters in {spec!r}") from exc
        if not 0.0 < p <= 1.0:
            raise SchedulingError(f"activation probability must be in (0,1], got {p}")
        if not 0.0 <= rate < 1.0:
            raise SchedulingError(f"crash rate must be in [0,1), got {rate}")
        explicit_crashes = {**_parse_crashes(params.get("crashes", "")), **explicit_crashes}

        rng = random.Random(seed)
        ct = {}
        for v in nodes:  # fixed draw order keeps the stream seed-deterministic
            faulty = rng.random() < rate
            t = 0
            while rng.random() >= _CRASH_STOP:
                t += 1
            ct[v] = t if faulty else None
        ct.update(explicit_crashes)
        block_seed = rng.randrange(2**63)
        canon = f"random:seed={seed},p={p!r},crash={rate!r}"
        if explicit_crashes:
            canon += f",crashes={_crash_body(explicit_crashes)}"

        def factory():
            block_rng = random.Random(block_seed)
            step = 0
            while True:
                step += 1
                alive = [v for v in nodes if ct[v] is None or ct[v] >= step]
                if not alive:
                    return
                while True:
                    blk = tuple(v for v in alive if block_rng.random() < p)
                    if blk:
                        break
                yield blk

        ever, forever = _supports(nodes, ct)
        finite = all(t is not None for t in ct.values())
        return Scheduling("random", canon, nodes, finite, ever, forever, ct, seed, factory)

    if kind == "replay":
        if not rest:
            raise SchedulingError("replay needs a file path, e.g. replay:sched.txt")
        blocks = read_scheduling(rest)
        return _explicit_scheduling(blocks, nodes, kind="replay", spec=spec)

    if kind == "explicit":
        try:
            blocks = [
                tuple(sorted({int(x) for x in part.split(",")})) for part in rest.split("/") if part
            ]
        except ValueError as exc:
            raise SchedulingError(f"malformed explicit scheduling {spec!r}") from exc
        return _explicit_scheduling(blocks, nodes)

    raise SchedulingError(f"unknown scheduling kind {kind!r}")


def _explicit_scheduling(blocks, nodes, kind="explicit", spec=None) -> Scheduling:
    blocks = [tuple(sorted(set(b))) for b in blocks]
    for blk in blocks:
        if not blk:
            raise SchedulingError("empty scheduling block")
        for v in blk:
            if v not in nodes:
                raise SchedulingError(f"scheduled node {v} not in the graph")
    if spec is None:
        spec = "explicit:" + "/".join(",".join(str(v) for v in blk) for blk in blocks)
    support = frozenset(v for blk in blocks for v in blk)
    return Scheduling(
        kind,
        spec,
        tuple(nodes),
        True,
        support,
        frozenset(),
        {},
        None,
        lambda: iter(blocks),
    )


def read_scheduling(path) -> list[tuple[int, ...]]:
    """Read a scheduling file: one block per line, space-separated node ids."""
    blocks = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                blocks.append(tuple(sorted({int(x) for x in line.split()})))
            except ValueError as exc:
                raise SchedulingError(f"{path}:{lineno}: malformed block {line!r}") from exc
    return blocks


def write_scheduling(blocks, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for blk in blocks:
            fh.write(" ".join(str(v) for v in sorted(blk)) + "\n")


# ---------------------------------------------------------------------------
# bounded exhaustive enumeration


def _check_guard(n_nodes: int, depth: int) -> None:
    if os.environ.get(GUARD_ENV) == "1":
        return
    if n_nodes > 5 or depth > 6:
        raise ValueError(
            f"enumeration over {n_nodes} nodes at depth {depth} is guarded "
            f"(limits: 5 nodes, depth 6); set {GUARD_ENV}=1 to override"
        )


def _nonempty_subsets(nodes: tuple[int, ...]) -> list[tuple[int, ...]]:
    out = []
    for mask in range(1, 1 << len(nodes)):
        out.append(tuple(nodes[i] for i in range(len(nodes)) if mask >> i & 1))
    return out


def enumerate_schedulings(nodes, depth: int, graph: Graph | None = None) -> Iterator[Scheduling]:
    """All schedulings of 1..depth blocks over ``nodes``, shortest first.

    Within a length, sequences are ordered lexicographically by block
    (blocks themselves ordered {1}, {2}, {1,2}, {3}, ...).  Guarded
    against combinatorial explosion unless the override env var is set.
    """
    nodes = tuple(sorted(set(nodes)))
    if not nodes:
        raise ValueError("enumeration needs at least one node")
    if depth < 1:
        raise ValueError(f"depth must be positive, got {depth}")
    _check_guard(len(nodes), depth)
    subsets = _nonempty_subsets(nodes)
    for length in range(1, depth + 1):
        for seq in itertools.product(subsets, repeat=length):
            yield _explicit_scheduling(list(seq), nodes)


# ---------------------------------------------------------------------------
# adversary search

SEARCH_PROPERTIES = (
    "proper",
    "proper-coloring",
    "palette",
    "termination-under-periodic-schedules",
    "periodic-termination",
)

_SEARCH_P = (0.5, 0.3, 0.8, 1.0)
_SEARCH_CRASH = (0.0, 0.1, 0.25)


@dataclass
class SearchResult:
    """Outcome of an adversary search: what was examined and what was found."""

    property: str
    examined: int
    found: bool
    trace: Trace | None = None
    certificate: LivelockCertificate | None = None
    scheduling_spec: str | None = None
    verdict: Any = None


def _seeded_spec(seed: int) -> str:
    p = _SEARCH_P[seed % len(_SEARCH_P)]
    rate = _SEARCH_CRASH[(seed // len(_SEARCH_P)) % len(_SEARCH_CRASH)]
    return f"random:seed={seed},p={p!r},crash={rate!r}"


def adversary_search(
    algo,
    graph: Graph,
    inputs=None,
    property: str = "proper",
    budget: int = 1000,
    seed0: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> SearchResult:
    """Search schedulings for a violation of the named property.

    Trace properties (``proper``, ``palette``) scan seeded random
    adversaries in ascending seed order, so the lowest violating seed
    wins; a hit is re-executed with full recording for a replayable
    witness.  ``termination-under-periodic-schedules`` instead enumerates
    short prefix/period shapes and looks for configuration-repetition
    livelocks.  ``budget`` bounds the number of candidates examined.
    """
    if property in ("proper", "proper-coloring", "palette"):
        checker = _verify.check_proper if property != "palette" else _verify.check_palette
        for i in range(budget):
            seed = seed0 + i
            sched = make_scheduling(_seeded_spec(seed), graph)
            trace = execute(graph, algo, sched, inputs=inputs, max_steps=max_steps, record=False)
            verdict = checker(trace)
            if not verdict.ok:
                witness = execute(
                    graph, algo, make_scheduling(_seeded_spec(seed), graph),
                    inputs=inputs, max_steps=max_steps,
                )
                return SearchResult(
                    property, i + 1, True, trace=witness,
                    scheduling_spec=sched.spec, verdict=checker(witness),
                )
        return SearchResult(property, budget, False)

    if property in ("termination-under-periodic-schedules", "periodic-termination"):
        subsets = _nonempty_subsets(graph.nodes)
        examined = 0
        prefixes = itertools.chain(
            [()],
            ((b,) for b in subsets),
            itertools.product(subsets, repeat=2),
        )
        for prefix in prefixes:
            for plen in (1, 2):
                for period in itertools.product(subsets, repeat=plen):
                    if examined >= budget:
                        return SearchResult(property, examined, False)
                    examined += 1
                    cert = detect_livelock(graph, algo, prefix, period, inputs=inputs)
                    if cert is not None:
                        blocks = list(prefix) + list(period)
                        spec = "explicit:" + "/".join(
                            ",".join(str(v) for v in blk) for blk in blocks
                        )
                        return SearchResult(
                            property, examined, True, certificate=cert, scheduling_spec=spec,
                        )
        return SearchResult(property, examined, False)

    raise ValueError(f"unknown property {property!r} (expected one of {SEARCH_PROPERTIES})")
