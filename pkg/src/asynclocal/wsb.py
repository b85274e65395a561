"""Signed execution counting on the clique: trimming, equivalence classes,
and the input-family machinery behind the symmetry-breaking lower bound.

Executions here are the engine's block schedules on ``clique:n`` with all
processes participating.  The sign of an execution is the product over its
blocks of (-1)^(|block|+1); the univalued signed count weighs the all-zero
and all-one executions of a binary-output algorithm.  Trimming rewrites an
algorithm so that a process halts the first time it sees every other
process's register: with output 0 when that first sight coincides with its
own first activation, 1 otherwise.  The counting argument needs three
facts, all checkable by brute force at small ``n``: trimming preserves the
count, executions fall into equivalence classes of binomial size, and
binomials C(n, m) vanish mod prime n.

Enumeration is exponential in every direction, so the exhaustive helpers
are guarded to tiny ``n`` unless ``ASYNCLOCAL_GUARD_OVERRIDE=1`` is set.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Any, Iterable

import sympy

from .algorithms import Algorithm
from .engine import TERMINATED, initial_configuration, step
from .graphs import Graph, build_graph
from .schedulers import GUARD_ENV, _nonempty_subsets
from .verify import Verdict

__all__ = [
    "sign",
    "ExecutionRecord",
    "EnumerationResult",
    "enumerate_complete",
    "SimClassification",
    "classify",
    "univalued_signed_count",
    "CountReport",
    "count_report",
    "Trimmed",
    "trim",
    "InputFunction",
    "conjugate_permutation",
    "equivalence_class",
    "cycle_input_family",
    "FamilyReport",
    "check_input_family",
    "binom_divisibility",
    "ConstantOutput",
    "OutputAfterSeeing",
    "IdParity",
    "toy_algorithms",
]


def _guard(ok: bool, message: str) -> None:
    if ok or os.environ.get(GUARD_ENV) == "1":
        return
    raise ValueError(f"{message} (set {GUARD_ENV}=1 to override)")


# ---------------------------------------------------------------------------
# executions and their signs


@dataclass(frozen=True)
class ExecutionRecord:
    """A complete schedule on clique(n) with its outputs.

    ``decision_steps[v]`` is the 1-based block index at which ``v``
    decided (0 for a decision made before any block ran).
    """

    n: int
    blocks: tuple[tuple[int, ...], ...]
    outputs: dict[int, Any] = field(compare=False)
    decision_steps: dict[int, int] = field(compare=False)

    @property
    def sign(self) -> int:
        return sign(self.blocks)

    def renamed(self, perm: dict[int, int]) -> "ExecutionRecord":
        return ExecutionRecord(
            n=self.n,
            blocks=tuple(tuple(sorted(perm[v] for v in b)) for b in self.blocks),
            outputs={perm[v]: o for v, o in self.outputs.items()},
            decision_steps={perm[v]: s for v, s in self.decision_steps.items()},
        )


def sign(execution) -> int:
    """Product over blocks of (-1)^(|block|+1): even blocks flip the sign."""
    blocks = execution.blocks if isinstance(execution, ExecutionRecord) else execution
    s = 1
    for b in blocks:
        if len(b) % 2 == 0:
            s = -s
    return s


@dataclass
class EnumerationResult:
    """All complete executions found within the step bound.

    ``truncated`` counts schedule prefixes abandoned at the bound with
    processes still undecided; it is zero exactly when the algorithm is
    wait-free within the bound and the census is therefore exhaustive.
    """

    records: list[ExecutionRecord]
    truncated: int
    step_bound: int

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def enumerate_complete(algo, n: int, step_bound: int = 8) -> EnumerationResult:
    """Depth-first census of every complete execution on ``clique:n``.

    Blocks are nonempty subsets of the currently undecided processes, so
    a schedule ends exactly when everyone has decided.
    """
    _guard(n <= 3, f"exhaustive enumeration over clique({n}) explodes")
    graph = build_graph(f"clique:{n}")
    inputs = {v: algo.default_input(v) for v in graph.nodes}
    if hasattr(algo, "validate"):
        algo.validate(graph, inputs)
    cfg0 = initial_configuration(graph, algo, inputs)
    ds0 = {v: 0 for v, st in cfg0.new.items() if st[0] == TERMINATED}

    records: list[ExecutionRecord] = []
    truncated = 0

    def descend(cfg, blocks: tuple, ds: dict[int, int]) -> None:
        nonlocal truncated
        undecided = [v for v in graph.nodes if cfg.new[v][0] != TERMINATED]
        if not undecided:
            records.append(ExecutionRecord(n, blocks, cfg.decided(), ds))
            return
        if len(blocks) >= step_bound:
            truncated += 1
            return
        for blk in _nonempty_subsets(undecided):
            nxt = step(graph, algo, cfg, blk)
            newly = {
                v: len(blocks) + 1
                for v in blk
                if nxt.new[v][0] == TERMINATED
            }
            descend(nxt, blocks + (blk,), {**ds, **newly})

    descend(cfg0, (), ds0)
    return EnumerationResult(records, truncated, step_bound)


# ---------------------------------------------------------------------------
# classification relative to the first full-coverage step


@dataclass(frozen=True)
class SimClassification:
    """Process classes relative to i*, the first step by which every
    process has been activated: class 3 decided before i*, class 1 was
    activated for the first time at i*, class 2 is everyone else.  SIM
    collects classes 2 and 3."""

    classes: dict[int, int]
    sim: frozenset[int]
    i_star: int


def classify(record: ExecutionRecord) -> SimClassification:
    nodes = set(range(1, record.n + 1))
    seen: set[int] = set()
    i_star = None
    for i, blk in enumerate(record.blocks, start=1):
        seen |= set(blk)
        if seen == nodes:
            i_star = i
            break
    if i_star is None:
        raise ValueError("classification needs every process activated at least once")
    first_act: dict[int, int] = {}
    for i, blk in enumerate(record.blocks, start=1):
        for v in blk:
            first_act.setdefault(v, i)
    classes = {}
    for v in sorted(nodes):
        decided_at = record.decision_steps.get(v)
        if decided_at is not None and decided_at < i_star:
            classes[v] = 3
        elif first_act[v] == i_star:
            classes[v] = 1
        else:
            classes[v] = 2
    sim = frozenset(v for v, c in classes.items() if c != 1)
    return SimClassification(classes, sim, i_star)


# ---------------------------------------------------------------------------
# univalued signed counting


def univalued_signed_count(algo, n: int, step_bound: int = 8) -> int:
    """Sum of signs over all-0 executions plus (-1)^(n-1) times the sum
    over all-1 executions."""
    return count_report(algo, n, step_bound).count


@dataclass
class CountReport:
    algo: str
    n: int
    step_bound: int
    executions: int
    truncated: int
    c0_size: int
    c1_size: int
    c0_sum: int
    c1_sum: int
    count: int


def count_report(algo, n: int, step_bound: int = 8) -> CountReport:
    result = enumerate_complete(algo, n, step_bound)
    c0 = [r for r in result if set(r.outputs.values()) == {0}]
    c1 = [r for r in result if set(r.outputs.values()) == {1}]
    s0 = sum(r.sign for r in c0)
    s1 = sum(r.sign for r in c1)
    return CountReport(
        algo=getattr(algo, "name", algo.__class__.__name__),
        n=n,
        step_bound=step_bound,
        executions=len(result.records),
        truncated=result.truncated,
        c0_size=len(c0),
        c1_size=len(c1),
        c0_sum=s0,
        c1_sum=s1,
        count=s0 + (-1) ** (n - 1) * s1,
    )


# ---------------------------------------------------------------------------
# trimming


class Trimmed(Algorithm):
    """Stop the wrapped algorithm at first full coverage of the clique.

    A process whose snapshot shows all n-1 other registers halts
    immediately: output 0 if this is its first activation, 1 otherwise.
    Until then it runs the wrapped algorithm's step (and keeps any
    decision that step makes).
    """

    def __init__(self, inner, n: int):
        self.inner = inner
        self.n = n
        self.name = f"trim:{getattr(inner, 'name', inner.__class__.__name__)}"

    def params(self) -> dict[str, Any]:
        return {"inner": self.name.removeprefix("trim:"), "n": self.n}

    def validate(self, graph: Graph, inputs) -> None:
        if graph.n != self.n or any(len(graph.adj[v]) != self.n - 1 for v in graph.nodes):
            raise ValueError(f"{self.name} runs on clique({self.n}) only")
        if hasattr(self.inner, "validate"):
            self.inner.validate(graph, inputs)

    def default_input(self, node: int):
        return self.inner.default_input(node)

    def init(self, node: int, value):
        st = self.inner.init(node, value)
        if st[0] == TERMINATED:
            return ("T", st[1], (True, st[2]))
        return ("R", (False, st[1]))

    def next(self, payload, snaps):
        activated, inner_payload = payload
        if all(s is not None for s in snaps):
            return ("T", 1 if activated else 0, (True, inner_payload))
        unwrapped = [None if s is None else ("R", s[1][1]) for s in snaps]
        st = self.inner.next(inner_payload, unwrapped)
        if st[0] == TERMINATED:
            return ("T", st[1], (True, st[2]))
        return ("R", (True, st[1]))


def trim(algo, n: int) -> Trimmed:
    return Trimmed(algo, n)


# ---------------------------------------------------------------------------
# input functions and equivalence classes


@dataclass(frozen=True)
class InputFunction:
    """Per-process inputs built from process ids: ``entries[i-1]`` is a
    (ids, value) pair handed to process i."""

    entries: tuple[tuple[tuple[int, ...], Any], ...]

    @property
    def n(self) -> int:
        return len(self.entries)

    def for_process(self, i: int) -> tuple[tuple[int, ...], Any]:
        return self.entries[i - 1]

    def conjugated(self, perm: dict[int, int]) -> "InputFunction":
        """Rename both who receives each entry and the ids inside it."""
        renamed: list = [None] * self.n
        for i in range(1, self.n + 1):
            ids, value = self.entries[i - 1]
            renamed[perm[i] - 1] = (tuple(perm[x] for x in ids), value)
        return InputFunction(tuple(renamed))


def conjugate_permutation(sim: Iterable[int], n: int, target: Iterable[int]) -> dict[int, int]:
    """The unique renaming sending ``sim`` onto ``target`` order-preservingly
    and the complement onto the complement, also order-preservingly."""
    sim_sorted = sorted(sim)
    target_sorted = sorted(target)
    if len(sim_sorted) != len(target_sorted):
        raise ValueError("target must have the same size as SIM")
    rest = sorted(set(range(1, n + 1)) - set(sim_sorted))
    comp = sorted(set(range(1, n + 1)) - set(target_sorted))
    perm = dict(zip(sim_sorted, target_sorted))
    perm.update(zip(rest, comp))
    return perm


def equivalence_class(
    record: ExecutionRecord, sigma: InputFunction
) -> list[tuple[ExecutionRecord, InputFunction]]:
    """All (renamed execution, conjugated input) pairs obtained by moving
    the execution's SIM set onto each same-size subset of the processes.

    The class has exactly C(n, |SIM|) members, one per target subset.
    """
    _guard(record.n <= 6, f"equivalence classes over {record.n} processes explode")
    if sigma.n != record.n:
        raise ValueError("input function and execution disagree on n")
    sim = classify(record).sim
    members = []
    for target in itertools.combinations(range(1, record.n + 1), len(sim)):
        perm = conjugate_permutation(sim, record.n, target)
        members.append((record.renamed(perm), sigma.conjugated(perm)))
    return members


def cycle_input_family(n: int) -> frozenset[InputFunction]:
    """One input function per cyclic ordering of the n processes: process i
    receives its successor and predecessor on the cycle.

    There are (n-1)! cyclic orderings -- for prime n never a multiple of n,
    by Wilson's theorem -- and conjugating a cycle yields another cycle, so
    the family is closed.
    """
    if n < 3:
        raise ValueError("cyclic orderings need at least 3 processes")
    members = set()
    for rest in itertools.permutations(range(2, n + 1)):
        order = (1,) + rest
        succ = {order[i]: order[(i + 1) % n] for i in range(n)}
        pred = {v: u for u, v in succ.items()}
        members.add(InputFunction(tuple(((succ[i], pred[i]), None) for i in range(1, n + 1))))
    return frozenset(members)


@dataclass
class FamilyReport:
    size: int
    n: int
    prime: bool
    divisible_by_n: bool
    closed: bool
    ok: bool
    witness: Any = None


def check_input_family(family: Iterable[InputFunction], n: int) -> FamilyReport:
    """Size, divisibility by n, and closure under conjugation by all of S_n.

    Passes when the family is closed and, for prime n, its size is not a
    multiple of n (the counting argument needs both).
    """
    _guard(n <= 6, f"closure check runs all {n}! permutations")
    fam = frozenset(family)
    witness = None
    closed = True
    for images in itertools.permutations(range(1, n + 1)):
        perm = {i: images[i - 1] for i in range(1, n + 1)}
        for f in fam:
            if f.conjugated(perm) not in fam:
                closed = False
                witness = (perm, f)
                break
        if not closed:
            break
    prime = bool(sympy.isprime(n))
    divisible = len(fam) % n == 0
    ok = closed and not (prime and divisible)
    return FamilyReport(
        size=len(fam),
        n=n,
        prime=prime,
        divisible_by_n=divisible,
        closed=closed,
        ok=ok,
        witness=witness,
    )


def binom_divisibility(n: int) -> Verdict:
    """C(n, m) is divisible by n for all 0 < m < n; demands prime n."""
    if not sympy.isprime(n):
        raise ValueError(f"binomial divisibility holds for prime n only, got {n}")
    bad = [m for m in range(1, n) if math.comb(n, m) % n != 0]
    if bad:
        return Verdict(
            False, "binom", f"C({n},m) not divisible by {n} at m={bad}", witness=bad
        )
    return Verdict(True, "binom", f"C({n},m) divisible by {n} for all 0 < m < {n}")


# ---------------------------------------------------------------------------
# toy algorithms for exhaustive checks


class ConstantOutput(Algorithm):
    """Decides a fixed value at its first activation."""

    def __init__(self, value: int):
        self.value = value
        self.name = f"const{value}"

    def params(self) -> dict[str, Any]:
        return {"value": self.value}

    def init(self, node: int, value):
        return ("R", ())

    def next(self, payload, snaps):
        return ("T", self.value, payload)


class IdParity(Algorithm):
    """Decides its own id modulo 2 at its first activation."""

    name = "id-parity"

    def init(self, node: int, value):
        return ("R", (node,))

    def next(self, payload, snaps):
        return ("T", payload[0] % 2, payload)


class OutputAfterSeeing(Algorithm):
    """Decides at its first activation: ``value`` if at least ``k`` other
    registers are already visible, the complementary bit otherwise."""

    def __init__(self, k: int, value: int = 1):
        if value not in (0, 1):
            raise ValueError("output value must be a bit")
        self.k = k
        self.value = value
        self.name = f"seen{k}"

    def params(self) -> dict[str, Any]:
        return {"k": self.k, "value": self.value}

    def init(self, node: int, value):
        return ("R", ())

    def next(self, payload, snaps):
        visible = sum(1 for s in snaps if s is not None)
        return ("T", self.value if visible >= self.k else 1 - self.value, payload)


def toy_algorithms(n: int) -> dict[str, Algorithm]:
    """The registry of toys exercised by the exhaustive checks at size n."""
    toys: dict[str, Algorithm] = {
        "const0": ConstantOutput(0),
        "const1": ConstantOutput(1),
        "id-parity": IdParity(),
        "seen1": OutputAfterSeeing(1),
    }
    if n >= 3:
        toys["seen2"] = OutputAfterSeeing(2)
    return toys
