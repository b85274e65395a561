"""Node programs consumed by the execution engine.

Each algorithm is an ``(init, next)`` pair over JSON-friendly payload
tuples, plus metadata (name, parameters, snapshot arity, validation).
``next`` receives the node's current payload and the list of neighbor
register states in ascending-identifier order -- entries are ``None``
(never written), ``("R", payload)``, or ``("T", output, payload)`` -- and
returns the node's new state.

The module-level transition functions are pure and callable directly on
hand-built snapshots; the Algorithm classes wire them to the engine.
"""

from __future__ import annotations

from typing import Any, Iterable

from .coverfree import ReductionSchedule, reduction_schedule
from .engine import AlgorithmViolation, TERMINATED

__all__ = [
    "mex",
    "cycle_six_next",
    "save_colors_next",
    "linial_next",
    "map_pair",
    "smaller_larger",
    "special_neighborhood",
    "special_termination",
    "save_one_more_next",
    "buggy_five_next",
    "Algorithm",
    "SixColoring",
    "SaveColors",
    "SaveOneMoreColor",
    "BuggyFive",
    "LinialReduction",
    "Identity",
    "Composed",
    "compose_phases",
    "make_algorithm",
    "ALGORITHM_NAMES",
]


def mex(values: Iterable[int]) -> int:
    """Least natural number not in ``values``."""
    present = set(values)
    out = 0
    while out in present:
        out += 1
    return out


def _view(state):
    """Payload behind a register state, or None for an unwritten register."""
    if state is None:
        return None
    return state[1] if state[0] == "R" else state[2]


# ---------------------------------------------------------------------------
# pair-based coloring (cycles / general graphs with a proper input coloring)
#
# Payload (x, a, b): x orders the node against its neighbors, a counts up
# through mex over larger-x neighbors' a values, b symmetrically over
# smaller-x ones.  A node decides (a, b) the moment no visible neighbor
# shows the same pair.


def _pair_step(payload, snaps):
    x, a, b = payload
    vis = [p for p in map(_view, snaps) if p is not None]
    for p in vis:
        if p[1] == a and p[2] == b:
            break
    else:
        return ("T", (a, b), payload)
    a2 = mex(p[1] for p in vis if p[0] > x)
    b2 = mex(p[2] for p in vis if p[0] < x)
    return ("R", (x, a2, b2))


def cycle_six_next(payload, snaps):
    """Transition of the 6-coloring rule for cycles (x is the identifier)."""
    return _pair_step(payload, snaps)


def save_colors_next(payload, snaps):
    """Transition of the pair coloring driven by an arbitrary proper x-coloring."""
    return _pair_step(payload, snaps)


# ---------------------------------------------------------------------------
# iterated color reduction via cover-free families
#
# Payload: tuple S of length T+1; S[0] is the input color, S[r] the color
# chosen in round r, None where not yet reached.  A node in round r picks
# the least element of its own round-r set not covered by the sets of the
# neighbors' published round-(r-1) colors.


def linial_next(payload, snaps, schedule: ReductionSchedule):
    S = payload
    r = S.index(None)
    fam = schedule.families[r - 1]
    cand = set(fam.set_for(S[r - 1]))
    for p in map(_view, snaps):
        if p is not None and p[r - 1] is not None:
            cand -= fam.set_for(p[r - 1])
    if not cand:
        raise AlgorithmViolation(
            f"round {r}: all of color {S[r - 1]}'s set excluded by neighbors"
        )
    S2 = S[:r] + (min(cand),) + S[r + 1 :]
    if r == len(S) - 1:
        return ("T", S2[r], S2)
    return ("R", S2)


# ---------------------------------------------------------------------------
# saving one more color
#
# Payload (a, b, x, f, alpha, beta, z): the pair rule of save_colors_next
# augmented with a set f of identifiers across which the x-comparison is
# flipped, monotone flags alpha/beta (has had a smaller/larger neighbor),
# and the node's own identifier z.  Snapshots are padded with None to
# exactly Delta entries, so Delta is always len(snaps).


def map_pair(a: int, b: int, delta: int) -> tuple[int, int]:
    """Identity on pairs except (delta, 0) -> (0, delta)."""
    if a == delta and b == 0:
        return (0, delta)
    return (a, b)


def _split_by_order(x, f, z, views):
    """Indices (1-based snapshot positions) of smaller and larger neighbors."""
    smaller = []
    larger = []
    for i, p in enumerate(views, start=1):
        if p is None:
            continue
        flipped = p[6] in f or z in p[3]
        if flipped:
            if x < p[2]:
                smaller.append(i)
            elif x > p[2]:
                larger.append(i)
        else:
            if x > p[2]:
                smaller.append(i)
            elif x < p[2]:
                larger.append(i)
    return smaller, larger


def smaller_larger(payload, snaps):
    """1-based snapshot indices considered smaller resp. larger than the node.

    A neighbor counts as smaller when the x-comparison says so, with the
    direction inverted across flipped edges (either endpoint's identifier
    recorded in the other's f).  Unwritten snapshots land in neither set.
    """
    views = [_view(t) for t in snaps]
    smaller, larger = _split_by_order(payload[2], payload[3], payload[6], views)
    return frozenset(smaller), frozenset(larger)


def _special_neighborhood_views(s, views) -> bool:
    delta = len(views)
    if any(p is None for p in views):
        return False
    if not (s[4] and s[5]):
        return False
    if not (0 <= s[0] < delta and 0 <= s[1] < delta):
        return False
    for p in views:
        if not (0 <= p[0] < delta and 0 <= p[1] < delta):
            return False
    for p in views:
        sm, lg = _split_by_order(p[2], p[3], p[6], [s])
        if not (p[4] or len(sm) == 1):
            return False
        if not (p[5] or len(lg) == 1):
            return False
    return True


def special_neighborhood(payload, snaps) -> bool:
    """All neighbors seen, every a/b below Delta, and nobody is a local extremum.

    The last part reads: the node has both flags up, and each neighbor
    either has the corresponding flag up already or would raise it upon
    seeing this node (the neighbor may simply not have run yet).
    """
    return _special_neighborhood_views(payload, [_view(t) for t in snaps])


def special_termination(payload, snaps) -> bool:
    """Special neighborhood and the node is the pre-flip local maximum."""
    views = [_view(t) for t in snaps]
    if not _special_neighborhood_views(payload, views):
        return False
    return all(payload[2] > p[2] for p in views)


def save_one_more_next(payload, snaps):
    """One activation of the save-one-more-color rule (Delta = len(snaps)).

    In order: decide the mapped pair if no visible neighbor maps to it;
    record flipped edges when an endpoint shows a = Delta or b = Delta;
    recompute a and b by mex over the flip-adjusted larger resp. smaller
    neighbors; raise the monotone flags; finally decide (0, Delta) if the
    updated state satisfies special termination.
    """
    delta = len(snaps)
    a, b, x, f, alpha, beta, z = payload
    views = [_view(t) for t in snaps]
    vis = [p for p in views if p is not None]
    mapped = map_pair(a, b, delta)
    for p in vis:
        if map_pair(p[0], p[1], delta) == mapped:
            break
    else:
        return ("T", mapped, payload)
    if a == delta or b == delta:
        extra = {p[6] for p in vis if p[0] == delta or p[1] == delta}
        if not extra <= set(f):
            f = tuple(sorted(set(f) | extra))
    smaller, larger = _split_by_order(x, f, z, views)
    a2 = mex(views[i - 1][0] for i in larger)
    b2 = mex(views[i - 1][1] for i in smaller)
    s2 = (a2, b2, x, f, alpha or bool(smaller), beta or bool(larger), z)
    if special_termination(s2, snaps):
        return ("T", (0, delta), s2)
    return ("R", s2)


# ---------------------------------------------------------------------------
# the erroneous 5-coloring rule (kept faithful: it can livelock)


def buggy_five_next(payload, snaps):
    """Transition of the flawed 5-coloring rule for cycles.

    C collects the a and b values of all visible neighbors, C+ those of
    larger-identifier ones; the node decides a (then b) as soon as it is
    outside C, else moves to (mex C+, mex C).
    """
    x, a, b = payload
    vis = [p for p in map(_view, snaps) if p is not None]
    c_all = {v for p in vis for v in (p[1], p[2])}
    if a not in c_all:
        return ("T", a, payload)
    if b not in c_all:
        return ("T", b, payload)
    c_larger = {v for p in vis if p[0] > x for v in (p[1], p[2])}
    return ("R", (x, mex(c_larger), mex(c_all)))


# ---------------------------------------------------------------------------
# algorithm objects


class Algorithm:
    """Interface the engine drives: metadata plus init/next."""

    name = "abstract"
    #: pad snapshots with None up to this length before each next() call
    arity: int | None = None

    def params(self) -> dict[str, Any]:
        return {}

    def default_input(self, node: int):
        return node

    def validate(self, graph, inputs: dict[int, Any]) -> None:
        """Reject instances outside the algorithm's preconditions."""

    def init(self, node: int, value):
        raise NotImplementedError

    def next(self, payload, snaps):
        raise NotImplementedError

    def __repr__(self) -> str:
        ps = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({ps})"


def _check_proper_inputs(graph, inputs, what="input colors"):
    for u, v in graph.edges:
        if inputs[u] == inputs[v]:
            raise ValueError(f"{what} must differ across edges: nodes {u},{v} share {inputs[u]!r}")


class SixColoring(Algorithm):
    """6-coloring of cycles: the pair rule keyed directly by identifiers."""

    name = "six"

    def init(self, node, value):
        return ("R", (node, 0, 0))

    def next(self, payload, snaps):
        return cycle_six_next(payload, snaps)

    def validate(self, graph, inputs):
        if graph.max_degree > 2:
            raise ValueError(f"six requires degree <= 2, graph has {graph.max_degree}")


class BuggyFive(Algorithm):
    """The flawed 5-coloring rule for cycles; livelocks under some schedules."""

    name = "buggy5"

    def init(self, node, value):
        return ("R", (node, 0, 0))

    def next(self, payload, snaps):
        return buggy_five_next(payload, snaps)

    def validate(self, graph, inputs):
        if graph.max_degree > 2:
            raise ValueError(f"buggy5 requires degree <= 2, graph has {graph.max_degree}")


class SaveColors(Algorithm):
    """(delta+1)(delta+2)/2-coloring from any proper input coloring."""

    name = "save"

    def __init__(self, delta: int):
        if delta < 1:
            raise ValueError(f"delta must be positive, got {delta}")
        self.delta = delta

    def params(self):
        return {"delta": self.delta}

    @property
    def palette_size(self) -> int:
        return (self.delta + 1) * (self.delta + 2) // 2

    def init(self, node, value):
        return ("R", (value, 0, 0))

    def next(self, payload, snaps):
        return save_colors_next(payload, snaps)

    def validate(self, graph, inputs):
        if graph.max_degree > self.delta:
            raise ValueError(f"delta={self.delta} below graph degree {graph.max_degree}")
        if inputs is not None:
            _check_proper_inputs(graph, inputs)


class SaveOneMoreColor(Algorithm):
    """Like SaveColors but with one pair spared: (delta,0) is never output."""

    name = "save1"

    def __init__(self, delta: int):
        if delta < 1:
            raise ValueError(f"delta must be positive, got {delta}")
        self.delta = delta
        self.arity = delta

    def params(self):
        return {"delta": self.delta}

    @property
    def palette_size(self) -> int:
        return (self.delta + 1) * (self.delta + 2) // 2 - 1

    def init(self, node, value):
        return ("R", (0, 0, value, (), False, False, node))

    def next(self, payload, snaps):
        return save_one_more_next(payload, snaps)

    def validate(self, graph, inputs):
        if graph.max_degree > self.delta:
            raise ValueError(f"delta={self.delta} below graph degree {graph.max_degree}")
        if inputs is not None:
            _check_proper_inputs(graph, inputs)


class LinialReduction(Algorithm):
    """Iterated cover-free color reduction from identifiers in 1..id_bound."""

    name = "linial"

    def __init__(self, id_bound: int, delta: int):
        self.id_bound = id_bound
        self.delta = delta
        self.schedule = reduction_schedule(id_bound, delta)

    def params(self):
        return {"id_bound": self.id_bound, "delta": self.delta}

    @property
    def palette_size(self) -> int:
        return self.schedule.final_palette

    @property
    def rounds(self) -> int:
        return self.schedule.rounds

    def init(self, node, value):
        if not 1 <= value <= self.id_bound:
            raise ValueError(f"input color {value} outside 1..{self.id_bound}")
        if self.schedule.rounds == 0:
            return ("T", value, (value,))
        return ("R", (value,) + (None,) * self.schedule.rounds)

    def next(self, payload, snaps):
        return linial_next(payload, snaps, self.schedule)

    def validate(self, graph, inputs):
        if graph.max_degree > self.delta:
            raise ValueError(f"delta={self.delta} below graph degree {graph.max_degree}")
        if inputs is not None:
            _check_proper_inputs(graph, inputs)


class Identity(Algorithm):
    """Decides its input at initialization; a neutral phase for composition."""

    name = "identity"

    def init(self, node, value):
        return ("T", value, (value,))

    def next(self, payload, snaps):  # pragma: no cover - init always terminates
        raise AlgorithmViolation("identity has no running states")


class Composed(Algorithm):
    """Sequential phase composition over a single register per node.

    Every published payload carries its phase tag.  A reader still in
    phase 1 sees a phase-2 neighbor through that neighbor's recorded final
    phase-1 state; a phase-2 reader sees phase-1 neighbors as None, as if
    they had not written yet.  Phase 2 starts with input = phase 1's
    decision, on the activation after the deciding one.
    """

    def __init__(self, phase1: Algorithm, phase2: Algorithm, name: str | None = None):
        self.phase1 = phase1
        self.phase2 = phase2
        self.name = name or f"{phase1.name}+{phase2.name}"
        self.arity = phase2.arity

    def params(self):
        merged = {f"phase1_{k}": v for k, v in self.phase1.params().items()}
        merged.update({f"phase2_{k}": v for k, v in self.phase2.params().items()})
        return merged

    def default_input(self, node):
        return self.phase1.default_input(node)

    def validate(self, graph, inputs):
        self.phase1.validate(graph, inputs)
        self.phase2.validate(graph, None)

    def init(self, node, value):
        st = self.phase1.init(node, value)
        if st[0] == TERMINATED:
            return self._enter_phase2(node, st)
        return ("R", (1, node, st[1]))

    def _enter_phase2(self, node, p1_final):
        st = self.phase2.init(node, p1_final[1])
        if st[0] == TERMINATED:
            return ("T", st[1], (2, node, st[2], p1_final))
        return ("R", (2, node, st[1], p1_final))

    @staticmethod
    def _phase1_snap(state):
        p = _view(state)
        if p is None:
            return None
        if p[0] == 1:
            return ("R", p[2])
        return p[3]  # the neighbor's final phase-1 state, a Terminated triple

    @staticmethod
    def _phase2_snap(state):
        p = _view(state)
        if p is None or p[0] == 1:
            return None
        return ("R", p[2])

    def next(self, payload, snaps):
        if payload[0] == 1:
            node = payload[1]
            st = self.phase1.next(payload[2], [self._phase1_snap(t) for t in snaps])
            if st[0] == TERMINATED:
                return self._enter_phase2(node, st)
            return ("R", (1, node, st[1]))
        node, p1fin = payload[1], payload[3]
        st = self.phase2.next(payload[2], [self._phase2_snap(t) for t in snaps])
        if st[0] == TERMINATED:
            return ("T", st[1], (2, node, st[2], p1fin))
        return ("R", (2, node, st[1], p1fin))


def compose_phases(phase1: Algorithm, phase2: Algorithm) -> Composed:
    """Run ``phase1`` to its decision, then ``phase2`` on that output."""
    return Composed(phase1, phase2)


ALGORITHM_NAMES = ("six", "linial", "save", "save1", "buggy5", "linial+save", "linial+save1")


def make_algorithm(name: str, id_bound: int | None = None, delta: int | None = None) -> Algorithm:
    """Registry constructor for the named algorithms.

    ``linial`` and the composed variants need ``id_bound``; everything but
    ``six``/``buggy5`` needs ``delta``.
    """
    if name == "six":
        return SixColoring()
    if name == "buggy5":
        return BuggyFive()
    if name in ("save", "save1", "linial", "linial+save", "linial+save1"):
        if delta is None:
            raise ValueError(f"algorithm {name} needs delta")
        if name == "save":
            return SaveColors(delta)
        if name == "save1":
            return SaveOneMoreColor(delta)
        if id_bound is None:
            raise ValueError(f"algorithm {name} needs id_bound")
        linial = LinialReduction(id_bound, delta)
        if name == "linial":
            return linial
        if name == "linial+save":
            return Composed(linial, SaveColors(delta))
        return Composed(linial, SaveOneMoreColor(delta))
    raise ValueError(f"unknown algorithm {name!r} (expected one of {', '.join(ALGORITHM_NAMES)})")
