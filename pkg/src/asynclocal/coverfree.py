"""Cover-free set families from polynomials over finite fields.

A family of sets is *k-cover-free* if no member is contained in the union
of any k others.  Evaluating polynomials of degree at most d over GF(q)
yields such a family whenever k*d < q: two distinct polynomials agree on
at most d of the q evaluation points, so the q-point graph of one
polynomial cannot be swallowed by k others (they contribute at most k*d
of its points).

Ground-set elements are the integers 1..q^2, encoding evaluation point x
and value y as x*q + y + 1.  Colors index polynomials in lexicographic
coefficient order with the highest-degree coefficient most significant,
so the first q^e polynomials are exactly those of degree below e; two
families over the same field agree on their common color prefix even if
their degree bounds differ.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cache
from typing import Iterator, Sequence

import sympy

__all__ = [
    "Field",
    "field",
    "CoverFreeFamily",
    "ReductionSchedule",
    "construct_family",
    "verify_coverfree",
    "cover_violation",
    "reduction_schedule",
    "dump_family",
    "load_family",
]

# Monic irreducible polynomials over the prime subfield, as coefficient
# tuples (constant term first), one per supported prime-power order.
# Larger non-prime orders are skipped in favor of the next prime.
_IRREDUCIBLE = {
    4: (1, 1, 1),  # x^2 + x + 1 over GF(2)
    8: (1, 1, 0, 1),  # x^3 + x + 1 over GF(2)
    9: (1, 0, 1),  # x^2 + 1 over GF(3)
    16: (1, 1, 0, 0, 1),  # x^4 + x + 1 over GF(2)
    25: (2, 0, 1),  # x^2 + 2 over GF(5)
    27: (1, 2, 0, 1),  # x^3 + 2x + 1 over GF(3)
    32: (1, 0, 1, 0, 0, 1),  # x^5 + x^2 + 1 over GF(2)
}


class Field:
    """Arithmetic in GF(q), with elements encoded as 0..q-1.

    Prime orders use modular arithmetic directly.  The tabulated prime
    powers represent an element by the base-p digits of its code (the
    coefficients of a polynomial in the generator) and precompute full
    addition and multiplication tables, which is plenty fast for q <= 32.
    """

    __slots__ = ("q", "p", "_add", "_mul")

    def __init__(self, q: int):
        if q < 2:
            raise ValueError(f"field order must be at least 2, got {q}")
        if sympy.isprime(q):
            self.q = q
            self.p = q
            self._add = None
            self._mul = None
        elif q in _IRREDUCIBLE:
            self.q = q
            self.p = min(sympy.primefactors(q))
            self._build_tables(_IRREDUCIBLE[q])
        else:
            raise ValueError(f"unsupported field order {q}")

    def _build_tables(self, irreducible: tuple[int, ...]) -> None:
        p, q = self.p, self.q
        e = len(irreducible) - 1

        def digits(i: int) -> list[int]:
            out = []
            for _ in range(e):
                i, r = divmod(i, p)
                out.append(r)
            return out

        def code(ds) -> int:
            out = 0
            for d in reversed(ds):
                out = out * p + d
            return out

        elems = [digits(i) for i in range(q)]
        self._add = [
            [code([(x + y) % p for x, y in zip(a, b)]) for b in elems] for a in elems
        ]
        mul = []
        for a in elems:
            row = []
            for b in elems:
                prod = [0] * (2 * e - 1)
                for i, x in enumerate(a):
                    if x:
                        for j, y in enumerate(b):
                            prod[i + j] = (prod[i + j] + x * y) % p
                for deg in range(len(prod) - 1, e - 1, -1):
                    lead = prod[deg]
                    if lead:
                        prod[deg] = 0
                        for i in range(e):
                            prod[deg - e + i] = (prod[deg - e + i] - lead * irreducible[i]) % p
                row.append(code(prod[:e]))
            mul.append(row)
        self._mul = mul

    def add(self, a: int, b: int) -> int:
        if self._add is None:
            return (a + b) % self.q
        return self._add[a][b]

    def mul(self, a: int, b: int) -> int:
        if self._mul is None:
            return (a * b) % self.q
        return self._mul[a][b]

    def eval_poly(self, coeffs: Sequence[int], x: int) -> int:
        """Evaluate the polynomial with coefficients (c_0, ..., c_d) at x."""
        acc = 0
        for c in reversed(coeffs):
            acc = self.add(self.mul(acc, x), c)
        return acc

    def __repr__(self) -> str:
        return f"Field({self.q})"


@cache
def field(q: int) -> Field:
    """Shared Field instance for order q (tables are built once)."""
    return Field(q)


def _field_sizes() -> Iterator[int]:
    """Usable field orders in ascending order: 2,3,4,5,7,8,9,...,32, then primes."""
    small = sorted({n for n in range(2, 33) if sympy.isprime(n)} | set(_IRREDUCIBLE))
    yield from small
    q = small[-1]
    while True:
        q = int(sympy.nextprime(q))
        yield q


class CoverFreeFamily:
    """k-cover-free family of m sets over the ground set 1..q^2.

    Color c (1-based) names the polynomial with index c-1; its set is the
    polynomial's graph {x*q + p(x) + 1 : x in GF(q)}, of size exactly q.
    Sets are materialized lazily and cached per color, so families with
    millions of colors stay cheap when only a few colors are touched.
    """

    __slots__ = ("k", "m", "q", "d", "_field", "_sets")

    def __init__(self, k: int, m: int, q: int, d: int):
        if k * d >= q:
            raise ValueError(f"need k*d < q for cover-freeness, got k={k} d={d} q={q}")
        if q ** (d + 1) < m:
            raise ValueError(f"only {q ** (d + 1)} degree-{d} polynomials over GF({q}), need {m}")
        self.k = k
        self.m = m
        self.q = q
        self.d = d
        self._field = field(q)
        self._sets: dict[int, frozenset[int]] = {}

    @property
    def ground_size(self) -> int:
        return self.q * self.q

    def coefficients(self, color: int) -> tuple[int, ...]:
        """Coefficient tuple (c_0, ..., c_d) of the polynomial behind ``color``."""
        if not 1 <= color <= self.m:
            raise ValueError(f"color {color} outside 1..{self.m}")
        j = color - 1
        out = []
        for _ in range(self.d + 1):
            j, c = divmod(j, self.q)
            out.append(c)
        return tuple(out)

    def set_for(self, color: int) -> frozenset[int]:
        """Ground-set elements assigned to ``color``."""
        s = self._sets.get(color)
        if s is None:
            f = self._field
            coeffs = self.coefficients(color)
            s = frozenset(x * self.q + f.eval_poly(coeffs, x) + 1 for x in range(self.q))
            self._sets[color] = s
        return s

    @property
    def sets(self) -> list[frozenset[int]]:
        """All sets in color order (index i holds color i+1).  Materializes all m."""
        return [self.set_for(c) for c in range(1, self.m + 1)]

    def __repr__(self) -> str:
        return f"CoverFreeFamily(k={self.k}, m={self.m}, q={self.q}, d={self.d})"


def construct_family(k: int, m: int) -> CoverFreeFamily:
    """Build a k-cover-free family with at least ``m`` sets, minimizing the ground set.

    Scans field orders upward and takes the first q admitting a degree
    bound d with k*d < q and q^(d+1) >= m polynomials; d is the largest
    degree valid for that q (thanks to the prefix property the chosen
    sets do not depend on this tie-break).  Ground size is q^2.
    """
    if k < 1:
        raise ValueError(f"cover-freeness parameter must be positive, got {k}")
    if m < 1:
        raise ValueError(f"family size must be positive, got {m}")
    for q in _field_sizes():
        d = (q - 1) // k
        if d >= 1 and q ** (d + 1) >= m:
            return CoverFreeFamily(k, m, q, d)
    raise AssertionError("unreachable: field orders are unbounded")


def cover_violation(sets: Sequence[frozenset[int]], k: int):
    """Find a witness that ``sets`` is not k-cover-free, or None.

    A witness is a pair ``(i, others)``: the set at index ``i`` is
    contained in the union of the k sets at indices ``others``.  Duplicate
    sets collapse to their first occurrence (a family is a collection of
    distinct sets).  Exact for any input: an intersection-size bound
    prunes most candidates, and only inconclusive cases fall back to
    explicit unions.
    """
    if k < 1:
        raise ValueError(f"cover-freeness parameter must be positive, got {k}")
    universe = sorted(set().union(*sets)) if sets else []
    pos = {e: i for i, e in enumerate(universe)}
    seen: dict[int, int] = {}
    masks: list[tuple[int, int]] = []  # (mask, original index), duplicates dropped
    for idx, s in enumerate(sets):
        mask = 0
        for e in s:
            mask |= 1 << pos[e]
        if mask not in seen:
            seen[mask] = idx
            masks.append((mask, idx))
    if len(masks) - 1 < k:
        return None  # no way to choose k+1 distinct sets

    all_indices = [idx for _, idx in masks]
    for m0, i0 in masks:
        need = m0.bit_count()
        inters = []
        for mj, j in masks:
            if j == i0:
                continue
            c = (m0 & mj).bit_count()
            if c:
                inters.append((c, j, mj))
        inters.sort(key=lambda t: -t[0])
        if sum(c for c, _, _ in inters[:k]) < need:
            continue  # k others cannot contribute enough points
        union_all = 0
        for _, _, mj in inters:
            union_all |= mj
        if m0 & ~union_all:
            continue  # even all others together miss a point
        if len(inters) <= k:
            chosen = [j for _, j, _ in inters]
            pad = [j for j in all_indices if j != i0 and j not in chosen]
            return (i0, tuple(chosen + pad[: k - len(chosen)]))
        for combo in itertools.combinations(inters, k):
            u = 0
            for _, _, mj in combo:
                u |= mj
            if not (m0 & ~u):
                return (i0, tuple(j for _, j, _ in combo))
    return None


def verify_coverfree(fam, k: int | None = None) -> bool:
    """True iff the family is k-cover-free (no set inside the union of k others).

    Accepts a constructed or loaded family (k taken from it unless
    overridden) or any sequence of sets together with an explicit k.
    """
    if hasattr(fam, "sets"):
        sets = list(fam.sets)
        if k is None:
            k = fam.k
    else:
        sets = [frozenset(s) for s in fam]
        if k is None:
            raise ValueError("k is required when verifying a plain sequence of sets")
    return cover_violation(sets, k) is None


@dataclass(frozen=True)
class ReductionSchedule:
    """Chain of cover-free families driving a palette down to a fixed point.

    ``palette_sizes`` is (c_0, ..., c_T) with c_0 the initial number of
    colors; family i (0-based) maps colors 1..c_i into a ground set of
    size c_{i+1}.  The chain stops when the next family would not shrink
    the palette, so the last size is the final palette.
    """

    palette_sizes: tuple[int, ...]
    families: tuple[CoverFreeFamily, ...]

    @property
    def rounds(self) -> int:
        return len(self.families)

    #: conventional name for the round count in c_0 > ... > c_T
    T = rounds

    @property
    def final_palette(self) -> int:
        return self.palette_sizes[-1]


def reduction_schedule(id_bound: int, max_degree: int) -> ReductionSchedule:
    """Color-reduction rounds for initial palette 1..id_bound and degree bound max_degree.

    Iterates c_{i+1} = ground size of construct_family(max_degree, c_i)
    while that strictly shrinks the palette.
    """
    if id_bound < 2:
        raise ValueError(f"identifier bound must be at least 2, got {id_bound}")
    if max_degree < 1:
        raise ValueError(f"degree bound must be positive, got {max_degree}")
    sizes = [id_bound]
    fams = []
    while True:
        fam = construct_family(max_degree, sizes[-1])
        if fam.ground_size >= sizes[-1]:
            break
        fams.append(fam)
        sizes.append(fam.ground_size)
    return ReductionSchedule(tuple(sizes), tuple(fams))


def dump_family(fam: CoverFreeFamily, path) -> None:
    """Write a family as a header line "k m d q ground" plus one line per color."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{fam.k} {fam.m} {fam.d} {fam.q} {fam.ground_size}\n")
        for color in range(1, fam.m + 1):
            fh.write(" ".join(str(e) for e in sorted(fam.set_for(color))) + "\n")


@dataclass(frozen=True)
class LoadedFamily:
    k: int
    m: int
    d: int
    q: int
    ground_size: int
    sets: tuple[frozenset[int], ...]


def load_family(path) -> LoadedFamily:
    """Read a family written by :func:`dump_family`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise ValueError("malformed family header")
        k, m, d, q, ground = (int(x) for x in header)
        sets = []
        for _ in range(m):
            line = fh.readline()
            if not line:
                raise ValueError("family file ended before all sets were read")
            sets.append(frozenset(int(x) for x in line.split()))
    return LoadedFamily(k, m, d, q, ground, tuple(sets))
