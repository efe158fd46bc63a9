"""Monotone submodular valuation oracles and knapsack-constrained maximization.

Four oracle families are built in: linear, coverage, budgeted-additive and
partition-matroid rank.  All of them satisfy f(empty) = 0, monotonicity and
diminishing returns, which the test suite spot-checks with randomized triples.
Values are exact rationals so that downstream threshold comparisons never
depend on floating point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

Rational = Fraction  # all oracle values are exact


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


@dataclass(frozen=True)
class ValuationOracle:
    """A monotone submodular set function over ground set {0, ..., n-1}.

    kind is one of {"linear", "coverage", "budgeted-additive", "matroid-rank"}.
    Only the parameters relevant to the kind are set; the rest stay None.
    """

    kind: str
    n: int
    values: Optional[tuple[Fraction, ...]] = None       # linear, budgeted-additive
    covers: Optional[tuple[int, ...]] = None            # coverage: universe bitmask per element
    cap: Optional[Fraction] = None                      # budgeted-additive
    parts: Optional[tuple[int, ...]] = None             # matroid-rank: part id per element
    part_caps: Optional[tuple[int, ...]] = None         # matroid-rank: cap per part

    # -- constructors ------------------------------------------------------

    @staticmethod
    def linear(values: Sequence) -> "ValuationOracle":
        vals = tuple(_as_fraction(v) for v in values)
        if any(v < 0 for v in vals):
            raise ValueError("linear oracle needs nonnegative values")
        return ValuationOracle(kind="linear", n=len(vals), values=vals)

    @staticmethod
    def coverage(sets: Sequence[Iterable[int]]) -> "ValuationOracle":
        masks = []
        for s in sets:
            m = 0
            for u in s:
                if u < 0:
                    raise ValueError("coverage universe ids must be nonnegative")
                m |= 1 << u
            masks.append(m)
        return ValuationOracle(kind="coverage", n=len(masks), covers=tuple(masks))

    @staticmethod
    def budgeted_additive(values: Sequence, cap) -> "ValuationOracle":
        vals = tuple(_as_fraction(v) for v in values)
        capf = _as_fraction(cap)
        if any(v < 0 for v in vals) or capf < 0:
            raise ValueError("budgeted-additive oracle needs nonnegative values and cap")
        return ValuationOracle(kind="budgeted-additive", n=len(vals), values=vals, cap=capf)

    @staticmethod
    def matroid_rank(parts: Sequence[int], part_caps: Sequence[int]) -> "ValuationOracle":
        ps = tuple(int(p) for p in parts)
        caps = tuple(int(c) for c in part_caps)
        if any(p < 0 or p >= len(caps) for p in ps):
            raise ValueError("part id out of range")
        if any(c < 0 for c in caps):
            raise ValueError("part caps must be nonnegative")
        return ValuationOracle(kind="matroid-rank", n=len(ps), parts=ps, part_caps=caps)

    # -- evaluation --------------------------------------------------------

    def _check_ids(self, S: Iterable[int]) -> tuple[int, ...]:
        ids = tuple(S)
        for j in ids:
            if not (0 <= j < self.n):
                raise ValueError(f"unknown element id {j}")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate element in set")
        return ids

    def eval(self, S: Iterable[int]) -> Fraction:
        """f(S) for S a subset of the ground set; f(empty) = 0."""
        ids = self._check_ids(S)
        ev = self.evaluator()
        for j in ids:
            ev.add(j)
        return ev.value

    def marginal(self, j: int, S: Iterable[int]) -> Fraction:
        """f(S + j) - f(S).  Requires j not already in S."""
        ids = self._check_ids(S)
        if j in ids:
            raise ValueError(f"element {j} already in set")
        if not (0 <= j < self.n):
            raise ValueError(f"unknown element id {j}")
        ev = self.evaluator()
        for i in ids:
            ev.add(i)
        return ev.gain(j)

    def evaluator(self) -> "_Evaluator":
        """Incremental evaluator: O(1)-ish marginal gains while growing a set."""
        return _Evaluator(self)

    def singleton_values(self) -> tuple[Fraction, ...]:
        return tuple(self.eval((j,)) for j in range(self.n))

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        def frac(v: Fraction):
            return [v.numerator, v.denominator]

        if self.kind == "linear":
            return {"kind": "linear", "values": [frac(v) for v in self.values]}
        if self.kind == "coverage":
            sets = []
            for m in self.covers:
                s, u = [], 0
                while m:
                    if m & 1:
                        s.append(u)
                    m >>= 1
                    u += 1
                sets.append(s)
            return {"kind": "coverage", "sets": sets}
        if self.kind == "budgeted-additive":
            return {"kind": "budgeted-additive",
                    "values": [frac(v) for v in self.values],
                    "cap": frac(self.cap)}
        if self.kind == "matroid-rank":
            return {"kind": "matroid-rank", "parts": list(self.parts),
                    "caps": list(self.part_caps)}
        raise ValueError(f"unknown oracle kind {self.kind}")

    @staticmethod
    def from_json(obj: dict) -> "ValuationOracle":
        def frac(v):
            if isinstance(v, list):
                return Fraction(v[0], v[1])
            return Fraction(v)

        kind = obj["kind"]
        if kind == "linear":
            return ValuationOracle.linear([frac(v) for v in obj["values"]])
        if kind == "coverage":
            return ValuationOracle.coverage(obj["sets"])
        if kind == "budgeted-additive":
            return ValuationOracle.budgeted_additive(
                [frac(v) for v in obj["values"]], frac(obj["cap"]))
        if kind == "matroid-rank":
            return ValuationOracle.matroid_rank(obj["parts"], obj["caps"])
        raise ValueError(f"unknown oracle kind {kind}")


class _Evaluator:
    """Mutable running state for one growing set; gain() answers marginals."""

    __slots__ = ("oracle", "_sum", "_mask", "_counts")

    def __init__(self, oracle: ValuationOracle):
        self.oracle = oracle
        self._sum = Fraction(0)
        self._mask = 0
        self._counts = [0] * len(oracle.part_caps) if oracle.kind == "matroid-rank" else None

    @property
    def value(self) -> Fraction:
        o = self.oracle
        if o.kind == "linear":
            return self._sum
        if o.kind == "coverage":
            return Fraction(self._mask.bit_count())
        if o.kind == "budgeted-additive":
            return min(o.cap, self._sum)
        if o.kind == "matroid-rank":
            return Fraction(sum(min(c, k) for c, k in zip(o.part_caps, self._counts)))
        raise AssertionError(o.kind)

    def gain(self, j: int) -> Fraction:
        o = self.oracle
        if o.kind == "linear":
            return o.values[j]
        if o.kind == "coverage":
            return Fraction((o.covers[j] & ~self._mask).bit_count())
        if o.kind == "budgeted-additive":
            return min(o.cap, self._sum + o.values[j]) - min(o.cap, self._sum)
        if o.kind == "matroid-rank":
            p = o.parts[j]
            return Fraction(1 if self._counts[p] < o.part_caps[p] else 0)
        raise AssertionError(o.kind)

    def add(self, j: int) -> None:
        o = self.oracle
        if o.kind in ("linear", "budgeted-additive"):
            self._sum += o.values[j]
        elif o.kind == "coverage":
            self._mask |= o.covers[j]
        else:
            self._counts[o.parts[j]] += 1

    def clone(self) -> "_Evaluator":
        c = _Evaluator.__new__(_Evaluator)
        c.oracle = self.oracle
        c._sum = self._sum
        c._mask = self._mask
        c._counts = None if self._counts is None else list(self._counts)
        return c


def eval_set(oracle: ValuationOracle, S: Iterable[int]) -> Fraction:
    return oracle.eval(S)


def marginal(oracle: ValuationOracle, j: int, S: Iterable[int]) -> Fraction:
    return oracle.marginal(j, S)


def _greedy_complete(oracle: ValuationOracle, start: Sequence[int],
                     costs: Sequence[Fraction], budget: Fraction,
                     candidates: Sequence[int]) -> tuple[tuple[int, ...], Fraction]:
    """Density greedy from a seed set.  Ties broken by smallest element id;
    zero-cost elements with positive gain are taken first.

    Budget feasibility is tracked in exact rationals; the density ordering
    uses floats, which is exact for the small integer ratios that matter and
    keeps large grounds affordable.
    """
    ev = oracle.evaluator()
    chosen = set()
    spent = Fraction(0)
    fcosts = [float(c) for c in costs]
    for j in start:
        ev.add(j)
        chosen.add(j)
        spent += costs[j]
    while True:
        best_j = None
        best_density = -1.0
        for j in candidates:
            if j in chosen:
                continue
            c = costs[j]
            if spent + c > budget:
                continue
            g = ev.gain(j)
            if g <= 0:
                continue
            if c == 0:
                best_j = j
                break
            density = float(g) / fcosts[j]
            if density > best_density:
                best_j, best_density = j, density
        if best_j is None:
            break
        ev.add(best_j)
        chosen.add(best_j)
        spent += costs[best_j]
    return tuple(sorted(chosen)), ev.value


def knapsack_max(oracle: ValuationOracle, costs: Sequence, budget,
                 enum_depth: int = 3,
                 ground: Optional[Sequence[int]] = None) -> tuple[int, ...]:
    """Maximize f(S) subject to sum of costs over S <= budget.

    Partial enumeration over all feasible seed sets of size <= enum_depth,
    each completed by density greedy; with enum_depth=3 the result is a
    (1 - 1/e)-approximation.  Depth 1 is faster but loses that bound.
    """
    budget = _as_fraction(budget)
    if budget < 0:
        return ()
    costs = [_as_fraction(c) for c in costs]
    if ground is None:
        ground = range(oracle.n)
    afford = tuple(sorted(j for j in ground if costs[j] <= budget))
    if not afford:
        return ()
    depth = max(0, min(enum_depth, len(afford)))
    best_set: tuple[int, ...] = ()
    best_val = Fraction(0)
    for size in range(depth + 1):
        for seed in itertools.combinations(afford, size):
            if sum((costs[j] for j in seed), Fraction(0)) > budget:
                continue
            got, val = _greedy_complete(oracle, seed, costs, budget, afford)
            if val > best_val or (val == best_val and got < best_set):
                best_set, best_val = got, val
    for j in afford:  # the best single element guards the greedy's blind spot
        val = oracle.eval((j,))
        if val > best_val:
            best_set, best_val = (j,), val
    return best_set


def strict_knapsack_max(oracle: ValuationOracle, costs: Sequence, budget,
                        enum_depth: int = 3,
                        ground: Optional[Sequence[int]] = None) -> tuple[int, ...]:
    """Like knapsack_max but with a strict budget: sum of costs < budget.

    Elements with cost >= budget can never participate and are dropped up
    front.  If the relaxed optimum spends exactly the budget, it is split in
    two non-empty parts and the better half is kept, which preserves a
    ((1 - 1/e)/2)-approximation with respect to the strict optimum.
    """
    budget = _as_fraction(budget)
    if budget <= 0:
        return ()
    costs = [_as_fraction(c) for c in costs]
    if ground is None:
        ground = range(oracle.n)
    cand = tuple(sorted(j for j in ground if 0 <= costs[j] < budget))
    if not cand:
        return ()
    E = knapsack_max(oracle, costs, budget, enum_depth=enum_depth, ground=cand)
    spent = sum((costs[j] for j in E), Fraction(0))
    if spent < budget:
        return E
    # equality: split off one positively-priced element and keep the better part
    paid = [j for j in E if costs[j] > 0]
    head = (paid[0],)
    tail = tuple(j for j in E if j != paid[0])
    if oracle.eval(head) >= oracle.eval(tail):
        return tuple(sorted(head))
    return tuple(sorted(tail))
