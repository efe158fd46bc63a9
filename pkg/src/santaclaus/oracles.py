"""Exact ground truth for small instances.

exact_santa_opt enumerates every assignment of resources to players (or to
nobody); exact_min_alpha enumerates configuration selections and, for each,
binary-searches the relaxation factor over the finite grid where the floor
quotas change, testing feasibility with one max flow per probe.  Both refuse
inputs whose enumeration would exceed their stated budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from . import flow
from .model import (
    GroupedHypergraph,
    LinearSantaInstance,
    RelaxedMatching,
    SantaInstance,
    WeightedHypergraph,
)

SANTA_BUDGET = 10 ** 7
ALPHA_BUDGET = 10 ** 5


class BudgetExceeded(Exception):
    def __init__(self, message: str, size: int, budget: int):
        super().__init__(f"{message}: {size} cases exceed budget {budget}")
        self.size = size
        self.budget = budget


@dataclass(frozen=True)
class SantaOpt:
    value: Fraction
    partition: tuple[tuple[int, ...], ...]


def _player_options(inst: Union[SantaInstance, LinearSantaInstance]) -> list[list[int]]:
    """For each resource, the players that could possibly benefit from it."""
    opts: list[list[int]] = [[] for _ in range(inst.n)]
    if isinstance(inst, SantaInstance):
        for i, g in enumerate(inst.gamma):
            for j in g:
                opts[j].append(i)
    else:
        for i in range(inst.m):
            for j in range(inst.n):
                if inst.values[i][j] > 0:
                    opts[j].append(i)
    return opts


def exact_santa_opt(inst: Union[SantaInstance, LinearSantaInstance],
                    budget: int = SANTA_BUDGET) -> SantaOpt:
    """Optimal max-min value by exhaustive assignment enumeration."""
    opts = _player_options(inst)
    size = 1
    for o in opts:
        size *= len(o) + 1
        if size > budget:
            raise BudgetExceeded("santa enumeration too large", size, budget)

    if isinstance(inst, SantaInstance):
        evals = [inst.valuation.evaluator() for _ in range(inst.m)]
        def player_value(i, ev):
            return ev.value
    else:
        evals = None

    best_val = Fraction(-1)
    best_parts: tuple[tuple[int, ...], ...] = tuple(() for _ in range(inst.m))
    owner = [-1] * inst.n

    if isinstance(inst, SantaInstance):
        # incremental evaluators with an undo stack keep f queries cheap
        stack: list[tuple[int, object]] = []

        def assign(j, i):
            stack.append((i, evals[i].clone()))
            evals[i].add(j)

        def undo():
            i, old = stack.pop()
            evals[i] = old

        def current_min():
            return min(ev.value for ev in evals)
    else:
        totals = [Fraction(0)] * inst.m

        def assign(j, i):
            totals[i] += inst.values[i][j]

        def undo_lin(j, i):
            totals[i] -= inst.values[i][j]

        def current_min():
            return min(totals)

    def rec(j: int):
        nonlocal best_val, best_parts
        if j == inst.n:
            v = current_min()
            if v > best_val:
                best_val = v
                parts = [[] for _ in range(inst.m)]
                for r, o in enumerate(owner):
                    if o >= 0:
                        parts[o].append(r)
                best_parts = tuple(tuple(p) for p in parts)
            return
        rec(j + 1)  # leave resource j unassigned
        for i in opts[j]:
            owner[j] = i
            assign(j, i)
            rec(j + 1)
            if isinstance(inst, SantaInstance):
                undo()
            else:
                undo_lin(j, i)
            owner[j] = -1

    rec(0)
    return SantaOpt(value=best_val, partition=best_parts)


@dataclass(frozen=True)
class MinAlphaResult:
    alpha: Fraction
    matching: RelaxedMatching
    combinations: int


def _selection_space(h: Union[WeightedHypergraph, GroupedHypergraph]):
    """Yield (chosen tuple per player, configs per player) over all selections."""
    if isinstance(h, GroupedHypergraph):
        group_ranges = [range(len(sets)) for sets in h.consistent_sets]
        players = h.num_players
        locs = [h.player_location(p) for p in range(players)]

        def expand(combo):
            chosen = [0] * players
            cfgs = [None] * players
            for p in range(players):
                gi, mi = locs[p]
                chosen[p] = combo[gi]
                cfgs[p] = h.consistent_sets[gi][combo[gi]][mi]
            return tuple(chosen), tuple(cfgs)

        return group_ranges, expand

    per_player = [h.player_configs(i) for i in range(h.players)]
    ranges = [range(len(c)) for c in per_player]

    def expand(combo):
        cfgs = tuple(h.configurations[per_player[i][combo[i]]] for i in range(h.players))
        return tuple(combo), cfgs

    return ranges, expand


def _alpha_candidates(sizes) -> list[Fraction]:
    cands = {Fraction(1)}
    top = max(sizes, default=0)
    for s in sizes:
        for t in range(1, s + 1):
            cands.add(Fraction(s, t))
    cands.add(Fraction(top + 1))  # every quota collapses to zero past this point
    return sorted(cands)


def _feasible_at(cfgs, alpha: Fraction):
    demands = [int(Fraction(c.size) / alpha) for c in cfgs]
    fam = [c.resources for c in cfgs]
    universe = sorted({r for c in cfgs for r in c.resources})
    return flow.good_assignment(fam, universe, demands, gamma=1, epsilon=0)


def exact_min_alpha(h: Union[WeightedHypergraph, GroupedHypergraph],
                    budget: int = ALPHA_BUDGET) -> MinAlphaResult:
    """Smallest alpha admitting a relaxed perfect matching, with a witness.

    Uses floor quotas on configuration cardinalities (the unweighted reading);
    weighted hypergraphs are measured by their edge structure.
    """
    ranges, expand = _selection_space(h)
    size = 1
    for r in ranges:
        size *= max(1, len(r))
        if size > budget:
            raise BudgetExceeded("selection enumeration too large", size, budget)

    import itertools

    best: tuple[Fraction, RelaxedMatching] | None = None
    for combo in itertools.product(*ranges):
        chosen, cfgs = expand(combo)
        cands = _alpha_candidates([c.size for c in cfgs])
        lo, hi = 0, len(cands) - 1
        found = None
        while lo <= hi:
            mid = (lo + hi) // 2
            got = _feasible_at(cfgs, cands[mid])
            if got is not None:
                found = (cands[mid], got)
                hi = mid - 1
            else:
                lo = mid + 1
        if found is None:
            continue
        alpha, assignment = found
        if best is None or alpha < best[0]:
            matching = RelaxedMatching(
                chosen=chosen,
                assigned=tuple(tuple(sorted(rs)) for rs in assignment.received),
                alpha=alpha)
            best = (alpha, matching)
    if best is None:
        raise ValueError("hypergraph admits no selection")
    return MinAlphaResult(alpha=best[0], matching=best[1], combinations=size)
