"""Configuration LP approximated by column generation against the dual.

For a target value T the primal asks one unit of configurations per player
(each of value at least c*T, c = (1 - 1/e)/2) and at most one unit of
coverage per resource.  A phase-1 restricted master LP is solved over the
columns discovered so far; its duals feed a strict-knapsack pricing oracle,
and a failed pricing round with positive infeasibility is a certificate that
the target exceeds the LP optimum.  A binary search over a geometric grid of
targets returns the largest certified-feasible one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .model import Configuration, SantaInstance
from .submodular import strict_knapsack_max

C_APPROX = (1.0 - math.exp(-1.0)) / 2.0  # separation guarantee of the pricing oracle


@dataclass(frozen=True)
class DualPoint:
    y: tuple[float, ...]  # per player, nonnegative
    z: tuple[float, ...]  # per resource, nonnegative


@dataclass(frozen=True)
class FractionalSolution:
    """Near-feasible fractional assignment: per column weight x in [0, 1]."""

    T: float
    columns: tuple[tuple[int, Configuration], ...]
    x: tuple[Fraction, ...]

    def player_cover(self, player: int) -> Fraction:
        return sum((w for (i, _), w in zip(self.columns, self.x) if i == player),
                   Fraction(0))

    def resource_load(self, resource: int) -> Fraction:
        return sum((w for (_, c), w in zip(self.columns, self.x)
                    if resource in c.resources), Fraction(0))

    def check_feasible(self, m: int, tol: float) -> list[str]:
        out = []
        eps = Fraction(tol)
        for i in range(m):
            if self.player_cover(i) < 1 - eps:
                out.append(f"player {i} covered below 1 - tol")
        loads: dict[int, Fraction] = {}
        for (_, c), w in zip(self.columns, self.x):
            for r in c.resources:
                loads[r] = loads.get(r, Fraction(0)) + w
        for r, load in sorted(loads.items()):
            if load > 1 + eps:
                out.append(f"resource {r} loaded above 1 + tol")
        return out


@dataclass
class ConfigLPResult:
    t_star: float
    solution: FractionalSolution
    certified_upper: Optional[float]  # smallest probed T proven above the LP optimum
    iterations: int
    capped: bool


@dataclass(frozen=True)
class _Master:
    phi: float
    x: tuple[float, ...]
    y: tuple[float, ...]
    z: dict[int, float]


def _solve_master(m: int, columns: Sequence[tuple[int, Configuration]]) -> _Master:
    """Phase-1 LP: minimize total player slack subject to coverage/packing rows."""
    resources = sorted({r for _, c in columns for r in c.resources})
    ridx = {r: k for k, r in enumerate(resources)}
    ncols = len(columns)
    nvars = ncols + m
    nrows = m + len(resources)
    A = np.zeros((nrows, nvars))
    b = np.zeros(nrows)
    for i in range(m):
        A[i, ncols + i] = -1.0
        b[i] = -1.0
    for k, (i, c) in enumerate(columns):
        A[i, k] = -1.0
        for r in c.resources:
            A[m + ridx[r], k] = 1.0
    b[m:] = 1.0
    cost = np.zeros(nvars)
    cost[ncols:] = 1.0
    res = linprog(cost, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"master LP failed: {res.message}")
    marg = res.ineqlin.marginals
    y = tuple(max(0.0, -marg[i]) for i in range(m))
    z = {r: max(0.0, -marg[m + k]) for k, r in enumerate(resources)}
    return _Master(phi=float(res.fun), x=tuple(res.x[:ncols]), y=y, z=z)


# Degenerate master vertices can price an already-present column as strictly
# affordable through float fuzz; retrying with a slightly shrunken budget
# steps off that boundary.  Certification must then clear the same margin.
_BUDGET_SHRINKS = (Fraction(1), Fraction(1) - Fraction(1, 10 ** 7),
                   Fraction(1) - Fraction(1, 10 ** 4))
CERT_MARGIN = 1e-3


def _prune_to_floor(oracle, S: tuple[int, ...], floor: float,
                    costs: Sequence[Fraction], rotation: int = 0,
                    span: int = 1) -> tuple[int, ...]:
    """Shrink a priced set to a minimal subset still clearing the value floor.

    The knapsack oracle maximizes value and tends to return huge sets; lean
    columns keep the master LP from drowning in resource contention.  Among
    equal gains the cheaper resource wins, then ids rotated by the caller's
    offset, which spreads otherwise identical players over disjoint minimal
    sets instead of stalling the master on one shared column.
    """
    target = floor * (1 - 1e-12)
    ev = oracle.evaluator()
    picked: list[int] = []
    remaining = list(S)
    while float(ev.value) < target and remaining:
        best = max(range(len(remaining)),
                   key=lambda k: (ev.gain(remaining[k]), -costs[remaining[k]],
                                  -((remaining[k] - rotation) % max(1, span))))
        j = remaining.pop(best)
        ev.add(j)
        picked.append(j)
    if float(ev.value) < target:
        return tuple(sorted(S))
    while True:
        removable = None
        for j in sorted(picked):
            rest = [r for r in picked if r != j]
            if float(oracle.eval(rest)) >= target:
                removable = j
                break
        if removable is None:
            break
        picked.remove(removable)
    return tuple(sorted(picked))


def _price_all(inst: SantaInstance, y: Sequence[float], z: dict[int, float],
               value_floor: float, enum_depth: int,
               existing: set[tuple[int, tuple[int, ...]]],
               prune: bool = True) -> list[tuple[int, Configuration]]:
    """Run the strict-knapsack oracle for every player; keep new columns whose
    value clears the floor (pruned to lean columns unless told otherwise)."""
    found = []
    # limited denominators keep the exact-rational greedy bookkeeping cheap;
    # the certification margin dwarfs the rounding
    costs = [Fraction(z.get(j, 0.0)).limit_denominator(10 ** 9)
             for j in range(inst.n)]
    for i in range(inst.m):
        if y[i] <= 1e-15:
            continue
        for shrink in _BUDGET_SHRINKS:
            S = strict_knapsack_max(inst.valuation, costs, Fraction(y[i]) * shrink,
                                    enum_depth=enum_depth, ground=inst.gamma[i])
            if not S:
                continue
            if float(inst.valuation.eval(S)) < value_floor * (1 - 1e-12):
                continue
            if prune:
                S = _prune_to_floor(inst.valuation, S, value_floor, costs,
                                    rotation=(i * inst.n) // max(1, inst.m),
                                    span=inst.n)
            key = (i, S)
            if key in existing:
                continue
            found.append((i, Configuration.make(i, S)))
            existing.add(key)
            break
    return found


def separate(inst: SantaInstance, dual: DualPoint, T: float,
             c: float = C_APPROX, enum_depth: int = 3
             ) -> Optional[tuple[int, Configuration]]:
    """One violated column (player, configuration) for the dual point, or None.

    None certifies that no configuration of value at least T prices below its
    player's dual, up to the oracle's approximation factor.
    """
    if any(v < 0 for v in dual.y) or any(v < 0 for v in dual.z):
        raise ValueError("dual point must be nonnegative")
    z = {j: dual.z[j] for j in range(len(dual.z))}
    got = _price_all(inst, dual.y, z, c * T, enum_depth, existing=set(),
                     prune=False)
    return got[0] if got else None


def _repair(columns, xs, m, tol):
    """Exact-rational cleanup of the float LP point: clip negatives, rescale any
    overloaded resource, then verify both constraint families at tolerance.
    Returns (columns, x) or None if the point is beyond repair."""
    rat = [Fraction(max(0.0, v)) for v in xs]
    keep = [(col, w) for col, w in zip(columns, rat) if w > Fraction(tol) / 4]
    loads: dict[int, Fraction] = {}
    for (_, c), w in keep:
        for r in c.resources:
            loads[r] = loads.get(r, Fraction(0)) + w
    worst = max(loads.values(), default=Fraction(0))
    if worst > 1:
        keep = [(col, w / worst) for col, w in keep]
    sol_cols = tuple(col for col, _ in keep)
    sol_x = tuple(min(w, Fraction(1)) for _, w in keep)
    covers: dict[int, Fraction] = {}
    for (i, _), w in zip(sol_cols, sol_x):
        covers[i] = covers.get(i, Fraction(0)) + w
    eps = Fraction(tol)
    for i in range(m):
        if covers.get(i, Fraction(0)) < 1 - eps:
            return None
    return sol_cols, sol_x


def _probe(inst: SantaInstance, T: float, pool: dict, tol: float,
           enum_depth: int, max_iter: int, c: float):
    """Column generation at one target; returns (solution columns, iterations,
    capped, certified) where certified means T is proven above the LP optimum."""
    floor = c * T
    active = [(i, cfg) for (i, key), cfg in pool.items()
              if float(inst.valuation.eval(key)) >= floor * (1 - 1e-12)]
    existing = {(i, cfg.resources) for i, cfg in active}
    iters = 0
    while iters < max_iter:
        iters += 1
        master = _solve_master(inst.m, active)
        if master.phi <= tol * max(1, inst.m):
            repaired = _repair(active, master.x, inst.m, tol)
            if repaired is not None:
                return repaired, iters, False, False
        found = _price_all(inst, master.y, master.z, floor, enum_depth, existing)
        if not found:
            certified = master.phi > max(tol, CERT_MARGIN) * max(1, inst.m)
            return None, iters, False, certified
        for i, cfg in found:
            pool[(i, cfg.resources)] = cfg
        active.extend(found)
    return None, iters, True, False


def _adaptive_depth(inst: SantaInstance) -> int:
    """Full 3-deep enumeration keeps the pricing guarantee on small grounds;
    large grounds fall back to cheaper seeding (greedy plus best singleton)."""
    widest = max((len(g) for g in inst.gamma), default=0)
    if widest <= 14:
        return 3
    if widest <= 40:
        return 1
    return 0


def solve_config_lp(inst: SantaInstance, tol: float = 1e-9, *,
                    grid_steps: int = 40, enum_depth: Optional[int] = None,
                    max_iter: int = 400, c: float = C_APPROX) -> ConfigLPResult:
    """Binary search the largest target T whose primal is feasible at value c*T.

    The grid is geometric over [f(R) * 2^-20, f(R)]; every grid point at or
    below the true LP optimum is guaranteed to succeed, so the returned
    t_star is at most one grid ratio below it.
    """
    if enum_depth is None:
        enum_depth = _adaptive_depth(inst)
    hi = float(inst.valuation.eval(sorted(set().union(*map(set, inst.gamma))
                                          if inst.gamma else set())))
    empty = FractionalSolution(T=0.0, columns=tuple(
        (i, Configuration.make(i, ())) for i in range(inst.m)),
        x=tuple(Fraction(1) for _ in range(inst.m)))
    if hi <= 0:
        return ConfigLPResult(t_star=0.0, solution=empty, certified_upper=None,
                              iterations=0, capped=False)
    lo = hi * 2.0 ** -20
    grid = [lo * (hi / lo) ** (k / grid_steps) for k in range(grid_steps + 1)]
    pool: dict = {}
    total_iters = 0
    capped = False
    best: Optional[tuple[float, tuple, tuple]] = None
    certified_upper: Optional[float] = None
    lo_i, hi_i = 0, len(grid) - 1
    while lo_i <= hi_i:
        mid = (lo_i + hi_i) // 2
        T = grid[mid]
        sol, iters, hit_cap, certified = _probe(inst, T, pool, tol, enum_depth,
                                                max_iter, c)
        total_iters += iters
        capped = capped or hit_cap
        if sol is not None:
            if best is None or T > best[0]:
                best = (T, sol[0], sol[1])
            lo_i = mid + 1
        else:
            if certified:
                certified_upper = T if certified_upper is None else min(certified_upper, T)
            hi_i = mid - 1
    if best is None:
        return ConfigLPResult(t_star=0.0, solution=empty,
                              certified_upper=certified_upper,
                              iterations=total_iters, capped=capped)
    t_star, cols, xs = best
    return ConfigLPResult(
        t_star=t_star,
        solution=FractionalSolution(T=t_star, columns=cols, x=xs),
        certified_upper=certified_upper,
        iterations=total_iters,
        capped=capped)


# ---------------------------------------------------------------------------
# exact small-instance LP (testing oracle)

EXACT_MAX_N = 12


def _player_columns(inst: SantaInstance, player: int, T) -> list[Configuration]:
    """All S subset of gamma[player] with f(S) >= T."""
    import itertools

    out = []
    tfrac = Fraction(T) if not isinstance(T, Fraction) else T
    g = inst.gamma[player]
    for size in range(len(g) + 1):
        for S in itertools.combinations(g, size):
            if inst.valuation.eval(S) >= tfrac:
                out.append(Configuration.make(player, S))
    return out


def exact_config_lp_small(inst: SantaInstance, T, tol: float = 1e-9
                          ) -> Optional[FractionalSolution]:
    """Solve the full configuration LP exactly by enumerating all columns.

    Refuses instances with more than EXACT_MAX_N resources.  Returns a
    feasible fractional solution or None when the LP at target T is infeasible.
    """
    if inst.n > EXACT_MAX_N:
        raise ValueError(f"exact LP limited to {EXACT_MAX_N} resources, got {inst.n}")
    columns: list[tuple[int, Configuration]] = []
    for i in range(inst.m):
        cols = _player_columns(inst, i, T)
        if not cols:
            return None
        columns.extend((i, c) for c in cols)
    master = _solve_master(inst.m, columns)
    if master.phi > tol * max(1, inst.m):
        return None
    repaired = _repair(columns, master.x, inst.m, tol)
    if repaired is None:
        return None
    tf = float(T) if isinstance(T, Fraction) else T
    return FractionalSolution(T=tf, columns=repaired[0], x=repaired[1])


def exact_config_lp_opt(inst: SantaInstance) -> Fraction:
    """Largest target with a feasible exact LP (a value of some configuration)."""
    if inst.n > EXACT_MAX_N:
        raise ValueError(f"exact LP limited to {EXACT_MAX_N} resources, got {inst.n}")
    import itertools

    values = {Fraction(0)}
    for i in range(inst.m):
        g = inst.gamma[i]
        for size in range(len(g) + 1):
            for S in itertools.combinations(g, size):
                values.add(inst.valuation.eval(S))
    cands = sorted(values)
    lo, hi = 0, len(cands) - 1
    best = Fraction(0)
    while lo <= hi:
        mid = (lo + hi) // 2
        if exact_config_lp_small(inst, cands[mid]) is not None:
            best = cands[mid]
            lo = mid + 1
        else:
            hi = mid - 1
    return best
