"""From a surviving selection to a disjoint matching, and on to a partition.

The induction walks levels top down, keeping a gamma-good assignment of the
current resource set to the already-admitted configurations: each step lifts
the assignment one level (multiplying demands by roughly ell) and admits the
newly eligible configurations with halving demands.  At the ground level the
multiplicities are deduplicated, every leftover resource is topped up onto
its poorest claimant, and the achieved relaxation factor is recomputed
exactly from the outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from . import flow
from .clustering import ClusterDecomposition, representative_fat_matching
from .lll import Selection, _FlatIndex
from .model import (
    Configuration,
    GroupedHypergraph,
    RelaxedMatching,
    SantaInstance,
    WeightedHypergraph,
)
from .sampling import ResourceHierarchy


def default_gamma(ell: int) -> int:
    return min(max(1, math.ceil(math.log2(max(2, ell)))), ell)


def _alpha_candidates(sizes) -> list[Fraction]:
    cands = {Fraction(1)}
    for s in sizes:
        for t in range(1, s + 1):
            cands.add(Fraction(s, t))
    cands.add(Fraction(max(sizes, default=0) + 1))
    return sorted(cands)


def achieved_alpha(sizes: Sequence[int], kept: Sequence[int]) -> Fraction:
    """Smallest grid factor alpha with kept_i >= floor(size_i / alpha) for all i."""
    for alpha in _alpha_candidates(sizes):
        if all(k >= int(Fraction(s) / alpha) for s, k in zip(sizes, kept)):
            return alpha
    raise AssertionError("the sentinel factor always satisfies the quotas")


def _top_up(families: Sequence[tuple[int, ...]], kept: list[set[int]],
            used: set[int]) -> None:
    """Hand every unclaimed resource to its poorest claimant (in place)."""
    claimants: dict[int, list[int]] = {}
    for i, rs in enumerate(families):
        for r in rs:
            claimants.setdefault(r, []).append(i)
    for r in sorted(claimants):
        if r in used:
            continue
        owners = claimants[r]
        best = min(owners, key=lambda i: (len(kept[i]) / max(1, len(families[i])), i))
        kept[best].add(r)
        used.add(r)


def _dedup(received: Sequence[set[int]], demands: Sequence[int],
           families: Sequence[tuple[int, ...]]) -> list[set[int]]:
    """Reduce every resource to a single owner, protecting the hungriest."""
    holders: dict[int, list[int]] = {}
    for i, rs in enumerate(received):
        for r in rs:
            holders.setdefault(r, []).append(i)
    kept: list[set[int]] = [set() for _ in received]
    secured = [0] * len(received)
    for r in sorted(holders):
        owners = holders[r]
        best = min(owners,
                   key=lambda i: (secured[i] / max(1, demands[i] or 1), i))
        kept[best].add(r)
        secured[best] += 1
    return kept


def _min_alpha_for_selection(cfgs: Sequence[Configuration]):
    """Optimal extraction for a fixed selection: binary search the factor over
    the floor grid, one unit-capacity flow per probe."""
    sizes = [c.size for c in cfgs]
    fams = [c.resources for c in cfgs]
    universe = sorted({r for c in cfgs for r in c.resources})
    cands = _alpha_candidates(sizes)
    lo, hi = 0, len(cands) - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        demands = [int(Fraction(s) / cands[mid]) for s in sizes]
        got = flow.good_assignment(fams, universe, demands, gamma=1, epsilon=0)
        if got is not None:
            best = got
            hi = mid - 1
        else:
            lo = mid + 1
    assert best is not None
    return best


def reconstruct_matching(gh: GroupedHypergraph, hier: ResourceHierarchy,
                         sel: Selection, gamma: Optional[int] = None, *,
                         profile: str = "practical") -> RelaxedMatching:
    """Assemble a consistent relaxed matching from the selection.

    With a single level this is one optimal flow extraction; with more, the
    lift/admit induction maintains a gamma-good multi-assignment whose final
    deduplication pays the gamma factor once.
    """
    if gamma is None:
        gamma = default_gamma(hier.ell)
    if not (1 <= gamma <= hier.ell):
        raise ValueError("gamma must lie in {1, ..., ell}")
    index = _FlatIndex.build(gh)
    selected = sel.selected_flat(index)
    classes = sel.classes

    players = gh.num_players
    player_cfg: dict[int, int] = {}
    for i in selected:
        player_cfg[index.configs[i].player] = i
    if len(player_cfg) != players:
        raise ValueError("selection does not cover every player")
    order = [player_cfg[p] for p in range(players)]
    cfgs = [index.configs[i] for i in order]
    sizes = [c.size for c in cfgs]

    if hier.d == 0:
        assignment = _min_alpha_for_selection(cfgs)
        kept = [set(rs) for rs in assignment.received]
    else:
        fam_ids: list[int] = []
        demands: list[int] = []
        prev: Optional[flow.GoodAssignment] = None
        for level in range(hier.d, -1, -1):
            rlevel = hier.levels[level]
            rset = set(rlevel)
            if fam_ids and level < hier.d:
                fams = [index.configs[i].resources for i in fam_ids]
                lift = flow.lift_level(fams, hier, level, demands, gamma, prev,
                                       profile=profile, floor_alpha=0)
                demands = list(lift.alpha_prime)
                prev = lift.assignment
            new_ids = [i for i in selected if classes.classes[i] == level]
            if new_ids:
                halving = 1
                while True:
                    new_demands = [len(set(index.configs[i].resources) & rset) >> halving
                                   for i in new_ids]
                    fams = [index.configs[i].resources for i in fam_ids + new_ids]
                    joint = flow.good_assignment(fams, rlevel,
                                                 demands + new_demands, gamma, 0)
                    if joint is not None:
                        fam_ids = fam_ids + new_ids
                        demands = demands + new_demands
                        prev = joint
                        break
                    if all(d == 0 for d in new_demands):
                        raise AssertionError(
                            "admission must succeed once the new demands vanish")
                    halving += 1
        received = [set(rs) for rs in prev.received]
        by_id = {i: rs for i, rs in zip(fam_ids, received)}
        ordered_received = [by_id.get(i, set()) for i in order]
        ordered_demands = [demands[fam_ids.index(i)] if i in fam_ids else 0
                           for i in order]
        kept = _dedup(ordered_received, ordered_demands,
                      [c.resources for c in cfgs])

    used = {r for ks in kept for r in ks}
    _top_up([c.resources for c in cfgs], kept, used)
    alpha = achieved_alpha(sizes, [len(k) for k in kept])
    chosen = tuple(sel.choice[gh.player_location(p)[0]] for p in range(players))
    return RelaxedMatching(chosen=chosen,
                           assigned=tuple(tuple(sorted(k)) for k in kept),
                           alpha=alpha)


def greedy_steal_matching(h: Union[GroupedHypergraph, WeightedHypergraph],
                          sel: Union[Selection, Sequence[int]]) -> RelaxedMatching:
    """Largest-to-smallest stealing baseline (cardinality quotas).

    Every resource ends with the smallest selected configuration containing
    it, so each configuration keeps whatever smaller ones did not steal.
    """
    if isinstance(sel, Selection):
        index = _FlatIndex.build(sel.gh)
        chosen_flat = sel.selected_flat(index)
        player_cfg = {index.configs[i].player: index.configs[i] for i in chosen_flat}
        players = h.num_players
        cfgs = [player_cfg[p] for p in range(players)]
        chosen = tuple(sel.choice[h.player_location(p)[0]] for p in range(players))
    else:
        chosen = tuple(sel)
        if isinstance(h, GroupedHypergraph):
            cfgs = []
            for p in range(h.num_players):
                gi, mi = h.player_location(p)
                cfgs.append(h.consistent_sets[gi][chosen[p]][mi])
            players = h.num_players
        else:
            players = h.players
            cfgs = [h.configurations[h.player_configs(p)[chosen[p]]]
                    for p in range(players)]

    order = sorted(range(players), key=lambda p: (-cfgs[p].size, p))
    owner: dict[int, int] = {}
    for p in order:
        for r in cfgs[p].resources:
            owner[r] = p
    kept = [set() for _ in range(players)]
    for r, p in owner.items():
        kept[p].add(r)
    alpha = achieved_alpha([c.size for c in cfgs], [len(k) for k in kept])
    return RelaxedMatching(chosen=chosen,
                           assigned=tuple(tuple(sorted(k)) for k in kept),
                           alpha=alpha)


@dataclass(frozen=True)
class SantaSolution:
    assigned: tuple[tuple[int, ...], ...]
    value: Fraction
    alpha_weighted: Fraction
    representatives: tuple[int, ...]

    def check_partition(self, inst: SantaInstance) -> list[str]:
        out = []
        seen: set[int] = set()
        for i, rs in enumerate(self.assigned):
            for r in rs:
                if r in seen:
                    out.append(f"resource {r} assigned twice")
                seen.add(r)
            if not set(rs) <= set(inst.gamma[i]):
                out.append(f"player {i} holds a resource outside its permitted set")
        return out


def assemble_santa_solution(inst: SantaInstance, dec: ClusterDecomposition,
                            wm: RelaxedMatching) -> SantaSolution:
    """Final partition: each cluster's representative keeps its matched thin
    resources, every other player takes a distinct fat resource from the
    cluster forest, and leftovers are topped up greedily onto the poorest."""
    reps = []
    assigned: list[set[int]] = [set() for _ in range(inst.m)]
    for hidx in range(len(dec.clusters)):
        cfg = dec.sampled[hidx][wm.chosen[hidx]]
        rep = cfg.player
        reps.append(rep)
        thin_got = set(wm.assigned[hidx])
        if not thin_got <= set(cfg.resources):
            raise ValueError("matched resources leave the chosen configuration")
        assigned[rep] |= thin_got
    fat = representative_fat_matching(dec, reps)
    for p, j in fat.items():
        assigned[p].add(j)

    used = {r for rs in assigned for r in rs}
    # greedy top-up: grow the minimum by feeding the poorest player first;
    # incremental evaluators keep every marginal query constant-time
    evals = []
    for i in range(inst.m):
        ev = inst.valuation.evaluator()
        for r in sorted(assigned[i]):
            ev.add(r)
        evals.append(ev)
    while True:
        improved = False
        for p in sorted(range(inst.m), key=lambda i: (evals[i].value, i)):
            best_r, best_gain = None, Fraction(0)
            for r in inst.gamma[p]:
                if r in used:
                    continue
                gain = evals[p].gain(r)
                if gain > best_gain:
                    best_r, best_gain = r, gain
            if best_r is not None and best_gain > 0:
                assigned[p].add(best_r)
                evals[p].add(best_r)
                used.add(best_r)
                improved = True
                break
        if not improved:
            break

    value = min((ev.value for ev in evals), default=Fraction(0))
    return SantaSolution(assigned=tuple(tuple(sorted(rs)) for rs in assigned),
                         value=value,
                         alpha_weighted=wm.alpha,
                         representatives=tuple(reps))
