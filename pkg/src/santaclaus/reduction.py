"""Weighted hypergraph construction and its reduction to a grouped unweighted one.

Sampled cluster configurations become hyperedges whose resource weights are
telescoping marginal gains, normalized to total exactly 1.  Rounding the
weights down to powers of two and deleting everything below 1/(2n) costs a
bounded constant factor; bucketing the surviving dyadic weights then splits
each original player into a group of bucket players, one per weight level,
with one consistent set per original configuration.  A consistent matching of
the grouped hypergraph lifts back to a relaxed matching of the weighted one.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

from .clustering import ClusterDecomposition, StructuralError
from .model import (
    Configuration,
    GroupedHypergraph,
    RelaxedMatching,
    WeightedHypergraph,
    verify_relaxed_matching,
)
from .submodular import ValuationOracle


def build_weighted_hypergraph(dec: ClusterDecomposition, oracle: ValuationOracle,
                              t_star) -> WeightedHypergraph:
    """Hyperedges over (cluster, thin resources) with marginal-gain weights.

    Resources inside a configuration are ordered by descending singleton value
    (ties by id); weight of the i-th is 5/T* times its gain given the prefix,
    so the weights sum to 5 f(C)/T* >= 1, then rescale to total exactly 1.
    """
    if dec.sampled is None:
        raise ValueError("decomposition has no sampled configurations")
    tfrac = Fraction(t_star)
    cfgs: list[Configuration] = []
    weights: list[dict[int, Fraction]] = []
    for h, configs in enumerate(dec.sampled):
        for cfg in configs:
            order = sorted(cfg.resources,
                           key=lambda j: (-oracle.eval((j,)), j))
            ev = oracle.evaluator()
            w: dict[int, Fraction] = {}
            for j in order:
                gain = ev.gain(j)
                w[j] = 5 * gain / tfrac
                ev.add(j)
            total = sum(w.values(), Fraction(0))
            if total < 1:
                raise StructuralError(
                    f"configuration below a fifth of the target: f={ev.value}")
            weights.append({j: v / total for j, v in w.items()})
            cfgs.append(Configuration.make(h, cfg.resources))
    return WeightedHypergraph(
        players=len(dec.clusters),
        resources=dec.thin,
        configurations=tuple(cfgs),
        weights=tuple(weights))


def _pow2_floor(w: Fraction) -> Fraction:
    """Largest power of two at most w (w in (0, 1])."""
    if w <= 0:
        raise ValueError("weight must be positive")
    if w >= 1:
        return Fraction(1)
    s = 0
    num, den = w.numerator, w.denominator
    while (num << s) < den:
        s += 1
    return Fraction(1, 1 << s)


def round_weights(h: WeightedHypergraph) -> WeightedHypergraph:
    """Round every weight down to a power of two, then delete weights below
    1/(2n); each configuration keeps a constant fraction of its unit total."""
    n = len(h.resources)
    cutoff = Fraction(1, 2 * n)
    new_cfgs, new_weights = [], []
    for cfg, w in zip(h.configurations, h.weights):
        total = sum(w.values(), Fraction(0))
        if total != 1:
            raise ValueError("round_weights expects unit-normalized configurations")
        rounded = {j: _pow2_floor(v) for j, v in w.items() if v > 0}
        kept = {j: v for j, v in rounded.items() if v >= cutoff}
        if not kept:
            raise StructuralError(
                f"configuration lost all resources at the 1/(2n) cutoff (n={n})")
        new_cfgs.append(Configuration.make(cfg.player, kept.keys()))
        new_weights.append(kept)
    return WeightedHypergraph(players=h.players, resources=h.resources,
                              configurations=tuple(new_cfgs),
                              weights=tuple(new_weights))


def bucket_count(n: int) -> int:
    """Number of dyadic weight levels in [1/(2n), 1/2]."""
    return max(1, math.ceil(math.log2(2 * max(1, n))))


def _bucket_of(w: Fraction) -> int:
    """s such that w == 2^-s; structural error off the dyadic grid."""
    num, den = w.numerator, w.denominator
    if num != 1 or den & (den - 1) != 0:
        raise StructuralError(f"weight {w} is not a power of two")
    return den.bit_length() - 1


def to_grouped(h: WeightedHypergraph) -> GroupedHypergraph:
    """Split each player into bucket players, one per dyadic weight level.

    Bucket s of configuration C holds exactly the resources of weight 2^-s;
    empty buckets are materialized so every consistent set stays well formed.
    """
    n = len(h.resources)
    B = bucket_count(n)
    cutoff = Fraction(1, 2 * n)
    per_player: dict[int, list[int]] = {}
    for idx, cfg in enumerate(h.configurations):
        per_player.setdefault(cfg.player, []).append(idx)
    groups = []
    consistent_sets = []
    origins = []
    for p in range(h.players):
        members = tuple(p * B + s for s in range(B))
        groups.append(members)
        sets_for_group = []
        origin_for_group = []
        for idx in per_player.get(p, []):
            w = h.weights[idx]
            buckets: list[list[int]] = [[] for _ in range(B)]
            for j, v in sorted(w.items()):
                if not (cutoff <= v <= Fraction(1, 2)):
                    raise StructuralError(
                        f"weight {v} outside the dyadic grid [1/(2n), 1/2]")
                s = _bucket_of(v)
                buckets[s - 1].append(j)
            sets_for_group.append(tuple(
                Configuration.make(members[s], buckets[s]) for s in range(B)))
            origin_for_group.append(idx)
        consistent_sets.append(tuple(sets_for_group))
        origins.append(tuple(origin_for_group))
    ell = max((len(s) for s in consistent_sets), default=1)
    return GroupedHypergraph(
        resources=h.resources,
        groups=tuple(groups),
        consistent_sets=tuple(consistent_sets),
        ell=ell,
        origins=tuple(origins))


def lift_matching(gm: RelaxedMatching, h: WeightedHypergraph,
                  alpha=None, gh: Optional[GroupedHypergraph] = None
                  ) -> RelaxedMatching:
    """Union each group's assigned buckets back into the original weighted
    configuration; the achieved weighted factor is recomputed exactly.

    When alpha is given the grouped matching is re-verified at that factor
    instead of its own claim."""
    from dataclasses import replace

    n = len(h.resources)
    B = bucket_count(n)
    per_player: dict[int, list[int]] = {}
    for idx, cfg in enumerate(h.configurations):
        per_player.setdefault(cfg.player, []).append(idx)
    if gh is not None:
        checked = gm if alpha is None else replace(gm, alpha=Fraction(alpha))
        ok, why = verify_relaxed_matching(gh, checked)
        if not ok:
            raise ValueError(f"grouped matching rejected: {why}")
    chosen = []
    assigned = []
    worst = Fraction(1)
    for p in range(h.players):
        t = gm.chosen[p * B]
        if any(gm.chosen[p * B + s] != t for s in range(B)):
            raise ValueError(f"group {p} selections are inconsistent")
        cfg_idx = per_player[p][t]
        got = set()
        for s in range(B):
            got |= set(gm.assigned[p * B + s])
        extra = got - set(h.configurations[cfg_idx].resources)
        if extra:
            raise ValueError(f"group {p} assigned resources outside its configuration")
        w = h.weights[cfg_idx]
        total = sum(w.values(), Fraction(0))
        covered = sum((w[j] for j in got), Fraction(0))
        if covered <= 0:
            raise ValueError(f"group {p} covered no weight")
        worst = max(worst, total / covered)
        chosen.append(t)
        assigned.append(tuple(sorted(got)))
    return RelaxedMatching(chosen=tuple(chosen), assigned=tuple(assigned),
                           alpha=worst)
