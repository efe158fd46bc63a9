"""Seeded instance generators for the CLI and the test suites."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .model import Configuration, GroupedHypergraph, SantaInstance, as_seed
from .submodular import ValuationOracle


def santa_linear(m: int, n: int, seed, max_value: int = 9,
                 gamma_density: float = 0.6) -> SantaInstance:
    rng = as_seed(seed).derive("gen-santa-linear").rng()
    values = [Fraction(rng.randint(1, max_value)) for _ in range(n)]
    gamma = []
    for i in range(m):
        size = max(1, round(gamma_density * n))
        gamma.append(sorted(rng.sample(range(n), min(size, n))))
    return SantaInstance.make(gamma, ValuationOracle.linear(values))


def santa_coverage(m: int, n: int, seed, universe: Optional[int] = None,
                   set_size: int = 3, gamma_density: float = 0.6) -> SantaInstance:
    rng = as_seed(seed).derive("gen-santa-coverage").rng()
    universe = universe or max(4, n)
    sets = [rng.sample(range(universe), rng.randint(1, min(set_size, universe)))
            for _ in range(n)]
    gamma = []
    for i in range(m):
        size = max(1, round(gamma_density * n))
        gamma.append(sorted(rng.sample(range(n), min(size, n))))
    return SantaInstance.make(gamma, ValuationOracle.coverage(sets))


def hypergraph_regular(groups: int, group_size: int, ell: int, resources: int,
                       seed, size_range: tuple[int, int] = (2, 5)
                       ) -> GroupedHypergraph:
    """Regular grouped hypergraph: exactly ell consistent sets per group and
    per-resource degree at most ell, enforced during sampling."""
    rng = as_seed(seed).derive("gen-hypergraph-regular").rng()
    capacity = {r: ell for r in range(resources)}
    group_list = []
    consistent = []
    player = 0
    for g in range(groups):
        members = tuple(range(player, player + group_size))
        player += group_size
        group_list.append(members)
        sets = []
        for t in range(ell):
            cs = []
            for p in members:
                want = rng.randint(*size_range)
                avail = [r for r, c in capacity.items() if c > 0]
                take = sorted(rng.sample(avail, min(want, len(avail))))
                for r in take:
                    capacity[r] -= 1
                cs.append(Configuration.make(p, take))
            sets.append(tuple(cs))
        consistent.append(tuple(sets))
    return GroupedHypergraph(resources=tuple(range(resources)),
                             groups=tuple(group_list),
                             consistent_sets=tuple(consistent), ell=ell)


def hypergraph_grouped(groups: int, group_size: int, ell: int, resources: int,
                       seed, size_range: tuple[int, int] = (2, 5)
                       ) -> GroupedHypergraph:
    """Ragged variant: groups carry between 1 and ell consistent sets."""
    rng = as_seed(seed).derive("gen-hypergraph-grouped").rng()
    base = hypergraph_regular(groups, group_size, ell, resources,
                              as_seed(seed).derive("ragged-base"),
                              size_range=size_range)
    sets = []
    for g, group_sets in enumerate(base.consistent_sets):
        keep = rng.randint(1, len(group_sets))
        sets.append(tuple(group_sets[:keep]))
    return GroupedHypergraph(resources=base.resources, groups=base.groups,
                             consistent_sets=tuple(sets), ell=base.ell)
