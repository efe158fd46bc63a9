"""Nested resource hierarchies and their high-probability property checks.

Level k+1 keeps each level-k resource independently with probability 1/ell.
The size check asks every configuration of class >= k to shrink by roughly
ell^-k at level k; the overlap check bounds the thinned intersections with
same-class configurations.  Draws failing either check are redrawn with fresh
derived seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .model import Configuration, GroupedHypergraph, RngSeed, as_seed

THEORY_ELL_FACTOR = 300_000  # ell floor is this times ceil(log2 n)^3


def theory_ell(n: int) -> int:
    return THEORY_ELL_FACTOR * max(1, math.ceil(math.log2(max(2, n)))) ** 3


@dataclass(frozen=True)
class SizeClasses:
    """Partition of configurations by size: class 0 below ell^4, class k >= 1
    for sizes in [ell^(k+3), ell^(k+4)).  Synthetic class maps may be supplied
    directly for tests of the deeper levels."""

    configs: tuple[Configuration, ...]
    classes: tuple[int, ...]
    ell: int

    @property
    def depth(self) -> int:
        """Largest occupied class; the hierarchy carries levels 0..depth."""
        return max(self.classes, default=0)

    @staticmethod
    def from_hypergraph(gh: GroupedHypergraph, ell: Optional[int] = None) -> "SizeClasses":
        ell = gh.ell if ell is None else ell
        configs = gh.flat_configs()
        classes = tuple(SizeClasses.class_of_size(c.size, ell) for c in configs)
        return SizeClasses(configs=configs, classes=classes, ell=ell)

    @staticmethod
    def synthetic(configs: Sequence[Configuration], classes: Sequence[int],
                  ell: int) -> "SizeClasses":
        if len(configs) != len(classes):
            raise ValueError("one class per configuration required")
        return SizeClasses(configs=tuple(configs), classes=tuple(classes), ell=ell)

    @staticmethod
    def class_of_size(size: int, ell: int) -> int:
        if ell < 2:
            raise ValueError("size classes need ell >= 2")
        if size < ell ** 4:
            return 0
        k = 1
        while size >= ell ** (k + 4):
            k += 1
        return k

    def of_class(self, k: int) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.classes) if c == k)

    def of_class_at_least(self, k: int) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.classes) if c >= k)


@dataclass(frozen=True)
class ResourceHierarchy:
    """R_0 superset of ... superset of R_d with per-level survival 1/ell."""

    levels: tuple[tuple[int, ...], ...]
    ell: int
    d: int
    seed: RngSeed

    def level_mask(self, k: int) -> int:
        m = 0
        for r in self.levels[k]:
            m |= 1 << r
        return m


def sample_hierarchy(gh: GroupedHypergraph, seed,
                     classes: Optional[SizeClasses] = None,
                     ell: Optional[int] = None) -> ResourceHierarchy:
    """Draw the nested levels; reproducible from the seed."""
    seed = as_seed(seed)
    ell = (ell if ell is not None else gh.ell)
    if ell < 2:
        raise ValueError("ell must be at least 2")
    if classes is None:
        classes = SizeClasses.from_hypergraph(gh, ell)
    d = classes.depth
    levels = [tuple(sorted(gh.resources))]
    for k in range(1, d + 1):
        rng = seed.derive("hierarchy-level", k).rng()
        keep = tuple(r for r in levels[-1] if rng.random() < 1.0 / ell)
        levels.append(keep)
    return ResourceHierarchy(levels=tuple(levels), ell=ell, d=d, seed=seed)


@dataclass(frozen=True)
class PropertyReport:
    ok: bool
    witnesses: tuple


def _masks(classes: SizeClasses) -> list[int]:
    out = []
    for c in classes.configs:
        m = 0
        for r in c.resources:
            m |= 1 << r
        out.append(m)
    return out


def check_size_property(hier: ResourceHierarchy, classes: SizeClasses) -> PropertyReport:
    """|R_k n C| within [1/2, 3/2] * ell^-k * |C| for every class->=k configuration."""
    masks = _masks(classes)
    bad = []
    for k in range(0, hier.d + 1):
        if k == 0:
            continue  # R_0 = R makes the level-0 bound an identity
        lm = hier.level_mask(k)
        scale = Fraction(1, hier.ell ** k)
        for i in classes.of_class_at_least(k):
            size = classes.configs[i].size
            inter = (masks[i] & lm).bit_count()
            low = Fraction(1, 2) * scale * size
            high = Fraction(3, 2) * scale * size
            if not (low <= inter <= high):
                bad.append((k, i, inter, float(low), float(high)))
    return PropertyReport(ok=not bad, witnesses=tuple(bad))


def check_overlap_property(hier: ResourceHierarchy, classes: SizeClasses) -> PropertyReport:
    """Thinned same-class intersections stay within 10 ell^-k of their own scale."""
    masks = _masks(classes)
    bad = []
    for k in range(0, hier.d + 1):
        lm = hier.level_mask(k)
        peers = classes.of_class(k)
        for i in classes.of_class_at_least(k):
            lhs = 0
            raw = 0
            for j in peers:
                inter = masks[j] & masks[i]
                raw += inter.bit_count()
                lhs += (inter & lm).bit_count()
            size = classes.configs[i].size
            rhs = Fraction(10, hier.ell ** k) * (size + raw)
            if lhs > rhs:
                bad.append((k, i, lhs, float(rhs)))
    return PropertyReport(ok=not bad, witnesses=tuple(bad))


def chernoff_tail(mu, delta, a, side: str):
    """Tail bound for sums of independent variables in [0, a] with mean mu:
    exp(-min(d, d^2) mu / (3a)) above, exp(-d^2 mu / (2a)) below."""
    mu = float(mu)
    delta = float(delta)
    a = float(a)
    if mu < 0 or a <= 0:
        raise ValueError("need mu >= 0 and a > 0")
    if side == "upper":
        if delta <= 0:
            raise ValueError("upper tail needs delta > 0")
        return math.exp(-min(delta, delta * delta) * mu / (3 * a))
    if side == "lower":
        if not (0 < delta < 1):
            raise ValueError("lower tail needs delta in (0, 1)")
        return math.exp(-delta * delta * mu / (2 * a))
    raise ValueError("side must be 'upper' or 'lower'")


class ResampleExhausted(Exception):
    def __init__(self, message, witnesses):
        super().__init__(message)
        self.witnesses = witnesses


def resample_until_good(gh: GroupedHypergraph, max_tries: int, seed,
                        classes: Optional[SizeClasses] = None,
                        ell: Optional[int] = None) -> tuple[ResourceHierarchy, int]:
    """Redraw hierarchies until both property checks pass; returns the passing
    hierarchy and the number of tries used."""
    if max_tries < 1:
        raise ValueError("max_tries must be at least 1")
    seed = as_seed(seed)
    ell = (ell if ell is not None else gh.ell)
    if classes is None:
        classes = SizeClasses.from_hypergraph(gh, ell)
    worst = ()
    for t in range(1, max_tries + 1):
        hier = sample_hierarchy(gh, seed.derive("hier-try", t), classes=classes, ell=ell)
        size_rep = check_size_property(hier, classes)
        over_rep = check_overlap_property(hier, classes)
        if size_rep.ok and over_rep.ok:
            return hier, t
        worst = size_rep.witnesses + over_rep.witnesses
    raise ResampleExhausted(f"no good hierarchy in {max_tries} tries", worst)
