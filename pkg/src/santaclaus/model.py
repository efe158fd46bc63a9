"""Shared domain types: instances, hypergraphs, matchings, seeds, JSON forms.

Ids are dense 0-based integers and every stored id collection is a sorted
tuple, so that all stages iterate deterministically and seeded runs are
reproducible bit for bit.  Weights and relaxation factors are exact rationals;
floats appear only at LP boundaries.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .submodular import ValuationOracle


# ---------------------------------------------------------------------------
# randomness plumbing


@dataclass(frozen=True)
class RngSeed:
    """64-bit seed; identical seeds reproduce identical runs bit for bit."""

    seed: int

    def derive(self, *labels) -> "RngSeed":
        """A stable child seed for an independent subtask."""
        text = f"{self.seed}|" + "|".join(str(x) for x in labels)
        digest = hashlib.sha256(text.encode()).digest()
        return RngSeed(int.from_bytes(digest[:8], "big"))

    def rng(self) -> random.Random:
        return random.Random(self.seed)


def as_seed(seed: Union[int, RngSeed]) -> RngSeed:
    return seed if isinstance(seed, RngSeed) else RngSeed(int(seed))


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class SantaInstance:
    """Restricted-assignment instance: m players, n resources, one global
    monotone submodular valuation; player i only values resources in gamma[i]."""

    m: int
    n: int
    gamma: tuple[tuple[int, ...], ...]
    valuation: ValuationOracle

    @staticmethod
    def make(gamma: Sequence[Iterable[int]], valuation: ValuationOracle,
             n: Optional[int] = None) -> "SantaInstance":
        g = tuple(tuple(sorted(set(s))) for s in gamma)
        if n is None:
            n = valuation.n
        return SantaInstance(m=len(g), n=n, gamma=g, valuation=valuation)

    def value(self, player: int, S: Iterable[int]) -> Fraction:
        allowed = set(self.gamma[player])
        return self.valuation.eval([j for j in S if j in allowed])


@dataclass(frozen=True)
class LinearSantaInstance:
    """Max-min allocation with arbitrary per-player linear utilities."""

    m: int
    n: int
    values: tuple[tuple[Fraction, ...], ...]  # values[i][j]

    @staticmethod
    def make(values: Sequence[Sequence]) -> "LinearSantaInstance":
        rows = tuple(tuple(Fraction(v) for v in row) for row in values)
        n = len(rows[0]) if rows else 0
        if any(len(r) != n for r in rows):
            raise ValueError("ragged value matrix")
        return LinearSantaInstance(m=len(rows), n=n, values=rows)

    def value(self, player: int, S: Iterable[int]) -> Fraction:
        row = self.values[player]
        return sum((row[j] for j in S), Fraction(0))


# ---------------------------------------------------------------------------
# hypergraphs


@dataclass(frozen=True)
class Configuration:
    """A hyperedge: one player plus a distinct set of resources."""

    player: int
    resources: tuple[int, ...]

    @staticmethod
    def make(player: int, resources: Iterable[int]) -> "Configuration":
        rs = tuple(sorted(resources))
        if len(set(rs)) != len(rs):
            raise ValueError("duplicate resource in configuration")
        return Configuration(player=player, resources=rs)

    @property
    def size(self) -> int:
        return len(self.resources)


def resource_mask(resources: Iterable[int]) -> int:
    m = 0
    for r in resources:
        m |= 1 << r
    return m


@dataclass(frozen=True)
class WeightedHypergraph:
    """Configurations with per-resource rational weights.

    After normalization every configuration's weights sum to exactly 1 and the
    weight keys coincide with its resource set.
    """

    players: int
    resources: tuple[int, ...]
    configurations: tuple[Configuration, ...]
    weights: tuple[Mapping[int, Fraction], ...]

    def player_configs(self, player: int) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.configurations) if c.player == player)

    def total_weight(self, idx: int) -> Fraction:
        return sum(self.weights[idx].values(), Fraction(0))

    def validate(self) -> list[str]:
        out = []
        for i, (c, w) in enumerate(zip(self.configurations, self.weights)):
            if set(w.keys()) != set(c.resources):
                out.append(f"config {i}: weight keys do not match resources")
            if any(v < 0 for v in w.values()):
                out.append(f"config {i}: negative weight")
            if not (0 <= c.player < self.players):
                out.append(f"config {i}: player id out of range")
            if any(r not in set(self.resources) for r in c.resources):
                out.append(f"config {i}: resource id not in universe")
        return out


@dataclass(frozen=True)
class GroupedHypergraph:
    """Unweighted hypergraph whose players are partitioned into groups.

    Each group carries consistent sets of configurations, one configuration
    per group member.  In the regular case every group has exactly `ell`
    consistent sets and no resource appears in more than `ell` configurations;
    generators for the matching-only problem may produce ragged (non-regular)
    groups, which the validator reports when regularity is demanded.
    """

    resources: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]
    consistent_sets: tuple[tuple[tuple[Configuration, ...], ...], ...]
    ell: int
    origins: Optional[tuple[tuple[int, ...], ...]] = None  # per group: set index -> source config

    @property
    def num_players(self) -> int:
        return sum(len(g) for g in self.groups)

    def player_location(self, player: int) -> tuple[int, int]:
        for gi, g in enumerate(self.groups):
            for mi, p in enumerate(g):
                if p == player:
                    return gi, mi
        raise ValueError(f"unknown player {player}")

    def player_configs(self, player: int) -> tuple[Configuration, ...]:
        gi, mi = self.player_location(player)
        return tuple(cs[mi] for cs in self.consistent_sets[gi])

    def flat_configs(self) -> tuple[Configuration, ...]:
        """All configurations in a fixed (group, set, member) order."""
        out = []
        for sets in self.consistent_sets:
            for cs in sets:
                out.extend(cs)
        return tuple(out)

    def flat_keys(self) -> tuple[tuple[int, int, int], ...]:
        out = []
        for gi, sets in enumerate(self.consistent_sets):
            for ti, cs in enumerate(sets):
                for mi in range(len(cs)):
                    out.append((gi, ti, mi))
        return tuple(out)

    def resource_degrees(self) -> dict[int, int]:
        deg: dict[int, int] = {}
        for c in self.flat_configs():
            for r in c.resources:
                deg[r] = deg.get(r, 0) + 1
        return deg

    def validate(self, require_regular: bool = True) -> list[str]:
        out = []
        seen = set()
        for gi, g in enumerate(self.groups):
            for p in g:
                if p in seen:
                    out.append(f"player {p} appears in two groups")
                seen.add(p)
            for ti, cs in enumerate(self.consistent_sets[gi]):
                if len(cs) != len(g):
                    out.append(f"group {gi} set {ti}: not one configuration per member")
                for mi, c in enumerate(cs):
                    if mi < len(g) and c.player != g[mi]:
                        out.append(f"group {gi} set {ti} member {mi}: player mismatch")
            if require_regular and len(self.consistent_sets[gi]) != self.ell:
                out.append(f"group {gi}: {len(self.consistent_sets[gi])} consistent sets, expected {self.ell}")
        universe = set(self.resources)
        for c in self.flat_configs():
            for r in c.resources:
                if r not in universe:
                    out.append(f"resource id {r} not in universe")
        for r, d in sorted(self.resource_degrees().items()):
            if d > self.ell:
                out.append(f"resource {r} appears in {d} > ell configurations")
        return out


# ---------------------------------------------------------------------------
# matchings


@dataclass(frozen=True)
class RelaxedMatching:
    """One selected configuration per player plus disjoint assigned subsets.

    chosen[i] indexes into player i's configuration list (for a grouped
    hypergraph that is the consistent-set index, equal across a group).
    alpha is the relaxation factor the matching claims to achieve.
    """

    chosen: tuple[int, ...]
    assigned: tuple[tuple[int, ...], ...]
    alpha: Fraction
    value: Optional[Fraction] = None


Hypergraph = Union[WeightedHypergraph, GroupedHypergraph]


def validate_instance(inst: SantaInstance) -> list[str]:
    """Report every violated instance invariant; empty list means valid."""
    out = []
    if inst.m < 1:
        out.append("player count must be at least 1")
    if inst.n < 1:
        out.append("resource count must be at least 1")
    if len(inst.gamma) != inst.m:
        out.append("gamma length does not match player count")
    for i, g in enumerate(inst.gamma):
        if any(not (0 <= j < inst.n) for j in g):
            out.append("resource id out of range")
            break
    if any(len(set(g)) != len(g) for g in inst.gamma):
        out.append("duplicate resource id in gamma")
    if inst.valuation.n < inst.n:
        out.append("valuation ground set smaller than resource count")
    try:
        if inst.valuation.eval(()) != 0:
            out.append("valuation nonzero on empty set")
    except Exception as exc:  # oracle must at least answer the empty query
        out.append(f"valuation oracle failed on empty set: {exc}")
    return out


def _floor_quota(size: int, alpha: Fraction) -> int:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return int(Fraction(size) / alpha)


def verify_relaxed_matching(h: Hypergraph, m: RelaxedMatching) -> tuple[bool, Optional[str]]:
    """Check disjointness, coverage thresholds, and group consistency.

    Pure function: returns (ok, first violation).  Structural problems such as
    out-of-range indices raise instead of reporting.
    """
    if isinstance(h, GroupedHypergraph):
        players = h.num_players
    else:
        players = h.players
    if len(m.chosen) != players or len(m.assigned) != players:
        raise ValueError("matching arity does not match player count")

    seen: set[int] = set()
    for i in range(players):
        for r in m.assigned[i]:
            if r in seen:
                return False, f"duplicate resource {r}"
            seen.add(r)

    if isinstance(h, GroupedHypergraph):
        for gi, g in enumerate(h.groups):
            idxs = {m.chosen[p] for p in g}
            if len(idxs) > 1:
                return False, f"group {gi} selections are inconsistent"
            t = m.chosen[g[0]] if g else 0
            if g and not (0 <= t < len(h.consistent_sets[gi])):
                raise ValueError(f"chosen index {t} out of range for group {gi}")
        for i in range(players):
            gi, mi = h.player_location(i)
            cfg = h.consistent_sets[gi][m.chosen[i]][mi]
            got = set(m.assigned[i])
            if not got <= set(cfg.resources):
                return False, f"player {i} assigned a resource outside its configuration"
            if len(got) < _floor_quota(cfg.size, m.alpha):
                return False, (f"player {i} received {len(got)} < "
                               f"floor({cfg.size}/alpha) resources")
        return True, None

    # weighted case
    for i in range(players):
        cfgs = h.player_configs(i)
        if not (0 <= m.chosen[i] < len(cfgs)):
            raise ValueError(f"chosen index {m.chosen[i]} out of range for player {i}")
        idx = cfgs[m.chosen[i]]
        cfg = h.configurations[idx]
        w = h.weights[idx]
        got = set(m.assigned[i])
        if not got <= set(cfg.resources):
            return False, f"player {i} assigned a resource outside its configuration"
        total = sum(w.values(), Fraction(0))
        covered = sum((w[r] for r in got), Fraction(0))
        if covered * m.alpha < total:
            return False, (f"player {i} covered weight {covered} below "
                           f"(1/alpha) of total {total}")
    return True, None


# ---------------------------------------------------------------------------
# JSON encoding


def _frac_to_json(v: Fraction) -> list:
    return [v.numerator, v.denominator]


def _frac_from_json(v) -> Fraction:
    if isinstance(v, list):
        return Fraction(v[0], v[1])
    return Fraction(v)


def instance_to_json(inst: Union[SantaInstance, LinearSantaInstance, GroupedHypergraph,
                                 WeightedHypergraph],
                     kind: Optional[str] = None) -> dict:
    if isinstance(inst, SantaInstance):
        return {
            "type": kind or "santa",
            "players": inst.m,
            "resources": inst.n,
            "gamma": [list(g) for g in inst.gamma],
            "valuation": inst.valuation.to_json(),
        }
    if isinstance(inst, LinearSantaInstance):
        return {
            "type": "santa-linear-general",
            "players": inst.m,
            "resources": inst.n,
            "values": [[_frac_to_json(v) for v in row] for row in inst.values],
        }
    if isinstance(inst, GroupedHypergraph):
        return {
            "type": "hypergraph-grouped",
            "players": inst.num_players,
            "resources": list(inst.resources),
            "groups": [list(g) for g in inst.groups],
            "ell": inst.ell,
            "configurations": [
                [[{"player": c.player, "resources": list(c.resources)} for c in cs]
                 for cs in sets]
                for sets in inst.consistent_sets
            ],
        }
    if isinstance(inst, WeightedHypergraph):
        return {
            "type": "hypergraph-weighted",
            "players": inst.players,
            "resources": list(inst.resources),
            "configurations": [
                {"player": c.player, "resources": list(c.resources),
                 "weights": {str(r): _frac_to_json(w) for r, w in sorted(ws.items())}}
                for c, ws in zip(inst.configurations, inst.weights)
            ],
        }
    raise TypeError(f"cannot serialize {type(inst)}")


def instance_from_json(obj: dict):
    t = obj["type"]
    if t.startswith("santa-linear-general"):
        return LinearSantaInstance(
            m=obj["players"], n=obj["resources"],
            values=tuple(tuple(_frac_from_json(v) for v in row) for row in obj["values"]))
    if t.startswith("santa"):
        return SantaInstance(
            m=obj["players"], n=obj["resources"],
            gamma=tuple(tuple(sorted(g)) for g in obj["gamma"]),
            valuation=ValuationOracle.from_json(obj["valuation"]))
    if t == "hypergraph-grouped" or t == "hypergraph-regular":
        sets = tuple(
            tuple(tuple(Configuration.make(c["player"], c["resources"]) for c in cs)
                  for cs in group_sets)
            for group_sets in obj["configurations"])
        return GroupedHypergraph(
            resources=tuple(obj["resources"]) if isinstance(obj["resources"], list)
            else tuple(range(obj["resources"])),
            groups=tuple(tuple(g) for g in obj["groups"]),
            consistent_sets=sets,
            ell=obj["ell"])
    if t == "hypergraph-weighted":
        cfgs, weights = [], []
        for c in obj["configurations"]:
            cfgs.append(Configuration.make(c["player"], c["resources"]))
            weights.append({int(r): _frac_from_json(w) for r, w in c["weights"].items()})
        return WeightedHypergraph(
            players=obj["players"],
            resources=tuple(obj["resources"]) if isinstance(obj["resources"], list)
            else tuple(range(obj["resources"])),
            configurations=tuple(cfgs),
            weights=tuple(weights))
    raise ValueError(f"unknown instance type {t}")


def matching_to_json(m: RelaxedMatching) -> dict:
    return {
        "chosen": list(m.chosen),
        "assigned": [list(a) for a in m.assigned],
        "alpha": _frac_to_json(m.alpha),
        "value": None if m.value is None else _frac_to_json(m.value),
    }


def matching_from_json(obj: dict) -> RelaxedMatching:
    return RelaxedMatching(
        chosen=tuple(obj["chosen"]),
        assigned=tuple(tuple(a) for a in obj["assigned"]),
        alpha=_frac_from_json(obj["alpha"]),
        value=None if obj.get("value") is None else _frac_from_json(obj["value"]))
