"""Cluster construction from a fractional LP solution, and cluster sampling.

Configurations holding a fat resource collapse to that single resource; the
resulting player/fat-resource graph is made acyclic by cycle canceling, then
pruned so every surviving fat resource has degree exactly two.  Each final
tree is a cluster: whichever member is later chosen as representative, the
remaining members can all be matched to distinct fat resources inside the
tree.  Every cluster retains at least half a unit of thin configurations,
which quartering turns into two units at a fifth of the value, ready for
sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

from .configlp import FractionalSolution
from .model import Configuration, SantaInstance, as_seed
from .submodular import ValuationOracle


class StructuralError(Exception):
    pass


class SamplingFailed(Exception):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class FatThinSplit:
    threshold: Fraction
    fat: tuple[int, ...]
    thin: tuple[int, ...]


def split_fat_thin(inst: SantaInstance, t_star, alpha) -> FatThinSplit:
    """Fat resources have singleton value at or above T*/(100 alpha)."""
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    threshold = Fraction(t_star) / (100 * Fraction(alpha))
    fat, thin = [], []
    for j in range(inst.n):
        if inst.valuation.eval((j,)) >= threshold:
            fat.append(j)
        else:
            thin.append(j)
    return FatThinSplit(threshold=threshold, fat=tuple(fat), thin=tuple(thin))


ThinColumn = tuple[int, Configuration, Fraction]  # (owner player, config, mass)


@dataclass(frozen=True)
class ClusterDecomposition:
    clusters: tuple[tuple[int, ...], ...]
    q: tuple[int, ...]
    q_fat: tuple[tuple[int, int], ...]               # (player, fat resource) for Q
    trees: tuple[tuple[tuple[int, int], ...], ...]   # per cluster: (player, resource) edges
    thin: tuple[int, ...]
    thin_columns: tuple[tuple[ThinColumn, ...], ...]  # per cluster
    sampled: Optional[tuple[tuple[Configuration, ...], ...]] = None
    ell: Optional[int] = None
    scales: Optional[tuple[Fraction, ...]] = None

    def cluster_thin_mass(self, h: int) -> Fraction:
        return sum((m for _, _, m in self.thin_columns[h]), Fraction(0))


def _find_cycle(adj: dict) -> Optional[list]:
    """One cycle in an undirected simple graph as an ordered node list, or None.

    Consecutive list entries (and the closing last-to-first pair) are edges.
    """
    seen: set = set()
    for start in sorted(adj):
        if start in seen:
            continue
        parent = {start: None}
        stack = [start]
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            for v in sorted(adj[u]):
                if parent.get(u) == v or parent.get(v) == u:
                    continue  # the tree edge itself
                if v in parent:
                    # non-tree edge (u, v): close the cycle through the
                    # lowest common ancestor of u and v in the DFS tree
                    anc_u = []
                    x = u
                    while x is not None:
                        anc_u.append(x)
                        x = parent[x]
                    anc_set = set(anc_u)
                    path_v = [v]
                    x = v
                    while x not in anc_set:
                        x = parent[x]
                        path_v.append(x)
                    meet = path_v[-1]
                    path_u = anc_u[:anc_u.index(meet) + 1]
                    return path_u + list(reversed(path_v[:-1]))
                parent[v] = u
                stack.append(v)
    return None


def _components(adj: dict) -> list[list]:
    seen, comps = set(), []
    for start in sorted(adj):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


def build_clusters(inst: SantaInstance, sol: FractionalSolution,
                   split: FatThinSplit, tol: float = 1e-6) -> ClusterDecomposition:
    """Partition players into clusters plus a fat-served set Q.

    Follows the forest construction: collapse fat configurations to fat
    singletons, cancel cycles, strip degree-one fat resources into Q, then cut
    child edges of value at most 1/2 until every fat resource has degree two.
    """
    bad = sol.check_feasible(inst.m, tol)
    if bad:
        raise ValueError(f"infeasible fractional solution: {bad[0]}")
    fat_set = set(split.fat)

    # (a) fat-containing configurations become fat singletons
    fat_edges: dict[tuple[int, int], Fraction] = {}
    thin_cols: dict[tuple[int, tuple[int, ...]], Fraction] = {}
    for (i, cfg), w in zip(sol.columns, sol.x):
        if w <= 0:
            continue
        fat_in = [r for r in cfg.resources if r in fat_set]
        if fat_in:
            j = min(fat_in)
            fat_edges[(i, j)] = fat_edges.get((i, j), Fraction(0)) + w
        elif cfg.resources:
            key = (i, cfg.resources)
            thin_cols[key] = thin_cols.get(key, Fraction(0)) + w

    q_fat: dict[int, int] = {}

    def drop_player(i: int) -> None:
        for key in [k for k in fat_edges if k[0] == i]:
            del fat_edges[key]
        for key in [k for k in thin_cols if k[0] == i]:
            del thin_cols[key]

    def assign_forever(i: int, j: int) -> None:
        q_fat[i] = j
        drop_player(i)
        for key in [k for k in fat_edges if k[1] == j]:
            del fat_edges[key]

    def adjacency() -> dict:
        adj: dict = {}
        for (i, j) in fat_edges:
            adj.setdefault(("p", i), set()).add(("r", j))
            adj.setdefault(("r", j), set()).add(("p", i))
        return adj

    # LP tolerance can leave an aggregated edge a hair above 1; it is saturated
    for (i, j) in sorted(fat_edges):
        if (i, j) in fat_edges and fat_edges[(i, j)] >= 1:
            assign_forever(i, j)

    # (b) cancel cycles until the graph is a forest
    while True:
        cyc = _find_cycle(adjacency())
        if cyc is None:
            break
        edges = []
        for k in range(len(cyc)):
            a, b = cyc[k], cyc[(k + 1) % len(cyc)]
            pi = a[1] if a[0] == "p" else b[1]
            rj = a[1] if a[0] == "r" else b[1]
            edges.append((pi, rj))
        plus = edges[0::2]
        minus = edges[1::2]
        delta = min(min(1 - fat_edges[e] for e in plus),
                    min(fat_edges[e] for e in minus))
        for e in plus:
            fat_edges[e] += delta
        for e in minus:
            fat_edges[e] -= delta
        for e in sorted(set(edges)):
            if e not in fat_edges:
                continue
            if fat_edges[e] <= 0:
                del fat_edges[e]
            elif fat_edges[e] >= 1:
                assign_forever(*e)

    # (c) strip degree-one fat resources
    changed = True
    while changed:
        changed = False
        degree: dict[int, list[int]] = {}
        for (i, j) in fat_edges:
            degree.setdefault(j, []).append(i)
        for j, players in sorted(degree.items()):
            if len(players) == 1:
                assign_forever(players[0], j)
                changed = True
                break

    # (d) cut high-degree resources, keeping one designated root per tree
    roots: set[int] = set()
    for comp in _components(adjacency()):
        players = [n[1] for n in comp if n[0] == "p"]
        if players:
            roots.add(min(players))

    while True:
        adj = adjacency()
        over = sorted(j for (kind, j), nb in adj.items()
                      if kind == "r" and len(nb) >= 3)
        if not over:
            break
        target = ("r", over[0])
        comp_nodes = None
        for comp in _components(adj):
            if target in comp:
                comp_nodes = comp
                break
        root = min(n[1] for n in comp_nodes
                   if n[0] == "p" and n[1] in roots)
        # orient the tree away from the root player
        parent = {("p", root): None}
        order = [("p", root)]
        for u in order:
            for v in sorted(adj[u]):
                if v not in parent:
                    parent[v] = u
                    order.append(v)
        # deepest resource of degree >= 3: no such resource below it
        deep = None
        for node in reversed(order):
            if node[0] == "r" and len(adj[node]) >= 3:
                deep = node
                break
        j = deep[1]
        children = [v[1] for v in sorted(adj[deep]) if v != parent[deep]]
        cuttable = [(fat_edges[(i, j)], i) for i in children
                    if fat_edges[(i, j)] <= Fraction(1, 2)]
        if not cuttable:
            raise StructuralError(f"no cuttable child at fat resource {j}")
        _, child = min(cuttable)
        del fat_edges[(child, j)]
        roots.add(child)

    # (e) every remaining tree is a cluster
    adj = adjacency()
    cluster_players: list[list[int]] = []
    cluster_trees: list[list[tuple[int, int]]] = []
    in_tree: set[int] = set()
    for comp in _components(adj):
        players = sorted(n[1] for n in comp if n[0] == "p")
        resources = sorted(n[1] for n in comp if n[0] == "r")
        for (kind, j) in comp:
            if kind == "r" and len(adj[(kind, j)]) != 2:
                raise StructuralError(f"fat resource {j} has degree != 2 after pruning")
        if len(resources) != len(players) - 1:
            raise StructuralError("cluster tree is not spanning")
        cluster_players.append(players)
        cluster_trees.append(sorted((i, j) for (i, j) in fat_edges if i in players))
        in_tree.update(players)

    thin_owner_mass: dict[int, list] = {}
    for (i, rs), w in thin_cols.items():
        thin_owner_mass.setdefault(i, []).append((i, Configuration.make(i, rs), w))
    for i in range(inst.m):
        if i in q_fat or i in in_tree:
            continue
        cluster_players.append([i])
        cluster_trees.append([])
        in_tree.add(i)

    order = sorted(range(len(cluster_players)), key=lambda h: cluster_players[h])
    clusters = tuple(tuple(cluster_players[h]) for h in order)
    trees = tuple(tuple(cluster_trees[h]) for h in order)
    thin_columns = tuple(
        tuple(col for i in members for col in sorted(
            thin_owner_mass.get(i, ()), key=lambda c: (c[0], c[1].resources)))
        for members in clusters)

    return ClusterDecomposition(
        clusters=clusters,
        q=tuple(sorted(q_fat)),
        q_fat=tuple(sorted(q_fat.items())),
        trees=trees,
        thin=split.thin,
        thin_columns=thin_columns)


def representative_fat_matching(dec: ClusterDecomposition,
                                representatives: Sequence[int]) -> dict[int, int]:
    """Match every non-representative player to a distinct fat resource by
    rooting each cluster tree at its representative; Q players keep theirs."""
    matching = dict(dec.q_fat)
    for h, members in enumerate(dec.clusters):
        rep = representatives[h]
        if rep not in members:
            raise ValueError(f"representative {rep} not in cluster {h}")
        adj: dict = {}
        for (i, j) in dec.trees[h]:
            adj.setdefault(("p", i), set()).add(("r", j))
            adj.setdefault(("r", j), set()).add(("p", i))
        if not adj:
            continue
        parent = {("p", rep): None}
        order = [("p", rep)]
        for u in order:
            for v in sorted(adj[u]):
                if v not in parent:
                    parent[v] = u
                    order.append(v)
        for node in order:
            if node[0] != "r":
                continue
            children = [v for v in adj[node] if v != parent[node]]
            if len(children) != 1:
                raise StructuralError("fat resource without unique child")
            matching[children[0][1]] = node[1]
    return matching


def split_into_quarters(oracle: ValuationOracle, C: Configuration, t_star
                        ) -> tuple[Configuration, ...]:
    """Four disjoint minimal sub-configurations, each of value >= T*/5."""
    need = Fraction(t_star) / 5
    pool = list(C.resources)
    parts = []
    for _ in range(4):
        ev = oracle.evaluator()
        part: list[int] = []
        remaining = sorted(pool)
        while ev.value < need:
            gains = [(ev.gain(j), -j) for j in remaining]
            if not remaining:
                raise StructuralError(
                    "cannot reach a quarter of the target; fat resource leaked through")
            best = max(range(len(remaining)), key=lambda k: gains[k])
            j = remaining.pop(best)
            ev.add(j)
            part.append(j)
        # prune to a minimal subset
        while True:
            removable = None
            for j in sorted(part):
                rest = [r for r in part if r != j]
                if oracle.eval(rest) >= need:
                    removable = j
                    break
            if removable is None:
                break
            part.remove(removable)
        parts.append(Configuration.make(C.player, part))
        pool = [r for r in pool if r not in set(part)]
    return tuple(parts)


def quarter_thin_columns(oracle: ValuationOracle, dec: ClusterDecomposition,
                         t_star) -> tuple[tuple[ThinColumn, ...], ...]:
    """Replace each cluster column by its four quarters, keeping the mass."""
    out = []
    for cols in dec.thin_columns:
        quartered = []
        for (i, cfg, w) in cols:
            for part in split_into_quarters(oracle, cfg, t_star):
                quartered.append((i, part, w))
        out.append(tuple(quartered))
    return tuple(out)


def sample_cluster_configs(dec: ClusterDecomposition,
                           quartered: tuple[tuple[ThinColumn, ...], ...],
                           ell: int, seed, max_tries: int = 100) -> ClusterDecomposition:
    """Draw ell configurations per cluster i.i.d. from the quartered masses,
    retrying with fresh randomness while any thin resource lands in more than
    ell draws overall."""
    if ell < 1:
        raise ValueError("ell must be positive")
    seed = as_seed(seed)
    totals = [sum((w for _, _, w in cols), Fraction(0)) for cols in quartered]
    for h, total in enumerate(totals):
        if total <= 0 and quartered[h]:
            raise StructuralError(f"cluster {h} has zero thin mass")
        if total <= 0:
            raise StructuralError(f"cluster {h} has no thin configurations to sample")
    scales = tuple(Fraction(2) / total for total in totals)

    worst = None
    for attempt in range(max_tries):
        sampled: list[tuple[Configuration, ...]] = []
        for h, cols in enumerate(quartered):
            rng = seed.derive("cluster-sample", attempt, h).rng()
            weights = [float(w / totals[h]) for _, _, w in cols]
            cum = []
            acc = 0.0
            for w in weights:
                acc += w
                cum.append(acc)
            draws = []
            for _ in range(ell):
                u = rng.random() * cum[-1]
                k = 0
                while cum[k] < u:
                    k += 1
                draws.append(quartered[h][k][1])
            sampled.append(tuple(draws))
        counts: dict[int, int] = {}
        for cfgs in sampled:
            for cfg in cfgs:
                for r in cfg.resources:
                    counts[r] = counts.get(r, 0) + 1
        overloaded = {r: c for r, c in counts.items() if c > ell}
        if not overloaded:
            return replace(dec, sampled=tuple(sampled), ell=ell, scales=scales)
        worst = max(overloaded.items(), key=lambda kv: kv[1])
    raise SamplingFailed(
        f"sampling congestion above ell after {max_tries} tries",
        diagnostics={"worst_resource": worst, "ell": ell})
