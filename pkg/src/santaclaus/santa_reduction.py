"""Reductions between linear max-min allocation and hypergraph matching.

matching_to_santa replaces each hypergraph player having t edges by t
allocation players sharing t-1 full-value private resources, so exactly one
of them must live off the edge resources.  santa_to_matching runs the
four-step chain: geometric value rounding, bucketing into iterated-log value
ranges, bundling each range into a single per-player value, and a final
pairing gadget whose relaxed matchings map back to allocations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .model import (
    Configuration,
    GroupedHypergraph,
    LinearSantaInstance,
    RelaxedMatching,
)
from .oracles import exact_min_alpha, exact_santa_opt


def log_star(x) -> int:
    """Iterated base-2 logarithm count; 1 for arguments at most 2."""
    x = float(x)
    if x <= 2:
        return 1
    return 1 + log_star(math.log2(x))


def iter_log_chain(x) -> list[float]:
    """[x, log x, log log x, ...] down to the first value at most 2."""
    chain = [float(x)]
    while chain[-1] > 2:
        chain.append(math.log2(chain[-1]))
    return chain


def _pow2_floor(v: Fraction) -> Fraction:
    if v <= 0:
        raise ValueError("positive value required")
    if v >= 1:
        return Fraction(1)
    s = 0
    while (v.numerator << s) < v.denominator:
        s += 1
    return Fraction(1, 1 << s)


def _ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


# ---------------------------------------------------------------------------
# matchings -> allocation


@dataclass(frozen=True)
class MatchingSantaMapper:
    hypergraph: GroupedHypergraph
    instance: LinearSantaInstance
    player_of: tuple[tuple[int, int], ...]   # santa player -> (hyper player, edge index)
    resource_of: tuple[int, ...]             # santa resource -> hyper resource (or -1)
    privates: tuple[tuple[int, ...], ...]    # per hyper player: private santa resources
    edges: tuple[tuple[Configuration, ...], ...]

    def to_santa_solution(self, m: RelaxedMatching) -> tuple[tuple[int, ...], ...]:
        """An assignment where the selected edge's player lives off edge
        resources and its siblings take one private resource each."""
        hyper_players = len(self.edges)
        rmap = {u: s for s, u in enumerate(self.resource_of) if u >= 0}
        out: list[list[int]] = [[] for _ in range(self.instance.m)]
        sidx = {pe: s for s, pe in enumerate(self.player_of)}
        for v in range(hyper_players):
            t = m.chosen[v]
            out[sidx[(v, t)]] = sorted(rmap[u] for u in m.assigned[v])
            others = [e for e in range(len(self.edges[v])) if e != t]
            for priv, e in zip(self.privates[v], others):
                out[sidx[(v, e)]] = [priv]
        return tuple(tuple(rs) for rs in out)

    def to_matching(self, solution: Sequence[Sequence[int]]) -> RelaxedMatching:
        """Pick, per hypergraph player, an allocation player living purely off
        edge resources; its holdings become the assigned edge subset."""
        hyper_players = len(self.edges)
        chosen = [0] * hyper_players
        assigned: list[tuple[int, ...]] = [()] * hyper_players
        sidx = {pe: s for s, pe in enumerate(self.player_of)}
        private_sets = {v: set(ps) for v, ps in enumerate(self.privates)}
        for v in range(hyper_players):
            best = None
            for e in range(len(self.edges[v])):
                held = set(solution[sidx[(v, e)]])
                if held & private_sets[v]:
                    continue
                edge_rs = set(self.edges[v][e].resources)
                got = {self.resource_of[r] for r in held
                       if self.resource_of[r] >= 0} & edge_rs
                score = (len(got), -e)
                if best is None or score > best[0]:
                    best = (score, e, got)
            if best is None:
                raise ValueError(f"no private-free allocation player for vertex {v}")
            _, e, got = best
            chosen[v] = e
            assigned[v] = tuple(sorted(got))
        sizes = [self.edges[v][chosen[v]].size for v in range(hyper_players)]
        from .reconstruct import achieved_alpha
        alpha = achieved_alpha(sizes, [len(a) for a in assigned])
        return RelaxedMatching(chosen=tuple(chosen), assigned=tuple(assigned),
                               alpha=alpha)


def matching_to_santa(h: GroupedHypergraph) -> tuple[LinearSantaInstance,
                                                     MatchingSantaMapper]:
    """Linear allocation instance whose solutions encode relaxed matchings."""
    hyper_players = h.num_players
    edges = tuple(h.player_configs(v) for v in range(hyper_players))
    player_of = []
    for v in range(hyper_players):
        for e in range(len(edges[v])):
            player_of.append((v, e))
    resource_of = list(range(len(h.resources)))
    res_index = {u: k for k, u in enumerate(h.resources)}
    privates = []
    for v in range(hyper_players):
        mine = []
        for _ in range(max(0, len(edges[v]) - 1)):
            mine.append(len(resource_of))
            resource_of.append(-1)
        privates.append(tuple(mine))

    n_santa = len(resource_of)
    values = [[Fraction(0)] * n_santa for _ in player_of]
    for s, (v, e) in enumerate(player_of):
        cfg = edges[v][e]
        if cfg.size == 1:
            values[s][res_index[cfg.resources[0]]] = Fraction(1)
        else:
            for u in cfg.resources:
                values[s][res_index[u]] = Fraction(1, cfg.size - 1)
        for priv in privates[v]:
            values[s][priv] = Fraction(1)
    inst = LinearSantaInstance.make(values) if player_of else \
        LinearSantaInstance(m=0, n=n_santa, values=())
    mapper = MatchingSantaMapper(hypergraph=h, instance=inst,
                                 player_of=tuple(player_of),
                                 resource_of=tuple(resource_of),
                                 privates=tuple(privates), edges=edges)
    return inst, mapper


# ---------------------------------------------------------------------------
# allocation -> matchings


@dataclass
class SantaMatchingMapper:
    """Carries the four intermediate instances and maps matchings back."""

    original: LinearSantaInstance
    gh: GroupedHypergraph
    edges: tuple[tuple[Configuration, ...], ...]
    orig_players: int
    v1: dict                 # player -> {resource: rounded value}
    shared: dict             # (player, range k) -> shared resource id
    aux2: dict               # (player, range k) -> step-2 aux player id
    bundle_owner: dict       # step-3 aux player -> (owner, tuple of bundle resources)
    bundle_res: dict         # step-3 aux resource -> step-3 aux player
    bundle_spec: dict        # step-3 aux player -> (value s, batch size b, range k)
    frac_value: dict         # player -> its single fractional value in the final scale
    gadget_pairs: dict       # (player, t) -> (u player, w' resource)
    big_edge: dict           # player -> edge index of the w' hyperedge (if any)
    one_edges: dict          # (player, edge index) -> final resource id
    santa3_players: int
    santa3_resources: int

    def _held_santa3(self, m: RelaxedMatching, p: int) -> set[int]:
        """Resources of the third-stage instance that player p's matched edge
        delivers: either its single full-value resource, or the bundle members
        collected by the gadget partners of its received pair resources."""
        t = m.chosen[p]
        cfg = self.edges[p][t]
        got = set(m.assigned[p])
        out: set[int] = set()
        if self.big_edge.get(p) == t:
            for w in got:
                u = self._pair_by_resource.get(w)
                if u is None:
                    continue
                ucfg = self.edges[u][m.chosen[u]]
                if ucfg.size == 1 and ucfg.resources[0] < self.santa3_resources \
                        and ucfg.resources[0] in set(m.assigned[u]):
                    out.add(ucfg.resources[0])
        elif cfg.size == 1 and cfg.resources[0] < self.santa3_resources:
            if cfg.resources[0] in got:
                out.add(cfg.resources[0])
        return out

    def assignment_from_matching(self, m: RelaxedMatching
                                 ) -> tuple[tuple[int, ...], ...]:
        a3: dict[int, set[int]] = {}
        for p in range(self.santa3_players):
            a3[p] = self._held_santa3(m, p)
        # collapse step-3 bundles
        a2: dict[int, set[int]] = {}
        for p in range(self.santa3_players):
            if p in self.bundle_owner:
                continue
            res: set[int] = set()
            for r in a3[p]:
                q = self.bundle_res.get(r)
                if q is None:
                    res.add(r)
                else:
                    res |= a3[q]
            a2[p] = res
        # collapse step-2 range buckets
        out: list[set[int]] = [set() for _ in range(self.orig_players)]
        shared_lookup = {rid: (i, k) for (i, k), rid in self.shared.items()}
        for i in range(self.orig_players):
            for r in a2.get(i, ()):
                if r in shared_lookup:
                    ik = shared_lookup[r]
                    aux = self.aux2[ik]
                    out[i] |= {x for x in a2.get(aux, ()) if x < self.original.n}
                elif r < self.original.n:
                    out[i].add(r)
        return tuple(tuple(sorted(rs)) for rs in out)

    def __post_init__(self):
        self._pair_by_resource = {w: u for (_, _t), (u, w) in self.gadget_pairs.items()}


def santa_to_matching(inst: LinearSantaInstance
                      ) -> tuple[GroupedHypergraph, SantaMatchingMapper]:
    """Four-step reduction of a (normalized) linear instance to matching."""
    m, n = inst.m, inst.n
    chain = iter_log_chain(2 * n)
    K = log_star(2 * n)

    # (1) power-of-two rounding; drop everything at or below 1/(2n)
    cutoff = Fraction(1, 2 * n)
    v1: dict[int, dict[int, Fraction]] = {}
    for i in range(m):
        row = {}
        for j in range(n):
            v = inst.values[i][j]
            if v <= 0:
                continue
            r = _pow2_floor(min(Fraction(1), v))
            if r > cutoff:
                row[j] = r
        v1[i] = row

    # (2) one iterated-log value range per auxiliary player
    def range_of(v: Fraction) -> int:
        if len(chain) < 2:
            return 0
        for k in range(len(chain) - 1):
            low = Fraction(1) / Fraction(chain[k])
            high = Fraction(1) / Fraction(chain[k + 1])
            if low < v <= high:
                return k
        return len(chain) - 2  # values up to 1/2 always land by here

    players2: list[int] = list(range(m))
    next_player = m
    next_resource = n
    v2: dict[int, dict[int, Fraction]] = {i: {} for i in range(m)}
    shared: dict[tuple[int, int], int] = {}
    aux2: dict[tuple[int, int], int] = {}
    for i in range(m):
        buckets: dict[int, dict[int, Fraction]] = {}
        for j, v in v1[i].items():
            if v == 1:
                v2[i][j] = Fraction(1)
            else:
                buckets.setdefault(range_of(v), {})[j] = v
        for k in sorted(buckets):
            a = next_player
            next_player += 1
            aux2[(i, k)] = a
            players2.append(a)
            sh = next_resource
            next_resource += 1
            shared[(i, k)] = sh
            v2[i][sh] = Fraction(1)
            v2[a] = dict(buckets[k])
            v2[a][sh] = Fraction(1)

    # (3) bundle each distinct fractional value into one per-player size
    v3: dict[int, dict[int, Fraction]] = {p: {} for p in v2}
    bundle_owner: dict[int, tuple[int, tuple[int, ...]]] = {}
    bundle_res: dict[int, int] = {}
    bundle_spec: dict[int, tuple[Fraction, int, int]] = {}
    frac_value: dict[int, Fraction] = {}
    for p in sorted(v2):
        fracs: dict[Fraction, list[int]] = {}
        for r, v in v2[p].items():
            if v == 1:
                v3[p][r] = Fraction(1)
            else:
                fracs.setdefault(v, []).append(r)
        if not fracs:
            continue
        ks = [range_of(v) for v in fracs]
        k = min(ks)  # all values of one player share a range by construction
        lk1 = Fraction(chain[k + 1])
        vp = Fraction(2) / (K * lk1)
        frac_value[p] = vp
        for s in sorted(fracs):
            rs = sorted(fracs[s])
            b = _ceil_frac(Fraction(1, 2) / (s * K * lk1))
            count = len(rs) // b
            for t in range(count):
                q = next_player
                next_player += 1
                w = next_resource
                next_resource += 1
                bundle_owner[q] = (p, tuple(rs))
                bundle_res[w] = q
                bundle_spec[q] = (s, b, k)
                v3[p][w] = vp
                v3[q] = {w: Fraction(1)}
                for j in rs:
                    v3[q][j] = Fraction(1, K * K * b)
                frac_value[q] = Fraction(1, K * K * b)

    # rescale by log*^2, capping at 1
    scale = K * K
    v4: dict[int, dict[int, Fraction]] = {}
    for p, row in v3.items():
        v4[p] = {r: min(Fraction(1), v * scale) for r, v in row.items()}
    for p in list(frac_value):
        fv = frac_value[p] * scale
        if fv >= 1:
            del frac_value[p]
        else:
            frac_value[p] = fv

    santa3_players = next_player
    santa3_resources = next_resource

    # (4) the pairing-gadget hypergraph
    edges: list[list[Configuration]] = [[] for _ in range(santa3_players)]
    one_edges: dict[tuple[int, int], int] = {}
    big_edge: dict[int, int] = {}
    gadget_pairs: dict[tuple[int, int], tuple[int, int]] = {}
    gadget_players: list[tuple[int, int]] = []  # (owner, t)
    for p in range(santa3_players):
        row = v4.get(p, {})
        vp = frac_value.get(p)
        for r in sorted(r for r, v in row.items() if v == 1):
            one_edges[(p, len(edges[p]))] = r
            edges[p].append(Configuration.make(p, [r]))
        if vp is not None:
            frac_rs = sorted(r for r, v in row.items() if v == vp)
            if frac_rs:
                q_count = _ceil_frac(Fraction(1) / vp)
                ws = []
                for t in range(q_count):
                    u = next_player
                    next_player += 1
                    w = next_resource
                    next_resource += 1
                    gadget_pairs[(p, t)] = (u, w)
                    gadget_players.append((p, t))
                    ws.append(w)
                big_edge[p] = len(edges[p])
                edges[p].append(Configuration.make(p, ws))
        if not edges[p]:
            edges[p].append(Configuration.make(p, []))  # valueless player

    while len(edges) < next_player:
        edges.append([])
    for (p, t), (u, w) in sorted(gadget_pairs.items()):
        edges[u].append(Configuration.make(u, [w]))
        vp = frac_value[p]
        frac_rs = sorted(r for r, v in v4.get(p, {}).items() if v == vp)
        for j in frac_rs:
            edges[u].append(Configuration.make(u, [j]))

    total_players = next_player
    groups = tuple((p,) for p in range(total_players))
    consistent = tuple(tuple((c,) for c in edges[p]) for p in range(total_players))
    max_sets = max(len(e) for e in edges)
    deg: dict[int, int] = {}
    for es in edges:
        for c in es:
            for r in c.resources:
                deg[r] = deg.get(r, 0) + 1
    ell = max(max_sets, max(deg.values(), default=1))
    gh = GroupedHypergraph(resources=tuple(range(next_resource)), groups=groups,
                           consistent_sets=consistent, ell=ell)
    mapper = SantaMatchingMapper(
        original=inst, gh=gh, edges=tuple(tuple(e) for e in edges),
        orig_players=m, v1=v1, shared=shared, aux2=aux2,
        bundle_owner=bundle_owner, bundle_res=bundle_res,
        bundle_spec=bundle_spec,
        frac_value=frac_value, gadget_pairs=gadget_pairs, big_edge=big_edge,
        one_edges=one_edges, santa3_players=santa3_players,
        santa3_resources=santa3_resources)
    return gh, mapper


def normalize(inst: LinearSantaInstance, guess: Fraction) -> LinearSantaInstance:
    return LinearSantaInstance(
        m=inst.m, n=inst.n,
        values=tuple(tuple(v / guess for v in row) for row in inst.values))


def solve_linear_santa(inst: LinearSantaInstance,
                       matcher: Optional[Callable[[GroupedHypergraph],
                                                  RelaxedMatching]] = None,
                       guesses: Optional[Sequence[Fraction]] = None
                       ) -> tuple[tuple[tuple[int, ...], ...], Fraction]:
    """Guess the optimum over a geometric grid, reduce, match, map back, and
    keep the best reconstruction."""
    if matcher is None:
        matcher = lambda gh: exact_min_alpha(gh).matching
    if guesses is None:
        hi = max((sum(row) for row in inst.values), default=Fraction(0))
        if hi <= 0:
            return tuple(() for _ in range(inst.m)), Fraction(0)
        guesses = [hi / (Fraction(2) ** k) for k in range(0, 12)]
    best = (tuple(() for _ in range(inst.m)), Fraction(-1))
    for g in guesses:
        if g <= 0:
            continue
        gh, mapper = santa_to_matching(normalize(inst, Fraction(g)))
        try:
            matching = matcher(gh)
        except Exception:
            continue  # a guess may blow the matcher's enumeration budget
        assignment = mapper.assignment_from_matching(matching)
        value = min((inst.value(i, assignment[i]) for i in range(inst.m)),
                    default=Fraction(0))
        if value > best[1]:
            best = (assignment, value)
    return best


@dataclass(frozen=True)
class RatioAudit:
    opt: Fraction
    achieved: Fraction
    ratio: Fraction
    bound: float  # (2 log*(2n))^2


def composed_approx_ratio_audit(inst: LinearSantaInstance,
                                matcher: Optional[Callable[[GroupedHypergraph],
                                                           RelaxedMatching]] = None,
                                guesses: Optional[Sequence[Fraction]] = None
                                ) -> RatioAudit:
    """Exact optimum over the reduce-match-reconstruct chain; the default
    matcher is exact (factor 1).  Reports opt / achieved."""
    opt = exact_santa_opt(inst).value
    bound = float((2 * log_star(2 * inst.n)) ** 2)
    if opt <= 0:
        return RatioAudit(opt=opt, achieved=Fraction(0), ratio=Fraction(1),
                          bound=bound)
    if guesses is None:
        guesses = [opt]
    assignment, achieved = solve_linear_santa(inst, matcher=matcher,
                                              guesses=guesses)
    if achieved <= 0:
        raise AssertionError("chain produced a zero-value reconstruction")
    return RatioAudit(opt=opt, achieved=achieved, ratio=opt / achieved,
                      bound=bound)
