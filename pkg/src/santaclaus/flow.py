"""Directed assignment networks and max-flow machinery.

A network has one node per configuration and per resource: source -> config
arcs carry the per-configuration demand, config -> resource arcs are unit, and
resource -> sink arcs carry the reuse bound gamma.  The unit middle layer
makes every maximum flow integral, so a saturating flow decomposes directly
into an assignment of resources to configurations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

AlphaFn = Union[Mapping[int, int], Callable[[int], int], Sequence[int]]


class ResampleNeeded(Exception):
    """A lift fell short of its floor; the caller should redraw the hierarchy."""

    def __init__(self, message: str, details=None):
        super().__init__(message)
        self.details = details


class _Dinic:
    """Blocking-flow max flow on an adjacency-list residual graph."""

    def __init__(self, n: int):
        self.n = n
        self.to: list[int] = []
        self.cap: list[int] = []
        self.head: list[list[int]] = [[] for _ in range(n)]

    def add_edge(self, u: int, v: int, cap: int) -> int:
        idx = len(self.to)
        self.to.append(v)
        self.cap.append(cap)
        self.head[u].append(idx)
        self.to.append(u)
        self.cap.append(0)
        self.head[v].append(idx + 1)
        return idx

    def max_flow(self, s: int, t: int) -> int:
        flow = 0
        INF = 1 << 60
        while True:
            level = [-1] * self.n
            level[s] = 0
            queue = [s]
            for u in queue:
                for e in self.head[u]:
                    v = self.to[e]
                    if self.cap[e] > 0 and level[v] < 0:
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[t] < 0:
                return flow
            it = [0] * self.n

            def dfs(u: int, f: int) -> int:
                if u == t:
                    return f
                while it[u] < len(self.head[u]):
                    e = self.head[u][it[u]]
                    v = self.to[e]
                    if self.cap[e] > 0 and level[v] == level[u] + 1:
                        d = dfs(v, min(f, self.cap[e]))
                        if d > 0:
                            self.cap[e] -= d
                            self.cap[e ^ 1] += d
                            return d
                    it[u] += 1
                return 0

            while True:
                pushed = dfs(s, INF)
                if pushed == 0:
                    break
                flow += pushed


def _alpha_of(alpha: AlphaFn, key: int) -> int:
    if callable(alpha):
        return int(alpha(key))
    return int(alpha[key])


@dataclass(frozen=True)
class AssignmentNetwork:
    """Network N(family, R', alpha, gamma); only positive-capacity arcs exist."""

    members: tuple[tuple[int, ...], ...]   # per config: resources of C intersected with R'
    capacities: tuple[int, ...]            # per config: source arc capacity alpha(C)
    resource_ids: tuple[int, ...]
    gamma: int


def build_network(family: Sequence[Iterable[int]], rprime: Iterable[int],
                  alpha: AlphaFn, gamma: int) -> AssignmentNetwork:
    rset = set(rprime)
    members = tuple(tuple(sorted(set(c) & rset)) for c in family)
    caps = tuple(max(0, _alpha_of(alpha, i)) for i in range(len(members)))
    used = sorted({r for ms in members for r in ms})
    return AssignmentNetwork(members=members, capacities=caps,
                             resource_ids=tuple(used), gamma=int(gamma))


@dataclass(frozen=True)
class FlowResult:
    value: int
    assigned: tuple[tuple[int, ...], ...]  # per config: resources carrying unit flow


def max_flow(net: AssignmentNetwork) -> FlowResult:
    """Integral maximum flow plus its decomposition into resource sets."""
    nc = len(net.members)
    nr = len(net.resource_ids)
    rindex = {r: i for i, r in enumerate(net.resource_ids)}
    s, t = 0, 1
    g = _Dinic(2 + nc + nr)
    mid_edges: list[list[tuple[int, int]]] = [[] for _ in range(nc)]
    for ci in range(nc):
        if net.capacities[ci] > 0:
            g.add_edge(s, 2 + ci, net.capacities[ci])
        for r in net.members[ci]:
            e = g.add_edge(2 + ci, 2 + nc + rindex[r], 1)
            mid_edges[ci].append((e, r))
    if net.gamma > 0:
        for ri in range(nr):
            g.add_edge(2 + nc + ri, t, net.gamma)
    val = g.max_flow(s, t)
    assigned = tuple(
        tuple(r for e, r in mid_edges[ci] if g.cap[e] == 0)
        for ci in range(nc))
    return FlowResult(value=val, assigned=assigned)


@dataclass(frozen=True)
class GoodAssignment:
    """Every configuration holds at least its demand from C cap R'; no resource
    is used more than gamma times in total."""

    received: tuple[tuple[int, ...], ...]
    demands: tuple[int, ...]
    gamma: int

    def multiplicity(self) -> dict[int, int]:
        mult: dict[int, int] = {}
        for rs in self.received:
            for r in rs:
                mult[r] = mult.get(r, 0) + 1
        return mult

    def check(self) -> list[str]:
        out = []
        for i, (rs, d) in enumerate(zip(self.received, self.demands)):
            if len(rs) < d:
                out.append(f"config {i} received {len(rs)} < demand {d}")
        for r, k in sorted(self.multiplicity().items()):
            if k > self.gamma:
                out.append(f"resource {r} used {k} > gamma times")
        return out


def _demand(alpha: AlphaFn, i: int, epsilon) -> int:
    a = _alpha_of(alpha, i)
    if epsilon == 0:
        return max(0, a)
    eps = Fraction(epsilon)
    return max(0, int((1 - eps) * a))


def good_assignment(family: Sequence[Iterable[int]], rprime: Iterable[int],
                    alpha: AlphaFn, gamma: int, epsilon=0) -> Optional[GoodAssignment]:
    """Find an assignment giving each configuration floor((1-eps)*alpha(C))
    resources of C cap R' with overall reuse at most gamma, or None.

    A single max flow on the demand network decides existence: the flow
    saturates every source arc exactly when the assignment exists, which is
    equivalent to the per-subfamily cut conditions.
    """
    demands = [_demand(alpha, i, epsilon) for i in range(len(family))]
    net = build_network(family, rprime, demands, gamma)
    res = max_flow(net)
    if res.value < sum(demands):
        return None
    return GoodAssignment(received=res.assigned, demands=tuple(demands), gamma=int(gamma))


def subfamily_flow_check(family: Sequence[Iterable[int]], rprime: Iterable[int],
                         alpha: AlphaFn, gamma: int, epsilon=0) -> bool:
    """Exhaustive subfamily version of the existence condition (tests only).

    For every subfamily F' the flow in N(F', R', alpha, gamma) must reach the
    summed reduced demands.  Exponential; refuses families larger than 6.
    """
    n = len(family)
    if n > 6:
        raise ValueError("subfamily check limited to families of size <= 6")
    demands = [_demand(alpha, i, epsilon) for i in range(n)]
    full_alpha = [max(0, _alpha_of(alpha, i)) for i in range(n)]
    for mask in range(1, 1 << n):
        idxs = [i for i in range(n) if mask >> i & 1]
        net = build_network([family[i] for i in idxs], rprime,
                            [full_alpha[i] for i in idxs], gamma)
        if max_flow(net).value < sum(demands[i] for i in idxs):
            return False
    return True


@dataclass(frozen=True)
class LiftResult:
    assignment: GoodAssignment
    alpha_prime: tuple[int, ...]
    scale: Fraction          # 1 when the target lift succeeded outright
    shortfall: bool


def _sigma_candidates(targets: Sequence[int]) -> list[Fraction]:
    cands = {Fraction(1)}
    for a in targets:
        for t in range(1, a + 1):
            cands.add(Fraction(t, a))
    return sorted(cands)


def lift_level(family: Sequence[Iterable[int]], hier, k: int, alpha: AlphaFn,
               gamma: int, prev: Optional[GoodAssignment], *,
               epsilon=None, profile: str = "practical",
               floor_alpha: int = 0) -> LiftResult:
    """Expand a good assignment from level k+1 to level k.

    Demands scale by ell (the per-level thinning factor), reduced by epsilon
    slack; on shortfall a binary search finds the largest uniform scale that
    still admits an assignment.  If any configuration would fall below
    floor_alpha, raise ResampleNeeded instead of returning junk.
    """
    ell = hier.ell
    n0 = max(2, len(hier.levels[0]))
    if epsilon is None:
        epsilon = Fraction(1, max(2, _ilog2(n0)))
    rk = hier.levels[k]
    alphas = [max(0, _alpha_of(alpha, i)) for i in range(len(family))]
    if prev is not None and len(prev.received) != len(family):
        raise ValueError("previous assignment does not match family")
    if not (1 <= gamma <= ell):
        raise ValueError("gamma must lie in {1, ..., ell}")
    if profile == "theory":
        for i, a in enumerate(alphas):
            if not (ell ** 3 / 1000 <= a <= len(hier.levels[0])):
                raise ValueError(f"theory profile demand bound violated for config {i}")
        rkset = set(rk)
        for i, c in enumerate(family):
            if len(set(c) & rkset) < ell ** 4 / 2:
                raise ValueError(f"theory profile outdegree bound violated for config {i}")

    targets = [ell * a for a in alphas]
    if profile == "theory" and family:
        # every cut of the scaled network clears the family-size floor
        floor_cut = len(family) * ell ** 3 / 1000
        val = max_flow(build_network(family, rk, targets, gamma)).value
        if val < floor_cut:
            raise AssertionError(
                f"level-{k} network min cut {val} below {floor_cut}")
    good = good_assignment(family, rk, targets, gamma, epsilon)
    if good is not None:
        return LiftResult(assignment=good, alpha_prime=good.demands,
                          scale=Fraction(1), shortfall=False)

    # parametric fallback: largest uniform scale sigma with floor(sigma * ell * alpha) feasible
    cands = _sigma_candidates(targets)
    lo, hi = 0, len(cands) - 1
    best = None
    best_sigma = Fraction(0)
    while lo <= hi:
        mid = (lo + hi) // 2
        sigma = cands[mid]
        demands = [int(sigma * ta) for ta in targets]
        got = good_assignment(family, rk, demands, gamma, 0)
        if got is not None:
            best, best_sigma = got, sigma
            lo = mid + 1
        else:
            hi = mid - 1
    if best is None:
        best = good_assignment(family, rk, [0] * len(family), gamma, 0)
        best_sigma = Fraction(0)
    if any(d < floor_alpha for d in best.demands):
        raise ResampleNeeded(
            f"lift to level {k} fell below floor {floor_alpha}",
            details={"scale": best_sigma, "demands": best.demands})
    return LiftResult(assignment=best, alpha_prime=best.demands,
                      scale=best_sigma, shortfall=True)


def _ilog2(x: int) -> int:
    return max(1, x.bit_length() - 1)


def cut_value(net: AssignmentNetwork, source_side_configs: Iterable[int],
              source_side_resources: Iterable[int]) -> int:
    """Value of the s-t cut with the given configs/resources on the source side:
    demands of cut-off configs + edges crossing into sunk resources + gamma
    times the source-side resources."""
    cc = set(source_side_configs)
    rr = set(source_side_resources)
    val = 0
    for i, cap in enumerate(net.capacities):
        if i not in cc:
            val += cap
    for i in cc:
        val += sum(1 for r in net.members[i] if r not in rr)
    val += net.gamma * len(rr)
    return val


def brute_force_min_cut(net: AssignmentNetwork) -> int:
    """Enumerate all s-t cuts (tests only; refuses large networks)."""
    nc = len(net.members)
    nr = len(net.resource_ids)
    if nc + nr > 20:
        raise ValueError("brute-force min cut limited to 20 nodes")
    best = None
    for cmask in range(1 << nc):
        cc = [i for i in range(nc) if cmask >> i & 1]
        for rmask in range(1 << nr):
            rr = [net.resource_ids[i] for i in range(nr) if rmask >> i & 1]
            v = cut_value(net, cc, rr)
            if best is None or v < best:
                best = v
    return 0 if best is None else best
