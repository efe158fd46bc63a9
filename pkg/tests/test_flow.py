import itertools
import random
from fractions import Fraction

import pytest

from santaclaus.flow import (
    ResampleNeeded,
    brute_force_min_cut,
    build_network,
    good_assignment,
    lift_level,
    max_flow,
    subfamily_flow_check,
)


def test_single_config_two_resources():
    net = build_network([[0, 1]], [0, 1], [2], gamma=1)
    assert max_flow(net).value == 2


def test_two_configs_shared_resource():
    net = build_network([[0], [0]], [0], [1, 1], gamma=1)
    assert max_flow(net).value == 1


def test_flow_decomposition_is_integral():
    rng = random.Random(1)
    for _ in range(50):
        nc = rng.randint(1, 4)
        nr = rng.randint(1, 6)
        fam = [rng.sample(range(nr), rng.randint(0, nr)) for _ in range(nc)]
        alphas = [rng.randint(0, 3) for _ in range(nc)]
        gamma = rng.randint(1, 3)
        net = build_network(fam, range(nr), alphas, gamma)
        res = max_flow(net)
        assert res.value == sum(len(a) for a in res.assigned)
        mult = {}
        for rs in res.assigned:
            for r in rs:
                mult[r] = mult.get(r, 0) + 1
        assert all(v <= gamma for v in mult.values())


def test_max_flow_matches_brute_force_min_cut():
    rng = random.Random(2)
    for _ in range(300):
        nc = rng.randint(1, 3)
        nr = rng.randint(1, 5)
        fam = [rng.sample(range(nr), rng.randint(0, nr)) for _ in range(nc)]
        alphas = [rng.randint(0, 4) for _ in range(nc)]
        gamma = rng.randint(1, 3)
        net = build_network(fam, range(nr), alphas, gamma)
        assert max_flow(net).value == brute_force_min_cut(net)


def test_good_assignment_private_resources():
    fam = [[0, 1], [2, 3, 4]]
    got = good_assignment(fam, range(5), [2, 3], gamma=1, epsilon=0)
    assert got is not None
    assert got.check() == []
    assert set(got.received[0]) == {0, 1}
    assert set(got.received[1]) == {2, 3, 4}


def test_good_assignment_infeasible_cut():
    # both configs need 1 but only one resource exists
    got = good_assignment([[0], [0]], [0], [1, 1], gamma=1, epsilon=0)
    assert got is None


def brute_assignment_exists(fam, rset, demands, gamma):
    """Brute force: try all ways to hand out resources with multiplicity <= gamma."""
    rs = sorted(rset)
    slots = []
    for r in rs:
        claimants = [i for i, c in enumerate(fam) if r in c]
        opts = []
        for k in range(0, min(gamma, len(claimants)) + 1):
            opts.extend(itertools.combinations(claimants, k))
        slots.append(opts)
    for combo in itertools.product(*slots):
        got = [0] * len(fam)
        for owners in combo:
            for i in owners:
                got[i] += 1
        if all(g >= d for g, d in zip(got, demands)):
            return True
    return False


def test_good_assignment_matches_brute_force():
    rng = random.Random(3)
    cases = 0
    for _ in range(120):
        nc = rng.randint(1, 3)
        nr = rng.randint(1, 4)
        fam = [sorted(rng.sample(range(nr), rng.randint(0, nr))) for _ in range(nc)]
        for gamma in (1, 2):
            for eps in (0, Fraction(1, 3)):
                alphas = [rng.randint(0, max(1, len(fam[i]))) for i in range(nc)]
                got = good_assignment(fam, range(nr), alphas, gamma, eps)
                demands = [max(0, int((1 - Fraction(eps)) * a)) for a in alphas]
                want = brute_assignment_exists(fam, range(nr), demands, gamma)
                assert (got is not None) == want
                if got is not None:
                    assert got.check() == []
                cases += 1
    assert cases >= 400


def test_subfamily_check_agrees_with_single_flow():
    rng = random.Random(4)
    for _ in range(80):
        nc = rng.randint(1, 4)
        nr = rng.randint(1, 5)
        fam = [sorted(rng.sample(range(nr), rng.randint(0, nr))) for _ in range(nc)]
        alphas = [rng.randint(0, 3) for _ in range(nc)]
        gamma = rng.randint(1, 2)
        eps = rng.choice([0, Fraction(1, 4)])
        single = good_assignment(fam, range(nr), alphas, gamma, eps) is not None
        assert single == subfamily_flow_check(fam, range(nr), alphas, gamma, eps)


class _FakeHier:
    def __init__(self, levels, ell):
        self.levels = tuple(tuple(sorted(l)) for l in levels)
        self.ell = ell
        self.d = len(levels) - 1


def test_lift_level_deterministic_hierarchy():
    # every ell-th resource survives; disjoint configs scale exactly by ell
    ell = 4
    n = 64
    r0 = list(range(n))
    r1 = [r for r in r0 if r % ell == 0]
    hier = _FakeHier([r0, r1], ell)
    fam = [list(range(0, 32)), list(range(32, 64))]
    prev = good_assignment(fam, r1, [2, 2], gamma=1, epsilon=0)
    assert prev is not None
    res = lift_level(fam, hier, 0, [2, 2], gamma=1, prev=prev, epsilon=0)
    assert not res.shortfall
    assert res.alpha_prime == (8, 8)


def test_lift_level_shortfall_parametric():
    ell = 4
    hier = _FakeHier([list(range(6)), [0]], ell)
    fam = [[0, 1, 2, 3, 4, 5]]
    prev = good_assignment(fam, [0], [1], gamma=1, epsilon=0)
    # target 4*1 = 4 but only 6 resources with gamma=1: feasible; shrink to 2 resources
    hier2 = _FakeHier([[0, 1], [0]], ell)
    fam2 = [[0, 1]]
    res = lift_level(fam2, hier2, 0, [1], gamma=1, prev=prev, epsilon=0)
    assert res.shortfall and res.alpha_prime == (2,)


def test_lift_level_resample_signal():
    hier = _FakeHier([[0], [0]], 4)
    fam = [[5]]  # config has no resource at level 0
    prev = good_assignment(fam, [0], [0], gamma=1, epsilon=0)
    with pytest.raises(ResampleNeeded):
        lift_level(fam, hier, 0, [1], gamma=1, prev=prev, epsilon=0, floor_alpha=1)
