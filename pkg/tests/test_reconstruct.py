import random
from fractions import Fraction

import pytest

from santaclaus.clustering import ClusterDecomposition
from santaclaus.lll import Selection, select_moser_tardos
from santaclaus.model import (
    Configuration,
    GroupedHypergraph,
    RelaxedMatching,
    RngSeed,
    SantaInstance,
    verify_relaxed_matching,
)
from santaclaus.oracles import exact_min_alpha
from santaclaus.reconstruct import (
    achieved_alpha,
    assemble_santa_solution,
    greedy_steal_matching,
    reconstruct_matching,
)
from santaclaus.sampling import ResourceHierarchy, SizeClasses, sample_hierarchy
from santaclaus.submodular import ValuationOracle


def grouped(sets_by_group, n, ell):
    groups = []
    consistent = []
    for group_sets in sets_by_group:
        members = tuple(sorted({p for cs in group_sets for p, _ in cs}))
        groups.append(members)
        consistent.append(tuple(
            tuple(Configuration.make(p, rs) for p, rs in cs) for cs in group_sets))
    return GroupedHypergraph(resources=tuple(range(n)), groups=tuple(groups),
                             consistent_sets=tuple(consistent), ell=ell)


def flat_hier(n, ell):
    return ResourceHierarchy(levels=(tuple(range(n)),), ell=ell, d=0,
                             seed=RngSeed(0))


def random_grouped(rng: random.Random, n_groups=2, group_size=2, ell=3,
                   n=14, size_range=(2, 5)):
    sets_by_group = []
    player = 0
    for g in range(n_groups):
        members = list(range(player, player + group_size))
        player += group_size
        group_sets = []
        for t in range(ell):
            cs = []
            for p in members:
                k = rng.randint(*size_range)
                cs.append((p, sorted(rng.sample(range(n), k))))
            group_sets.append(cs)
        sets_by_group.append(group_sets)
    return grouped(sets_by_group, n=n, ell=ell)


def test_achieved_alpha_grid():
    assert achieved_alpha([4], [4]) == 1
    assert achieved_alpha([4], [2]) == 2
    assert achieved_alpha([4], [0]) == 5
    assert achieved_alpha([3, 5], [1, 2]) == Fraction(5, 2)


def test_reconstruct_disjoint_alpha_one():
    gh = grouped([
        [[(0, [0, 1])]],
        [[(1, [2, 3])]],
    ], n=4, ell=2)
    classes = SizeClasses.from_hypergraph(gh, 2)
    hier = flat_hier(4, 2)
    sel = Selection(gh=gh, classes=classes, choice=(0, 0))
    m = reconstruct_matching(gh, hier, sel)
    assert m.alpha == 1
    ok, why = verify_relaxed_matching(gh, m)
    assert ok, why


def test_reconstruct_single_level_optimal_for_selection():
    rng = random.Random(73)
    for trial in range(40):
        gh = random_grouped(rng, n_groups=rng.randint(1, 3),
                            group_size=rng.randint(1, 2),
                            ell=rng.randint(1, 3), n=rng.randint(6, 12))
        ell2 = max(2, gh.ell)
        classes = SizeClasses.from_hypergraph(gh, ell2)
        hier = flat_hier(len(gh.resources), ell2)
        choice = tuple(rng.randrange(len(s)) for s in gh.consistent_sets)
        sel = Selection(gh=gh, classes=classes, choice=choice)
        m = reconstruct_matching(gh, hier, sel)
        ok, why = verify_relaxed_matching(gh, m)
        assert ok, why


def test_reconstruct_close_to_exact_min_alpha():
    rng = random.Random(79)
    losses = []
    for trial in range(60):
        gh = random_grouped(rng, n_groups=2, group_size=2, ell=3,
                            n=rng.randint(10, 16), size_range=(2, 5))
        classes = SizeClasses.from_hypergraph(gh, gh.ell)
        hier = flat_hier(len(gh.resources), gh.ell)
        res = select_moser_tardos(gh, hier, RngSeed(trial), classes=classes)
        m = reconstruct_matching(gh, hier, res.selection)
        ok, why = verify_relaxed_matching(gh, m)
        assert ok, why
        exact = exact_min_alpha(gh)
        assert m.alpha <= 4 * exact.alpha
        losses.append(float(m.alpha / exact.alpha))
    assert sum(losses) / len(losses) < 2.5


def test_reconstruct_multi_level_with_synthetic_classes():
    rng = random.Random(83)
    n = 3000
    ell = 4
    sets_by_group = []
    player = 0
    for g in range(3):
        group_sets = []
        for t in range(ell):
            rs = sorted(rng.sample(range(n), 700))
            group_sets.append([(g, rs)])
        sets_by_group.append(group_sets)
    gh = grouped(sets_by_group, n=n, ell=ell)
    cfgs = gh.flat_configs()
    classes = SizeClasses.synthetic(cfgs, [1] * len(cfgs), ell=ell)
    hier = sample_hierarchy(gh, RngSeed(101), classes=classes, ell=ell)
    assert hier.d == 1 and len(hier.levels) == 2
    res = select_moser_tardos(gh, hier, RngSeed(103), classes=classes)
    m = reconstruct_matching(gh, hier, res.selection, gamma=2)
    ok, why = verify_relaxed_matching(gh, m)
    assert ok, why
    assert m.alpha <= 8


def test_greedy_steal_disjoint():
    gh = grouped([
        [[(0, [0, 1])]],
        [[(1, [2, 3])]],
    ], n=4, ell=1)
    m = greedy_steal_matching(gh, (0, 0))
    assert m.alpha == 1


def test_greedy_steal_nested_half():
    gh = grouped([
        [[(0, list(range(8)))]],
        [[(1, list(range(4)))]],
    ], n=8, ell=1)
    m = greedy_steal_matching(gh, (0, 0))
    # the small configuration steals its half; the large one keeps the rest
    assert set(m.assigned[1]) == {0, 1, 2, 3}
    assert set(m.assigned[0]) == {4, 5, 6, 7}
    assert m.alpha == 2


def test_greedy_steal_always_verifies():
    rng = random.Random(89)
    for _ in range(30):
        gh = random_grouped(rng, n_groups=2, group_size=2, ell=2,
                            n=rng.randint(8, 14))
        choice = tuple(rng.randrange(len(s)) for s in gh.consistent_sets)
        chosen = []
        for p in range(gh.num_players):
            gi, _ = gh.player_location(p)
            chosen.append(choice[gi])
        m = greedy_steal_matching(gh, tuple(chosen))
        assert m.alpha >= 1
        ok, why = verify_relaxed_matching(gh, m)
        assert ok, why


def _mini_decomposition():
    """Two clusters: {0,1} joined by fat resource 9, {2} alone; Q = {3}->8."""
    c0 = (Configuration.make(0, [0, 1, 2]), Configuration.make(1, [3, 4]))
    c1 = (Configuration.make(2, [5, 6]),)
    return ClusterDecomposition(
        clusters=((0, 1), (2,)),
        q=(3,),
        q_fat=((3, 8),),
        trees=(((0, 9), (1, 9)), ()),
        thin=(0, 1, 2, 3, 4, 5, 6),
        thin_columns=((), ()),
        sampled=(c0, c1),
        ell=2)


def test_assemble_solution_partition():
    values = [Fraction(1, 50)] * 7 + [5, 5]
    oracle = ValuationOracle.linear(values)
    gamma = [[0, 1, 2, 9], [3, 4, 9], [5, 6], [7, 8]]
    inst = SantaInstance.make(gamma, ValuationOracle.linear(values + [0]))
    dec = _mini_decomposition()
    wm = RelaxedMatching(chosen=(0, 0), assigned=((0, 1, 2), (5, 6)),
                         alpha=Fraction(1))
    sol = assemble_santa_solution(inst, dec, wm)
    assert sol.check_partition(inst) == []
    assert sol.representatives == (0, 2)
    # representative keeps thin resources, player 1 takes fat 9, Q player 3 takes 8
    assert set(sol.assigned[0]) >= {0, 1, 2}
    assert 9 in sol.assigned[1]
    assert 8 in sol.assigned[3]
    assert sol.value > 0


def test_assemble_picks_other_representative():
    values = [Fraction(1, 50)] * 7 + [5, 5, 5]
    inst = SantaInstance.make([[0, 1, 2, 9], [3, 4, 9], [5, 6], [7, 8]],
                              ValuationOracle.linear(values))
    dec = _mini_decomposition()
    wm = RelaxedMatching(chosen=(1, 0), assigned=((3, 4), (5, 6)),
                         alpha=Fraction(1))
    sol = assemble_santa_solution(inst, dec, wm)
    assert sol.check_partition(inst) == []
    assert sol.representatives == (1, 2)
    assert 9 in sol.assigned[0]


def test_reconstruct_two_level_hierarchy_gamma_sweep():
    ell = 4
    n = 4000
    for trial in range(2):
        rng = random.Random(7001 + 2 * trial)
        sets_by_group = []
        for g in range(3):
            group_sets = []
            for t in range(ell):
                rs = sorted(rng.sample(range(n), 2600))
                group_sets.append((Configuration.make(g, rs),))
            sets_by_group.append(tuple(group_sets))
        gh = GroupedHypergraph(resources=tuple(range(n)),
                               groups=tuple((g,) for g in range(3)),
                               consistent_sets=tuple(sets_by_group), ell=ell)
        cfgs = gh.flat_configs()
        classes = SizeClasses.synthetic(cfgs, [2] * len(cfgs), ell=ell)
        hier = sample_hierarchy(gh, RngSeed(100 + trial), classes=classes, ell=ell)
        assert hier.d == 2 and len(hier.levels) == 3
        res = select_moser_tardos(gh, hier, RngSeed(200 + trial), classes=classes)
        for gamma in (1, 2, 4):
            m = reconstruct_matching(gh, hier, res.selection, gamma=gamma)
            ok, why = verify_relaxed_matching(gh, m)
            assert ok, why
            assert m.alpha <= 20
