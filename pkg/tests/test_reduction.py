import random
from fractions import Fraction

import pytest

from santaclaus.clustering import ClusterDecomposition, StructuralError
from santaclaus.model import (
    Configuration,
    RelaxedMatching,
    WeightedHypergraph,
    verify_relaxed_matching,
)
from santaclaus.reduction import (
    _pow2_floor,
    bucket_count,
    build_weighted_hypergraph,
    lift_matching,
    round_weights,
    to_grouped,
)
from santaclaus.submodular import ValuationOracle


def _dec(sampled_by_cluster, thin):
    clusters = tuple((h,) for h in range(len(sampled_by_cluster)))
    return ClusterDecomposition(
        clusters=clusters, q=(), q_fat=(), trees=tuple(() for _ in clusters),
        thin=tuple(thin), thin_columns=tuple(() for _ in clusters),
        sampled=tuple(tuple(s) for s in sampled_by_cluster), ell=1)


def test_weights_linear_proportional():
    oracle = ValuationOracle.linear([4, 3, 2, 1])
    cfg = Configuration.make(0, [0, 1, 2, 3])
    h = build_weighted_hypergraph(_dec([[cfg]], range(4)), oracle, t_star=10)
    w = h.weights[0]
    assert sum(w.values()) == 1
    assert w[0] == Fraction(4, 10) and w[3] == Fraction(1, 10)


def test_weights_coverage_telescoping():
    oracle = ValuationOracle.coverage([[0, 1], [1, 2], [2]])
    cfg = Configuration.make(0, [0, 1, 2])
    t_star = 10
    h = build_weighted_hypergraph(_dec([[cfg]], range(3)), oracle, t_star=t_star)
    w = h.weights[0]
    # pre-rescale sum telescopes to 5 f(C)/T* = 5*3/10
    assert sum(w.values()) == 1
    # order is by singleton value: r0 (2), r1 (2, tie to id), r2 (1)
    assert w[0] == Fraction(2, 3) and w[1] == Fraction(1, 3) and w[2] == 0


def test_weights_reject_value_below_fifth():
    oracle = ValuationOracle.linear([1, 1])
    cfg = Configuration.make(0, [0, 1])
    with pytest.raises(StructuralError):
        build_weighted_hypergraph(_dec([[cfg]], range(2)), oracle, t_star=100)


def test_thin_weight_bound_after_rescale():
    rng = random.Random(51)
    alpha = 2
    t_star = 20
    thr = Fraction(t_star, 100 * alpha)
    # thin resources: singleton value strictly below T*/(100 alpha)
    vals = [thr * Fraction(rng.randint(1, 9), 10) for _ in range(120)]
    oracle = ValuationOracle.linear(vals)
    ids = list(range(120))
    cfg = Configuration.make(0, ids)
    assert oracle.eval(ids) >= Fraction(t_star, 5)
    h = build_weighted_hypergraph(_dec([[cfg]], ids), oracle, t_star=t_star)
    for w in h.weights[0].values():
        assert w <= Fraction(5, 100 * alpha)


def test_pow2_floor():
    assert _pow2_floor(Fraction(3, 10)) == Fraction(1, 4)
    assert _pow2_floor(Fraction(1, 4)) == Fraction(1, 4)
    assert _pow2_floor(Fraction(1)) == 1


def _unit_graph(weight_lists):
    cfgs, weights = [], []
    rid = 0
    for wl in weight_lists:
        rs = list(range(rid, rid + len(wl)))
        rid += len(wl)
        cfgs.append(Configuration.make(len(cfgs), rs))
        weights.append({r: Fraction(w) for r, w in zip(rs, wl)})
    return WeightedHypergraph(players=len(cfgs), resources=tuple(range(rid)),
                              configurations=tuple(cfgs), weights=tuple(weights))


def test_round_weights_cutoff():
    # n = 4 resources; 0.1 rounds to 1/16 < 1/8 and is deleted
    h = _unit_graph([[Fraction(3, 10), Fraction(3, 10), Fraction(3, 10), Fraction(1, 10)]])
    r = round_weights(h)
    w = r.weights[0]
    assert set(w.values()) == {Fraction(1, 4)}
    assert len(w) == 3
    assert r.configurations[0].size == 3


def test_round_weights_random_total_in_range():
    rng = random.Random(53)
    for _ in range(50):
        k = rng.randint(2, 12)
        raw = [Fraction(rng.randint(1, 100)) for _ in range(k)]
        tot = sum(raw)
        h = _unit_graph([[w / tot for w in raw]])
        r = round_weights(h)
        total = sum(r.weights[0].values(), Fraction(0))
        assert Fraction(1, 4) <= total <= 1


def test_to_grouped_buckets():
    h = _unit_graph([[Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]])
    gh = to_grouped(h)
    B = bucket_count(3)
    assert all(len(g) == B for g in gh.groups)
    sets = gh.consistent_sets[0]
    assert len(sets) == 1
    cs = sets[0]
    assert cs[0].resources == (2,)      # the 1/2 resource in bucket 1
    assert set(cs[1].resources) == {0, 1}  # the 1/4 resources in bucket 2
    assert all(c.resources == () for c in cs[2:])


def test_to_grouped_rejects_non_dyadic():
    h = _unit_graph([[Fraction(3, 10), Fraction(7, 10)]])
    with pytest.raises(StructuralError):
        to_grouped(h)


def test_to_grouped_preserves_degrees():
    rng = random.Random(55)
    for _ in range(20):
        k = rng.randint(2, 10)
        raw = [Fraction(rng.randint(1, 50)) for _ in range(k)]
        tot = sum(raw)
        h = round_weights(_unit_graph([[w / tot for w in raw]]))
        gh = to_grouped(h)
        deg_before = {}
        for c in h.configurations:
            for r in c.resources:
                deg_before[r] = deg_before.get(r, 0) + 1
        assert gh.resource_degrees() == deg_before
        # resource counts per set match the rounded configuration
        for sets, cfg in zip(gh.consistent_sets, h.configurations):
            for cs in sets:
                assert sum(c.size for c in cs) == cfg.size


def test_lift_matching_full_assignment():
    h = _unit_graph([[Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]])
    gh = to_grouped(h)
    B = bucket_count(3)
    chosen = tuple(0 for _ in range(B))
    assigned = [()] * B
    assigned[0] = (2,)
    assigned[1] = (0, 1)
    gm = RelaxedMatching(chosen=chosen, assigned=tuple(assigned), alpha=Fraction(1))
    lifted = lift_matching(gm, h, gh=gh)
    assert lifted.alpha == 1
    assert lifted.assigned == ((0, 1, 2),)
    ok, why = verify_relaxed_matching(h, lifted)
    assert ok, why


def test_lift_matching_two_bucket_floor():
    # bucket 1: four resources at 1/8; bucket 2: eight resources at 1/16
    w = [Fraction(1, 8)] * 4 + [Fraction(1, 16)] * 8
    h = _unit_graph([w])
    gh = to_grouped(h)
    B = bucket_count(12)
    alpha = Fraction(2)
    chosen = tuple(0 for _ in range(B))
    assigned = [()] * B
    # quota floor(4/2)=2 from bucket 3 (1/8 = 2^-3), floor(8/2)=4 from bucket 4
    assigned[2] = (0, 1)
    assigned[3] = (4, 5, 6, 7)
    gm = RelaxedMatching(chosen=chosen, assigned=tuple(assigned), alpha=alpha)
    ok, why = verify_relaxed_matching(gh, gm)
    assert ok, why
    lifted = lift_matching(gm, h, gh=gh)
    covered = Fraction(2, 8) + Fraction(4, 16)
    assert lifted.alpha == 1 / covered
    assert lifted.alpha <= 3 * alpha


def test_lift_matching_rejects_inconsistent():
    h = _unit_graph([[Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]])
    gh = to_grouped(h)
    B = bucket_count(3)
    # no second consistent set exists, so indices differ -> structural rejection
    chosen = tuple(0 if s == 0 else 0 for s in range(B))
    gm = RelaxedMatching(chosen=(0,) * B, assigned=((2,),) + ((),) * (B - 1),
                         alpha=Fraction(1))
    # tamper: mark one member as choosing a different set
    bad = RelaxedMatching(chosen=(0, 1) + (0,) * (B - 2) if B >= 2 else (0,),
                          assigned=((2,),) + ((),) * (B - 1), alpha=Fraction(3))
    if B >= 2:
        with pytest.raises(ValueError):
            lift_matching(bad, h)


def test_end_to_end_lift_factor_on_random_graphs():
    from santaclaus.lll import Selection, select_moser_tardos
    from santaclaus.model import RngSeed
    from santaclaus.reconstruct import reconstruct_matching
    from santaclaus.sampling import ResourceHierarchy, SizeClasses

    rng = random.Random(57)
    for trial in range(15):
        # random unit-normalized weighted hypergraph, two configs per player
        weight_lists = []
        players = rng.randint(1, 3)
        per_player = rng.randint(1, 2)
        cfg_specs = []
        rid = 0
        for p in range(players):
            for _ in range(per_player):
                k = rng.randint(2, 8)
                raw = [Fraction(rng.randint(1, 30)) for _ in range(k)]
                tot = sum(raw)
                cfg_specs.append((p, list(range(rid, rid + k)),
                                  [w / tot for w in raw]))
                rid += k
        cfgs = tuple(Configuration.make(p, rs) for p, rs, _ in cfg_specs)
        weights = tuple({r: w for r, w in zip(rs, ws)}
                        for _, rs, ws in cfg_specs)
        h = WeightedHypergraph(players=players, resources=tuple(range(rid)),
                               configurations=cfgs, weights=weights)
        rounded = round_weights(h)
        gh = to_grouped(rounded)
        ell = max(2, gh.ell)
        classes = SizeClasses.from_hypergraph(gh, ell)
        hier = ResourceHierarchy(levels=(gh.resources,), ell=ell, d=0,
                                 seed=RngSeed(0))
        res = select_moser_tardos(gh, hier, RngSeed(trial), classes=classes)
        gm = reconstruct_matching(gh, hier, res.selection)
        ok, why = verify_relaxed_matching(gh, gm)
        assert ok, why
        lifted = lift_matching(gm, h, gh=gh)
        ok, why = verify_relaxed_matching(h, lifted)
        assert ok, why
        # grouped factor alpha lifts to at most 3 * alpha * (rounding loss 4)
        assert lifted.alpha <= 3 * gm.alpha * 4
