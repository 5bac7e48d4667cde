import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hetfair.dataset import ClusterKey, Dataset, imbalance_degrees, make_synthetic_dataset, partition_clusters
from hetfair.errors import DegeneratePairError, HeteroUnavailableError, NoSourceError, ParameterError
from hetfair.fixtures import TOY_MEANS, TOY_SIZES
from hetfair.oversample import (
    FAIR_TECHNIQUES,
    INTRA_CLASS,
    INTRA_GROUP,
    OversamplerConfig,
    Technique,
    adasyn_allocation,
    danger_mask,
    draw_weight,
    interpolate_hetero,
    interpolate_smote,
    oversample,
    propose_pair,
    selection_probability,
)


def blobs(sizes, seed=0, dim=2, spread=1.0):
    means = {k: np.r_[k[0] * 2.0 - 1.0, k[1] * 1.5, np.zeros(dim - 2)] * spread for k in sizes}
    return make_synthetic_dataset(sizes, means, seed=seed)


@pytest.fixture(scope="module")
def toy():
    return make_synthetic_dataset(TOY_SIZES, TOY_MEANS, seed=7)


# -- selection probability and pair proposals --------------------------------


def test_selection_probability_formula():
    ds = blobs({(1, 0): 5, (0, 0): 30, (1, 1): 10, (0, 1): 4})
    ci = partition_clusters(ds)
    # target (1,0): H_y = C(0,0) has 30, H_g = C(1,1) has 10
    assert selection_probability(ci, (1, 0)) == 0.75
    ds = blobs({(1, 0): 5, (0, 0): 8, (1, 1): 8, (0, 1): 4})
    assert selection_probability(partition_clusters(ds), (1, 0)) == 0.5


def test_selection_probability_toy(toy):
    assert selection_probability(partition_clusters(toy), (0, 1)) == pytest.approx(150 / 450)


def test_selection_probability_unavailable():
    ds = blobs({(1, 0): 5, (0, 0): 0, (1, 1): 0, (0, 1): 4})
    with pytest.raises(HeteroUnavailableError):
        selection_probability(partition_clusters(ds), (1, 0))


def test_propose_pair_forced_branches():
    rng = np.random.default_rng(0)
    only_y = blobs({(1, 0): 5, (0, 0): 6, (1, 1): 0, (0, 1): 4})
    ci = partition_clusters(only_y)
    for _ in range(50):
        prop = propose_pair(only_y, ci, (1, 0), rng)
        assert prop.pair_kind == INTRA_GROUP and prop.p == 1.0
        assert only_y.labels[prop.j] == 0 and only_y.groups[prop.j] == 0
    only_g = blobs({(1, 0): 5, (0, 0): 0, (1, 1): 7, (0, 1): 4})
    ci = partition_clusters(only_g)
    for _ in range(50):
        prop = propose_pair(only_g, ci, (1, 0), rng)
        assert prop.pair_kind == INTRA_CLASS and prop.p == 0.0
        assert only_g.labels[prop.j] == 1 and only_g.groups[prop.j] == 1


def test_propose_pair_empty_target():
    ds = blobs({(1, 0): 5, (0, 0): 6, (1, 1): 0, (0, 1): 4})
    with pytest.raises(NoSourceError):
        propose_pair(ds, partition_clusters(ds), (1, 1), np.random.default_rng(0))


def test_propose_pair_invariants(toy):
    ci = partition_clusters(toy)
    rng = np.random.default_rng(1)
    members = set(ci[(0, 1)].tolist())
    for _ in range(500):
        prop = propose_pair(toy, ci, (0, 1), rng)
        assert prop.i in members
        assert prop.bernoulli_draw == (prop.pair_kind == INTRA_GROUP)
        if prop.pair_kind == INTRA_GROUP:
            assert (toy.labels[prop.j], toy.groups[prop.j]) == (1, 1)
        else:
            assert toy.labels[prop.j] == 0 and toy.groups[prop.j] != 1


def test_intra_group_frequency_three_sigma(toy):
    ci = partition_clusters(toy)
    rng = np.random.default_rng(2024)
    n = 10_000
    hits = sum(propose_pair(toy, ci, (0, 1), rng).pair_kind == INTRA_GROUP for _ in range(n))
    p = 1 / 3
    assert abs(hits / n - p) < 3 * math.sqrt(p * (1 - p) / n)


# -- weights and interpolation ------------------------------------------------


def test_draw_weight():
    rng = np.random.default_rng(0)
    assert draw_weight(0.0, rng) == 0.0
    for _ in range(100):
        assert 0.0 <= draw_weight(1.0, rng) <= 1.0
    with pytest.raises(ParameterError):
        draw_weight(1.5, rng)


def test_draw_weight_mean():
    rng = np.random.default_rng(9)
    n, delta = 10_000, 0.6
    w = np.array([draw_weight(delta, rng) for _ in range(n)])
    sigma = delta / math.sqrt(12) / math.sqrt(n)
    assert abs(w.mean() - delta / 2) < 3 * sigma
    assert w.max() < delta


def test_interpolate_hetero_examples():
    np.testing.assert_array_equal(interpolate_hetero([0, 0], [4, 0], 0.5, 1.0, 4.0), [0.5, 0.0])
    np.testing.assert_array_equal(interpolate_hetero([1, 2], [4, 6], 0.0, 3.0, 5.0), [1.0, 2.0])
    with pytest.raises(DegeneratePairError):
        interpolate_hetero([1, 1], [1, 1], 0.5, 1.0, 0.0)


@given(st.integers(0, 100_000))
@settings(max_examples=200, deadline=None)
def test_interpolate_hetero_step_length(seed):
    rng = np.random.default_rng(seed)
    x_i, x_j = rng.normal(size=5), rng.normal(size=5) * 3
    w, maxd = rng.random(), rng.random() * 4
    d_ij = oracles.dist(x_i, x_j)
    new = interpolate_hetero(x_i, x_j, w, maxd, d_ij)
    assert oracles.dist(new, x_i) == pytest.approx(w * maxd, rel=1e-9, abs=1e-300)


def test_interpolate_smote_examples():
    np.testing.assert_array_equal(interpolate_smote([0, 0], [2, 2], 1.0), [2, 2])
    np.testing.assert_array_equal(interpolate_smote([0, 0], [2, 2], 0.5), [1, 1])


@given(st.integers(0, 100_000))
@settings(max_examples=200, deadline=None)
def test_interpolate_smote_box(seed):
    rng = np.random.default_rng(seed)
    a, b, w = rng.normal(size=4), rng.normal(size=4), rng.random()
    new = interpolate_smote(a, b, w)
    assert np.all(new >= np.minimum(a, b) - 1e-12) and np.all(new <= np.maximum(a, b) + 1e-12)


# -- HeteroFair -----------------------------------------------------------------


def test_hetero_counts_on_toy(toy):
    aug, batch = oversample(toy, OversamplerConfig(technique="HeteroFair", seed=3))
    assert batch.counts == {(0, 0): 200, (1, 1): 350, (0, 1): 470}
    assert set(partition_clusters(aug).sizes().values()) == {500}


def test_hetero_balanced_is_noop():
    ds = blobs({(1, 0): 6, (0, 0): 6, (1, 1): 6, (0, 1): 6})
    aug, batch = oversample(ds, OversamplerConfig(technique="HeteroFair"))
    assert len(batch) == 0 and aug.n == ds.n


def test_hetero_determinism(toy):
    cfg = OversamplerConfig(technique="HeteroFair", seed=42)
    a, ba = oversample(toy, cfg)
    b, bb = oversample(toy, cfg)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(ba.source_i, bb.source_i) and np.array_equal(ba.weights, bb.weights)
    c, _ = oversample(toy, OversamplerConfig(technique="HeteroFair", seed=43))
    assert not np.array_equal(a.features, c.features)


def test_hetero_provenance_against_oracles(toy):
    cfg = OversamplerConfig(technique="HeteroFair", seed=5)
    aug, batch = oversample(toy, cfg)
    x, y = toy.features, toy.labels
    sample = np.random.default_rng(0).choice(len(batch), 60, replace=False)
    for r in sample:
        i, j, w = batch.source_i[r], batch.source_j[r], batch.weights[r]
        delta = oracles.density(x, y, i, 5)
        assert batch.deltas[r] == delta
        assert 0.0 <= w <= delta
        _, dists = oracles.knn(x, i, 5)
        step = oracles.dist(batch.features[r], x[i])
        assert step == pytest.approx(w * max(dists), rel=1e-9, abs=1e-12)
        key = (batch.labels[r], batch.groups[r])
        if batch.pair_kinds[r] == INTRA_GROUP:
            assert (y[j], toy.groups[j]) == (1 - key[0], key[1])
        else:
            assert y[j] == key[0] and toy.groups[j] != key[1]
        assert (y[i], toy.groups[i]) == key


def test_hetero_reproduces_documented_draw_order():
    ds = blobs({(1, 0): 12, (0, 0): 9, (1, 1): 5, (0, 1): 4}, seed=2)
    cfg = OversamplerConfig(technique="HeteroFair", seed=77)
    _, batch = oversample(ds, cfg)
    ci = partition_clusters(ds)
    rng = np.random.default_rng(77)
    x = ds.features
    expected = []
    for key in sorted(ci.sizes()):
        members = ci[key]
        h_y, h_g = ci.heterogeneous(key)
        p = len(h_y) / (len(h_y) + len(h_g))
        for _ in range(12 - len(members)):
            i = int(members[rng.integers(len(members))])
            b = rng.random() < p
            side = h_y if b else h_g
            j = int(side[rng.integers(len(side))])
            idx, dists = oracles.knn(x, i, 5)
            delta = sum(ds.labels[k] == ds.labels[i] for k in idx) / 5
            w = delta * rng.random()
            d_ij = oracles.dist(x[i], x[j])
            expected.append(x[i] + w * (x[j] - x[i]) * (max(dists) / d_ij))
    np.testing.assert_allclose(batch.features, np.array(expected), rtol=1e-12, atol=1e-12)


def test_hetero_skips_empty_cluster():
    ds = blobs({(1, 0): 10, (0, 0): 6, (1, 1): 0, (0, 1): 4})
    aug, batch = oversample(ds, OversamplerConfig(technique="HeteroFair"))
    assert ClusterKey(1, 1) not in batch.counts
    assert batch.fallbacks[(1, 1)] == ["skipped-empty"]
    assert batch.warnings
    sizes = partition_clusters(aug).sizes()
    assert sizes[(1, 1)] == 0 and sizes[(0, 0)] == sizes[(0, 1)] == 10


def test_hetero_falls_back_to_fsmote_without_heterogeneous_clusters():
    ds = blobs({(1, 0): 4, (0, 0): 0, (1, 1): 0, (0, 1): 9})
    aug, batch = oversample(ds, OversamplerConfig(technique="HeteroFair"))
    assert batch.fallbacks[(1, 0)] == ["fsmote"]
    assert set(batch.tags) == {"HeteroFair/FSMOTE"}
    assert partition_clusters(aug).sizes()[(1, 0)] == 9


def test_hetero_degenerate_pairs_become_duplicates():
    x = np.zeros((6, 2))
    ds = Dataset(features=x, labels=[1, 1, 1, 0, 0, 1], groups=[0, 0, 0, 0, 1, 1], group_names=("a", "b"))
    aug, batch = oversample(ds, OversamplerConfig(technique="HeteroFair", max_pair_retries=3))
    assert len(batch) > 0
    assert set(batch.tags) == {"HeteroFair/duplicate"}
    assert np.all(batch.weights == 0.0)
    assert np.all(batch.features == 0.0)


def test_hetero_pin_protected():
    rng = np.random.default_rng(0)
    n = 60
    g = np.r_[np.zeros(40, int), np.ones(20, int)]
    y = rng.integers(0, 2, n)
    x = np.c_[rng.normal(size=n), g.astype(float)]
    ds = Dataset(features=x, labels=y, groups=g, group_names=("a", "b"), protected=(1,))
    _, pinned = oversample(ds, OversamplerConfig(technique="HeteroFair", seed=1))
    assert np.array_equal(pinned.features[:, 1], pinned.groups.astype(float))
    _, loose = oversample(ds, OversamplerConfig(technique="HeteroFair", seed=1, pin_protected=False))
    assert not np.array_equal(loose.features[:, 1], loose.groups.astype(float))


# -- SMOTE --------------------------------------------------------------------


def test_smote_counts():
    ds = blobs({(1, 0): 200, (0, 0): 500, (1, 1): 100, (0, 1): 200})
    aug, batch = oversample(ds, OversamplerConfig(technique="SMOTE", seed=0))
    assert len(batch) == 400
    assert aug.class_counts() == {1: 700, 0: 700}
    assert set(batch.labels) == {1}


def test_smote_balanced_noop():
    ds = blobs({(1, 0): 5, (0, 0): 5, (1, 1): 5, (0, 1): 5})
    aug, batch = oversample(ds, OversamplerConfig(technique="SMOTE"))
    assert len(batch) == 0 and aug is ds


def test_smote_segment_and_group_copy(toy):
    _, batch = oversample(toy, OversamplerConfig(technique="SMOTE", seed=2))
    x = toy.features
    for r in range(len(batch)):
        i, j = batch.source_i[r], batch.source_j[r]
        lo, hi = np.minimum(x[i], x[j]), np.maximum(x[i], x[j])
        assert np.all(batch.features[r] >= lo - 1e-12) and np.all(batch.features[r] <= hi + 1e-12)
        assert batch.groups[r] == toy.groups[i]
        assert toy.labels[j] == toy.labels[i] == batch.labels[r]


def test_smote_partner_is_minority_neighbor(toy):
    _, batch = oversample(toy, OversamplerConfig(technique="SMOTE", seed=4))
    minority = np.flatnonzero(toy.labels == 0)
    sub = toy.features[minority]
    pos = {int(v): k for k, v in enumerate(minority)}
    for r in range(0, len(batch), 17):
        idx, _ = oracles.knn(sub, pos[int(batch.source_i[r])], 5)
        assert pos[int(batch.source_j[r])] in idx


def test_smote_single_minority_instance():
    ds = Dataset(features=np.arange(5.0)[:, None], labels=[1, 0, 0, 0, 0], groups=[0, 1, 0, 1, 0],
                 group_names=("a", "b"))
    aug, batch = oversample(ds, OversamplerConfig(technique="SMOTE"))
    assert len(batch) == 3 and np.all(batch.features == 0.0)
    assert batch.warnings


# -- cluster-balancing baselines ----------------------------------------------


@pytest.mark.parametrize("technique", ["FSMOTE", "FBSMOTE", "FADASYN"])
def test_baselines_balance_and_coherence(toy, technique):
    aug, batch = oversample(toy, OversamplerConfig(technique=technique, seed=1))
    assert set(imbalance_degrees(partition_clusters(aug)).values()) == {0}
    for r in range(len(batch)):
        i, j = batch.source_i[r], batch.source_j[r]
        key = (batch.labels[r], batch.groups[r])
        assert (toy.labels[i], toy.groups[i]) == key == (toy.labels[j], toy.groups[j])
    assert np.all(np.isfinite(batch.features))


def test_fsmote_partner_within_cluster_knn(toy):
    _, batch = oversample(toy, OversamplerConfig(technique="FSMOTE", seed=8))
    ci = partition_clusters(toy)
    for r in range(0, len(batch), 13):
        key = (batch.labels[r], batch.groups[r])
        members = ci[key]
        pos = {int(v): k for k, v in enumerate(members)}
        idx, _ = oracles.knn(toy.features[members], pos[int(batch.source_i[r])], 5)
        assert pos[int(batch.source_j[r])] in idx


def test_fsmote_identical_pair_cluster():
    x = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0], [0.5, 0.2], [0.3, 0.9], [2.0, 2.0], [3.0, 0.0]])
    ds = Dataset(features=x, labels=[1, 1, 0, 0, 0, 0, 0], groups=[0, 0, 0, 0, 0, 1, 1], group_names=("a", "b"))
    aug, batch = oversample(ds, OversamplerConfig(technique="FSMOTE"))
    dup = batch.labels == 1
    assert dup.sum() == 1
    np.testing.assert_array_equal(batch.features[dup], [[1.0, 1.0]])


def test_fsmote_single_instance_cluster_duplicates():
    ds = blobs({(1, 0): 1, (0, 0): 5, (1, 1): 5, (0, 1): 5})
    _, batch = oversample(ds, OversamplerConfig(technique="FSMOTE"))
    assert batch.fallbacks[(1, 0)] == ["duplicate"]
    assert batch.counts[(1, 0)] == 4


def test_fbsmote_danger_set_matches_oracle():
    rng = np.random.default_rng(12)
    # two classes touching along x=0
    x = np.r_[rng.normal([-1, 0], 0.7, size=(40, 2)), rng.normal([1, 0], 0.7, size=(40, 2))]
    labels = np.r_[np.zeros(40, int), np.ones(40, int)]
    groups = rng.integers(0, 2, 80)
    ds = Dataset(features=x, labels=labels, groups=groups, group_names=("a", "b"))
    mask = danger_mask(ds, np.arange(80), 5)
    expected = [2.5 <= oracles.opposite_count(x, labels, i, 5) < 5 for i in range(80)]
    assert mask.tolist() == expected
    assert 0 < sum(expected) < 80


def test_fbsmote_sources_are_dangerous_or_fallback():
    rng = np.random.default_rng(3)
    x = np.r_[rng.normal([-1, 0], 0.8, size=(60, 2)), rng.normal([1, 0], 0.8, size=(30, 2))]
    labels = np.r_[np.zeros(60, int), np.ones(30, int)]
    groups = np.r_[rng.integers(0, 2, 60), rng.integers(0, 2, 30)]
    ds = Dataset(features=x, labels=labels, groups=groups, group_names=("a", "b"))
    _, batch = oversample(ds, OversamplerConfig(technique="FBSMOTE", seed=2))
    for r in range(len(batch)):
        i = batch.source_i[r]
        if batch.tags[r] == "FBSMOTE":
            assert 2.5 <= oracles.opposite_count(x, labels, i, 5) < 5


def test_fbsmote_fallback_when_no_danger():
    # classes far apart: nobody is borderline
    ds = make_synthetic_dataset(
        {(1, 0): 20, (0, 0): 12, (1, 1): 8, (0, 1): 5},
        {(1, 0): [20, 0], (0, 0): [-20, 0], (1, 1): [20, 3], (0, 1): [-20, 3]},
        seed=0,
    )
    aug, batch = oversample(ds, OversamplerConfig(technique="FBSMOTE"))
    assert set(imbalance_degrees(partition_clusters(aug)).values()) == {0}
    assert all("no-danger-instances" in v for v in batch.fallbacks.values())


def test_adasyn_allocation():
    assert adasyn_allocation([0.2, 0.6], 4).tolist() == [1, 3]
    assert adasyn_allocation([0.0, 0.0, 0.0], 7).tolist() == [3, 2, 2]
    # floors 0,1,1 -> residual 1 goes to the highest ratio
    assert adasyn_allocation([0.2, 0.4, 0.4], 3).tolist() == [0, 2, 1]


@given(st.lists(st.integers(0, 5), min_size=1, max_size=30), st.integers(0, 500))
@settings(max_examples=200, deadline=None)
def test_adasyn_allocation_conserves(counts, total):
    ratios = [c / 5 for c in counts]
    alloc = adasyn_allocation(ratios, total)
    assert alloc.sum() == total
    assert np.all(alloc >= 0)
    if sum(ratios) > 0:
        share = np.array(ratios) / sum(ratios) * total
        assert np.all(np.abs(alloc - share) < 1 + 1e-9)


def test_fadasyn_uniform_fallback():
    ds = make_synthetic_dataset(
        {(1, 0): 20, (0, 0): 12, (1, 1): 8, (0, 1): 5},
        {(1, 0): [20, 0], (0, 0): [-20, 0], (1, 1): [20, 3], (0, 1): [-20, 3]},
        seed=0,
    )
    aug, batch = oversample(ds, OversamplerConfig(technique="FADASYN"))
    assert set(imbalance_degrees(partition_clusters(aug)).values()) == {0}
    assert batch.fallbacks[(0, 1)] == ["uniform-allocation"]


def test_fadasyn_allocation_follows_ratios(toy):
    _, batch = oversample(toy, OversamplerConfig(technique="FADASYN", seed=0))
    ci = partition_clusters(toy)
    members = ci[(0, 1)]
    ratios = [oracles.opposite_count(toy.features, toy.labels, i, 5) / 5 for i in members]
    expected = adasyn_allocation(ratios, 470)
    got = [int(np.sum(batch.source_i == i)) for i in members]
    assert got == expected.tolist()


# -- shared properties ---------------------------------------------------------


def random_cluster_dataset(seed, max_size=60):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    sizes = {(y, g): int(rng.integers(5, max_size)) for y in (0, 1) for g in range(m)}
    means = {k: rng.normal(size=3) for k in sizes}
    return make_synthetic_dataset(sizes, means, seed=seed)


@given(st.integers(0, 10_000), st.sampled_from(FAIR_TECHNIQUES))
@settings(max_examples=40, deadline=None)
def test_fair_techniques_balance_property(seed, technique):
    ds = random_cluster_dataset(seed)
    aug, batch = oversample(ds, OversamplerConfig(technique=technique, seed=seed))
    assert set(imbalance_degrees(partition_clusters(aug)).values()) == {0}
    # original rows untouched, in order
    assert np.array_equal(aug.features[: ds.n], ds.features)
    assert np.array_equal(aug.labels[: ds.n], ds.labels)
    assert np.array_equal(aug.groups[: ds.n], ds.groups)
    assert np.array_equal(aug.labels[ds.n:], batch.labels)


def test_technique_parse():
    assert Technique.parse("ours") is Technique.HETERO
    assert Technique.parse("original") is Technique.NONE
    assert Technique.parse("fbsmote") is Technique.FBSMOTE
    with pytest.raises(ParameterError):
        Technique.parse("nope")


def test_none_technique_returns_input(toy):
    aug, batch = oversample(toy, OversamplerConfig(technique="None"))
    assert aug is toy and len(batch) == 0


def test_config_validation():
    with pytest.raises(ParameterError):
        OversamplerConfig(k=0)
    with pytest.raises(ParameterError):
        OversamplerConfig(max_pair_retries=0)
