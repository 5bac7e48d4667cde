import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hetfair.errors import ParameterError, UndefinedRateError
from hetfair.metrics import (
    ConfusionMatrix,
    balanced_accuracy,
    confusion,
    disparity,
    equal_opportunity,
    equalized_odds,
    statistical_parity,
)


def test_confusion_examples():
    assert confusion([1, 1, 0, 0], [1, 0, 0, 1]) == ConfusionMatrix(tp=1, fn=1, fp=1, tn=1)
    cm = confusion([1, 0, 1, 0, 0], [1, 0, 1, 0, 0])
    assert cm.fn == cm.fp == 0 and cm.total == 5
    with pytest.raises(ParameterError):
        confusion([1, 0], [1])


def test_statistical_parity_example():
    # overall positive rate 0.5; group 1 rate 0.3 (3 of 10), group 0 rate 0.7
    pred = [1] * 7 + [0] * 3 + [1] * 3 + [0] * 7
    groups = [0] * 10 + [1] * 10
    res = statistical_parity(pred, groups)
    assert res.values == pytest.approx((-0.2, 0.2))
    assert res.disparity == pytest.approx(0.4)
    same = statistical_parity([1, 0, 1, 0], [0, 0, 1, 1])
    assert same.disparity == 0.0


def test_equal_opportunity_example():
    # positives: group 0 has 5 with 5 hits, group 1 has 5 with 3 hits -> overall TPR 0.8
    y_true = [1] * 10 + [0, 0]
    y_pred = [1] * 5 + [1, 1, 1, 0, 0] + [0, 1]
    groups = [0] * 5 + [1] * 5 + [0, 1]
    res = equal_opportunity(y_true, y_pred, groups)
    assert res.values == pytest.approx((0.8 - 1.0, 0.8 - 0.6))
    perfect = equal_opportunity(y_true, y_true, groups)
    assert perfect.values == (0.0, 0.0) and perfect.disparity == 0.0


def test_equalized_odds_example():
    # group 1: TPR gap 0.2 and TNR gap 0.1 relative to the overall rates
    y_true, y_pred, groups = [], [], []

    def block(g, y, n, hits):
        y_true.extend([y] * n)
        groups.extend([g] * n)
        y_pred.extend([y] * hits + [1 - y] * (n - hits))

    block(0, 1, 10, 10)
    block(0, 0, 10, 10)
    block(1, 1, 10, 6)
    block(1, 0, 10, 8)
    res = equalized_odds(y_true, y_pred, groups)
    tpr, tnr = 16 / 20, 18 / 20
    assert res.per_class[1] == pytest.approx((tpr - 1.0, tpr - 0.6))
    assert res.per_class[0] == pytest.approx((tnr - 1.0, tnr - 0.8))
    assert res.values[1] == pytest.approx(0.15)
    assert res.values[0] == pytest.approx(-0.15)
    assert res.disparity == pytest.approx(0.3)


def test_equalized_odds_zero_when_group_matches_overall():
    y = [1, 0, 1, 0]
    res = equalized_odds(y, y, [0, 0, 1, 1])
    assert res.values == (0.0, 0.0)


def test_undefined_rates():
    with pytest.raises(UndefinedRateError) as info:
        equal_opportunity([1, 0, 0], [1, 0, 0], [0, 1, 1])
    assert info.value.group == 1
    with pytest.raises(UndefinedRateError):
        equalized_odds([1, 1, 0], [1, 1, 0], [0, 1, 0])
    with pytest.raises(UndefinedRateError):
        balanced_accuracy(ConfusionMatrix(tp=3, fn=0, fp=0, tn=0))


def test_balanced_accuracy_examples():
    assert balanced_accuracy(ConfusionMatrix(tp=8, fn=2, fp=4, tn=6)) == pytest.approx(0.7)
    assert balanced_accuracy(confusion([1, 0, 1], [1, 0, 1])) == 1.0
    y = [1, 0] * 10
    assert balanced_accuracy(confusion(y, [1] * 20)) == 0.5


def _random_case(seed, n=200, m=3):
    rng = np.random.default_rng(seed)
    while True:
        y_true = rng.integers(0, 2, n)
        y_pred = rng.integers(0, 2, n)
        groups = rng.integers(0, m, n)
        if all(((groups == g) & (y_true == y)).any() for g in range(m) for y in (0, 1)):
            return y_true.tolist(), y_pred.tolist(), groups.tolist()


@pytest.mark.parametrize("seed", range(100))
def test_against_counting_oracles(seed):
    y_true, y_pred, groups = _random_case(seed)
    cm = confusion(y_true, y_pred)
    assert (cm.tp, cm.fn, cm.fp, cm.tn) == oracles.tally(y_true, y_pred)
    assert balanced_accuracy(cm) == pytest.approx(oracles.bacc(*oracles.tally(y_true, y_pred)), abs=1e-12)
    for fn, ref in (
        (lambda: statistical_parity(y_pred, groups), oracles.sp_values(y_pred, groups)),
        (lambda: equal_opportunity(y_true, y_pred, groups), oracles.eopp_values(y_true, y_pred, groups)),
        (lambda: equalized_odds(y_true, y_pred, groups), oracles.eodds_values(y_true, y_pred, groups)),
    ):
        res = fn()
        np.testing.assert_allclose(res.values, ref, atol=1e-12, rtol=0)
        assert res.disparity == pytest.approx(oracles.spread(ref), abs=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_group_relabeling_invariance(seed):
    y_true, y_pred, groups = _random_case(seed, n=80)
    perm = np.random.default_rng(seed).permutation(3)
    relabeled = [int(perm[g]) for g in groups]
    for fn in (
        lambda g: statistical_parity(y_pred, g),
        lambda g: equal_opportunity(y_true, y_pred, g),
        lambda g: equalized_odds(y_true, y_pred, g),
    ):
        a, b = fn(groups), fn(relabeled)
        assert a.disparity == pytest.approx(b.disparity, abs=1e-12)
        for g in range(3):
            assert a.values[g] == pytest.approx(b.values[int(perm[g])], abs=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_prediction_flip_symmetry_and_ranges(seed):
    y_true, y_pred, groups = _random_case(seed, n=80)
    a = statistical_parity(y_pred, groups)
    b = statistical_parity([1 - p for p in y_pred], groups)
    np.testing.assert_allclose(a.values, [-v for v in b.values], atol=1e-12)
    assert a.disparity == pytest.approx(b.disparity, abs=1e-12)
    for res in (a, equal_opportunity(y_true, y_pred, groups), equalized_odds(y_true, y_pred, groups)):
        assert 0.0 <= res.disparity <= 1.0
    assert 0.0 <= balanced_accuracy(confusion(y_true, y_pred)) <= 1.0


def test_single_group_has_zero_disparity():
    y_true, y_pred, _ = _random_case(1, n=40)
    ones = [0] * 40
    assert statistical_parity(y_pred, ones).disparity == 0.0
    assert equal_opportunity(y_true, y_pred, ones).disparity == 0.0
    assert equalized_odds(y_true, y_pred, ones).disparity == 0.0


def test_disparity_is_absolute_spread():
    assert disparity([0.1, -0.3, 0.2]) == pytest.approx(0.5)
