"""Confusion counts, group fairness metrics, disparity and balanced accuracy."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from hetfair.errors import ParameterError, UndefinedRateError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


class MetricKind(str, enum.Enum):
    SP = "StatisticalParity"
    EOPP = "EqualOpportunity"
    EODDS = "EqualizedOdds"


@dataclass(frozen=True)
class GroupMetricSet:
    """Per-group values F_g (indexed like ``group_ids``) and their spread.

    For equalized odds ``per_class`` carries the two signed per-class gaps
    (y=0 and y=1) whose mean is F_g.
    """

    kind: MetricKind
    group_ids: tuple[int, ...]
    values: tuple[float, ...]
    disparity: float
    per_class: dict[int, tuple[float, ...]] = field(default_factory=dict)


def _arrays(*vectors):
    arrs = [np.asarray(v).astype(np.int64).reshape(-1) for v in vectors]
    n = len(arrs[0])
    if any(len(a) != n for a in arrs):
        raise ParameterError("length mismatch")
    if n == 0:
        raise ParameterError("need at least one instance")
    return arrs


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t, p = _arrays(y_true, y_pred)
    return ConfusionMatrix(
        tp=int(np.sum((t == 1) & (p == 1))),
        fn=int(np.sum((t == 1) & (p == 0))),
        fp=int(np.sum((t == 0) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
    )


def disparity(values) -> float:
    values = list(values)
    if not values:
        raise ParameterError("no group values")
    return abs(max(values) - min(values))


def _rate(pred, mask, what, group=None) -> float:
    n = int(mask.sum())
    if n == 0:
        raise UndefinedRateError(f"{what} is undefined for group {group}: empty stratum", group)
    return float(pred[mask].sum() / n)


def statistical_parity(y_pred, groups) -> GroupMetricSet:
    p, g = _arrays(y_pred, groups)
    ids = tuple(int(k) for k in np.unique(g))
    overall = _rate(p, np.ones_like(p, dtype=bool), "positive rate")
    vals = tuple(overall - _rate(p, g == k, "positive rate", k) for k in ids)
    return GroupMetricSet(MetricKind.SP, ids, vals, disparity(vals))


def _gap(t, p, g, ids, y, what):
    hit = (p == y).astype(np.int64)
    overall = _rate(hit, t == y, what)
    return tuple(overall - _rate(hit, (t == y) & (g == k), what, k) for k in ids)


def equal_opportunity(y_true, y_pred, groups) -> GroupMetricSet:
    t, p, g = _arrays(y_true, y_pred, groups)
    ids = tuple(int(k) for k in np.unique(g))
    vals = _gap(t, p, g, ids, 1, "true positive rate")
    return GroupMetricSet(MetricKind.EOPP, ids, vals, disparity(vals))


def equalized_odds(y_true, y_pred, groups) -> GroupMetricSet:
    t, p, g = _arrays(y_true, y_pred, groups)
    ids = tuple(int(k) for k in np.unique(g))
    gaps = {
        1: _gap(t, p, g, ids, 1, "true positive rate"),
        0: _gap(t, p, g, ids, 0, "true negative rate"),
    }
    vals = tuple(0.5 * (a + b) for a, b in zip(gaps[0], gaps[1]))
    return GroupMetricSet(MetricKind.EODDS, ids, vals, disparity(vals), per_class=gaps)


def balanced_accuracy(cm: ConfusionMatrix) -> float:
    if cm.tp + cm.fn == 0 or cm.tn + cm.fp == 0:
        raise UndefinedRateError("balanced accuracy needs both true classes present")
    return 0.5 * (cm.tp / (cm.tp + cm.fn) + cm.tn / (cm.tn + cm.fp))
