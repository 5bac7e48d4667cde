"""Cross-validated benchmark: oversample train folds, fit classifiers, score test folds."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from hetfair.classify import ModelKind, predict, train
from hetfair.dataset import Dataset, DatasetSchema, load_csv, load_schema, partition_clusters
from hetfair.errors import FoldError, HetfairError, ParameterError, UndefinedRateError, ValidationError
from hetfair.metrics import balanced_accuracy, confusion, equal_opportunity, equalized_odds, statistical_parity
from hetfair.oversample import OversamplerConfig, Technique, oversample

log = logging.getLogger(__name__)

PLAN_VERSION = 1
METRICS = ("bacc", "sp", "eopp", "eodds")
METRIC_TITLES = {"bacc": "BAcc", "sp": "SP", "eopp": "E.Opp.", "eodds": "E.Odds"}
ALL_TECHNIQUES = tuple(Technique)
ALL_CLASSIFIERS = tuple(ModelKind)


def technique_label(t: Technique) -> str:
    return "Original" if t is Technique.NONE else t.value


@dataclass
class ExperimentPlan:
    """What to run. ``data`` is a CSV path (needs ``schema``) or a loaded Dataset."""

    data: object
    schema: object = None
    techniques: Sequence = ALL_TECHNIQUES
    classifiers: Sequence = ALL_CLASSIFIERS
    k: int = 5
    folds: int = 5
    seeds: Sequence[int] = (0, 1, 2, 3, 4)
    output_dir: str | None = None
    formats: Sequence[str] = ("text", "csv", "markdown")
    pin_protected: bool = True
    classifier_params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.techniques = tuple(Technique.parse(t) for t in self.techniques)
        self.classifiers = tuple(ModelKind.parse(c) for c in self.classifiers)
        self.seeds = tuple(int(s) for s in self.seeds)
        if self.folds < 2:
            raise ParameterError("folds must be >= 2")
        if not self.techniques or not self.classifiers:
            raise ParameterError("need at least one technique and one classifier")
        if not self.seeds:
            raise ParameterError("need at least one seed")

    def load(self) -> Dataset:
        if isinstance(self.data, Dataset):
            return self.data
        schema = self.schema if isinstance(self.schema, DatasetSchema) else load_schema(self.schema)
        return load_csv(self.data, schema)

    def describe(self) -> dict:
        return {
            "data": self.data if not isinstance(self.data, Dataset) else "<in-memory>",
            "techniques": [technique_label(t) for t in self.techniques],
            "classifiers": [c.short for c in self.classifiers],
            "k": self.k,
            "folds": self.folds,
            "seeds": list(self.seeds),
            "pin_protected": self.pin_protected,
        }


def load_plan(path) -> ExperimentPlan:
    """Read a JSON plan file; relative paths resolve against the plan's directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"plan file {path} is not valid JSON: {exc}") from exc
    if raw.get("version", PLAN_VERSION) != PLAN_VERSION:
        raise ValidationError(f"unsupported plan version {raw.get('version')}")
    for key in ("dataset", "schema"):
        if key not in raw:
            raise ValidationError(f"plan is missing {key!r}")
    base = path.parent

    def resolve(p):
        return str(p) if Path(p).is_absolute() else str(base / p)

    kwargs = {"data": resolve(raw["dataset"]), "schema": resolve(raw["schema"])}
    for key in ("techniques", "classifiers", "k", "folds", "seeds", "formats", "pin_protected"):
        if key in raw:
            kwargs[key] = raw[key]
    if "output_dir" in raw:
        kwargs["output_dir"] = resolve(raw["output_dir"])
    unknown = set(raw) - {"version", "dataset", "schema", "output_dir", *kwargs}
    if unknown:
        raise ValidationError(f"unknown plan keys: {sorted(unknown)}")
    return ExperimentPlan(**kwargs)


def stratified_folds(ds: Dataset, folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split indices into ``folds`` (train, test) pairs, stratified by (class, group) cluster.

    Falls back to class stratification when a non-empty cluster has fewer
    than ``folds`` members. Assignment continues round-robin across strata
    so fold sizes differ by at most one.
    """
    if folds < 2:
        raise ParameterError("folds must be >= 2")
    if ds.n < folds:
        raise FoldError(f"cannot make {folds} folds from {ds.n} instances")
    rng = np.random.default_rng(seed)
    ci = partition_clusters(ds)
    sizes = ci.sizes()
    if all(s == 0 or s >= folds for s in sizes.values()):
        strata = [ci[k] for k in ci.keys()]
    else:
        log.warning("a cluster has fewer than %d instances; stratifying by class only", folds)
        strata = [np.flatnonzero(ds.labels == c) for c in (0, 1)]

    assign = np.empty(ds.n, dtype=np.int64)
    offset = 0
    for members in strata:
        shuffled = rng.permutation(members)
        assign[shuffled] = (offset + np.arange(len(shuffled))) % folds
        offset += len(shuffled)

    out = []
    for f in range(folds):
        test = np.flatnonzero(assign == f)
        trn = np.flatnonzero(assign != f)
        if len(np.unique(ds.labels[trn])) < 2:
            raise FoldError(f"fold {f}: training portion lacks a class")
        out.append((trn, test))
    return out


def derive_seed(base: int, fold: int, technique: Technique) -> int:
    tech = list(Technique).index(technique)
    return int(np.random.SeedSequence([base, fold, tech]).generate_state(1, dtype=np.uint64)[0])


def _score(y_true, y_pred, groups) -> tuple[dict, dict]:
    values, extra = {}, {}
    for name, fn in (
        ("bacc", lambda: balanced_accuracy(confusion(y_true, y_pred))),
        ("sp", lambda: statistical_parity(y_pred, groups).disparity),
        ("eopp", lambda: equal_opportunity(y_true, y_pred, groups).disparity),
    ):
        try:
            values[name] = float(fn())
        except UndefinedRateError as exc:
            values[name] = None
            extra.setdefault("errors", {})[name] = str(exc)
    try:
        eo = equalized_odds(y_true, y_pred, groups)
        values["eodds"] = float(eo.disparity)
        extra["eodds_gaps"] = {str(y): list(v) for y, v in sorted(eo.per_class.items())}
    except UndefinedRateError as exc:
        values["eodds"] = None
        extra.setdefault("errors", {})["eodds"] = str(exc)
    return values, extra


@dataclass
class EvaluationReport:
    plan: dict
    folds: list[dict]
    skipped: list[dict]

    def cells(self) -> list[tuple[str, str]]:
        seen = []
        for rec in self.folds:
            key = (rec["technique"], rec["classifier"])
            if key not in seen:
                seen.append(key)
        return seen

    def values(self, technique: str, classifier: str, metric: str) -> list[float]:
        return [
            r[metric]
            for r in self.folds
            if r["technique"] == technique and r["classifier"] == classifier and r[metric] is not None
        ]

    def mean(self, technique: str, classifier: str, metric: str) -> float | None:
        vals = self.values(technique, classifier, metric)
        return sum(vals) / len(vals) if vals else None

    def summary(self) -> dict:
        out = {}
        for t, c in self.cells():
            n_total = sum(1 for r in self.folds if r["technique"] == t and r["classifier"] == c)
            out.setdefault(c, {})[t] = {
                **{m: self.mean(t, c, m) for m in METRICS},
                "skipped": {m: n_total - len(self.values(t, c, m)) for m in METRICS},
            }
        return out

    def to_json(self) -> str:
        doc = {"version": 1, "plan": self.plan, "summary": self.summary(), "folds": self.folds, "skipped": self.skipped}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        doc = json.loads(text)
        return cls(plan=doc["plan"], folds=doc["folds"], skipped=doc["skipped"])


def run_experiment(
    plan: ExperimentPlan,
    on_oversample: Callable | None = None,
) -> EvaluationReport:
    """Run every (seed, fold, technique, classifier) cell of ``plan``.

    ``on_oversample(seed, fold, technique, train_idx, test_idx, batch)`` is
    called after each oversampling step; batch indices refer to the
    training subset, i.e. ``train_idx[batch.source_i]`` are dataset rows.
    """
    ds = plan.load()
    records, skipped = [], []
    for seed in plan.seeds:
        for fold, (trn, tst) in enumerate(stratified_folds(ds, plan.folds, seed)):
            train_ds, test_ds = ds.subset(trn), ds.subset(tst)
            for tech in plan.techniques:
                cfg = OversamplerConfig(
                    technique=tech, k=plan.k, seed=derive_seed(seed, fold, tech), pin_protected=plan.pin_protected
                )
                aug, batch = oversample(train_ds, cfg)
                if on_oversample is not None:
                    on_oversample(seed, fold, tech, trn, tst, batch)
                for kind in plan.classifiers:
                    model = train(kind, aug.features, aug.labels, plan.classifier_params.get(kind.short))
                    pred = predict(model, test_ds.features)
                    values, extra = _score(test_ds.labels, pred, test_ds.groups)
                    rec = {
                        "seed": seed,
                        "fold": fold,
                        "technique": technique_label(tech),
                        "classifier": kind.short,
                        "n_train": int(aug.n),
                        "n_synthetic": len(batch),
                        "n_test": int(test_ds.n),
                        **values,
                        **{k: v for k, v in extra.items() if k != "errors"},
                    }
                    records.append(rec)
                    for metric, reason in extra.get("errors", {}).items():
                        entry = {
                            "seed": seed,
                            "fold": fold,
                            "technique": rec["technique"],
                            "classifier": rec["classifier"],
                            "metric": metric,
                            "reason": reason,
                        }
                        log.warning("skipping %s", entry)
                        skipped.append(entry)
    return EvaluationReport(plan=plan.describe(), folds=records, skipped=skipped)


# -- report writing -----------------------------------------------------------


def _best_flags(rows: dict[str, dict]) -> dict[str, set[str]]:
    flags = {t: set() for t in rows}
    for m in METRICS:
        vals = {t: r[m] for t, r in rows.items() if r[m] is not None}
        if not vals:
            continue
        best = max(vals.values()) if m == "bacc" else min(vals.values())
        for t, v in vals.items():
            if v == best:
                flags[t].add(m)
    return flags


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.4f}"


def render_tables(report: EvaluationReport, fmt: str) -> str:
    """Render one table per classifier; best value per column is marked with ``*``."""
    summary = report.summary()
    if not summary:
        raise ValidationError("report is empty")
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["classifier", "technique", *METRICS, "best", *(f"skipped_{m}" for m in METRICS)])
    for clf, rows in summary.items():
        flags = _best_flags(rows)
        cell = {t: [_fmt(r[m]) + ("*" if m in flags[t] else "") for m in METRICS] for t, r in rows.items()}
        if fmt == "csv":
            for t, r in rows.items():
                w.writerow(
                    [clf, t, *("" if r[m] is None else repr(r[m]) for m in METRICS), ";".join(
                        m for m in METRICS if m in flags[t]), *(r["skipped"][m] for m in METRICS)]
                )
        elif fmt == "markdown":
            buf.write(f"### {clf}\n\n| Technique | " + " | ".join(METRIC_TITLES[m] for m in METRICS) + " |\n")
            buf.write("|---|" + "---:|" * len(METRICS) + "\n")
            for t in rows:
                vals = [v.replace("*", "") for v in cell[t]]
                vals = [f"**{v}**" if m in flags[t] else v for v, m in zip(vals, METRICS)]
                buf.write(f"| {t} | " + " | ".join(vals) + " |\n")
            buf.write("\n")
        elif fmt == "text":
            width = max(len("Technique"), *(len(t) for t in rows))
            buf.write(f"Classifier: {clf}\n")
            buf.write("Technique".ljust(width) + "".join(METRIC_TITLES[m].rjust(10) for m in METRICS) + "\n")
            for t in rows:
                buf.write(t.ljust(width) + "".join(v.rjust(10) for v in cell[t]) + "\n")
            buf.write("\n")
        else:
            raise ParameterError(f"unknown report format {fmt!r}")
    if fmt != "csv" and report.skipped:
        buf.write(f"skipped metric values: {len(report.skipped)}\n")
    return buf.getvalue()


_SUFFIX = {"text": "txt", "csv": "csv", "markdown": "md"}


def write_report(report: EvaluationReport, out_dir, formats: Sequence[str] = ("text",)) -> list[Path]:
    """Write ``report.json`` (fold-level detail) plus one table file per format."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "report.json"]
        paths[0].write_text(report.to_json(), encoding="utf-8")
        for fmt in formats:
            p = out / f"report.{_SUFFIX.get(fmt, fmt)}"
            p.write_text(render_tables(report, fmt), encoding="utf-8")
            paths.append(p)
    except OSError as exc:
        raise HetfairError(f"cannot write report to {out}: {exc}") from exc
    return paths


def cluster_summary(ds: Dataset, batch) -> list[dict]:
    """Per-cluster original size, generated count and fallbacks of one oversampling run."""
    sizes = partition_clusters(ds).sizes()
    return [
        {
            "cluster": (k.label, k.group),
            "group_name": ds.group_names[k.group],
            "original": sizes[k],
            "generated": batch.counts.get(k, 0),
            "fallbacks": sorted(set(batch.fallbacks.get(k, []))),
        }
        for k in sorted(sizes, key=lambda k: (k.group, -k.label))
    ]

