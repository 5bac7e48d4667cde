"""Tabular data model, CSV ingestion, cluster partitioning and a Gaussian fixture generator."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from hetfair.errors import ParameterError, ParseError, SchemaError, ValidationError

SYNTHETIC_COLUMN = "__synthetic"
TECHNIQUE_COLUMN = "__source_technique"


@dataclass(frozen=True)
class DatasetSchema:
    label_column: str
    positive_label: str
    group_columns: tuple[str, ...]
    feature_columns: tuple[str, ...]
    delimiter: str = ","

    def __post_init__(self):
        object.__setattr__(self, "group_columns", tuple(self.group_columns))
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        object.__setattr__(self, "positive_label", str(self.positive_label))
        if not self.group_columns:
            raise SchemaError("group_columns must be non-empty")
        if not self.feature_columns:
            raise SchemaError("feature_columns must be non-empty")
        if self.label_column in self.feature_columns:
            raise SchemaError(f"label column {self.label_column!r} cannot also be a feature")
        if self.label_column in self.group_columns:
            raise SchemaError(f"label column {self.label_column!r} cannot also be a group column")
        for name, cols in (("group_columns", self.group_columns), ("feature_columns", self.feature_columns)):
            if len(set(cols)) != len(cols):
                raise SchemaError(f"duplicate names in {name}")
        if len(self.delimiter) != 1:
            raise SchemaError("delimiter must be a single character")

    def to_dict(self) -> dict:
        return {
            "label_column": self.label_column,
            "positive_label": self.positive_label,
            "group_columns": list(self.group_columns),
            "feature_columns": list(self.feature_columns),
            "delimiter": self.delimiter,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DatasetSchema":
        known = {"label_column", "positive_label", "group_columns", "feature_columns", "delimiter"}
        unknown = set(d) - known - {"version"}
        if unknown:
            raise SchemaError(f"unknown schema keys: {sorted(unknown)}")
        for key in known - {"delimiter"}:
            if key not in d:
                raise SchemaError(f"schema is missing {key!r}")
        return cls(
            label_column=d["label_column"],
            positive_label=str(d["positive_label"]),
            group_columns=tuple(d["group_columns"]),
            feature_columns=tuple(d["feature_columns"]),
            delimiter=d.get("delimiter", ","),
        )


def load_schema(path) -> DatasetSchema:
    """Read a schema file (a flat JSON object, see README)."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("schema file must hold a JSON object")
    return DatasetSchema.from_dict(raw)


def save_schema(schema: DatasetSchema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"version": 1, **schema.to_dict()}, fh, indent=2)
        fh.write("\n")


class ClusterKey(NamedTuple):
    label: int
    group: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable N x D feature matrix with binary labels and group ids.

    The optional CSV metadata (``schema``, ``header``, ``group_values``,
    ``negative_label``, ``passthrough``) is only needed to write the data
    back out in its original column layout.
    """

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    group_names: tuple[str, ...]
    feature_names: tuple[str, ...] = ()
    protected: tuple[int, ...] = ()
    schema: DatasetSchema | None = None
    header: tuple[str, ...] = ()
    group_values: tuple[tuple[str, ...], ...] = ()
    negative_label: str = "0"
    passthrough: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        x = np.array(self.features, dtype=float)
        y = np.array(self.labels, dtype=np.int64)
        g = np.array(self.groups, dtype=np.int64)
        if x.ndim != 2:
            raise ValidationError("features must be a 2-D matrix")
        n = x.shape[0]
        if y.shape != (n,) or g.shape != (n,):
            raise ValidationError("features, labels and groups must have the same length")
        if not np.all(np.isfinite(x)):
            raise ValidationError("features must be finite")
        if n and not np.all((y == 0) | (y == 1)):
            raise ValidationError("labels must be 0 or 1")
        m = len(self.group_names)
        if n and (g.min() < 0 or g.max() >= m):
            raise ValidationError(f"group ids must lie in [0, {m})")
        names = tuple(self.feature_names) or tuple(f"x{k}" for k in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise ValidationError("feature_names length does not match feature dimension")
        for arr in (x, y, g):
            arr.flags.writeable = False
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "groups", g)
        object.__setattr__(self, "group_names", tuple(self.group_names))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "protected", tuple(self.protected))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def m(self) -> int:
        return len(self.group_names)

    def class_counts(self) -> dict[int, int]:
        return {c: int(np.sum(self.labels == c)) for c in (1, 0)}

    def group_counts(self) -> list[int]:
        return [int(c) for c in np.bincount(self.groups, minlength=self.m)]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return replace(
            self,
            features=self.features[idx],
            labels=self.labels[idx],
            groups=self.groups[idx],
            passthrough={k: tuple(v[i] for i in idx) for k, v in self.passthrough.items()},
        )

    def append(self, features, labels, groups) -> "Dataset":
        """Return a new dataset with extra rows after the existing ones."""
        features = np.asarray(features, dtype=float).reshape(-1, self.d)
        k = features.shape[0]
        return replace(
            self,
            features=np.vstack([self.features, features]),
            labels=np.concatenate([self.labels, np.asarray(labels, dtype=np.int64)]),
            groups=np.concatenate([self.groups, np.asarray(groups, dtype=np.int64)]),
            passthrough={key: tuple(v) + ("",) * k for key, v in self.passthrough.items()},
        )


@dataclass(frozen=True)
class ClusterIndex:
    """Partition of instance indices into the 2*M (class, group) clusters."""

    members: Mapping[ClusterKey, np.ndarray]
    m: int

    def __getitem__(self, key) -> np.ndarray:
        return self.members[ClusterKey(*key)]

    def keys(self) -> list[ClusterKey]:
        return sorted(self.members)

    def sizes(self) -> dict[ClusterKey, int]:
        return {k: len(self.members[k]) for k in self.keys()}

    def heterogeneous(self, key) -> tuple[np.ndarray, np.ndarray]:
        """Indices of H_y (other class, same group) and H_g (same class, other groups)."""
        y, g = key
        h_y = self.members[ClusterKey(1 - y, g)]
        others = [self.members[ClusterKey(y, h)] for h in range(self.m) if h != g]
        h_g = np.sort(np.concatenate(others)) if others else np.empty(0, dtype=np.int64)
        return h_y, h_g.astype(np.int64)


def partition_clusters(ds: Dataset) -> ClusterIndex:
    members = {}
    for y in (0, 1):
        for g in range(ds.m):
            idx = np.flatnonzero((ds.labels == y) & (ds.groups == g)).astype(np.int64)
            idx.flags.writeable = False
            members[ClusterKey(y, g)] = idx
    return ClusterIndex(members=members, m=ds.m)


def imbalance_degrees(ci: ClusterIndex | Mapping) -> dict[ClusterKey, int]:
    sizes = ci.sizes() if isinstance(ci, ClusterIndex) else {ClusterKey(*k): int(v) for k, v in ci.items()}
    top = max(sizes.values())
    return {k: top - s for k, s in sizes.items()}


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric value {cell!r} at row {row}, column {column!r}", row, column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {cell!r} at row {row}, column {column!r}", row, column)
    return value


def load_csv(path, schema: DatasetSchema) -> Dataset:
    """Load a delimited file with a header row against ``schema``.

    Row numbers in errors are 1-based data rows (the header is row 0).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = tuple(h.strip() for h in next(reader))
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        rows = [r for r in reader if r]

    col = {name: k for k, name in enumerate(header)}
    for name in (schema.label_column, *schema.group_columns, *schema.feature_columns):
        if name not in col:
            raise SchemaError(f"column {name!r} not found in {path}")

    n = len(rows)
    x = np.empty((n, len(schema.feature_columns)))
    labels = np.empty(n, dtype=np.int64)
    groups = np.empty(n, dtype=np.int64)
    group_ids: dict[tuple[str, ...], int] = {}
    negative = None
    used = {schema.label_column, *schema.group_columns, *schema.feature_columns}
    extra = [h for h in header if h not in used]
    passthrough: dict[str, list[str]] = {h: [] for h in extra}

    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise ParseError(f"row {r} has {len(row)} fields, expected {len(header)}", r)
        cells = [c.strip() for c in row]
        for name in used:
            if cells[col[name]] == "":
                raise ParseError(f"missing value at row {r}, column {name!r}", r, name)
        for k, name in enumerate(schema.feature_columns):
            x[r - 1, k] = _parse_float(cells[col[name]], r, name)
        raw_label = cells[col[schema.label_column]]
        if raw_label == schema.positive_label:
            labels[r - 1] = 1
        else:
            labels[r - 1] = 0
            if negative is None:
                negative = raw_label
        gkey = tuple(cells[col[name]] for name in schema.group_columns)
        groups[r - 1] = group_ids.setdefault(gkey, len(group_ids))
        for h in extra:
            passthrough[h].append(cells[col[h]])

    if len(group_ids) < 2:
        raise ValidationError(f"need at least 2 distinct groups, found {len(group_ids)}")
    if n == 0 or labels.min() == labels.max():
        raise ValidationError("need both classes present (is positive_label correct?)")

    group_values = tuple(group_ids)
    protected = tuple(k for k, name in enumerate(schema.feature_columns) if name in schema.group_columns)
    return Dataset(
        features=x,
        labels=labels,
        groups=groups,
        group_names=tuple("/".join(v) for v in group_values),
        feature_names=schema.feature_columns,
        protected=protected,
        schema=schema,
        header=header,
        group_values=group_values,
        negative_label=negative,
        passthrough={k: tuple(v) for k, v in passthrough.items()},
    )


def save_csv(
    ds: Dataset,
    path,
    synthetic: Sequence[bool] | None = None,
    technique: Sequence[str] | None = None,
) -> None:
    """Write ``ds`` in its source column layout.

    When ``synthetic``/``technique`` are given, the ``__synthetic`` and
    ``__source_technique`` columns are appended. Group columns are written
    from the row's group value, so they always agree with the group id.
    """
    schema = ds.schema
    if schema is None:
        schema = DatasetSchema(
            label_column="label",
            positive_label="1",
            group_columns=("group",),
            feature_columns=ds.feature_names,
        )
    header = ds.header or (*schema.feature_columns, *schema.group_columns, schema.label_column)
    group_values = ds.group_values or tuple((name,) for name in ds.group_names)
    fcol = {name: k for k, name in enumerate(schema.feature_columns)}
    gcol = {name: k for k, name in enumerate(schema.group_columns)}
    extra_cols = synthetic is not None or technique is not None
    out_header = list(header) + ([SYNTHETIC_COLUMN, TECHNIQUE_COLUMN] if extra_cols else [])

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=schema.delimiter, lineterminator="\n")
        w.writerow(out_header)
        for i in range(ds.n):
            row = []
            for name in header:
                if name in gcol:
                    row.append(group_values[ds.groups[i]][gcol[name]])
                elif name in fcol:
                    row.append(repr(float(ds.features[i, fcol[name]])))
                elif name == schema.label_column:
                    row.append(schema.positive_label if ds.labels[i] == 1 else ds.negative_label)
                else:
                    row.append(ds.passthrough.get(name, ("",) * ds.n)[i])
            if extra_cols:
                is_syn = bool(synthetic[i]) if synthetic is not None else False
                row.append("1" if is_syn else "0")
                row.append(technique[i] if technique is not None else "")
            w.writerow(row)


def make_synthetic_dataset(
    sizes: Mapping[tuple[int, int], int],
    means: Mapping[tuple[int, int], Iterable[float]],
    covs: Mapping[tuple[int, int], object] | None = None,
    seed: int = 0,
    shuffle: bool = True,
) -> Dataset:
    """Draw a Gaussian blob per (class, group) cluster with exact sizes.

    ``covs`` may be omitted (identity) or map a key to a full matrix.
    Clusters with size 0 may be listed; at least two classes and two
    groups must be declared.
    """
    keys = sorted(ClusterKey(*k) for k in sizes)
    if {k.label for k in keys} != {0, 1}:
        raise ParameterError("both classes must be specified")
    m = max(k.group for k in keys) + 1
    if m < 2:
        raise ParameterError("at least two groups must be specified")
    dims = {len(list(means[k])) for k in keys}
    if len(dims) != 1:
        raise ParameterError("all means must have the same dimension")
    dim = dims.pop()
    rng = np.random.default_rng(seed)

    blocks, labels, groups = [], [], []
    for key in keys:
        n_k = int(sizes[key])
        if n_k < 0:
            raise ParameterError(f"negative size for cluster {tuple(key)}")
        mean = np.asarray(list(means[key]), dtype=float)
        cov = np.eye(dim) if covs is None or key not in covs else np.asarray(covs[key], dtype=float)
        if cov.shape != (dim, dim) or not np.allclose(cov, cov.T):
            raise ParameterError(f"covariance for cluster {tuple(key)} must be symmetric {dim}x{dim}")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ParameterError(f"covariance for cluster {tuple(key)} is not positive-definite") from None
        blocks.append(mean + rng.standard_normal((n_k, dim)) @ chol.T)
        labels.append(np.full(n_k, key.label))
        groups.append(np.full(n_k, key.group))

    x = np.vstack(blocks)
    y = np.concatenate(labels)
    g = np.concatenate(groups)
    if shuffle:
        perm = rng.permutation(len(y))
        x, y, g = x[perm], y[perm], g[perm]
    return Dataset(features=x, labels=y, groups=g, group_names=tuple(f"g{k}" for k in range(m)))


def describe(ds: Dataset) -> dict:
    """Dataset characteristics in the layout of a benchmark summary table."""
    counts = ds.class_counts()
    ci = partition_clusters(ds)
    return {
        "N": ds.n,
        "D": ds.d,
        "M": ds.m,
        "class_distribution": f"{counts[1]}/{counts[0]}",
        "group_distribution": "/".join(str(c) for c in ds.group_counts()),
        "group_names": list(ds.group_names),
        "cluster_sizes": {f"{k.label},{k.group}": s for k, s in ci.sizes().items()},
        "imbalance_degrees": {f"{k.label},{k.group}": v for k, v in imbalance_degrees(ci).items()},
    }
