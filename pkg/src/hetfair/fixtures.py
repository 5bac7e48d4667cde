"""Synthetic datasets used by tests, acceptance checks and the experiment scripts."""

from __future__ import annotations

import numpy as np

from hetfair.dataset import Dataset, DatasetSchema, make_synthetic_dataset, save_csv

# (label, group) -> size; group 1 is the minority group, (0, 1) the smallest cluster
TOY_SIZES = {(1, 0): 500, (0, 0): 300, (1, 1): 150, (0, 1): 30}

# Axis 0 carries the class signal, axis 1 is a group proxy. Group 1's class
# means sit 0.5 lower on the class axis and 3 higher on the proxy axis.
TOY_MEANS = {
    (1, 0): (1.0, 0.0),
    (0, 0): (-1.0, 0.0),
    (1, 1): (0.5, 3.0),
    (0, 1): (-1.5, 3.0),
}


def toy_dataset(seed: int = 0) -> Dataset:
    return make_synthetic_dataset(TOY_SIZES, TOY_MEANS, seed=seed)


def fair_dataset(seed: int = 0, per_cluster: int = 200, m: int = 2) -> Dataset:
    """Every group has the same class balance and the same class-conditional law."""
    sizes = {(y, g): per_cluster for y in (0, 1) for g in range(m)}
    means = {(y, g): (1.0 if y else -1.0, 0.0) for y in (0, 1) for g in range(m)}
    return make_synthetic_dataset(sizes, means, seed=seed)


# cluster sizes reproducing N=1000, classes 300/700 and groups 490/139/200/171
GERMAN_LIKE_SIZES = {
    (1, 0): 147, (0, 0): 343,
    (1, 1): 42, (0, 1): 97,
    (1, 2): 60, (0, 2): 140,
    (1, 3): 51, (0, 3): 120,
}


def write_german_like_csv(path, seed: int = 0) -> DatasetSchema:
    """Write a 1000 x 30 numeric CSV shaped like the German Credit benchmark.

    Two protected columns (``sex``, ``age_group``) define the four groups and
    are also features; 28 further Gaussian features carry a weak class signal.
    Returns the matching schema. Class 1 (``label == 1``) is the 300-row class.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for (y, g), n in sorted(GERMAN_LIKE_SIZES.items()):
        sex, age = divmod(g, 2)
        base = rng.standard_normal((n, 28)) + (0.6 if y else -0.2) * np.linspace(1, 0, 28) + 0.1 * g
        for r in range(n):
            rows.append((y, sex, age, base[r]))
    order = rng.permutation(len(rows))
    feature_cols = ["sex", "age_group"] + [f"f{k:02d}" for k in range(28)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["credit_risk", *feature_cols]) + "\n")
        for idx in order:
            y, sex, age, f = rows[idx]
            fh.write(",".join([str(y), str(sex), str(age), *(repr(float(v)) for v in f)]) + "\n")
    return DatasetSchema(
        label_column="credit_risk",
        positive_label="1",
        group_columns=("sex", "age_group"),
        feature_columns=tuple(feature_cols),
    )


def write_dataset_csv(ds: Dataset, path) -> DatasetSchema:
    """Save an in-memory dataset with the default schema used by ``save_csv``."""
    save_csv(ds, path)
    return DatasetSchema(
        label_column="label", positive_label="1", group_columns=("group",), feature_columns=ds.feature_names
    )
