"""Oversamplers: the heterogeneous-cluster technique and the SMOTE-family baselines.

Every technique consumes one ``numpy.random.Generator`` seeded from
``OversamplerConfig.seed``. Draw order per synthetic instance is fixed:

* HeteroFair: source i, Bernoulli b, partner j, weight w (a degenerate pair
  redraws i, b, j before w is drawn).
* SMOTE / FSMOTE / FBSMOTE: source i, partner j, weight w.
* FADASYN: partner j, weight w (sources come from the deterministic allocation).

Clusters are processed in sorted ``(label, group)`` order.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from hetfair.dataset import ClusterIndex, ClusterKey, Dataset, partition_clusters
from hetfair.errors import (
    DegeneratePairError,
    HeteroUnavailableError,
    NoSourceError,
    ParameterError,
)
from hetfair.neighbors import NeighborCache, knn_table

log = logging.getLogger(__name__)


class Technique(str, enum.Enum):
    NONE = "None"
    SMOTE = "SMOTE"
    FSMOTE = "FSMOTE"
    FBSMOTE = "FBSMOTE"
    FADASYN = "FADASYN"
    HETERO = "HeteroFair"

    @classmethod
    def parse(cls, name) -> "Technique":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"original": cls.NONE, "none": cls.NONE, "ours": cls.HETERO, "hetero": cls.HETERO}
        if key in aliases:
            return aliases[key]
        for t in cls:
            if t.value.lower() == key:
                return t
        raise ParameterError(f"unknown technique {name!r}; choose from {[t.value for t in cls]}")


FAIR_TECHNIQUES = (Technique.FSMOTE, Technique.FBSMOTE, Technique.FADASYN, Technique.HETERO)


@dataclass(frozen=True)
class OversamplerConfig:
    technique: Technique = Technique.HETERO
    k: int = 5
    seed: int = 0
    pin_protected: bool = True
    max_pair_retries: int = 10

    def __post_init__(self):
        object.__setattr__(self, "technique", Technique.parse(self.technique))
        if self.k < 1:
            raise ParameterError("K must be >= 1")
        if self.max_pair_retries < 1:
            raise ParameterError("max_pair_retries must be >= 1")


INTRA_GROUP = "IntraGroup"
INTRA_CLASS = "IntraClass"


@dataclass(frozen=True)
class PairProposal:
    """A generation pair for ``target``; ``i`` and ``j`` are dataset row indices."""

    target: ClusterKey
    i: int
    j: int
    pair_kind: str
    p: float
    bernoulli_draw: bool


@dataclass
class SyntheticBatch:
    """Generated rows plus provenance, parallel arrays of length ``len(batch)``.

    ``source_i``/``source_j`` index the dataset that was oversampled
    (``-1`` when there was no partner). ``deltas`` is NaN for techniques
    other than HeteroFair.
    """

    technique: Technique
    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    tags: list[str]
    source_i: np.ndarray
    source_j: np.ndarray
    weights: np.ndarray
    deltas: np.ndarray
    pair_kinds: list[str | None]
    counts: dict[ClusterKey, int]
    fallbacks: dict[ClusterKey, list[str]]
    warnings: list[str]

    def __len__(self) -> int:
        return len(self.labels)

    def cluster_keys(self) -> list[ClusterKey]:
        return [ClusterKey(int(y), int(g)) for y, g in zip(self.labels, self.groups)]


@dataclass
class _Builder:
    technique: Technique
    dim: int
    rows: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    fallbacks: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def add(self, x, key, tag, i, j=-1, w=0.0, delta=np.nan, kind=None):
        self.rows.append((np.asarray(x, dtype=float), key, tag, i, j, w, delta, kind))
        self.counts[key] = self.counts.get(key, 0) + 1

    def fallback(self, key, what):
        self.fallbacks.setdefault(key, []).append(what)

    def warn(self, msg):
        log.warning(msg)
        self.warnings.append(msg)

    def build(self) -> SyntheticBatch:
        n = len(self.rows)
        col = list(zip(*self.rows)) if n else [()] * 8
        return SyntheticBatch(
            technique=self.technique,
            features=np.array(col[0], dtype=float).reshape(n, self.dim),
            labels=np.array([k.label for k in col[1]], dtype=np.int64),
            groups=np.array([k.group for k in col[1]], dtype=np.int64),
            tags=list(col[2]),
            source_i=np.array(col[3], dtype=np.int64),
            source_j=np.array(col[4], dtype=np.int64),
            weights=np.array(col[5], dtype=float),
            deltas=np.array(col[6], dtype=float),
            pair_kinds=list(col[7]),
            counts=dict(self.counts),
            fallbacks={k: list(v) for k, v in self.fallbacks.items()},
            warnings=list(self.warnings),
        )


# -- primitives ---------------------------------------------------------------


def selection_probability(ci: ClusterIndex, target) -> float:
    """Probability of drawing an intra-group pair: |H_y| / (|H_y| + |H_g|)."""
    h_y, h_g = ci.heterogeneous(ClusterKey(*target))
    return _probability(len(h_y), len(h_g), target)


def _probability(n_y: int, n_g: int, target) -> float:
    if n_y + n_g == 0:
        raise HeteroUnavailableError(f"cluster {tuple(target)} has no heterogeneous clusters")
    return n_y / (n_y + n_g)


def _propose(target, members, h_y, h_g, p, rng) -> PairProposal:
    i = int(members[rng.integers(len(members))])
    b = bool(rng.random() < p)
    use_y = (b and len(h_y) > 0) or len(h_g) == 0
    side = h_y if use_y else h_g
    j = int(side[rng.integers(len(side))])
    return PairProposal(
        target=target,
        i=i,
        j=j,
        pair_kind=INTRA_GROUP if use_y else INTRA_CLASS,
        p=p,
        bernoulli_draw=b,
    )


def propose_pair(ds: Dataset, ci: ClusterIndex, target, rng) -> PairProposal:
    target = ClusterKey(*target)
    members = ci[target]
    if len(members) == 0:
        raise NoSourceError(f"cluster {tuple(target)} is empty")
    h_y, h_g = ci.heterogeneous(target)
    p = _probability(len(h_y), len(h_g), target)
    return _propose(target, members, h_y, h_g, p, rng)


def draw_weight(delta: float, rng) -> float:
    if not 0.0 <= delta <= 1.0:
        raise ParameterError(f"delta must lie in [0, 1], got {delta}")
    return float(delta * rng.random())


def interpolate_hetero(x_i, x_j, w: float, max_knn_dist: float, d_ij: float) -> np.ndarray:
    """Step from x_i towards x_j by ``w * max_knn_dist`` (not by a fraction of d_ij)."""
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    if x_i.shape != x_j.shape:
        raise ParameterError("dimension mismatch")
    if not d_ij > 0:
        raise DegeneratePairError("pair distance is zero")
    return x_i + w * (x_j - x_i) * (max_knn_dist / d_ij)


def interpolate_smote(x_i, x_j, w: float) -> np.ndarray:
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    if x_i.shape != x_j.shape:
        raise ParameterError("dimension mismatch")
    return x_i + w * (x_j - x_i)


def adasyn_allocation(ratios, total: int) -> np.ndarray:
    """Split ``total`` synthetics over sources proportionally to ``ratios``.

    Floors of the proportional shares first, then one extra each to the
    instances with the highest ratio (lower position wins ties). All-zero
    ratios fall back to a uniform split.
    """
    r = np.asarray(ratios, dtype=float)
    n = len(r)
    if n == 0 or total <= 0:
        return np.zeros(n, dtype=np.int64)
    weights = r / r.sum() if r.sum() > 0 else np.full(n, 1.0 / n)
    alloc = np.floor(weights * total).astype(np.int64)
    rest = total - int(alloc.sum())
    if r.sum() > 0:
        order = np.argsort(-r, kind="stable")
    else:
        order = np.arange(n)
    # rest < n always; loop guards float edge cases
    while rest > 0:
        for pos in order[:rest]:
            alloc[pos] += 1
        rest = total - int(alloc.sum())
    return alloc


# -- techniques ---------------------------------------------------------------


def _pin(x_new, x_i, ds: Dataset, cfg: OversamplerConfig):
    if cfg.pin_protected and ds.protected:
        x_new = np.array(x_new)
        x_new[list(ds.protected)] = x_i[list(ds.protected)]
    return x_new


def _empty_result(ds: Dataset, cfg: OversamplerConfig) -> tuple[Dataset, SyntheticBatch]:
    return ds, _Builder(cfg.technique, ds.d).build()


def _finish(ds: Dataset, builder: _Builder) -> tuple[Dataset, SyntheticBatch]:
    batch = builder.build()
    if len(batch) == 0:
        return ds, batch
    return ds.append(batch.features, batch.labels, batch.groups), batch


def _grow_homogeneous(ds, cfg, builder, key, members, n_gen, pick, rng, tag):
    """SMOTE-style generation inside one pool of rows.

    ``pick(rng)`` returns the position (into ``members``) of the next source.
    """
    x = ds.features
    if len(members) == 1:
        builder.warn(f"cluster {tuple(key)} has a single instance; emitting {n_gen} duplicates")
        builder.fallback(key, "duplicate")
        for _ in range(n_gen):
            i = int(members[0])
            builder.add(x[i].copy(), key, f"{tag}/duplicate", i)
        return
    nbr, _ = knn_table(x[members], cfg.k)
    for _ in range(n_gen):
        pos = pick(rng)
        i = int(members[pos])
        j = int(members[nbr[pos, rng.integers(nbr.shape[1])]])
        w = float(rng.random())
        x_new = _pin(interpolate_smote(x[i], x[j], w), x[i], ds, cfg)
        builder.add(x_new, key, tag, i, j, w)


def _uniform_pick(n):
    return lambda rng: int(rng.integers(n))


def oversample_smote(ds: Dataset, cfg: OversamplerConfig) -> tuple[Dataset, SyntheticBatch]:
    counts = ds.class_counts()
    if counts[0] == 0 or counts[1] == 0:
        raise ParameterError("SMOTE needs both classes present")
    minority = 1 if counts[1] < counts[0] else 0
    n_gen = abs(counts[1] - counts[0])
    builder = _Builder(Technique.SMOTE, ds.d)
    if n_gen == 0:
        return _finish(ds, builder)
    rng = np.random.default_rng(cfg.seed)
    members = np.flatnonzero(ds.labels == minority)
    x = ds.features
    if len(members) == 1:
        builder.warn(f"minority class has a single instance; emitting {n_gen} duplicates")
        i = int(members[0])
        key = ClusterKey(minority, int(ds.groups[i]))
        builder.fallback(key, "duplicate")
        for _ in range(n_gen):
            builder.add(x[i].copy(), key, "SMOTE/duplicate", i)
        return _finish(ds, builder)
    nbr, _ = knn_table(x[members], cfg.k)
    for _ in range(n_gen):
        pos = int(rng.integers(len(members)))
        i = int(members[pos])
        j = int(members[nbr[pos, rng.integers(nbr.shape[1])]])
        w = float(rng.random())
        x_new = _pin(interpolate_smote(x[i], x[j], w), x[i], ds, cfg)
        builder.add(x_new, ClusterKey(minority, int(ds.groups[i])), "SMOTE", i, j, w)
    return _finish(ds, builder)


def _per_cluster(ds, cfg, technique, grow):
    """Shared outer loop of the cluster-balancing techniques."""
    ci = partition_clusters(ds)
    sizes = ci.sizes()
    target = max(sizes.values())
    builder = _Builder(technique, ds.d)
    rng = np.random.default_rng(cfg.seed)
    for key in ci.keys():
        n_gen = target - sizes[key]
        if n_gen == 0:
            continue
        if sizes[key] == 0:
            builder.warn(f"cluster {tuple(key)} is empty; skipped")
            builder.fallback(key, "skipped-empty")
            continue
        grow(ci, key, n_gen, rng, builder)
    return _finish(ds, builder)


def oversample_fsmote(ds: Dataset, cfg: OversamplerConfig) -> tuple[Dataset, SyntheticBatch]:
    def grow(ci, key, n_gen, rng, builder):
        members = ci[key]
        _grow_homogeneous(ds, cfg, builder, key, members, n_gen, _uniform_pick(len(members)), rng, "FSMOTE")

    return _per_cluster(ds, cfg, Technique.FSMOTE, grow)


def danger_mask(ds: Dataset, rows, k: int, cache: NeighborCache | None = None) -> np.ndarray:
    """Borderline rule: K/2 <= (# opposite-class neighbours) < K over the full set."""
    cache = cache or NeighborCache(ds, k)
    rows = np.asarray(rows, dtype=np.int64)
    cache.ensure(rows)
    opp = np.array([cache.opposite_count(int(i)) for i in rows])
    return (opp >= cache.k / 2) & (opp < cache.k)


def oversample_fbsmote(ds: Dataset, cfg: OversamplerConfig) -> tuple[Dataset, SyntheticBatch]:
    cache = NeighborCache(ds, cfg.k)

    def grow(ci, key, n_gen, rng, builder):
        members = ci[key]
        danger = np.flatnonzero(danger_mask(ds, members, cfg.k, cache))
        tag = "FBSMOTE"
        if len(danger) == 0:
            builder.fallback(key, "no-danger-instances")
            danger = np.arange(len(members))
            tag = "FBSMOTE/whole-cluster"
        pick = lambda rng: int(danger[rng.integers(len(danger))])  # noqa: E731
        _grow_homogeneous(ds, cfg, builder, key, members, n_gen, pick, rng, tag)

    return _per_cluster(ds, cfg, Technique.FBSMOTE, grow)


def oversample_fadasyn(ds: Dataset, cfg: OversamplerConfig) -> tuple[Dataset, SyntheticBatch]:
    cache = NeighborCache(ds, cfg.k)

    def grow(ci, key, n_gen, rng, builder):
        members = ci[key]
        cache.ensure(members)
        ratios = np.array([cache.opposite_count(int(i)) / cache.k for i in members])
        tag = "FADASYN"
        if ratios.sum() == 0:
            builder.fallback(key, "uniform-allocation")
            tag = "FADASYN/uniform"
        alloc = adasyn_allocation(ratios, n_gen)
        order = iter(np.repeat(np.arange(len(members)), alloc))
        _grow_homogeneous(ds, cfg, builder, key, members, n_gen, lambda rng: int(next(order)), rng, tag)

    return _per_cluster(ds, cfg, Technique.FADASYN, grow)


def oversample_hetero(ds: Dataset, cfg: OversamplerConfig) -> tuple[Dataset, SyntheticBatch]:
    cache = NeighborCache(ds, cfg.k)
    x = ds.features

    def grow(ci, key, n_gen, rng, builder):
        members = ci[key]
        h_y, h_g = ci.heterogeneous(key)
        if len(h_y) + len(h_g) == 0:
            builder.warn(f"cluster {tuple(key)} has no heterogeneous clusters; using FSMOTE")
            builder.fallback(key, "fsmote")
            _grow_homogeneous(
                ds, cfg, builder, key, members, n_gen, _uniform_pick(len(members)), rng, "HeteroFair/FSMOTE"
            )
            return
        p = _probability(len(h_y), len(h_g), key)
        cache.ensure(members)
        for _ in range(n_gen):
            for _attempt in range(cfg.max_pair_retries + 1):
                prop = _propose(key, members, h_y, h_g, p, rng)
                d_ij = float(np.sqrt(np.sum((x[prop.j] - x[prop.i]) ** 2)))
                if d_ij > 0:
                    break
            else:
                builder.fallback(key, "duplicate")
                builder.add(x[prop.i].copy(), key, "HeteroFair/duplicate", prop.i, prop.j, 0.0,
                            cache.density(prop.i), prop.pair_kind)
                continue
            delta = cache.density(prop.i)
            w = draw_weight(delta, rng)
            x_new = interpolate_hetero(x[prop.i], x[prop.j], w, cache.max_distance(prop.i), d_ij)
            builder.add(_pin(x_new, x[prop.i], ds, cfg), key, "HeteroFair", prop.i, prop.j, w, delta,
                        prop.pair_kind)

    return _per_cluster(ds, cfg, Technique.HETERO, grow)


_DISPATCH = {
    Technique.SMOTE: oversample_smote,
    Technique.FSMOTE: oversample_fsmote,
    Technique.FBSMOTE: oversample_fbsmote,
    Technique.FADASYN: oversample_fadasyn,
    Technique.HETERO: oversample_hetero,
}


def oversample(ds: Dataset, cfg: OversamplerConfig) -> tuple[Dataset, SyntheticBatch]:
    """Run the configured technique; returns (augmented dataset, batch).

    The augmented dataset holds the original rows unchanged, in order,
    followed by the batch rows.
    """
    if cfg.technique is Technique.NONE:
        return _empty_result(ds, cfg)
    return _DISPATCH[cfg.technique](ds, cfg)
