"""Exact Euclidean K-nearest-neighbour queries and the same-class local density."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hetfair.dataset import Dataset
from hetfair.errors import InsufficientDataError, ParameterError

# rows x N x D float64 scratch per chunk stays under ~64 MB
_CHUNK_BYTES = 64 * 2**20


@dataclass(frozen=True)
class NeighborResult:
    indices: np.ndarray
    distances: np.ndarray

    @property
    def k(self) -> int:
        return len(self.indices)


def euclidean(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ParameterError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def effective_k(n: int, k: int) -> int:
    if k < 1:
        raise ParameterError("K must be >= 1")
    if n < 2:
        raise InsufficientDataError(f"need at least 2 instances for a neighbour query, got {n}")
    return min(k, n - 1)


def _smallest(dist: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the ``k`` smallest entries per row, ordered by (distance, index)."""
    if k >= dist.shape[1] - 1:
        return np.argsort(dist, axis=1, kind="stable")[:, :k]
    part = np.argpartition(dist, k - 1, axis=1)[:, :k]
    vals = np.take_along_axis(dist, part, axis=1)
    order = np.take_along_axis(part, np.lexsort((part, vals), axis=1), axis=1)
    # a tie straddling the k-th place may have kept a higher index; redo those rows
    tied = np.count_nonzero(dist <= vals.max(axis=1, keepdims=True), axis=1) > k
    if tied.any():
        order[tied] = np.argsort(dist[tied], axis=1, kind="stable")[:, :k]
    return order


def knn_table(points: np.ndarray, k: int, rows=None) -> tuple[np.ndarray, np.ndarray]:
    """Neighbour indices and distances for ``rows`` of ``points`` (all rows by default).

    Each query excludes itself; ties are broken by the lower index. Returns
    two ``len(rows) x k_eff`` arrays, nearest first.
    """
    points = np.asarray(points, dtype=float)
    n, dim = points.shape
    k_eff = effective_k(n, k)
    rows = np.arange(n) if rows is None else np.asarray(rows, dtype=np.int64).reshape(-1)
    out_idx = np.empty((len(rows), k_eff), dtype=np.int64)
    out_dist = np.empty((len(rows), k_eff))
    step = max(1, _CHUNK_BYTES // (8 * n * max(dim, 1)))
    for start in range(0, len(rows), step):
        q = rows[start : start + step]
        # accumulate per coordinate; avoids a len(q) x n x dim temporary
        dist = np.zeros((len(q), n))
        for c in range(dim):
            dist += np.subtract.outer(points[q, c], points[:, c]) ** 2
        np.sqrt(dist, out=dist)
        dist[np.arange(len(q)), q] = np.inf
        order = _smallest(dist, k_eff)
        out_idx[start : start + len(q)] = order
        out_dist[start : start + len(q)] = np.take_along_axis(dist, order, axis=1)
    return out_idx, out_dist


def _check_index(ds: Dataset, i: int) -> None:
    if not 0 <= i < ds.n:
        raise ParameterError(f"index {i} out of range for N={ds.n}")


def knn(ds: Dataset, i: int, k: int) -> NeighborResult:
    _check_index(ds, i)
    idx, dist = knn_table(ds.features, k, rows=[i])
    return NeighborResult(indices=idx[0], distances=dist[0])


def max_knn_distance(ds: Dataset, i: int, k: int) -> float:
    return float(knn(ds, i, k).distances[-1])


def local_density(ds: Dataset, i: int, k: int) -> float:
    """Fraction of the K nearest neighbours of ``i`` that share its class."""
    res = knn(ds, i, k)
    return float(np.sum(ds.labels[res.indices] == ds.labels[i]) / res.k)


class NeighborCache:
    """Lazily computed full-set neighbourhoods over a fixed dataset.

    Used by the oversamplers so that each instance's neighbourhood is
    computed once, always against the original (pre-oversampling) data.
    """

    def __init__(self, ds: Dataset, k: int):
        self.ds = ds
        self.k = effective_k(ds.n, k)
        self._idx = np.full((ds.n, self.k), -1, dtype=np.int64)
        self._dist = np.zeros((ds.n, self.k))
        self._done = np.zeros(ds.n, dtype=bool)

    def ensure(self, rows) -> None:
        rows = np.unique(np.asarray(rows, dtype=np.int64))
        todo = rows[~self._done[rows]]
        if len(todo):
            idx, dist = knn_table(self.ds.features, self.k, rows=todo)
            self._idx[todo] = idx
            self._dist[todo] = dist
            self._done[todo] = True

    def neighbors(self, i: int) -> np.ndarray:
        if not self._done[i]:
            self.ensure([i])
        return self._idx[i]

    def max_distance(self, i: int) -> float:
        if not self._done[i]:
            self.ensure([i])
        return float(self._dist[i, -1])

    def opposite_count(self, i: int) -> int:
        return int(np.sum(self.ds.labels[self.neighbors(i)] != self.ds.labels[i]))

    def density(self, i: int) -> float:
        return float(np.sum(self.ds.labels[self.neighbors(i)] == self.ds.labels[i]) / self.k)
