"""Exact k-nearest-neighbor queries over a frozen row set.

Everything here is brute force on purpose: dataset sizes are small and the
samplers' correctness checks rely on results being exact, with distance
ties broken by the lower row index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, DistanceMismatch, NotEnoughNeighbors, RebalanceError
from .tabular import Dataset


@dataclass(frozen=True)
class Euclidean:
    pass


@dataclass(frozen=True)
class Heterogeneous:
    """Squared Euclidean over continuous columns plus ``nominal_penalty**2`` per nominal mismatch."""

    nominal_penalty: float

    def __post_init__(self):
        if not self.nominal_penalty >= 0:
            raise RebalanceError("nominal_penalty must be >= 0")


DistanceKind = Euclidean | Heterogeneous


def squared_distances(a: np.ndarray, b: np.ndarray, nominal: np.ndarray | None = None,
                      penalty: float = 0.0) -> np.ndarray:
    """Pairwise squared distances between the rows of ``a`` (m, d) and ``b`` (n, d)."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if nominal is None or not nominal.any():
        diff = a[:, None, :] - b[None, :, :]
        return (diff * diff).sum(axis=-1)
    cont = ~nominal
    diff = a[:, None, cont] - b[None, :, cont]
    d2 = (diff * diff).sum(axis=-1)
    mism = (a[:, None, nominal] != b[None, :, nominal]).sum(axis=-1)
    return d2 + (penalty * penalty) * mism


@dataclass(frozen=True, eq=False)
class NeighborIndex:
    data: Dataset
    rows: np.ndarray
    distance: DistanceKind
    class_filter: int | None = None

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def matrix(self) -> np.ndarray:
        return self.data.features[self.rows]

    def _nominal(self) -> tuple[np.ndarray | None, float]:
        if isinstance(self.distance, Heterogeneous):
            return self.data.nominal_mask, self.distance.nominal_penalty
        return None, 0.0


def build_index(data: Dataset, rows: Sequence[int], distance: DistanceKind | None = None,
                class_filter: int | None = None) -> NeighborIndex:
    distance = Euclidean() if distance is None else distance
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise RebalanceError("cannot index zero rows")
    if isinstance(distance, Euclidean) and data.nominal_mask.any():
        raise DistanceMismatch("euclidean distance requested on a dataset with nominal columns")
    if class_filter is not None:
        rows = rows[data.labels[rows] == class_filter]
    # ascending row order makes the stable sort break distance ties by row index
    rows = np.unique(rows)
    rows.flags.writeable = False
    return NeighborIndex(data=data, rows=rows, distance=distance, class_filter=class_filter)


def kneighbors(index: NeighborIndex, queries, k: int, exclude_rows: Sequence[int] | None = None,
               chunk: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Batch k-NN.

    ``queries`` is an (m, d) matrix. When ``exclude_rows`` is given, query
    ``i`` never receives data row ``exclude_rows[i]`` (pass -1 for none).
    Returns ``(row_indices, distances)``, both (m, k).
    """
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if q.shape[1] != index.data.n_features:
        raise DimensionMismatch(f"query has {q.shape[1]} features, index has {index.data.n_features}")
    if k < 1:
        raise NotEnoughNeighbors("k must be >= 1")
    excl = None if exclude_rows is None else np.asarray(exclude_rows, dtype=np.int64)
    if excl is not None and len(excl) != len(q):
        raise RebalanceError("exclude_rows must align with queries")
    n = len(index.rows)
    is_member = np.zeros(len(q), dtype=bool) if excl is None else np.isin(excl, index.rows)
    avail = n - is_member.astype(int)
    if (k > avail).any():
        raise NotEnoughNeighbors(f"k={k} exceeds the {int(avail.min())} available candidates")
    nominal, penalty = index._nominal()
    ref = index.matrix
    out_idx = np.empty((len(q), k), dtype=np.int64)
    out_d2 = np.empty((len(q), k), dtype=np.float64)
    step = max(1, min(chunk, 4_000_000 // max(1, n * q.shape[1])))
    for start in range(0, len(q), step):
        stop = min(start + step, len(q))
        d2 = squared_distances(q[start:stop], ref, nominal, penalty)
        if excl is not None:
            hit = index.rows[None, :] == excl[start:stop, None]
            d2 = np.where(hit, np.inf, d2)
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out_idx[start:stop] = index.rows[order]
        out_d2[start:stop] = np.take_along_axis(d2, order, axis=1)
    return out_idx, np.sqrt(out_d2)


def knn(index: NeighborIndex, query, k: int) -> list[tuple[int, float]]:
    """The ``k`` nearest indexed rows to ``query``.

    ``query`` is either a feature vector or an integer data-row index; in the
    latter case the row itself is never returned.
    """
    if isinstance(query, (int, np.integer)):
        vec = index.data.features[int(query)]
        idx, dist = kneighbors(index, vec[None, :], k, exclude_rows=[int(query)])
    else:
        idx, dist = kneighbors(index, np.asarray(query, dtype=np.float64)[None, :], k)
    return [(int(i), float(d)) for i, d in zip(idx[0], dist[0])]


def member_neighbors(index: NeighborIndex, rows: Sequence[int], k: int) -> tuple[np.ndarray, np.ndarray]:
    """k-NN for data rows, excluding each row from its own result."""
    rows = np.asarray(rows, dtype=np.int64)
    return kneighbors(index, index.data.features[rows], k, exclude_rows=rows)


def distance(index: NeighborIndex, a, b) -> float:
    """Distance between two feature vectors or data-row indices under the index's metric."""
    def vec(v):
        if isinstance(v, (int, np.integer)):
            return index.data.features[int(v)]
        return np.asarray(v, dtype=np.float64)

    nominal, penalty = index._nominal()
    return float(np.sqrt(squared_distances(vec(a)[None], vec(b)[None], nominal, penalty)[0, 0]))


def median_continuous_std(data: Dataset, rows: Sequence[int]) -> float:
    """Median of the per-column standard deviations of the continuous columns over ``rows``."""
    cont = ~data.nominal_mask
    if not cont.any():
        return 0.0
    x = data.features[np.asarray(rows, dtype=np.int64)][:, cont]
    return float(np.median(x.std(axis=0)))


def default_distance(data: Dataset, rows: Sequence[int]) -> DistanceKind:
    """Euclidean for all-continuous data, otherwise heterogeneous with the median-std penalty."""
    if not data.nominal_mask.any():
        return Euclidean()
    return Heterogeneous(median_continuous_std(data, rows))
