"""Oversamplers: SMOTE, SMOTE-NC, Borderline-SMOTE, SVM-SMOTE, ADASYN and Mixup.

Every sampler takes the full dataset plus the training row indices and
returns a new :class:`~rebalance.tabular.Dataset` holding the training rows
(in the given order) followed by the synthetic rows. Label 1 is the minority
class throughout. Each synthetic row carries a
:class:`~rebalance.tabular.SyntheticRecord`; for the SMOTE family a row is
reproducible as ``x[source] + coefficient * (x[neighbor] - x[source])``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import neighbors as nb
from .errors import AllNominal, ClassTooSmall, DimensionMismatch, RebalanceError, SvmDiverged
from .seeding import stream
from .tabular import Dataset, SyntheticRecord


@dataclass(frozen=True)
class SmoteConfig:
    k: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise RebalanceError("k must be >= 1")
        if not 0 < self.target_ratio <= 1:
            raise RebalanceError("target_ratio must lie in (0, 1]")


@dataclass(frozen=True)
class BorderlineConfig:
    m: int = 10
    k: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 2 or self.k < 1:
            raise RebalanceError("need m >= 2 and k >= 1")
        if not 0 < self.target_ratio <= 1:
            raise RebalanceError("target_ratio must lie in (0, 1]")


@dataclass(frozen=True)
class AdasynConfig:
    k: int = 5
    beta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise RebalanceError("k must be >= 1")
        if not 0 < self.beta <= 1:
            raise RebalanceError("beta must lie in (0, 1]")


@dataclass(frozen=True)
class SvmSmoteConfig:
    m: int = 10
    k: int = 5
    svm_regularization: float = 1.0
    svm_epochs: int = 200
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if min(self.m, self.k, self.svm_epochs) < 1:
            raise RebalanceError("m, k and svm_epochs must be >= 1")
        if not self.svm_regularization > 0:
            raise RebalanceError("svm_regularization must be > 0")
        if not 0 < self.target_ratio <= 1:
            raise RebalanceError("target_ratio must lie in (0, 1]")


@dataclass(frozen=True)
class MixupConfig:
    """``pairs_per_class=None`` grows every class to twice the largest class."""

    alpha: float = 0.2
    pairs_per_class: int | None = None
    same_class_only: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise RebalanceError("alpha must be > 0")
        if self.pairs_per_class is not None and self.pairs_per_class < 0:
            raise RebalanceError("pairs_per_class must be >= 0")
        if not self.same_class_only:
            raise RebalanceError("only same-class mixup is implemented")


# ---------------------------------------------------------------- helpers

def _classes(data: Dataset, rows: Sequence[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise RebalanceError("train_rows is empty")
    y = data.labels[rows]
    return rows, np.sort(rows[y == 1]), np.sort(rows[y == 0])


def n_needed(n_minority: int, n_majority: int, target_ratio: float) -> int:
    """Synthetic rows required so that minority/majority reaches ``target_ratio``."""
    return max(0, int(math.floor(target_ratio * n_majority + 0.5)) - n_minority)


def _minority_neighbors(data: Dataset, minority: np.ndarray, k: int, distance=None) -> tuple[np.ndarray, int]:
    if len(minority) < 2:
        raise ClassTooSmall(f"need at least 2 minority rows, got {len(minority)}")
    if k > len(minority) - 1:
        warnings.warn(f"k={k} clamped to {len(minority) - 1} (minority size {len(minority)})", stacklevel=3)
        k = len(minority) - 1
    index = nb.build_index(data, minority, distance)
    idx, _ = nb.member_neighbors(index, minority, k)
    return idx, k


def _interpolate(data: Dataset, rows: np.ndarray, src: np.ndarray, nbr: np.ndarray, coef: np.ndarray,
                 algorithm: str) -> Dataset:
    base = data.subset(rows)
    xs = data.features[src]
    xn = data.features[nbr]
    new = xs + coef[:, None] * (xn - xs)
    start = base.n_rows
    records = [
        SyntheticRecord(start + t, algorithm, int(s), int(n), float(c))
        for t, (s, n, c) in enumerate(zip(src, nbr, coef))
    ]
    return base.with_synthetic(new, np.ones(len(src), dtype=np.int64), records)


def _round_robin(sources: np.ndarray, table: np.ndarray, n_new: int,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cycle through ``sources`` in a shuffled order, fresh neighbor and step each time.

    ``table[i]`` lists the candidate neighbors of ``sources[i]``.
    """
    order = rng.permutation(len(sources))
    pos = order[np.arange(n_new) % len(sources)]
    pick = rng.integers(0, table.shape[1], size=n_new)
    delta = rng.random(n_new)
    return sources[pos], table[pos, pick], delta


# ---------------------------------------------------------------- SMOTE

def smote(data: Dataset, train_rows: Sequence[int], cfg: SmoteConfig = SmoteConfig()) -> Dataset:
    """Interpolate new minority rows toward their k nearest minority neighbors."""
    rows, minority, majority = _classes(data, train_rows)
    if len(minority) < 2:
        raise ClassTooSmall(f"need at least 2 minority rows, got {len(minority)}")
    need = n_needed(len(minority), len(majority), cfg.target_ratio)
    if need == 0:
        return data.subset(rows)
    table, _ = _minority_neighbors(data, minority, cfg.k)
    src, nbr, delta = _round_robin(minority, table, need, stream(cfg.seed, "smote"))
    return _interpolate(data, rows, src, nbr, delta, "smote")


def smote_nc(data: Dataset, train_rows: Sequence[int], cfg: SmoteConfig = SmoteConfig()) -> Dataset:
    """SMOTE for mixed continuous/nominal columns.

    Neighbors use the heterogeneous distance whose nominal penalty is the
    median standard deviation of the continuous columns over the minority
    rows. Continuous coordinates are interpolated; each nominal coordinate
    takes the most frequent value among the source's k neighbors, ties going
    to the value seen first in nearest-first order.
    """
    rows, minority, majority = _classes(data, train_rows)
    nominal = data.nominal_mask
    if nominal.all():
        raise AllNominal("SMOTE-NC needs at least one continuous column")
    if len(minority) < 2:
        raise ClassTooSmall(f"need at least 2 minority rows, got {len(minority)}")
    need = n_needed(len(minority), len(majority), cfg.target_ratio)
    if need == 0:
        return data.subset(rows)
    dist = nb.Heterogeneous(nb.median_continuous_std(data, minority))
    table, _ = _minority_neighbors(data, minority, cfg.k, dist)
    src, nbr, delta = _round_robin(minority, table, need, stream(cfg.seed, "smote_nc"))
    out = _interpolate(data, rows, src, nbr, delta, "smote_nc")
    if not nominal.any():
        return out
    src_pos = {int(s): i for i, s in enumerate(minority)}
    x = out.features.copy()
    start = len(rows)
    for t, s in enumerate(src):
        x[start + t, nominal] = nominal_mode(data.features[table[src_pos[int(s)]]][:, nominal])
    return replace(out, features=x)


def nominal_mode(values: np.ndarray) -> np.ndarray:
    """Column-wise mode of ``values`` (rows ordered nearest first); ties go to the earliest row."""
    values = np.atleast_2d(values)
    out = np.empty(values.shape[1])
    for j in range(values.shape[1]):
        col = values[:, j]
        counts = {}
        for v in col:
            counts[v] = counts.get(v, 0) + 1
        best = max(counts.values())
        out[j] = next(v for v in col if counts[v] == best)
    return out


# ---------------------------------------------------------------- Borderline-SMOTE

def majority_counts(data: Dataset, rows: np.ndarray, queries: np.ndarray, m: int) -> np.ndarray:
    """Majority-class members among each query row's m nearest training rows."""
    index = nb.build_index(data, rows, nb.default_distance(data, rows))
    idx, _ = nb.member_neighbors(index, queries, m)
    return (data.labels[idx] == 0).sum(axis=1)


def danger_set(data: Dataset, train_rows: Sequence[int], m: int) -> np.ndarray:
    """Minority rows with m/2 <= (majority neighbors) < m among their m nearest training rows."""
    rows, minority, _ = _classes(data, train_rows)
    m = min(m, len(rows) - 1)
    c = majority_counts(data, rows, minority, m)
    return minority[(2 * c >= m) & (c < m)]


def borderline_smote(data: Dataset, train_rows: Sequence[int],
                     cfg: BorderlineConfig = BorderlineConfig()) -> Dataset:
    """SMOTE restricted to danger-set sources (borderline-1: minority neighbors only)."""
    rows, minority, majority = _classes(data, train_rows)
    if len(minority) < 2:
        raise ClassTooSmall(f"need at least 2 minority rows, got {len(minority)}")
    need = n_needed(len(minority), len(majority), cfg.target_ratio)
    if need == 0:
        return data.subset(rows)
    danger = danger_set(data, rows, cfg.m)
    if len(danger) == 0:
        warnings.warn("empty danger set; falling back to plain SMOTE", stacklevel=2)
        return smote(data, rows, SmoteConfig(k=cfg.k, target_ratio=cfg.target_ratio, seed=cfg.seed))
    table, _ = _minority_neighbors(data, minority, cfg.k)
    table = table[np.searchsorted(minority, danger)]
    src, nbr, delta = _round_robin(danger, table, need, stream(cfg.seed, "borderline_smote"))
    return _interpolate(data, rows, src, nbr, delta, "borderline_smote")


# ---------------------------------------------------------------- SVM-SMOTE

@dataclass(frozen=True)
class LinearSvm:
    weights: np.ndarray
    bias: float

    def decision(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights + self.bias


def train_linear_svm(x: np.ndarray, y_pm: np.ndarray, regularization: float = 1.0,
                     epochs: int = 200) -> LinearSvm:
    """Soft-margin linear SVM by full-batch subgradient descent.

    Minimizes ``0.5 * |w|^2 / (C * n) + mean(hinge)`` with step ``1/sqrt(t)``.
    Returns the iterate with the lowest objective.
    """
    n, d = x.shape
    lam = 1.0 / (regularization * n)
    w = np.zeros(d)
    b = 0.0
    best = (np.inf, w.copy(), b)
    for t in range(1, epochs + 1):
        margin = y_pm * (x @ w + b)
        viol = margin < 1
        obj = 0.5 * lam * (w @ w) + np.maximum(0.0, 1 - margin).mean()
        if not np.isfinite(obj):
            raise SvmDiverged("non-finite SVM objective")
        if obj < best[0]:
            best = (obj, w.copy(), b)
        gw = lam * w - (y_pm[viol, None] * x[viol]).sum(axis=0) / n
        gb = -y_pm[viol].sum() / n
        step = 1.0 / math.sqrt(t)
        w = w - step * gw
        b = b - step * gb
    margin = y_pm * (x @ w + b)
    obj = 0.5 * lam * (w @ w) + np.maximum(0.0, 1 - margin).mean()
    if not (np.isfinite(obj) and np.isfinite(w).all()):
        raise SvmDiverged("non-finite SVM weights")
    if obj < best[0]:
        best = (obj, w, b)
    return LinearSvm(best[1], float(best[2]))


def svm_support_minority(data: Dataset, train_rows: Sequence[int], cfg: SvmSmoteConfig) -> tuple[np.ndarray, LinearSvm]:
    rows, minority, _ = _classes(data, train_rows)
    y_pm = np.where(data.labels[rows] == 1, 1.0, -1.0)
    svm = train_linear_svm(data.features[rows], y_pm, cfg.svm_regularization, cfg.svm_epochs)
    margin = svm.decision(data.features[minority])
    return minority[margin <= 1.0], svm


def svm_smote(data: Dataset, train_rows: Sequence[int], cfg: SvmSmoteConfig = SvmSmoteConfig()) -> Dataset:
    """Generate around minority support vectors of a linear SVM.

    A source with fewer than m/2 majority rows among its m nearest training
    neighbors extrapolates away from a minority neighbor (recorded with a
    negative coefficient); the others interpolate toward one.
    """
    rows, minority, majority = _classes(data, train_rows)
    if len(minority) < 2 or len(majority) < 2:
        raise ClassTooSmall("svm_smote needs at least 2 rows of each class")
    need = n_needed(len(minority), len(majority), cfg.target_ratio)
    if need == 0:
        return data.subset(rows)
    sources, _ = svm_support_minority(data, rows, cfg)
    if len(sources) == 0:
        warnings.warn("no minority support vectors; using every minority row as a source", stacklevel=2)
        sources = minority
    m = min(cfg.m, len(rows) - 1)
    c = majority_counts(data, rows, sources, m)
    extrapolate = 2 * c < m
    table, _ = _minority_neighbors(data, minority, cfg.k)
    table = table[np.searchsorted(minority, sources)]
    rng = stream(cfg.seed, "svm_smote")
    order = rng.permutation(len(sources))
    pos = order[np.arange(need) % len(sources)]
    pick = rng.integers(0, table.shape[1], size=need)
    delta = rng.random(need)
    coef = np.where(extrapolate[pos], -delta, delta)
    out = _interpolate(data, rows, sources[pos], table[pos, pick], coef, "svm_smote")
    start = len(rows)
    records = tuple(
        replace(r, algorithm="svm_smote_extrapolate") if r.row_id >= start and extrapolate[pos[r.row_id - start]]
        else r
        for r in out.synthesis
    )
    return replace(out, synthesis=records)


# ---------------------------------------------------------------- ADASYN

def largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer shares of ``total`` proportional to ``weights`` summing exactly to ``total``."""
    quota = weights * total
    base = np.floor(quota).astype(np.int64)
    left = total - int(base.sum())
    order = np.lexsort((np.arange(len(weights)), -(quota - base)))
    base[order[:left]] += 1
    return base


def adasyn_allocation(data: Dataset, train_rows: Sequence[int], cfg: AdasynConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-minority-row synthetic counts and the normalized difficulty ratios."""
    rows, minority, majority = _classes(data, train_rows)
    if len(minority) < 2:
        raise ClassTooSmall(f"need at least 2 minority rows, got {len(minority)}")
    total = int(math.floor((len(majority) - len(minority)) * cfg.beta + 0.5))
    total = max(total, 0)
    k = min(cfg.k, len(rows) - 1)
    r = majority_counts(data, rows, minority, k) / k
    if r.sum() == 0:
        warnings.warn("no minority row has majority neighbors; allocating uniformly", stacklevel=2)
        r_hat = np.full(len(minority), 1.0 / len(minority))
    else:
        r_hat = r / r.sum()
    return largest_remainder(r_hat, total), r_hat


def adasyn(data: Dataset, train_rows: Sequence[int], cfg: AdasynConfig = AdasynConfig()) -> Dataset:
    """Allocate synthetics in proportion to each minority row's share of majority neighbors."""
    rows, minority, _ = _classes(data, train_rows)
    g, _ = adasyn_allocation(data, rows, cfg)
    total = int(g.sum())
    if total == 0:
        return data.subset(rows)
    table, _ = _minority_neighbors(data, minority, cfg.k)
    rng = stream(cfg.seed, "adasyn")
    pos = np.repeat(np.arange(len(minority)), g)
    pick = rng.integers(0, table.shape[1], size=total)
    delta = rng.random(total)
    return _interpolate(data, rows, minority[pos], table[pos, pick], delta, "adasyn")


# ---------------------------------------------------------------- Mixup

def mixup_pair(x_i, x_j, lam: float) -> np.ndarray:
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    if x_i.shape != x_j.shape:
        raise DimensionMismatch(f"{x_i.shape} vs {x_j.shape}")
    if not 0.0 <= lam <= 1.0:
        raise RebalanceError("lambda must lie in [0, 1]")
    return lam * x_i + (1.0 - lam) * x_j


def sample_beta(rng: np.random.Generator, alpha: float, size: int) -> np.ndarray:
    """Beta(alpha, alpha) draws as G1 / (G1 + G2) with Gi ~ Gamma(alpha, 1)."""
    g1 = rng.standard_gamma(alpha, size)
    g2 = rng.standard_gamma(alpha, size)
    s = g1 + g2
    return np.divide(g1, s, out=np.full(size, 0.5), where=s > 0)


def _mix(data: Dataset, rows: Sequence[int], per_class: dict[int, int], alpha: float,
         rng: np.random.Generator, algorithm: str) -> Dataset:
    base = data.subset(rows)
    nominal = base.nominal_mask
    feats, labels, records = [], [], []
    start = base.n_rows
    for c in (0, 1):
        count = per_class.get(c, 0)
        if count == 0:
            continue
        members = np.flatnonzero(base.labels == c)
        if len(members) < 2:
            raise ClassTooSmall(f"class {c} has {len(members)} rows; mixup needs 2")
        a = rng.integers(0, len(members), size=count)
        b = rng.integers(0, len(members) - 1, size=count)
        b = np.where(b >= a, b + 1, b)
        lam = sample_beta(rng, alpha, count)
        xi = base.features[members[a]]
        xj = base.features[members[b]]
        x = lam[:, None] * xi + (1.0 - lam[:, None]) * xj
        if nominal.any():
            x[:, nominal] = np.where(lam[:, None] >= 0.5, xi[:, nominal], xj[:, nominal])
        for t in range(count):
            records.append(SyntheticRecord(start + len(records), algorithm, int(members[a[t]]),
                                           int(members[b[t]]), float(lam[t])))
        feats.append(x)
        labels.append(np.full(count, c, dtype=np.int64))
    if not feats:
        return base
    return base.with_synthetic(np.vstack(feats), np.concatenate(labels), records)


def mixup_augment(data: Dataset, rows: Sequence[int], cfg: MixupConfig = MixupConfig()) -> Dataset:
    """Same-class Mixup: append mixed rows per class, lambda ~ Beta(alpha, alpha).

    Pair indices in the records are positions in the returned dataset.
    Nominal columns are copied from the pair member with the larger weight.
    """
    counts = data.class_counts(rows)
    if cfg.pairs_per_class is None:
        top = 2 * max(counts.values())
        per_class = {c: top - n for c, n in counts.items()}
    else:
        per_class = {0: cfg.pairs_per_class, 1: cfg.pairs_per_class}
    return _mix(data, rows, per_class, cfg.alpha, stream(cfg.seed, "mixup"), "mixup")


def mixup_oversample(data: Dataset, rows: Sequence[int], cfg: MixupConfig = MixupConfig(),
                     target_ratio: float = 1.0) -> Dataset:
    """Minority-only same-class Mixup up to ``target_ratio`` (the standalone Mixup baseline)."""
    counts = data.class_counts(rows)
    need = n_needed(counts[1], counts[0], target_ratio)
    return _mix(data, rows, {1: need}, cfg.alpha, stream(cfg.seed, "mixup"), "mixup")
