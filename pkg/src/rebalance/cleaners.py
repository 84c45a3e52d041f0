"""ENN and Tomek-link cleaning, the SMOTE hybrids, and the STEM pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import neighbors as nb
from .errors import ClassTooSmall, Degenerate, RebalanceError
from .samplers import MixupConfig, SmoteConfig, mixup_augment, smote
from .tabular import Dataset

ENN_NEIGHBORS = 3
ALL_ROWS = "all_rows"
MAJORITY_ONLY = "majority_only"


@dataclass(frozen=True)
class TomekLink:
    minority_idx: int
    majority_idx: int
    distance: float


@dataclass(frozen=True)
class CleanReport:
    removed_rows: list[int]
    reasons: dict[int, str]
    counts_before: dict[int, int]
    counts_after: dict[int, int]
    stage: str = ""

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "removed_rows": list(self.removed_rows),
            "reasons": {str(k): v for k, v in sorted(self.reasons.items())},
            "counts_before": {str(k): v for k, v in self.counts_before.items()},
            "counts_after": {str(k): v for k, v in self.counts_after.items()},
        }


@dataclass
class PipelineLog:
    """Cleaning reports collected while a hybrid sampler runs."""

    reports: list[CleanReport] = field(default_factory=list)


def enn_votes(data: Dataset, rows: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Majority-vote prediction of each row's 3 nearest neighbors within ``rows``."""
    rows = np.asarray(rows, dtype=np.int64)
    index = nb.build_index(data, rows, nb.default_distance(data, rows))
    idx, _ = nb.member_neighbors(index, rows, ENN_NEIGHBORS)
    predicted = (data.labels[idx].sum(axis=1) * 2 > ENN_NEIGHBORS).astype(np.int64)
    return rows, predicted


def enn(data: Dataset, rows: Sequence[int], scope: str = ALL_ROWS) -> tuple[list[int], CleanReport]:
    """Edited nearest neighbours with k=3 and non-cascading deletion.

    A row is removed when the majority label of its three nearest neighbors
    (self excluded, computed before any removal) differs from its own.
    ``scope=majority_only`` only removes class-0 rows.
    """
    if scope not in (ALL_ROWS, MAJORITY_ONLY):
        raise RebalanceError(f"unknown ENN scope {scope!r}")
    rows = np.asarray(rows, dtype=np.int64)
    if len(rows) < ENN_NEIGHBORS + 1:
        raise ClassTooSmall(f"ENN needs at least {ENN_NEIGHBORS + 1} rows, got {len(rows)}")
    counts = data.class_counts(rows)
    if min(counts.values()) == 0:
        raise ClassTooSmall("ENN needs both classes present")
    rows, predicted = enn_votes(data, rows)
    wrong = predicted != data.labels[rows]
    if scope == MAJORITY_ONLY:
        wrong &= data.labels[rows] == 0
    removed = rows[wrong].tolist()
    kept = rows[~wrong].tolist()
    report = CleanReport(
        removed_rows=removed,
        reasons={r: "enn_misclassified" for r in removed},
        counts_before=counts,
        counts_after=data.class_counts(kept),
        stage="enn",
    )
    return kept, report


def find_tomek_links(data: Dataset, rows: Sequence[int] | None = None) -> list[TomekLink]:
    """Cross-class pairs with no third row strictly closer to either endpoint.

    Distance ties are allowed: a pair qualifies when its distance equals the
    nearest-neighbor distance of both endpoints.
    """
    rows = np.arange(data.n_rows) if rows is None else np.asarray(rows, dtype=np.int64)
    rows = np.unique(rows)
    y = data.labels[rows]
    if len(np.unique(y)) < 2:
        raise ClassTooSmall("Tomek links need both classes present")
    dist = nb.default_distance(data, rows)
    nominal, penalty = (data.nominal_mask, dist.nominal_penalty) if isinstance(dist, nb.Heterogeneous) else (None, 0.0)
    x = data.features[rows]
    n = len(rows)
    nearest = np.empty(n)
    candidates = []
    step = max(1, 4_000_000 // max(1, n * x.shape[1]))
    for start in range(0, n, step):
        stop = min(start + step, n)
        d2 = nb.squared_distances(x[start:stop], x, nominal, penalty)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        best = d2.min(axis=1)
        nearest[start:stop] = best
        i, j = np.nonzero(d2 == best[:, None])
        candidates.append((i + start, j, d2[i, j]))
    links = []
    for i_arr, j_arr, d_arr in candidates:
        for i, j, d2 in zip(i_arr, j_arr, d_arr):
            if i < j and y[i] != y[j] and d2 == nearest[j]:
                a, b = (i, j) if y[i] == 1 else (j, i)
                links.append(TomekLink(int(rows[a]), int(rows[b]), float(np.sqrt(d2))))
    links.sort(key=lambda t: (t.minority_idx, t.majority_idx))
    return links


def _check_classes(data: Dataset, stage: str) -> None:
    counts = data.class_counts()
    for c, n in counts.items():
        if n == 0:
            raise Degenerate(f"{stage} removed every row of class {c}")


def smote_tomek(data: Dataset, train_rows: Sequence[int], cfg: SmoteConfig = SmoteConfig(),
                remove_both: bool = False, log: PipelineLog | None = None) -> Dataset:
    """SMOTE, then drop the majority endpoint of every Tomek link (both with ``remove_both``)."""
    over = smote(data, train_rows, cfg)
    links = find_tomek_links(over)
    drop = {}
    for link in links:
        drop[link.majority_idx] = "tomek_majority"
        if remove_both:
            drop[link.minority_idx] = "tomek_minority"
    keep = [i for i in range(over.n_rows) if i not in drop]
    out = over.subset(keep)
    if log is not None:
        log.reports.append(CleanReport(
            removed_rows=sorted(drop), reasons=drop, counts_before=over.class_counts(),
            counts_after=out.class_counts(), stage="tomek",
        ))
    _check_classes(out, "Tomek cleaning")
    return out


def smote_enn(data: Dataset, train_rows: Sequence[int], cfg: SmoteConfig = SmoteConfig(),
              log: PipelineLog | None = None) -> Dataset:
    """SMOTE, then ENN over every row of the oversampled set."""
    over = smote(data, train_rows, cfg)
    kept, report = enn(over, np.arange(over.n_rows), ALL_ROWS)
    if log is not None:
        log.reports.append(report)
    out = over.subset(kept)
    _check_classes(out, "ENN")
    return out


def stem(data: Dataset, train_rows: Sequence[int], smote_cfg: SmoteConfig = SmoteConfig(),
         mixup_cfg: MixupConfig = MixupConfig(), log: PipelineLog | None = None) -> Dataset:
    """SMOTE, ENN cleaning, then same-class Mixup on the cleaned set."""
    cleaned = smote_enn(data, train_rows, smote_cfg, log=log)
    for c, n in cleaned.class_counts().items():
        if n < 2:
            raise Degenerate(f"class {c} has {n} rows after ENN; mixup needs 2")
    return mixup_augment(cleaned, np.arange(cleaned.n_rows), mixup_cfg)
