"""Confusion counts, accuracy/precision/recall/F1, ROC curve and AUC."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import RebalanceError, UndefinedAuc

AUC_AGREEMENT = 1e-12


@dataclass(frozen=True)
class ConfusionMatrix:
    t_pos: int
    t_neg: int
    f_pos: int
    f_neg: int

    def __post_init__(self):
        if min(self.t_pos, self.t_neg, self.f_pos, self.f_neg) < 0:
            raise RebalanceError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.t_pos + self.t_neg + self.f_pos + self.f_neg


def confusion(labels: Sequence[int], predictions: Sequence[int]) -> ConfusionMatrix:
    y = np.asarray(labels)
    p = np.asarray(predictions)
    if y.shape != p.shape:
        raise RebalanceError(f"length mismatch: {len(y)} labels, {len(p)} predictions")
    if y.size == 0:
        raise RebalanceError("need at least one row")
    pos, pred = y == 1, p == 1
    return ConfusionMatrix(
        t_pos=int(np.sum(pos & pred)),
        t_neg=int(np.sum(~pos & ~pred)),
        f_pos=int(np.sum(~pos & pred)),
        f_neg=int(np.sum(pos & ~pred)),
    )


def _nonempty(cm: ConfusionMatrix) -> None:
    if cm.total == 0:
        raise RebalanceError("empty confusion matrix")


def accuracy(cm: ConfusionMatrix) -> float:
    _nonempty(cm)
    return (cm.t_pos + cm.t_neg) / (cm.t_pos + cm.f_neg + cm.f_pos + cm.t_neg)


def precision(cm: ConfusionMatrix) -> float:
    _nonempty(cm)
    den = cm.t_pos + cm.f_pos
    return cm.t_pos / den if den else 0.0


def recall(cm: ConfusionMatrix) -> float:
    _nonempty(cm)
    den = cm.t_pos + cm.f_neg
    return cm.t_pos / den if den else 0.0


def f1(cm: ConfusionMatrix) -> float:
    p, r = precision(cm), recall(cm)
    return 2 * (p * r) / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class Scores:
    accuracy: float
    precision: float
    recall: float
    f1: float
    zero_division: tuple[str, ...] = field(default=())


def scores(cm: ConfusionMatrix) -> Scores:
    """All four metrics with the names of any that hit the 0/0 -> 0 convention."""
    flags = []
    if cm.t_pos + cm.f_pos == 0:
        flags.append("precision")
    if cm.t_pos + cm.f_neg == 0:
        flags.append("recall")
    p, r = precision(cm), recall(cm)
    if p + r == 0:
        flags.append("f1")
    return Scores(accuracy(cm), p, r, f1(cm), tuple(flags))


@dataclass(frozen=True)
class RocCurve:
    points: list[tuple[float, float]]
    thresholds: list[float]
    auc: float


def mann_whitney_auc(labels: Sequence[int], scores_: Sequence[float]) -> float:
    """AUC as the normalized rank-sum of positives, midranks for ties."""
    y = np.asarray(labels) == 1
    s = np.asarray(scores_, dtype=np.float64)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAuc("AUC needs both classes")
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_auc(labels: Sequence[int], scores_: Sequence[float]) -> RocCurve:
    """ROC by sweeping unique thresholds from +inf downward; trapezoidal AUC.

    Tied scores move TPR and FPR together (one diagonal step), which makes
    the trapezoid area equal the Mann-Whitney statistic with midranks; the
    two are cross-checked.
    """
    y = np.asarray(labels)
    s = np.asarray(scores_, dtype=np.float64)
    if y.shape != s.shape:
        raise RebalanceError("labels and scores differ in length")
    pos = y == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAuc("AUC needs both classes")
    uniq = np.unique(s)[::-1]
    # per-threshold counts of positives and negatives scoring exactly that value
    where = np.searchsorted(-uniq, -s)
    tp_step = np.bincount(where[pos], minlength=len(uniq))
    fp_step = np.bincount(where[~pos], minlength=len(uniq))
    tp = np.concatenate([[0], np.cumsum(tp_step)])
    fp = np.concatenate([[0], np.cumsum(fp_step)])
    # integer area: sum of trapezoids scaled by 2 * n_pos * n_neg
    area2 = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    auc = area2 / (2.0 * n_pos * n_neg)
    check = mann_whitney_auc(y, s)
    if abs(auc - check) > AUC_AGREEMENT:
        raise AssertionError(f"trapezoid AUC {auc!r} disagrees with Mann-Whitney {check!r}")
    points = [(float(f / n_neg), float(t / n_pos)) for f, t in zip(fp, tp)]
    thresholds = [float("inf")] + uniq.tolist()
    return RocCurve(points=points, thresholds=thresholds, auc=float(auc))


def auc(labels: Sequence[int], scores_: Sequence[float]) -> float:
    return roc_auc(labels, scores_).auc
