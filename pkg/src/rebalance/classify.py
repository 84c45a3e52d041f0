"""Classifier zoo, top-3 selection by validation AUC, and majority voting.

Six binary classifiers written against numpy: k-NN, LDA, QDA, logistic
regression, extremely randomized trees and AdaBoost over decision stumps.
Every fitted model exposes ``predict_proba(x) -> P(class 1)`` for a matrix
of rows.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import _trees, metrics
from .errors import DimensionMismatch, Diverged, IllConditioned, RebalanceError
from .neighbors import squared_distances
from .seeding import stream
from .tabular import Dataset

# ---------------------------------------------------------------- kinds


@dataclass(frozen=True)
class Knn:
    k: int = 5
    name = "knn"
    initial = "K"


@dataclass(frozen=True)
class Lda:
    ridge: float = 1e-6
    name = "lda"
    initial = "Ld"


@dataclass(frozen=True)
class Qda:
    shrinkage: float = 0.1
    ridge: float = 1e-6
    name = "qda"
    initial = "Q"


@dataclass(frozen=True)
class Logistic:
    rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    name = "logistic"
    initial = "Lr"


@dataclass(frozen=True)
class ExtraTrees:
    n_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 2
    name = "extra_trees"
    initial = "E"


@dataclass(frozen=True)
class AdaBoostStumps:
    rounds: int = 100
    name = "adaboost"
    initial = "A"


ClassifierKind = Knn | Lda | Qda | Logistic | ExtraTrees | AdaBoostStumps

KINDS = {cls.name: cls for cls in (Knn, Lda, Qda, Logistic, ExtraTrees, AdaBoostStumps)}
# tie-break order for selection
KIND_ORDER = ("knn", "lda", "qda", "logistic", "extra_trees", "adaboost")
# order in which initials are written in an ensemble code
CODE_ORDER = ("lda", "qda", "extra_trees", "adaboost", "knn", "logistic")


def make_kind(name: str, **params) -> ClassifierKind:
    try:
        cls = KINDS[name]
    except KeyError:
        raise RebalanceError(f"unknown classifier {name!r}; choose from {sorted(KINDS)}") from None
    kind = cls(**params)
    _validate(kind)
    return kind


def _validate(kind: ClassifierKind) -> None:
    bad = (
        isinstance(kind, Knn) and kind.k < 1
        or isinstance(kind, (Lda, Qda)) and kind.ridge < 0
        or isinstance(kind, Qda) and not 0 <= kind.shrinkage <= 1
        or isinstance(kind, Logistic) and (kind.rate <= 0 or kind.epochs < 1 or kind.l2 < 0)
        or isinstance(kind, ExtraTrees) and (kind.n_trees < 1 or kind.max_depth < 1 or kind.min_leaf < 1)
        or isinstance(kind, AdaBoostStumps) and kind.rounds < 1
    )
    if bad:
        raise RebalanceError(f"hyperparameters out of range: {kind}")


def kind_summary(kind: ClassifierKind) -> dict:
    return {"kind": kind.name, **asdict(kind)}


# ---------------------------------------------------------------- models


class TrainedModel:
    kind: ClassifierKind
    n_features: int

    def predict_proba(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.n_features:
            raise DimensionMismatch(f"model expects {self.n_features} features, got {x.shape[1]}")
        return np.clip(self._proba(x), 0.0, 1.0)

    def predict(self, x) -> np.ndarray:
        return (self.predict_proba(x) >= 0.5).astype(np.int64)

    def _proba(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def predict_proba(model: TrainedModel, x) -> float:
    """P(class 1) for a single feature vector."""
    return float(model.predict_proba(np.asarray(x, dtype=np.float64)[None, :])[0])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(eq=False)
class KnnModel(TrainedModel):
    kind: Knn
    n_features: int
    x: np.ndarray
    y: np.ndarray

    def _proba(self, x):
        out = np.empty(len(x))
        step = max(1, 2_000_000 // max(1, len(self.x) * self.n_features))
        for s in range(0, len(x), step):
            d2 = squared_distances(x[s:s + step], self.x)
            idx = np.argsort(d2, axis=1, kind="stable")[:, :self.kind.k]
            out[s:s + step] = self.y[idx].mean(axis=1)
        return out


@dataclass(eq=False)
class GaussianModel(TrainedModel):
    """LDA or QDA: per-class means, covariances (Cholesky factors) and log-priors."""

    kind: Lda | Qda
    n_features: int
    means: np.ndarray
    factors: list
    log_dets: np.ndarray
    log_priors: np.ndarray

    def _log_joint(self, x):
        out = np.empty((len(x), 2))
        for c in (0, 1):
            diff = x - self.means[c]
            sol = cho_solve(self.factors[c], diff.T)
            maha = np.einsum("ij,ji->i", diff, sol)
            out[:, c] = self.log_priors[c] - 0.5 * (maha + self.log_dets[c])
        return out

    def _proba(self, x):
        lj = self._log_joint(x)
        return _sigmoid(lj[:, 1] - lj[:, 0])

    def linear_boundary(self) -> tuple[np.ndarray, float]:
        """For LDA: (w, b) with log-odds = x @ w + b."""
        if self.kind.name != "lda":
            raise RebalanceError("only LDA has a linear boundary")
        w = cho_solve(self.factors[0], self.means[1] - self.means[0])
        b = -0.5 * (self.means[1] @ cho_solve(self.factors[0], self.means[1])
                    - self.means[0] @ cho_solve(self.factors[0], self.means[0]))
        return w, float(b + self.log_priors[1] - self.log_priors[0])


@dataclass(eq=False)
class LogisticModel(TrainedModel):
    kind: Logistic
    n_features: int
    weights: np.ndarray  # bias last
    losses: list = field(repr=False, default_factory=list)

    def _proba(self, x):
        return _sigmoid(x @ self.weights[:-1] + self.weights[-1])


@dataclass(eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(len(x), dtype=np.int64)
        rows = np.arange(len(x))
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.value[node]
            go_left = x[rows, np.where(inner, f, 0)] < self.threshold[node]
            node = np.where(inner, np.where(go_left, self.left[node], self.right[node]), node)


@dataclass(eq=False)
class ForestModel(TrainedModel):
    kind: ExtraTrees
    n_features: int
    trees: list

    def _proba(self, x):
        return np.mean([t.apply(x) for t in self.trees], axis=0)


@dataclass(eq=False)
class AdaBoostModel(TrainedModel):
    kind: AdaBoostStumps
    n_features: int
    features: np.ndarray
    thresholds: np.ndarray
    polarity: np.ndarray
    alphas: np.ndarray

    def margin(self, x: np.ndarray) -> np.ndarray:
        if len(self.alphas) == 0:
            return np.zeros(len(x))
        h = np.where(x[:, self.features] > self.thresholds, 1.0, -1.0) * self.polarity
        return h @ self.alphas

    def _proba(self, x):
        return _sigmoid(2.0 * self.margin(x))


# ---------------------------------------------------------------- fitting


def _fit_gaussian(kind: Lda | Qda, x: np.ndarray, y: np.ndarray) -> GaussianModel:
    n, d = x.shape
    means = np.stack([x[y == c].mean(axis=0) for c in (0, 1)])
    scatter = [(x[y == c] - means[c]).T @ (x[y == c] - means[c]) for c in (0, 1)]
    pooled = (scatter[0] + scatter[1]) / n
    if isinstance(kind, Lda):
        covs = [pooled, pooled]
    else:
        covs = [(1 - kind.shrinkage) * scatter[c] / max(1, int(np.sum(y == c))) + kind.shrinkage * pooled
                for c in (0, 1)]
    factors, log_dets = [], []
    for cov in covs:
        ridge = kind.ridge * np.trace(cov) / d
        reg = cov + ridge * np.eye(d)
        try:
            fac = cho_factor(reg, lower=True)
        except LinAlgError:
            raise IllConditioned(f"{kind.name} covariance is singular despite ridge {ridge:g}") from None
        diag = np.diag(fac[0])
        if not np.all(diag > 0) or not np.isfinite(diag).all():
            raise IllConditioned(f"{kind.name} covariance is singular")
        factors.append(fac)
        log_dets.append(2.0 * np.log(diag).sum())
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    return GaussianModel(kind, d, means, factors, np.array(log_dets), np.log(priors))


def logistic_loss_grad(w: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float) -> tuple[float, np.ndarray]:
    """Mean cross-entropy plus ``l2/2 * |w|^2`` (bias, the last weight, unpenalized) and its gradient."""
    z = x @ w[:-1] + w[-1]
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w[:-1] @ w[:-1])
    r = (_sigmoid(z) - y) / len(y)
    grad = np.empty_like(w)
    grad[:-1] = x.T @ r + l2 * w[:-1]
    grad[-1] = r.sum()
    return float(loss), grad


def _fit_logistic(kind: Logistic, x: np.ndarray, y: np.ndarray) -> LogisticModel:
    w = np.zeros(x.shape[1] + 1)
    yf = y.astype(np.float64)
    losses = []
    for _ in range(kind.epochs):
        loss, grad = logistic_loss_grad(w, x, yf, kind.l2)
        if not (math.isfinite(loss) and np.isfinite(grad).all()):
            raise Diverged("logistic loss became non-finite")
        losses.append(loss)
        w = w - kind.rate * grad
    loss, _ = logistic_loss_grad(w, x, yf, kind.l2)
    if not (math.isfinite(loss) and np.isfinite(w).all()):
        raise Diverged("logistic weights became non-finite")
    losses.append(loss)
    return LogisticModel(kind, x.shape[1], w, losses)


def _grow_tree(x: np.ndarray, y: np.ndarray, kind: ExtraTrees, rng: np.random.Generator) -> Tree:
    """One tree: at each node the best Gini split among sqrt(d) random (feature, threshold) draws."""
    n, d = x.shape
    n_try = max(1, int(math.floor(math.sqrt(d))))
    attempts = min(2 * n // kind.min_leaf + 1, 2 ** kind.max_depth)
    rand = rng.random((attempts, d + n_try))
    parts = _trees.grow(x, y.astype(np.float64), kind.max_depth, kind.min_leaf, n_try, rand)
    return Tree(*parts)


def _fit_forest(kind: ExtraTrees, x: np.ndarray, y: np.ndarray, seed: int) -> ForestModel:
    rng = stream(seed, "extra_trees")
    x = np.ascontiguousarray(x)
    return ForestModel(kind, x.shape[1], [_grow_tree(x, y, kind, rng) for _ in range(kind.n_trees)])


def _fit_adaboost(kind: AdaBoostStumps, x: np.ndarray, y: np.ndarray) -> AdaBoostModel:
    n, d = x.shape
    ypm = np.where(y == 1, 1.0, -1.0)
    order = np.argsort(x, axis=0, kind="stable")
    xs = np.take_along_axis(x, order, axis=0)
    # a cut after sorted position i is valid when the next value differs
    valid = np.vstack([np.ones((1, d), bool), xs[1:] > xs[:-1]])
    cuts = np.vstack([xs[:1] - 1.0, (xs[1:] + xs[:-1]) / 2.0])
    w = np.full(n, 1.0 / n)
    feats, thrs, pols, alphas = [], [], [], []
    for _ in range(kind.rounds):
        wpos = np.where(ypm > 0, w, 0.0)[order]
        wneg = np.where(ypm < 0, w, 0.0)[order]
        # rows before cut i (exclusive) are predicted -1 by the "+1 above" stump
        lpos = np.vstack([np.zeros((1, d)), np.cumsum(wpos, axis=0)[:-1]])
        lneg = np.vstack([np.zeros((1, d)), np.cumsum(wneg, axis=0)[:-1]])
        err = lpos + (wneg.sum(axis=0) - lneg)
        err = np.where(valid, err, np.inf)
        flipped = np.where(valid, 1.0 - err, np.inf)
        i_up, j_up = np.unravel_index(np.argmin(err), err.shape)
        i_dn, j_dn = np.unravel_index(np.argmin(flipped), err.shape)
        if err[i_up, j_up] <= flipped[i_dn, j_dn]:
            e, j, thr, pol = err[i_up, j_up], j_up, cuts[i_up, j_up], 1.0
        else:
            e, j, thr, pol = flipped[i_dn, j_dn], j_dn, cuts[i_dn, j_dn], -1.0
        if e >= 0.5:
            break
        e = max(e, 1e-10)
        alpha = 0.5 * math.log((1.0 - e) / e)
        h = np.where(x[:, j] > thr, 1.0, -1.0) * pol
        w = w * np.exp(-alpha * ypm * h)
        w /= w.sum()
        feats.append(int(j))
        thrs.append(float(thr))
        pols.append(pol)
        alphas.append(alpha)
        if e <= 1e-10:
            break
    return AdaBoostModel(kind, d, np.array(feats, dtype=np.int64), np.array(thrs), np.array(pols), np.array(alphas))


def train(kind: ClassifierKind, data: Dataset, rows: Sequence[int] | None = None, seed: int = 0) -> TrainedModel:
    """Fit ``kind`` on ``rows`` of ``data`` (all rows when omitted)."""
    rows = np.arange(data.n_rows) if rows is None else np.asarray(rows, dtype=np.int64)
    x = data.features[rows]
    y = data.labels[rows]
    if x.shape[1] < 1:
        raise RebalanceError("need at least one feature")
    if len(np.unique(y)) < 2:
        raise RebalanceError("both classes must be present in the training rows")
    return fit_arrays(kind, x, y, seed)


def fit_arrays(kind: ClassifierKind, x: np.ndarray, y: np.ndarray, seed: int = 0) -> TrainedModel:
    _validate(kind)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if isinstance(kind, Knn):
        if kind.k > len(y):
            raise RebalanceError(f"k={kind.k} exceeds {len(y)} training rows")
        return KnnModel(kind, x.shape[1], x.copy(), y.astype(np.float64))
    if isinstance(kind, (Lda, Qda)):
        return _fit_gaussian(kind, x, y)
    if isinstance(kind, Logistic):
        return _fit_logistic(kind, x, y)
    if isinstance(kind, ExtraTrees):
        return _fit_forest(kind, x, y, seed)
    if isinstance(kind, AdaBoostStumps):
        return _fit_adaboost(kind, x, y)
    raise RebalanceError(f"unsupported classifier {kind!r}")


# ---------------------------------------------------------------- ensembling


@dataclass(frozen=True, eq=False)
class Ensemble:
    members: tuple
    selection_scores: tuple[float, ...]
    selection_f1: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.members) != 3:
            raise RebalanceError("an ensemble has exactly 3 members")

    @property
    def code(self) -> str:
        return ensemble_code([m.kind.name for m in self.members])

    def member_proba(self, x) -> np.ndarray:
        return np.stack([m.predict_proba(x) for m in self.members])

    def proba(self, x) -> np.ndarray:
        """Mean member probability, used as the ensemble's ranking score."""
        return self.member_proba(x).mean(axis=0)

    def predict(self, x) -> np.ndarray:
        votes = (self.member_proba(x) >= 0.5).sum(axis=0)
        return (votes >= 2).astype(np.int64)


def ensemble_code(names: Sequence[str]) -> str:
    return "".join(KINDS[n].initial for n in sorted(names, key=CODE_ORDER.index))


def rank_candidates(aucs: Sequence[float], f1s: Sequence[float], names: Sequence[str]) -> list[int]:
    """Indices ordered by AUC, then F1 (both descending), then kind order."""
    return sorted(range(len(aucs)), key=lambda i: (-aucs[i], -f1s[i], KIND_ORDER.index(names[i]), i))


def select_top3(models: Sequence[TrainedModel], data: Dataset, rows: Sequence[int] | None = None) -> Ensemble:
    """Rank ``models`` on validation ``rows`` of ``data`` and keep the best three."""
    if len(models) < 3:
        raise RebalanceError(f"need at least 3 candidate models, got {len(models)}")
    rows = np.arange(data.n_rows) if rows is None else np.asarray(rows, dtype=np.int64)
    x, y = data.features[rows], data.labels[rows]
    aucs, f1s = [], []
    for m in models:
        p = m.predict_proba(x)
        aucs.append(metrics.auc(y, p))
        f1s.append(metrics.f1(metrics.confusion(y, (p >= 0.5).astype(int))))
    order = rank_candidates(aucs, f1s, [m.kind.name for m in models])[:3]
    return Ensemble(tuple(models[i] for i in order), tuple(aucs[i] for i in order), tuple(f1s[i] for i in order))


def vote(ensemble: Ensemble, x) -> int:
    """Hard majority vote of the three members for one feature vector."""
    return int(ensemble.predict(np.asarray(x, dtype=np.float64)[None, :])[0])
