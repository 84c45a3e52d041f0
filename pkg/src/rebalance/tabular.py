"""Dataset model, CSV ingestion, stratified splitting and standardization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import seeding
from .errors import ClassTooSmall, EmptyClass, NotBinary, RebalanceError

CONTINUOUS = "continuous"
NOMINAL = "nominal"
ORIGINAL = "original"
SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class SyntheticRecord:
    """Provenance of one generated row.

    For SMOTE-family rows ``source_idx``/``neighbor_idx`` index the rows of
    the dataset that was passed to the sampler and ``coefficient`` is the
    interpolation step. For Mixup rows they index the returned dataset and
    ``coefficient`` is the mixing weight of the source.
    """

    row_id: int
    algorithm: str
    source_idx: int
    neighbor_idx: int
    coefficient: float

    def as_row(self) -> list:
        return [self.row_id, self.algorithm, self.source_idx, self.neighbor_idx, self.coefficient]


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    column_kinds: tuple[str, ...]
    feature_names: tuple[str, ...]
    row_provenance: np.ndarray
    row_ids: np.ndarray
    categories: dict = field(default_factory=dict)
    label_names: tuple[str, str] = ("0", "1")
    synthesis: tuple[SyntheticRecord, ...] = ()

    def __post_init__(self):
        n = self.features.shape[0]
        if self.features.ndim != 2:
            raise RebalanceError("features must be a 2-d matrix")
        if not (len(self.labels) == len(self.row_provenance) == len(self.row_ids) == n):
            raise RebalanceError("features, labels and provenance disagree on row count")
        if len(self.column_kinds) != self.features.shape[1] or len(self.feature_names) != self.features.shape[1]:
            raise RebalanceError("column metadata does not match feature width")
        if n and not np.isin(self.labels, (0, 1)).all():
            raise NotBinary("labels must be 0 or 1")
        for arr in (self.features, self.labels, self.row_provenance, self.row_ids):
            arr.flags.writeable = False

    @classmethod
    def from_arrays(cls, features, labels, column_kinds=None, feature_names=None, **kw) -> "Dataset":
        """Build an all-original dataset from plain arrays (tests, synthetic data)."""
        x = np.array(features, dtype=np.float64, ndmin=2)
        y = np.array(labels, dtype=np.int64)
        d = x.shape[1]
        kinds = tuple(column_kinds) if column_kinds is not None else (CONTINUOUS,) * d
        names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(d))
        return cls(
            features=x,
            labels=y,
            column_kinds=kinds,
            feature_names=names,
            row_provenance=np.full(len(y), ORIGINAL),
            row_ids=np.arange(len(y), dtype=np.int64),
            **kw,
        )

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def nominal_mask(self) -> np.ndarray:
        return np.array([k == NOMINAL for k in self.column_kinds], dtype=bool)

    @property
    def is_synthetic(self) -> np.ndarray:
        return self.row_provenance == SYNTHETIC

    def class_counts(self, rows: Sequence[int] | None = None) -> dict[int, int]:
        y = self.labels if rows is None else self.labels[np.asarray(rows, dtype=np.int64)]
        return {0: int(np.sum(y == 0)), 1: int(np.sum(y == 1))}

    def subset(self, rows: Iterable[int]) -> "Dataset":
        """Rows in the given order.

        Synthesis records of kept synthetic rows follow their row to its new
        position; records of dropped rows are discarded.
        """
        idx = np.asarray(list(rows), dtype=np.int64)
        new_pos = {int(old): new for new, old in enumerate(idx)}
        records = tuple(
            replace(r, row_id=new_pos[r.row_id]) for r in self.synthesis if r.row_id in new_pos
        )
        return replace(
            self,
            features=self.features[idx].copy(),
            labels=self.labels[idx].copy(),
            row_provenance=self.row_provenance[idx].copy(),
            row_ids=self.row_ids[idx].copy(),
            synthesis=records,
        )

    def with_synthetic(self, features: np.ndarray, labels: np.ndarray,
                       records: Sequence[SyntheticRecord]) -> "Dataset":
        """Append generated rows; ``records`` must already carry their output row ids."""
        features = np.asarray(features, dtype=np.float64).reshape(-1, self.n_features)
        labels = np.asarray(labels, dtype=np.int64)
        m = len(labels)
        return replace(
            self,
            features=np.vstack([self.features, features]),
            labels=np.concatenate([self.labels, labels]),
            row_provenance=np.concatenate([self.row_provenance, np.full(m, SYNTHETIC)]),
            row_ids=np.concatenate([self.row_ids, np.full(m, -1, dtype=np.int64)]),
            synthesis=self.synthesis + tuple(records),
        )


def _minority_first(label_texts: Sequence[str]) -> tuple[str, str]:
    values, counts = np.unique(np.asarray(label_texts, dtype=object).astype(str), return_counts=True)
    if len(values) != 2:
        raise NotBinary(f"label column must hold exactly two values, found {len(values)}")
    order = sorted(zip(counts.tolist(), values.tolist()))
    return order[0][1], order[1][1]


def load_csv(path, label_column: str, nominal_columns: Iterable[str] = (),
             exclude_columns: Iterable[str] = ()) -> Dataset:
    """Read a header-first CSV into a :class:`Dataset`.

    The minority label (by count, ties to the lexicographically smaller
    text) is coded 1. Nominal columns are integer-coded against their
    sorted distinct values. ``exclude_columns`` are skipped entirely.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RebalanceError(f"{path} is empty") from None
        rows = [r for r in reader if r]
    if label_column not in header:
        raise RebalanceError(f"label column {label_column!r} not in header")
    nominal = set(nominal_columns)
    excluded = set(exclude_columns)
    missing = (nominal | excluded) - set(header)
    if missing:
        raise RebalanceError(f"unknown columns: {sorted(missing)}")
    if not rows:
        raise EmptyClass("no data rows")
    label_pos = header.index(label_column)
    feature_cols = [j for j, name in enumerate(header) if j != label_pos and name not in excluded]

    label_texts = [r[label_pos].strip() for r in rows]
    minority, majority = _minority_first(label_texts)
    y = np.array([1 if t == minority else 0 for t in label_texts], dtype=np.int64)

    categories = {}
    x = np.empty((len(rows), len(feature_cols)), dtype=np.float64)
    kinds = []
    for out_j, j in enumerate(feature_cols):
        name = header[j]
        cells = [r[j].strip() for r in rows]
        if name in nominal:
            cats = sorted(set(cells))
            code = {c: i for i, c in enumerate(cats)}
            x[:, out_j] = [code[c] for c in cells]
            categories[name] = cats
            kinds.append(NOMINAL)
        else:
            for i, c in enumerate(cells):
                try:
                    v = float(c)
                except ValueError:
                    raise RebalanceError(f"non-numeric value {c!r} in column {name!r}, row {i + 1}") from None
                if not math.isfinite(v):
                    raise RebalanceError(f"non-finite value in column {name!r}, row {i + 1}")
                x[i, out_j] = v
            kinds.append(CONTINUOUS)
    return Dataset.from_arrays(
        x, y, column_kinds=kinds, feature_names=[header[j] for j in feature_cols],
        categories=categories, label_names=(majority, minority),
    )


def save_csv(data: Dataset, path, label_column: str = "label") -> None:
    """Write ``data`` as CSV (17 significant digits); nominal dictionaries go to ``<path>.categories.json``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(data.feature_names) + [label_column])
        for i in range(data.n_rows):
            cells = []
            for j, name in enumerate(data.feature_names):
                v = data.features[i, j]
                if data.column_kinds[j] == NOMINAL and name in data.categories:
                    cells.append(data.categories[name][int(v)])
                else:
                    cells.append(format(v, ".17g"))
            cells.append(data.label_names[int(data.labels[i])])
            w.writerow(cells)
    if data.categories:
        sidecar = path.with_name(path.name + ".categories.json")
        sidecar.write_text(json.dumps(data.categories, indent=2, sort_keys=True), encoding="utf-8")


@dataclass(frozen=True)
class SplitIndices:
    train: list[int]
    validation: list[int]
    holdout: list[int]


def _allocate(class_sizes: dict[int, int], total: int, part: int, taken: dict[int, int]) -> dict[int, int]:
    # largest remainder; ties go to the class that has given up fewer rows so far
    quotas = {c: n * part / total for c, n in class_sizes.items()}
    alloc = {c: int(math.floor(q)) for c, q in quotas.items()}
    left = part - sum(alloc.values())
    order = sorted(class_sizes, key=lambda c: (-(quotas[c] - alloc[c]), taken[c], c))
    for c in order[:left]:
        alloc[c] += 1
    return alloc


def stratified_split(data: Dataset, fractions=(0.8, 0.1, 0.1), seed: int = 0) -> SplitIndices:
    """Stratified train/validation/holdout partition of all rows.

    Part sizes are ``round(f * N)`` for validation and holdout, the rest is
    training. Each part's size is shared out among the classes by largest
    remainder. Rows are shuffled per class and sliced contiguously.
    """
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise RebalanceError("fractions must be three non-negative values summing to 1")
    n = data.n_rows
    sizes = data.class_counts()
    for c, size in sizes.items():
        if size < 3:
            raise ClassTooSmall(f"class {c} has {size} rows; at least 3 are needed to appear in every part")
    n_val = int(math.floor(fractions[1] * n + 0.5))
    n_hold = int(math.floor(fractions[2] * n + 0.5))
    taken = {0: 0, 1: 0}
    val_alloc = _allocate(sizes, n, n_val, taken)
    taken = dict(val_alloc)
    hold_alloc = _allocate(sizes, n, n_hold, taken)

    rng = seeding.stream(seed, "split")
    train, val, hold = [], [], []
    for c in (0, 1):
        members = np.flatnonzero(data.labels == c)
        members = members[rng.permutation(len(members))]
        nv, nh = val_alloc[c], hold_alloc[c]
        if nv + nh >= len(members):
            raise ClassTooSmall(f"class {c} cannot fill every part")
        val.extend(members[:nv].tolist())
        hold.extend(members[nv:nv + nh].tolist())
        train.extend(members[nv + nh:].tolist())
    return SplitIndices(sorted(train), sorted(val), sorted(hold))


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray
    continuous: np.ndarray

    def transform(self, data: Dataset) -> Dataset:
        return transform(self, data)


def fit_standardizer(data: Dataset, rows: Sequence[int]) -> Standardizer:
    """Population mean/deviation of continuous columns over ``rows`` only."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise RebalanceError("cannot fit a standardizer on zero rows")
    x = data.features[rows]
    cont = ~data.nominal_mask
    mean = np.where(cont, x.mean(axis=0), 0.0)
    std = np.where(cont, x.std(axis=0), 1.0)
    return Standardizer(mean=mean, std=std, continuous=cont)


def transform(std: Standardizer, data: Dataset) -> Dataset:
    x = data.features.copy()
    cols = np.flatnonzero(std.continuous)
    for j in cols:
        if std.std[j] > 0:
            x[:, j] = (x[:, j] - std.mean[j]) / std.std[j]
        else:
            x[:, j] = 0.0
    return replace(data, features=x)


def inverse_transform(std: Standardizer, data: Dataset) -> Dataset:
    x = data.features.copy()
    for j in np.flatnonzero(std.continuous):
        if std.std[j] > 0:
            x[:, j] = x[:, j] * std.std[j] + std.mean[j]
        else:
            x[:, j] = std.mean[j]
    return replace(data, features=x)
