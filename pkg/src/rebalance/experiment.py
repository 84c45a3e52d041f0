"""Experiment grid: split, rebalance, train the zoo, pick the top three, score the holdout.

A run is fully described by an :class:`ExperimentConfig` and its master
seed. Every random consumer gets a labeled sub-seed (see :mod:`seeding`), so
the manifest written at the end is byte-identical across reruns. Wall-clock
timings are kept out of the manifest and written next to it.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import classify, cleaners, metrics, samplers
from .errors import ConfigError, RebalanceError
from .report import TABLE_COLUMNS, emit_report, roc_csv
from .seeding import derive_seed
from .tabular import Dataset, SplitIndices, fit_standardizer, load_csv, stratified_split, transform

MANIFEST_FORMAT = "rebalance-manifest/1"

APPROACH_NAMES = {
    "none": "NONE",
    "adasyn": "ADASYN",
    "borderline": "BSMOTE",
    "smote_enn": "SMOTE-ENN",
    "smote": "SMOTE",
    "smote_nc": "SMOTENC",
    "smote_tomek": "SMOTE TOMEK",
    "svm_smote": "SVMSMOTE",
    "mixup": "MIXUP",
    "stem": "STEM",
}

SAMPLER_PARAMS = {
    "none": {},
    "smote": {"k": int, "target_ratio": float},
    "smote_nc": {"k": int, "target_ratio": float},
    "borderline": {"m": int, "k": int, "target_ratio": float},
    "svm_smote": {"m": int, "k": int, "svm_regularization": float, "svm_epochs": int, "target_ratio": float},
    "adasyn": {"k": int, "beta": float},
    "smote_tomek": {"k": int, "target_ratio": float, "remove_both": bool},
    "smote_enn": {"k": int, "target_ratio": float},
    "mixup": {"alpha": float, "target_ratio": float},
    "stem": {"k": int, "target_ratio": float, "alpha": float, "pairs_per_class": int},
}

CLASSIFIER_PARAMS = {
    "knn": {"k": int},
    "lda": {"ridge": float},
    "qda": {"shrinkage": float, "ridge": float},
    "logistic": {"rate": float, "epochs": int, "l2": float},
    "extra_trees": {"n_trees": int, "max_depth": int, "min_leaf": int},
    "adaboost": {"rounds": int},
}


@dataclass(frozen=True)
class SamplerSpec:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in SAMPLER_PARAMS:
            raise ConfigError(f"unknown sampler {self.name!r}; choose from {sorted(SAMPLER_PARAMS)}")
        unknown = set(self.params) - set(SAMPLER_PARAMS[self.name])
        if unknown:
            raise ConfigError(f"sampler {self.name!r} has no parameters {sorted(unknown)}")

    @property
    def approach(self) -> str:
        return APPROACH_NAMES[self.name]


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    label_column: str
    samplers: tuple[SamplerSpec, ...]
    classifiers: tuple = tuple(classify.make_kind(n) for n in classify.KIND_ORDER)
    nominal_columns: tuple[str, ...] = ()
    exclude_columns: tuple[str, ...] = ()
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    repetitions: int = 10
    output_dir: str = "runs"

    def __post_init__(self):
        if not self.samplers:
            raise ConfigError("at least one sampler is required")
        if len(self.classifiers) < 3:
            raise ConfigError("at least three classifiers are required")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        names = [s.name for s in self.samplers]
        if len(set(names)) != len(names):
            raise ConfigError("each sampler may appear once")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "label_column": self.label_column,
            "nominal_columns": list(self.nominal_columns),
            "exclude_columns": list(self.exclude_columns),
            "fractions": list(self.fractions),
            "seed": self.seed,
            "repetitions": self.repetitions,
            "samplers": [{"name": s.name, "params": dict(sorted(s.params.items()))} for s in self.samplers],
            "classifiers": [classify.kind_summary(k) for k in self.classifiers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kinds = []
        for entry in d["classifiers"]:
            entry = dict(entry)
            kinds.append(classify.make_kind(entry.pop("kind"), **entry))
        return cls(
            dataset=d["dataset"],
            label_column=d["label_column"],
            nominal_columns=tuple(d.get("nominal_columns", ())),
            exclude_columns=tuple(d.get("exclude_columns", ())),
            fractions=tuple(d.get("fractions", (0.8, 0.1, 0.1))),
            seed=int(d.get("seed", 0)),
            repetitions=int(d.get("repetitions", 10)),
            samplers=tuple(SamplerSpec(s["name"], dict(s.get("params", {}))) for s in d["samplers"]),
            classifiers=tuple(kinds),
            output_dir=d.get("output_dir", "runs"),
        )


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _typed(section: configparser.SectionProxy, schema: dict, where: str) -> dict:
    out = {}
    for key in section:
        if key not in schema:
            raise ConfigError(f"[{where}] has no parameter {key!r}")
        typ = schema[key]
        try:
            out[key] = section.getboolean(key) if typ is bool else typ(section[key])
        except ValueError:
            raise ConfigError(f"[{where}] {key} = {section[key]!r} is not a valid {typ.__name__}") from None
    return out


def load_config(path) -> ExperimentConfig:
    """Read an INI experiment file, or the ``config`` block of a manifest (``.json``)."""
    path = Path(path)
    if path.suffix == ".json":
        return ExperimentConfig.from_dict(json.loads(path.read_text(encoding="utf-8"))["config"])
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), default_section="__defaults__")
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read config {path}")
    if "experiment" not in parser:
        raise ConfigError("config needs an [experiment] section")
    exp = parser["experiment"]
    dataset = exp.get("dataset")
    if not dataset:
        raise ConfigError("[experiment] dataset is required")
    dataset_path = Path(dataset)
    if not dataset_path.is_absolute():
        dataset_path = (path.parent / dataset_path).resolve()
    sampler_names = _csv_list(exp.get("samplers", ""))
    kind_names = _csv_list(exp.get("classifiers", ",".join(classify.KIND_ORDER)))
    specs = []
    for name in sampler_names:
        section = f"sampler.{name}"
        params = _typed(parser[section], SAMPLER_PARAMS.get(name, {}), section) if section in parser else {}
        specs.append(SamplerSpec(name, params))
    kinds = []
    for name in kind_names:
        if name not in CLASSIFIER_PARAMS:
            raise ConfigError(f"unknown classifier {name!r}")
        section = f"classifier.{name}"
        params = _typed(parser[section], CLASSIFIER_PARAMS[name], section) if section in parser else {}
        kinds.append(classify.make_kind(name, **params))
    fractions = tuple(float(v) for v in _csv_list(exp.get("fractions", "0.8, 0.1, 0.1")))
    return ExperimentConfig(
        dataset=str(dataset_path),
        label_column=exp.get("label_column", "label"),
        nominal_columns=_csv_list(exp.get("nominal_columns", "")),
        exclude_columns=_csv_list(exp.get("exclude_columns", "")),
        fractions=fractions,
        seed=exp.getint("seed", 0),
        repetitions=exp.getint("repetitions", 10),
        samplers=tuple(specs),
        classifiers=tuple(kinds),
        output_dir=exp.get("output_dir", "runs"),
    )


# ---------------------------------------------------------------- resampling


def apply_sampler(spec: SamplerSpec, data: Dataset, train_rows, seed: int) -> tuple[Dataset, list]:
    """Run one sampler spec on the training rows; returns the dataset and cleaning reports."""
    p = spec.params
    log = cleaners.PipelineLog()
    smote_cfg = lambda: samplers.SmoteConfig(k=p.get("k", 5), target_ratio=p.get("target_ratio", 1.0), seed=seed)
    name = spec.name
    if name == "none":
        out = data.subset(train_rows)
    elif name == "smote":
        out = samplers.smote(data, train_rows, smote_cfg())
    elif name == "smote_nc":
        out = samplers.smote_nc(data, train_rows, smote_cfg())
    elif name == "borderline":
        out = samplers.borderline_smote(data, train_rows, samplers.BorderlineConfig(seed=seed, **p))
    elif name == "svm_smote":
        out = samplers.svm_smote(data, train_rows, samplers.SvmSmoteConfig(seed=seed, **p))
    elif name == "adasyn":
        out = samplers.adasyn(data, train_rows, samplers.AdasynConfig(seed=seed, **p))
    elif name == "smote_tomek":
        out = cleaners.smote_tomek(data, train_rows, smote_cfg(), remove_both=p.get("remove_both", False), log=log)
    elif name == "smote_enn":
        out = cleaners.smote_enn(data, train_rows, smote_cfg(), log=log)
    elif name == "mixup":
        out = samplers.mixup_oversample(data, train_rows, samplers.MixupConfig(alpha=p.get("alpha", 0.2), seed=seed),
                                        target_ratio=p.get("target_ratio", 1.0))
    elif name == "stem":
        mix = samplers.MixupConfig(alpha=p.get("alpha", 0.2), pairs_per_class=p.get("pairs_per_class"),
                                   seed=derive_seed(seed, "mixup"))
        out = cleaners.stem(data, train_rows, smote_cfg(), mix, log=log)
    else:
        raise ConfigError(f"unknown sampler {name!r}")
    return out, log.reports


class LeakageError(RebalanceError):
    pass


def check_leakage(resampled: Dataset, split: SplitIndices) -> None:
    """Validation and holdout rows must never reach a sampler's output or provenance."""
    train = set(split.train)
    originals = resampled.row_ids[resampled.row_ids >= 0]
    stray = set(originals.tolist()) - train
    if stray:
        raise LeakageError(f"non-training rows in resampled data: {sorted(stray)[:5]}")
    for rec in resampled.synthesis:
        if rec.algorithm == "mixup":
            refs = resampled.row_ids[[rec.source_idx, rec.neighbor_idx]]
            refs = refs[refs >= 0]
        else:
            refs = np.array([rec.source_idx, rec.neighbor_idx])
        if not set(refs.tolist()) <= train:
            raise LeakageError(f"synthetic row {rec.row_id} derives from a non-training row")


# ---------------------------------------------------------------- grid


@dataclass(frozen=True)
class Prepared:
    split: SplitIndices
    data: Dataset


def _prepare(raw: Dataset, cfg: ExperimentConfig, rep: int) -> Prepared:
    split = stratified_split(raw, cfg.fractions, derive_seed(cfg.seed, "split", rep))
    std = fit_standardizer(raw, split.train)
    return Prepared(split, transform(std, raw))


def run_cell(prep: Prepared, cfg: ExperimentConfig, spec: SamplerSpec, rep: int) -> tuple[dict, float]:
    """One grid cell (sampler x repetition). Errors are captured into a failure record."""
    start = time.perf_counter()
    sampler_seed = derive_seed(cfg.seed, "sampler", spec.name, rep)
    cell: dict[str, Any] = {"sampler": spec.name, "approach": spec.approach, "repetition": rep,
                            "sampler_seed": sampler_seed}
    try:
        data, split = prep.data, prep.split
        out, reports = apply_sampler(spec, data, split.train, sampler_seed)
        check_leakage(out, split)
        cell["class_counts"] = {"before": _counts(data.class_counts(split.train)),
                                "after": _counts(out.class_counts())}
        cell["provenance"] = [r.as_row() for r in out.synthesis]
        cell["cleaning"] = [r.to_dict() for r in reports]

        models, candidates = [], []
        for kind in cfg.classifiers:
            seed = derive_seed(cfg.seed, "classifier", kind.name, spec.name, rep)
            entry = {"kind": kind.name, "seed": seed}
            try:
                models.append(classify.train(kind, out, seed=seed))
            except RebalanceError as exc:
                entry["error"] = f"{type(exc).__name__}: {exc}"
            candidates.append(entry)
        vx, vy = data.features[split.validation], data.labels[split.validation]
        for m, entry in zip(models, [c for c in candidates if "error" not in c]):
            p = m.predict_proba(vx)
            entry["validation_auc"] = metrics.auc(vy, p)
            entry["validation_f1"] = metrics.f1(metrics.confusion(vy, (p >= 0.5).astype(int)))
        cell["classifiers"] = candidates
        ens = classify.select_top3(models, data, split.validation)
        cell["ensemble"] = {"members": [m.kind.name for m in ens.members],
                            "validation_auc": list(ens.selection_scores), "code": ens.code}

        hx, hy = data.features[split.holdout], data.labels[split.holdout]
        score = ens.proba(hx)
        pred = ens.predict(hx)
        cm = metrics.confusion(hy, pred)
        sc = metrics.scores(cm)
        roc = metrics.roc_auc(hy, score)
        cell["holdout"] = {
            "confusion": asdict(cm),
            "accuracy": sc.accuracy, "precision": sc.precision, "recall": sc.recall, "f1": sc.f1,
            "zero_division": list(sc.zero_division), "auc": roc.auc,
            "roc": [list(pt) for pt in roc.points],
        }
        cell["status"] = "ok"
    except Exception as exc:  # noqa: BLE001 - a cell failure must not abort the grid
        cell["status"] = "failed"
        cell["error"] = f"{type(exc).__name__}: {exc}"
    return cell, time.perf_counter() - start


def _counts(c: dict) -> dict:
    return {str(k): v for k, v in sorted(c.items())}


def aggregate(cells: list[dict], specs) -> list[dict]:
    """One results row per sampler: metric means over successful repetitions."""
    rows = []
    for spec in specs:
        mine = [c for c in cells if c["sampler"] == spec.name]
        ok = [c for c in mine if c["status"] == "ok"]
        row = {"Approach": spec.approach, "sampler": spec.name, "n_ok": len(ok), "n_failed": len(mine) - len(ok)}
        if ok:
            for col, key in (("Acc", "accuracy"), ("AUC", "auc"), ("Rec", "recall"),
                             ("Pre", "precision"), ("F1", "f1")):
                row[col] = float(np.mean([c["holdout"][key] for c in ok]))
            codes = Counter(c["ensemble"]["code"] for c in ok)
            row["CL"] = sorted(codes.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        else:
            row.update({col: None for col in TABLE_COLUMNS[1:]})
        rows.append(row)
    return rows


def _file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("REBALANCE_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig, data: Dataset | None = None) -> tuple[dict, dict]:
    """Run the full grid. Returns ``(manifest, timings)``.

    ``data`` overrides loading ``cfg.dataset`` (used for in-memory datasets).
    """
    t0 = time.perf_counter()
    if data is None:
        data = load_csv(cfg.dataset, cfg.label_column, cfg.nominal_columns, cfg.exclude_columns)
        digest = _file_digest(cfg.dataset)
    else:
        digest = hashlib.sha256(np.ascontiguousarray(data.features).tobytes()
                                + np.ascontiguousarray(data.labels).tobytes()).hexdigest()
    preps = [_prepare(data, cfg, rep) for rep in range(cfg.repetitions)]
    jobs = [(spec, rep) for spec in cfg.samplers for rep in range(cfg.repetitions)]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(lambda job: run_cell(preps[job[1]], cfg, job[0], job[1]), jobs))
    cells = [c for c, _ in results]
    timings = {"total_seconds": time.perf_counter() - t0,
               "cells": [{"sampler": c["sampler"], "repetition": c["repetition"], "seconds": s}
                         for c, s in results]}
    manifest = {
        "format": MANIFEST_FORMAT,
        "config": cfg.to_dict(),
        "dataset": {"sha256": digest, "rows": data.n_rows, "features": data.n_features,
                    "class_counts": _counts(data.class_counts()), "label_names": list(data.label_names)},
        "seeds": {
            "master": cfg.seed,
            "split": [derive_seed(cfg.seed, "split", r) for r in range(cfg.repetitions)],
        },
        "splits": [{"repetition": r, "train": len(p.split.train), "validation": len(p.split.validation),
                    "holdout": len(p.split.holdout),
                    "holdout_rows": p.split.holdout, "validation_rows": p.split.validation}
                   for r, p in enumerate(preps)],
        "cells": cells,
        "results": aggregate(cells, cfg.samplers),
    }
    return manifest, timings


def failed(manifest: dict) -> bool:
    return any(c["status"] != "ok" for c in manifest["cells"])


def dumps_manifest(manifest: dict) -> str:
    return json.dumps(manifest, indent=1, sort_keys=False) + "\n"


def write_run(manifest: dict, timings: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(dumps_manifest(manifest), encoding="utf-8")
    (out / "timings.json").write_text(json.dumps(timings, indent=1) + "\n", encoding="utf-8")
    md, csv_text = emit_report(manifest)
    (out / "results.md").write_text(md, encoding="utf-8")
    (out / "results.csv").write_text(csv_text, encoding="utf-8")
    (out / "roc.csv").write_text(roc_csv(manifest), encoding="utf-8")
    return out / "manifest.json"
