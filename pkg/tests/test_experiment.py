import csv
import io
import json
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_data
from rebalance import experiment as ex
from rebalance.errors import ConfigError, ImageError
from rebalance.extract import extract_texture_dataset
from rebalance.report import TABLE_COLUMNS, emit_report, results_csv, results_markdown
from rebalance.synthetic import flat_image, textured_image, two_gaussians
from rebalance.tabular import SplitIndices, load_csv, save_csv
from rebalance.texture import write_pgm

ALL_SAMPLERS = ("adasyn", "borderline", "smote_enn", "smote", "smote_nc", "smote_tomek", "svm_smote", "mixup", "stem")


def config(samplers, reps=1, seed=0, **kw):
    return ex.ExperimentConfig(dataset="<memory>", label_column="label",
                               samplers=tuple(ex.SamplerSpec(s) for s in samplers),
                               repetitions=reps, seed=seed, **kw)


def write_ini(path, body):
    path.write_text(body, encoding="utf-8")
    return path


def test_none_on_separable_balanced():
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(0, 1, (100, 3)), rng.normal(6, 1, (100, 3))])
    data = make_data(x, [0] * 100 + [1] * 100)
    manifest, _ = ex.run_experiment(config(["none"], reps=2), data)
    assert manifest["results"][0]["AUC"] >= 0.99


def test_wbc_grid_shape():
    cfg = ex.load_config("configs/wbc.ini")
    cfg = replace(cfg, repetitions=1)
    manifest, timings = ex.run_experiment(cfg)
    rows = manifest["results"]
    assert [r["Approach"] for r in rows] == [ex.APPROACH_NAMES[s] for s in ALL_SAMPLERS]
    assert all(r["n_ok"] == 1 for r in rows)
    assert manifest["splits"][0]["train"] == 455
    assert len(timings["cells"]) == 9
    stem = next(c for c in manifest["cells"] if c["sampler"] == "stem")
    assert stem["class_counts"]["before"] == {"0": 285, "1": 170}
    after = stem["class_counts"]["after"]
    assert after["0"] == after["1"]
    assert [r["stage"] for r in stem["cleaning"]] == ["enn"]


def test_rerun_from_manifest_is_identical(tmp_path):
    data = two_gaussians(300, 0.2, 3, 2.0, seed=4)
    save_csv(data, tmp_path / "d.csv")
    ini = write_ini(tmp_path / "e.ini", "[experiment]\ndataset = d.csv\nsamplers = smote, stem\nrepetitions = 2\n")
    m1, _ = ex.run_experiment(ex.load_config(ini))
    ex.write_run(m1, {}, tmp_path / "run")
    m2, _ = ex.run_experiment(ex.load_config(tmp_path / "run" / "manifest.json"))
    assert ex.dumps_manifest(m1) == ex.dumps_manifest(m2)
    assert emit_report(m1) == emit_report(m2)


def test_thread_count_does_not_change_manifest(monkeypatch):
    data = two_gaussians(300, 0.2, 3, 2.0, seed=4)
    cfg = config(["smote", "adasyn", "mixup"], reps=2)
    monkeypatch.setenv("REBALANCE_THREADS", "1")
    a, _ = ex.run_experiment(cfg, data)
    monkeypatch.setenv("REBALANCE_THREADS", "3")
    b, _ = ex.run_experiment(cfg, data)
    assert ex.dumps_manifest(a) == ex.dumps_manifest(b)


def test_failing_cell_is_isolated():
    rng = np.random.default_rng(2)
    x = rng.integers(0, 3, (120, 3)).astype(float)
    y = (rng.random(120) < 0.3).astype(int)
    nominal = make_data(x, y, nominal=(0, 1, 2))
    manifest, _ = ex.run_experiment(config(["none", "smote_nc"]), nominal)
    cells = {c["sampler"]: c for c in manifest["cells"]}
    assert cells["none"]["status"] == "ok"
    assert cells["smote_nc"]["status"] == "failed" and "AllNominal" in cells["smote_nc"]["error"]
    assert ex.failed(manifest)
    alone, _ = ex.run_experiment(config(["none"]), nominal)
    assert alone["cells"][0] == cells["none"]
    md, _ = emit_report(manifest)
    assert "Failed cells" in md


def test_leakage_guard():
    data = make_data(np.arange(10.0), [0, 1] * 5)
    split = SplitIndices(train=[0, 1, 2, 3, 4, 5, 6, 7], validation=[8], holdout=[9])
    ex.check_leakage(data.subset(split.train), split)
    with pytest.raises(ex.LeakageError):
        ex.check_leakage(data.subset([0, 1, 9]), split)


def test_leakage_guard_provenance():
    from rebalance import samplers
    data = make_data(np.arange(12.0), [0] * 8 + [1] * 4)
    split = SplitIndices(train=list(range(10)), validation=[10], holdout=[11])
    # sampling over all rows lets holdout row 11 act as a source or neighbor
    out = samplers.smote(data, range(12), samplers.SmoteConfig(k=1))
    bad = out.subset([i for i in range(out.n_rows) if out.row_ids[i] not in (10, 11)])
    with pytest.raises(ex.LeakageError):
        ex.check_leakage(bad, split)


def test_every_cell_passes_leakage_guard():
    data = two_gaussians(400, 0.1, 3, 2.0, seed=9)
    manifest, _ = ex.run_experiment(config(ALL_SAMPLERS), data)
    assert not ex.failed(manifest)
    heldout = set(manifest["splits"][0]["holdout_rows"]) | set(manifest["splits"][0]["validation_rows"])
    for c in manifest["cells"]:
        for row_id, algorithm, src, nbr, _ in c["provenance"]:
            if algorithm != "mixup":
                assert src not in heldout and nbr not in heldout


# ---------------------------------------------------------------- config

def test_ini_parsing(tmp_path):
    ini = write_ini(tmp_path / "c.ini", """
[experiment]
dataset = x.csv  # relative to this file
label_column = y
exclude_columns = id, name
fractions = 0.7, 0.15, 0.15
seed = 9
repetitions = 3
samplers = smote, stem
classifiers = knn, lda, extra_trees

[sampler.stem]
alpha = 0.4
pairs_per_class = 10

[classifier.extra_trees]
n_trees = 7
""")
    cfg = ex.load_config(ini)
    assert cfg.dataset == str((tmp_path / "x.csv").resolve())
    assert cfg.exclude_columns == ("id", "name")
    assert cfg.fractions == (0.7, 0.15, 0.15)
    assert cfg.samplers[1].params == {"alpha": 0.4, "pairs_per_class": 10}
    assert cfg.classifiers[2].n_trees == 7
    assert ex.ExperimentConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("body", [
    "[experiment]\ndataset = a.csv\nsamplers = smote\nclassifiers = knn, lda\n",
    "[experiment]\ndataset = a.csv\nsamplers = warp\n",
    "[experiment]\ndataset = a.csv\nsamplers = smote\n[sampler.smote]\nm = 3\n",
    "[experiment]\ndataset = a.csv\nsamplers = smote\n[sampler.smote]\nk = five\n",
    "[experiment]\nsamplers = smote\n",
    "[other]\n",
])
def test_bad_configs(tmp_path, body):
    with pytest.raises(ConfigError):
        ex.load_config(write_ini(tmp_path / "bad.ini", body))


# ---------------------------------------------------------------- report

def one_row_manifest():
    row = {"Approach": "STEM", "Acc": 0.1 + 0.2, "AUC": 1 / 3, "Rec": 0.5, "Pre": 2 / 3, "F1": 0.571428,
           "CL": "LdQE", "sampler": "stem", "n_ok": 1, "n_failed": 0}
    return {"config": {"repetitions": 1}, "cells": [], "results": [row]}


def test_single_row_table():
    md, text = emit_report(one_row_manifest())
    lines = md.splitlines()
    assert lines[0] == "| Approach | Acc | AUC | Rec | Pre | F1 | CL |"
    assert lines[2] == "| STEM | 0.30 | 0.33 | 0.50 | 0.67 | 0.57 | LdQE |"
    assert lines[3] == ""
    assert text.splitlines()[0] == ",".join(TABLE_COLUMNS)
    assert len(text.splitlines()) == 2


def test_csv_round_trip():
    m = one_row_manifest()
    parsed = list(csv.DictReader(io.StringIO(results_csv(m["results"]))))
    row = m["results"][0]
    for col in ("Acc", "AUC", "Rec", "Pre", "F1"):
        assert float(parsed[0][col]) == row[col]
    assert parsed[0]["CL"] == "LdQE"


def test_markdown_marks_failed_rows():
    row = {c: None for c in TABLE_COLUMNS}
    row["Approach"] = "SMOTENC"
    assert "| SMOTENC | failed |" in results_markdown([row])


# ---------------------------------------------------------------- texture datasets

def image_dir(tmp_path, n_per_class, size=(40, 30)):
    d = tmp_path / "imgs"
    d.mkdir()
    lines = ["image_id,label"]
    for i in range(n_per_class):
        write_pgm(flat_image(*size, seed=i), d / f"flat{i:03d}.pgm")
        write_pgm(textured_image(*size, seed=i), d / f"tex{i:03d}.pgm")
        lines += [f"flat{i:03d},normal", f"tex{i:03d},abnormal"]
    labels = tmp_path / "labels.csv"
    labels.write_text("\n".join(lines) + "\n")
    return d, labels


def test_extract_counts(tmp_path):
    d, labels = image_dir(tmp_path, 2)
    assert extract_texture_dataset(d, labels, "F", tmp_path / "f.csv") == 4
    assert extract_texture_dataset(d, labels, "S", tmp_path / "s.csv") == 12
    f = load_csv(tmp_path / "f.csv", "label", exclude_columns=["image_id", "segment"])
    assert f.n_rows == 4 and f.n_features == 52
    s = load_csv(tmp_path / "s.csv", "label", exclude_columns=["image_id", "segment"])
    assert s.n_rows == 12
    with open(tmp_path / "s.csv") as fh:
        header = fh.readline().strip().split(",")
    assert header[:3] == ["image_id", "segment", "f_0_1"] and header[-1] == "label"


def test_extract_missing_label(tmp_path):
    d, labels = image_dir(tmp_path, 1)
    labels.write_text("image_id,label\nflat000,normal\n")
    with pytest.raises(ConfigError):
        extract_texture_dataset(d, labels, "F", tmp_path / "f.csv")


def test_extract_unreadable_image(tmp_path):
    d, labels = image_dir(tmp_path, 1)
    (d / "flat000.pgm").write_bytes(b"P5\n3 3\n255\n\x00")
    with pytest.raises(ImageError):
        extract_texture_dataset(d, labels, "F", tmp_path / "f.csv")


def test_texture_pipeline_separates_classes(tmp_path):
    d, labels = image_dir(tmp_path, 20)
    extract_texture_dataset(d, labels, "F", tmp_path / "f.csv")
    cfg = ex.ExperimentConfig(dataset=str(tmp_path / "f.csv"), label_column="label",
                              exclude_columns=("image_id", "segment"),
                              samplers=(ex.SamplerSpec("none"), ex.SamplerSpec("stem")), repetitions=2)
    manifest, _ = ex.run_experiment(cfg)
    for row in manifest["results"]:
        assert row["AUC"] > 0.9
