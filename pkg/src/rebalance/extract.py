"""Turn a directory of labeled PGM images into a texture-feature CSV."""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import ConfigError, ImageError
from .texture import SEGMENTS, TextureConfig, feature_names, image_features, read_pgm

MODES = {"F": ("whole",), "S": SEGMENTS[1:]}


def read_labels(path) -> dict[str, str]:
    """Labels file: CSV with ``image_id`` and ``label`` columns (image_id is the file stem)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"image_id", "label"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: labels file needs image_id and label columns")
        labels = {}
        for row in reader:
            key = row["image_id"].strip()
            if key in labels:
                raise ConfigError(f"{path}: duplicate image_id {key!r}")
            labels[key] = row["label"].strip()
    return labels


def extract_texture_dataset(image_dir, labels_file, mode: str, out, cfg: TextureConfig = TextureConfig()) -> int:
    """Write one CSV row per image (mode ``F``) or per segment (mode ``S``).

    Returns the number of rows written. Columns are ``image_id, segment``,
    the 52 texture features, then ``label``, so the table loads with
    ``load_csv(out, "label", exclude_columns=("image_id", "segment"))``.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be S or F, got {mode!r}")
    labels = read_labels(labels_file)
    images = sorted(Path(image_dir).glob("*.pgm"))
    if not images:
        raise ImageError(f"no .pgm images in {image_dir}")
    missing = [p.stem for p in images if p.stem not in labels]
    if missing:
        raise ConfigError(f"no label for image(s) {missing[:5]}")
    names = feature_names()
    n = 0
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "segment", *names, "label"])
        for path in images:
            try:
                feats = image_features(read_pgm(path), cfg)
            except (OSError, ImageError) as exc:
                raise ImageError(f"{path.name}: {exc}") from exc
            for seg in MODES[mode]:
                writer.writerow([path.stem, seg, *(repr(float(v)) for v in feats[seg]), labels[path.stem]])
                n += 1
    return n
