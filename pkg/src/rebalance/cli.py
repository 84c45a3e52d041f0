"""Command line entry point: ``rebalance run | extract | report``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .errors import RebalanceError
from .experiment import failed, load_config, run_experiment, write_run
from .extract import extract_texture_dataset
from .report import emit_report
from .texture import TextureConfig

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 2

log = logging.getLogger("rebalance")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rebalance", description="Imbalanced-data rebalancing experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sampler x seed experiment grid")
    run.add_argument("--config", required=True, help="INI experiment file or a previous manifest.json")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--out", help="output directory (default: the config's output_dir)")

    ext = sub.add_parser("extract", help="texture features from a directory of PGM images")
    ext.add_argument("--images", required=True)
    ext.add_argument("--labels", required=True, help="CSV with image_id,label columns")
    ext.add_argument("--mode", required=True, choices=("S", "F"), help="S: per segment, F: whole image")
    ext.add_argument("--out", required=True)
    ext.add_argument("--levels", type=int, default=TextureConfig.levels)
    ext.add_argument("--median-window", type=int, default=TextureConfig.median_window)
    ext.add_argument("--overlap", type=float, default=TextureConfig.overlap_fraction)

    rep = sub.add_parser("report", help="print the results table of a manifest")
    rep.add_argument("--manifest", required=True)
    rep.add_argument("--csv", help="also write the CSV table here")
    return p


def _run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    out = Path(args.out or cfg.output_dir)
    manifest, timings = run_experiment(cfg)
    path = write_run(manifest, timings, out)
    print(emit_report(manifest)[0])
    print(f"manifest: {path}")
    return EXIT_PARTIAL if failed(manifest) else EXIT_OK


def _extract(args) -> int:
    cfg = TextureConfig(levels=args.levels, median_window=args.median_window, overlap_fraction=args.overlap)
    n = extract_texture_dataset(args.images, args.labels, args.mode, args.out, cfg)
    print(f"wrote {n} rows to {args.out}")
    return EXIT_OK


def _report(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    md, csv_text = emit_report(manifest)
    print(md)
    if args.csv:
        Path(args.csv).write_text(csv_text, encoding="utf-8")
    return EXIT_PARTIAL if failed(manifest) else EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    handler = {"run": _run, "extract": _extract, "report": _report}[args.command]
    try:
        return handler(args)
    except (RebalanceError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"rebalance: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
