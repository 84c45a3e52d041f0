"""Results tables (Approach, Acc, AUC, Rec, Pre, F1, CL) and ROC point lists for plotting."""

from __future__ import annotations

import csv
import io

TABLE_COLUMNS = ("Approach", "Acc", "AUC", "Rec", "Pre", "F1", "CL")

FOOTER = (
    "CL lists the three ensemble members by initial "
    "(Ld = LDA, Q = QDA, E = extra trees, A = AdaBoost, K = k-NN, Lr = logistic regression); "
    "it names this classifier zoo's most frequent winning trio across repetitions."
)


def _cell(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def results_csv(rows: list[dict]) -> str:
    """Full-precision CSV; ``float(text)`` recovers each manifest value exactly."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in TABLE_COLUMNS])
    return buf.getvalue()


def results_markdown(rows: list[dict], digits: int = 2) -> str:
    lines = ["| " + " | ".join(TABLE_COLUMNS) + " |", "|" + "---|" * len(TABLE_COLUMNS)]
    for row in rows:
        cells = []
        for c in TABLE_COLUMNS:
            v = row.get(c)
            if v is None:
                cells.append("failed")
            elif isinstance(v, float):
                cells.append(f"{v:.{digits}f}")
            else:
                cells.append(str(v))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def emit_report(manifest: dict) -> tuple[str, str]:
    """Return ``(markdown, csv)`` for a completed manifest."""
    rows = manifest["results"]
    reps = manifest["config"]["repetitions"]
    md = [results_markdown(rows), "", f"Metrics are means over {reps} repetition(s) on the holdout partition.", "",
          FOOTER, ""]
    failures = [c for c in manifest["cells"] if c["status"] != "ok"]
    if failures:
        md.append("Failed cells:")
        md.append("")
        for c in failures:
            md.append(f"- {c['approach']} repetition {c['repetition']}: {c['error']}")
        md.append("")
    return "\n".join(md), results_csv(rows)


def roc_csv(manifest: dict) -> str:
    """One line per ROC point: approach, repetition, fpr, tpr."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("approach", "repetition", "fpr", "tpr"))
    for c in manifest["cells"]:
        if c["status"] != "ok":
            continue
        for fpr, tpr in c["holdout"]["roc"]:
            writer.writerow((c["approach"], c["repetition"], repr(fpr), repr(tpr)))
    return buf.getvalue()
