"""Export the Wisconsin diagnostic breast cancer table bundled with scikit-learn to CSV.

Writes ``data/wbc.csv`` with a ``diagnosis`` column (M = malignant, B = benign)
followed by the 30 numeric features. scikit-learn is needed only for this script.
"""

import csv
import sys
from pathlib import Path

from sklearn.datasets import load_breast_cancer


def main(out: str = "data/wbc.csv") -> None:
    bunch = load_breast_cancer()
    names = [n.replace(" ", "_") for n in bunch.feature_names]
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "diagnosis", *names])
        for i, (row, target) in enumerate(zip(bunch.data, bunch.target)):
            # scikit-learn codes malignant as 0
            writer.writerow([i, "M" if target == 0 else "B", *(repr(float(v)) for v in row)])


if __name__ == "__main__":
    main(*sys.argv[1:])
