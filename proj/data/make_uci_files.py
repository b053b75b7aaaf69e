#!/usr/bin/env python3
"""Writes iris.data, wine.data and wdbc.data in the UCI repository layouts.

The rows come from the copies bundled with scikit-learn (same row order as
the UCI originals). The scikit-learn breast cancer copy drops the patient
id column, so wdbc.data carries a running id starting at 1.
"""
import csv
import os

import sklearn

SRC = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data")
OUT = os.path.dirname(os.path.abspath(__file__))


def rows(name):
    with open(os.path.join(SRC, name), newline="") as f:
        reader = csv.reader(f)
        next(reader)
        return [r for r in reader if r]


def main():
    iris_names = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]
    with open(os.path.join(OUT, "iris.data"), "w") as f:
        for r in rows("iris.csv"):
            f.write(",".join(r[:4] + [iris_names[int(r[4])]]) + "\n")

    with open(os.path.join(OUT, "wine.data"), "w") as f:
        for r in rows("wine_data.csv"):
            f.write(",".join([str(int(r[13]) + 1)] + r[:13]) + "\n")

    # scikit-learn target: 0 = malignant, 1 = benign
    with open(os.path.join(OUT, "wdbc.data"), "w") as f:
        for i, r in enumerate(rows("breast_cancer.csv"), start=1):
            diag = "M" if r[30] == "0" else "B"
            f.write(",".join([str(i), diag] + r[:30]) + "\n")


if __name__ == "__main__":
    main()
