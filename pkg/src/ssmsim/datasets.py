"""Synthetic datasets and the CSV dataset format.

CSV layout: header ``v0,...,v{N-1}`` with an optional trailing ``label``
column, then one example per row.
"""
import csv
import itertools

import numpy as np

from ._validation import check_count, check_unit_interval
from .exceptions import ParameterError


def bars_and_stripes(side=4, n_samples=0, seed=0):
    """Binary ``side x side`` images made of full rows (label 0) or full columns (label 1).

    With ``n_samples=0`` every distinct pattern is listed once; the blank and
    the full image, which are both bars and stripes, appear once with label 0.
    Otherwise ``n_samples`` patterns are drawn at random.
    """
    side = check_count(side, "side")
    if n_samples:
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, 2, size=n_samples)
        on = rng.integers(0, 2, size=(n_samples, side)).astype(bool)
        X = np.zeros((n_samples, side, side))
        for k in range(n_samples):
            if labels[k] == 0:
                X[k, on[k], :] = 1.0
            else:
                X[k, :, on[k]] = 1.0
        return X.reshape(n_samples, -1), labels

    rows, labels, seen = [], [], set()
    for label in (0, 1):
        for on in itertools.product((0, 1), repeat=side):
            img = np.zeros((side, side))
            if label == 0:
                img[np.array(on, dtype=bool), :] = 1.0
            else:
                img[:, np.array(on, dtype=bool)] = 1.0
            key = img.tobytes()
            if key in seen:
                continue
            seen.add(key)
            rows.append(img.ravel())
            labels.append(label)
    return np.array(rows), np.array(labels)


def two_class_blobs(n_samples=200, n_features=16, separation=4.0, sigma=0.1, seed=0):
    """Two isotropic Gaussian clusters clipped to [0, 1].

    The class centers sit ``separation * sigma`` apart along every axis,
    symmetric about 0.5, with a seeded random sign per axis.
    """
    rng = np.random.default_rng(seed)
    direction = rng.choice([-1.0, 1.0], size=n_features)
    half = 0.5 * separation * sigma * direction
    labels = rng.integers(0, 2, size=n_samples)
    centers = np.where(labels[:, None] == 0, 0.5 - half, 0.5 + half)
    X = np.clip(centers + sigma * rng.standard_normal((n_samples, n_features)), 0.0, 1.0)
    return X, labels


def write_csv(path, X, labels=None):
    X = np.asarray(X, dtype=np.float64)
    n_cols = X.shape[1] if X.ndim == 2 else 0
    header = [f"v{i}" for i in range(n_cols)]
    if labels is not None:
        header.append("label")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k, row in enumerate(X):
            out = [format(float(x), ".17g") for x in row]
            if labels is not None:
                out.append(str(int(labels[k])))
            w.writerow(out)


def read_csv(path):
    """Read a dataset file; returns ``(X, labels_or_None)``.

    Raises ``RangeError`` naming the offending cell if a value is outside [0, 1].
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParameterError(f"{path}: missing header line")
        body = [r for r in reader if r]
    has_label = bool(header) and header[-1] == "label"
    n_cols = len(header) - int(has_label)
    X = np.array([[float(x) for x in r[:n_cols]] for r in body], dtype=np.float64).reshape(-1, n_cols)
    labels = np.array([int(r[n_cols]) for r in body], dtype=int) if has_label else None
    check_unit_interval(X, "dataset")
    return X, labels
