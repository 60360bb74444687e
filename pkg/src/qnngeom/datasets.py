"""Datasets, priors and label randomisation.

The two-class iris table ships inside the package, checksum-pinned.  Blob
data reproduces the two-isotropic-clusters generator with fixed centers at
+-1.5 along the first axis.  Feature normalization maps each column onto
[-1, 1] and keeps the (min, max) record so it can be inverted and saved
alongside exported CSVs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _iris
from .errors import ValidationError
from .rng import RngStream

BLOB_CENTER_OFFSET = 1.5


@dataclass
class Dataset:
    features: np.ndarray  # (n, s_in)
    labels: np.ndarray  # (n,) ints in [0, n_classes)
    n_classes: int = 2
    normalization: np.ndarray | None = None  # (2, s_in): per-feature min, max

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ValidationError("features must be (n, s_in) with n labels")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("features contain missing or non-finite values")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValidationError(f"labels must lie in [0, {self.n_classes})")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def copy(self) -> "Dataset":
        norm = None if self.normalization is None else self.normalization.copy()
        return Dataset(self.features.copy(), self.labels.copy(), self.n_classes, norm)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.features.tobytes())
        h.update(self.labels.tobytes())
        return h.hexdigest()


def load_iris_binary() -> Dataset:
    """The embedded 100-sample, 4-feature, two-class iris table."""
    if hashlib.sha256(_iris.CSV.encode()).hexdigest() != _iris.SHA256:
        raise ValidationError("embedded iris table failed its checksum: corrupted build")
    rows = [line.split(",") for line in _iris.CSV.strip().splitlines()]
    features = np.array([[float(v) for v in r[:4]] for r in rows])
    labels = np.array([int(r[4]) for r in rows])
    return Dataset(features, labels, n_classes=2)


def make_blobs(n: int, s_in: int, spread: float = 1.0, rng: RngStream | None = None) -> Dataset:
    """Two isotropic Gaussian clusters with near-equal class counts.

    Cluster centers sit at -+1.5 on the first axis and 0 elsewhere; labels
    follow the generating cluster.
    """
    if n < 2:
        raise ValidationError("need n >= 2 blob samples")
    if s_in < 1:
        raise ValidationError("need s_in >= 1")
    if rng is None:
        rng = RngStream(0)
    n0 = n - n // 2
    centers = np.zeros((2, s_in))
    centers[0, 0] = -BLOB_CENTER_OFFSET
    centers[1, 0] = BLOB_CENTER_OFFSET
    noise = rng.standard_normal((n, s_in)) * spread
    labels = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n - n0, dtype=np.int64)])
    features = centers[labels] + noise
    return Dataset(features, labels, n_classes=2)


def randomise_labels(dataset: Dataset, fraction: float, rng: RngStream) -> Dataset:
    """Resample floor(fraction * n) labels uniformly over the classes.

    Chosen indices are drawn without replacement; a resampled label may
    coincide with the original one.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValidationError(f"fraction must lie in [0, 1], got {fraction}")
    out = dataset.copy()
    m = int(fraction * dataset.n_samples)
    if m == 0:
        return out
    gen = rng.generator()
    idx = gen.choice(dataset.n_samples, size=m, replace=False)
    out.labels[idx] = gen.integers(0, dataset.n_classes, size=m)
    return out


def gaussian_prior_sample(rng: RngStream, k: int, s_in: int) -> np.ndarray:
    """k i.i.d. standard-normal input vectors."""
    return rng.standard_normal((k, s_in))


# ---------------------------------------------------------------------------
# normalization

def normalize_features(dataset: Dataset) -> Dataset:
    """Min-max map of every feature onto [-1, 1], recording (min, max)."""
    lo = dataset.features.min(axis=0)
    hi = dataset.features.max(axis=0)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = 2.0 * (dataset.features - lo) / safe - 1.0
    scaled[:, span == 0] = 0.0
    return Dataset(scaled, dataset.labels.copy(), dataset.n_classes,
                   normalization=np.stack([lo, hi]))


def denormalize_features(dataset: Dataset) -> Dataset:
    if dataset.normalization is None:
        raise ValidationError("dataset carries no normalization record")
    lo, hi = dataset.normalization
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    raw = (dataset.features + 1.0) / 2.0 * safe + lo
    raw[:, span == 0] = lo[span == 0]
    return Dataset(raw, dataset.labels.copy(), dataset.n_classes)


# ---------------------------------------------------------------------------
# CSV import/export with a normalization sidecar

def save_dataset(dataset: Dataset, path):
    path = Path(path)
    header = ",".join(f"x{i}" for i in range(dataset.n_features)) + ",label"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row, label in zip(dataset.features, dataset.labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{label}\n")
    if dataset.normalization is not None:
        sidecar = {
            "min": [float(v) for v in dataset.normalization[0]],
            "max": [float(v) for v in dataset.normalization[1]],
        }
        with open(path.with_suffix(path.suffix + ".norm.json"), "w") as fh:
            json.dump(sidecar, fh, sort_keys=True)
            fh.write("\n")


def load_dataset(path, n_classes: int = 2) -> Dataset:
    path = Path(path)
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or not lines[0].startswith("x0"):
        raise ValidationError(f"{path} is not a dataset CSV (missing header row)")
    features = []
    labels = []
    for line in lines[1:]:
        parts = line.split(",")
        features.append([float(v) for v in parts[:-1]])
        labels.append(int(parts[-1]))
    normalization = None
    sidecar = path.with_suffix(path.suffix + ".norm.json")
    if sidecar.exists():
        with open(sidecar) as fh:
            record = json.load(fh)
        normalization = np.array([record["min"], record["max"]])
    return Dataset(np.array(features), np.array(labels), n_classes, normalization)
