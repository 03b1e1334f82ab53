"""Synthetic 2-class-and-up datasets on the unit box, plus CSV round-trips.

Features live in [0, 1]^d as float64; labels are 1-based int64. The
SoftLabeledDataset variant stores teacher probability vectors instead of
hard labels and deduplicates points bit-exactly.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetError


@dataclass
class LabeledDataset:
    features: np.ndarray  # (n, d) float64 in [0, 1]
    labels: np.ndarray  # (n,) int64, 1-based
    n_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise DatasetError("features must be (n, d) and labels (n,)")
        if self.features.shape[0] != self.labels.shape[0]:
            raise DatasetError("features and labels disagree on n")
        if self.features.size and (self.features.min() < 0.0 or self.features.max() > 1.0):
            raise DatasetError("features must lie in [0, 1]")
        if self.labels.size and (self.labels.min() < 1 or self.labels.max() > self.n_classes):
            raise DatasetError(f"labels must be in 1..{self.n_classes}")

    def __len__(self):
        return self.features.shape[0]

    @property
    def feature_dim(self):
        return self.features.shape[1]


@dataclass
class SoftLabeledDataset:
    """Points with teacher probability vectors; duplicate points overwrite."""

    feature_shape: tuple
    n_classes: int
    _points: list = field(default_factory=list)
    _labels: list = field(default_factory=list)
    _index: dict = field(default_factory=dict)  # point bytes -> row

    def add(self, x: np.ndarray, soft_label: np.ndarray) -> bool:
        """Insert or overwrite; returns True when the point was new."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        soft_label = np.asarray(soft_label, dtype=np.float64)
        if x.shape != tuple(self.feature_shape):
            raise DatasetError(f"point shape {x.shape} != {tuple(self.feature_shape)}")
        if soft_label.shape != (self.n_classes,):
            raise DatasetError(f"soft label must have {self.n_classes} entries")
        key = x.tobytes()
        row = self._index.get(key)
        if row is not None:
            self._labels[row] = soft_label.copy()
            return False
        self._index[key] = len(self._points)
        self._points.append(x.copy())
        self._labels.append(soft_label.copy())
        return True

    def __len__(self):
        return len(self._points)

    def __contains__(self, x):
        return np.ascontiguousarray(x, dtype=np.float64).tobytes() in self._index

    @property
    def features(self) -> np.ndarray:
        return np.stack(self._points) if self._points else np.zeros((0,) + tuple(self.feature_shape))

    @property
    def soft_labels(self) -> np.ndarray:
        return np.stack(self._labels) if self._labels else np.zeros((0, self.n_classes))


def gen_gaussian_blobs(n_classes, dim, n_per_class, spread, seed, centers=None):
    """Isotropic Gaussian blob per class, clipped to the unit box.

    Centers default to seeded uniform draws in [0.2, 0.8]^dim; pass an
    (n_classes, dim) array to fix them.
    """
    if n_classes < 2 or dim < 1 or n_per_class < 1 or spread <= 0.0:
        raise DatasetError("need n_classes >= 2, dim >= 1, n_per_class >= 1, spread > 0")
    rng = np.random.default_rng(seed)
    if centers is None:
        centers = rng.uniform(0.2, 0.8, size=(n_classes, dim))
    else:
        centers = np.asarray(centers, dtype=np.float64)
        if centers.shape != (n_classes, dim):
            raise DatasetError(f"centers must be ({n_classes}, {dim})")
    feats, labels = [], []
    for k in range(n_classes):
        pts = centers[k] + spread * rng.standard_normal((n_per_class, dim))
        feats.append(np.clip(pts, 0.0, 1.0))
        labels.append(np.full(n_per_class, k + 1, dtype=np.int64))
    return LabeledDataset(np.concatenate(feats), np.concatenate(labels), n_classes)


def gen_ring_classes(n_classes, n_per_class, seed):
    """Concentric 2-D annuli around (0.5, 0.5), class k strictly inside k+1."""
    if n_classes < 2 or n_per_class < 1:
        raise DatasetError("need n_classes >= 2 and n_per_class >= 1")
    rng = np.random.default_rng(seed)
    band = 0.30 / n_classes
    feats, labels = [], []
    for k in range(n_classes):
        lo = 0.08 + band * k
        hi = lo + 0.8 * band
        r = rng.uniform(lo, hi, n_per_class)
        theta = rng.uniform(0.0, 2.0 * np.pi, n_per_class)
        pts = 0.5 + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        feats.append(np.clip(pts, 0.0, 1.0))
        labels.append(np.full(n_per_class, k + 1, dtype=np.int64))
    return LabeledDataset(np.concatenate(feats), np.concatenate(labels), n_classes)


def split(dataset: LabeledDataset, fractions, seed):
    """Disjoint seeded-shuffle split; fractions must sum to 1."""
    fractions = [float(f) for f in fractions]
    if any(f < 0.0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise DatasetError(f"fractions must be non-negative and sum to 1, got {fractions}")
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    bounds = np.round(np.cumsum(fractions) * n).astype(int)
    parts, start = [], 0
    for stop in bounds:
        idx = order[start:stop]
        parts.append(
            LabeledDataset(dataset.features[idx], dataset.labels[idx], dataset.n_classes)
        )
        start = stop
    return tuple(parts)


def save_csv(dataset: LabeledDataset, path):
    """Header x0..x{d-1},label; features as repr floats (exact round-trip)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(dataset.feature_dim)] + ["label"])
        for row, lab in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab)])


def load_csv(path) -> LabeledDataset:
    """Inverse of save_csv; errors cite the 1-based line number."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    width = len(rows[0])
    if width < 2 or rows[0][-1] != "label":
        raise DatasetError(f"{path}: line 1: expected header x0,..,label")
    feats, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DatasetError(f"{path}: line {lineno}: expected {width} fields, got {len(row)}")
        try:
            vals = [float(v) for v in row[:-1]]
            lab = int(row[-1])
        except ValueError as exc:
            raise DatasetError(f"{path}: line {lineno}: {exc}") from None
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise DatasetError(f"{path}: line {lineno}: feature outside [0, 1]")
        if lab < 1:
            raise DatasetError(f"{path}: line {lineno}: labels are 1-based, got {lab}")
        feats.append(vals)
        labels.append(lab)
    if not feats:
        raise DatasetError(f"{path}: no data rows")
    labels = np.asarray(labels, dtype=np.int64)
    return LabeledDataset(np.asarray(feats), labels, int(labels.max()))
