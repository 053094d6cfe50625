"""CSV loading, label encoding, feature standardization, stratified splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, DimensionMismatchError

ZERO_VARIANCE_STD = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dataset:
    """A feature matrix with encoded class labels.

    features: (N, d) float64, finite values only.
    labels: (N,) integer class indices in 0..K-1; every class occurs.
    class_names: the K original label strings, lexicographically sorted.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        features = _frozen(np.asarray(self.features, dtype=np.float64))
        labels = _frozen(np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise DataError(f"features must be a non-empty 2-D matrix, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise DimensionMismatchError(
                f"labels length {labels.shape} does not match {features.shape[0]} rows"
            )
        if len(self.class_names) < 2:
            raise DataError("fewer than 2 classes")
        if not np.all(np.isfinite(features)):
            raise DataError("features contain NaN or Inf")
        if labels.min() < 0 or labels.max() >= len(self.class_names):
            raise DataError("label index out of range")
        present = np.bincount(labels, minlength=len(self.class_names))
        if np.any(present == 0):
            missing = [self.class_names[k] for k in np.flatnonzero(present == 0)]
            raise DataError(f"classes never occur in the data: {missing}")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def label_strings(self) -> list[str]:
        """Decode labels back to their original strings."""
        return [self.class_names[k] for k in self.labels]


@dataclass(frozen=True)
class ScalerParams:
    """Per-column standardization parameters (population statistics)."""

    means: np.ndarray
    std_devs: np.ndarray

    def __post_init__(self):
        means = _frozen(np.asarray(self.means, dtype=np.float64))
        stds = _frozen(np.asarray(self.std_devs, dtype=np.float64))
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "std_devs", stds)
        if means.ndim != 1 or means.shape != stds.shape:
            raise DimensionMismatchError("means and std_devs must be same-length vectors")
        if np.any(stds <= 0) or not np.all(np.isfinite(stds)) or not np.all(np.isfinite(means)):
            raise DataError("std_devs must be positive and finite")

    @classmethod
    def identity(cls, n_features: int) -> "ScalerParams":
        return cls(np.zeros(n_features), np.ones(n_features))

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.shape[-1] != self.means.shape[0]:
            raise DimensionMismatchError(
                f"data has {features.shape[-1]} columns, scaler expects {self.means.shape[0]}"
            )
        return (features - self.means) / self.std_devs


def encode_labels(raw_labels: list[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Encode label strings as indices of the sorted distinct strings."""
    class_names = tuple(sorted(set(raw_labels)))
    if len(class_names) < 2:
        raise DataError(f"fewer than 2 classes (found {len(class_names)})")
    index = {name: k for k, name in enumerate(class_names)}
    return np.array([index[s] for s in raw_labels], dtype=np.int64), class_names


def _read_rows(path: str | Path, has_header: bool) -> list[list[str]]:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [row for row in rows if row]
    if has_header and rows:
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path} contains no data rows")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"row {i} has {len(row)} cells, expected {width}")
    return rows


def _parse_cell(cell: str, row: int, col: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"cell at row {row}, column {col} is not a number: {cell!r}") from None


def load_csv(path: str | Path, label_column: int | str = "last", has_header: bool = False) -> Dataset:
    """Load a labeled dataset from a CSV file.

    label_column selects the label cell per row: a 0-based index or "last".
    Labels are encoded as indices of the lexicographically sorted distinct
    label strings; row order is preserved.
    """
    rows = _read_rows(path, has_header)
    width = len(rows[0])
    if label_column == "last":
        label_idx = width - 1
    else:
        label_idx = int(label_column)
        if not 0 <= label_idx < width:
            raise DataError(f"label column {label_idx} out of range for {width} columns")
    if width < 2:
        raise DataError("need at least one feature column besides the label")

    raw_labels = [row[label_idx].strip() for row in rows]
    features = np.empty((len(rows), width - 1), dtype=np.float64)
    for i, row in enumerate(rows):
        j = 0
        for c, cell in enumerate(row):
            if c == label_idx:
                continue
            features[i, j] = _parse_cell(cell.strip(), i, c)
            j += 1
    labels, class_names = encode_labels(raw_labels)
    return Dataset(features, labels, class_names)


def load_feature_csv(
    path: str | Path, label_column: int | str | None = None, has_header: bool = False
) -> np.ndarray:
    """Load a feature matrix from CSV; optionally drop a label column."""
    rows = _read_rows(path, has_header)
    width = len(rows[0])
    if label_column is None:
        drop = -1
    elif label_column == "last":
        drop = width - 1
    else:
        drop = int(label_column)
        if not 0 <= drop < width:
            raise DataError(f"label column {drop} out of range for {width} columns")
    n_cols = width - (1 if drop >= 0 else 0)
    if n_cols < 1:
        raise DataError("no feature columns left after dropping the label column")
    features = np.empty((len(rows), n_cols), dtype=np.float64)
    for i, row in enumerate(rows):
        j = 0
        for c, cell in enumerate(row):
            if c == drop:
                continue
            features[i, j] = _parse_cell(cell.strip(), i, c)
            j += 1
    return features


def save_csv(data: Dataset, path: str | Path) -> None:
    """Write a dataset back to CSV with the label in the last column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for x, name in zip(data.features, data.label_strings()):
            writer.writerow([repr(float(v)) for v in x] + [name])


def fit_standardizer(data: Dataset) -> ScalerParams:
    """Per-column mean and population standard deviation.

    Columns with std below 1e-12 get std 1 so they pass through unscaled.
    """
    means = data.features.mean(axis=0)
    stds = data.features.std(axis=0)  # population (1/N) variance
    stds = np.where(stds < ZERO_VARIANCE_STD, 1.0, stds)
    return ScalerParams(means, stds)


def apply_standardizer(data: Dataset, params: ScalerParams) -> Dataset:
    """Return a dataset with standardized features; labels unchanged."""
    return Dataset(params.transform(data.features), data.labels, data.class_names)


def stratified_split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic per-class proportional split into (train, test).

    Per class, the test side gets round(test_fraction * class_count) samples,
    clamped so both sides stay non-empty. Same seed, same split.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    counts = np.bincount(data.labels, minlength=data.n_classes)
    if counts.min() < 2:
        short = data.class_names[int(np.argmin(counts))]
        raise DataError(f"class {short!r} has fewer than 2 samples, cannot split")
    rng = np.random.default_rng(seed)
    test_idx: list[np.ndarray] = []
    train_idx: list[np.ndarray] = []
    for k in range(data.n_classes):
        members = np.flatnonzero(data.labels == k)
        n_test = int(np.floor(test_fraction * members.size + 0.5))
        n_test = min(max(n_test, 1), members.size - 1)
        order = rng.permutation(members.size)
        test_idx.append(members[order[:n_test]])
        train_idx.append(members[order[n_test:]])
    train_rows = np.sort(np.concatenate(train_idx))
    test_rows = np.sort(np.concatenate(test_idx))
    make = lambda rows: Dataset(data.features[rows], data.labels[rows], data.class_names)
    return make(train_rows), make(test_rows)
