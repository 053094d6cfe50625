"""Accuracy, confusion matrices, and CSV export of per-round training traces."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boosting import TrainingTrace
from .errors import DimensionMismatchError

TRACE_SCALARS_NAME = "trace_scalars.csv"
TRACE_WEIGHTS_NAME = "trace_weights.csv"
WEIGHT_HIST_BINS = 20


def _fmt(value: float) -> str:
    """Reals in exported CSVs carry 9 significant digits."""
    return f"{value:.9g}"


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i][j] = number of samples with truth i predicted as j."""

    counts: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        k = len(self.class_names)
        if counts.shape != (k, k):
            raise DimensionMismatchError(f"counts must be {k}x{k}, got {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total)


def accuracy(predictions: np.ndarray, truths: np.ndarray) -> float:
    """Fraction of positions where predictions equal truths."""
    p = np.asarray(predictions)
    t = np.asarray(truths)
    if p.shape != t.shape:
        raise DimensionMismatchError("predictions and truths must align")
    if p.size == 0:
        raise ValueError("cannot compute accuracy of an empty sequence")
    return float((p == t).mean())


def confusion(
    predictions: np.ndarray,
    truths: np.ndarray,
    num_classes: int,
    class_names: tuple[str, ...] | None = None,
) -> ConfusionMatrix:
    """Count truth/prediction pairs into a num_classes x num_classes matrix."""
    p = np.asarray(predictions, dtype=np.int64)
    t = np.asarray(truths, dtype=np.int64)
    if p.shape != t.shape:
        raise DimensionMismatchError("predictions and truths must align")
    if p.size == 0:
        raise ValueError("cannot build a confusion matrix from an empty sequence")
    for name, arr in (("prediction", p), ("truth", t)):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise ValueError(f"{name} label outside 0..{num_classes - 1}")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    if class_names is None:
        class_names = tuple(str(k) for k in range(num_classes))
    return ConfusionMatrix(counts, class_names)


def export_trace(trace: TrainingTrace, directory: str | Path) -> tuple[Path, Path]:
    """Write per-round scalars and weight histograms as CSV files.

    trace_scalars.csv: round,error,alpha,beta,staged_accuracy
    trace_weights.csv: round,bin_low,bin_high,count with 20 equal-width bins
    spanning [0, max weight] of each round.
    """
    if not trace.rounds:
        raise ValueError("cannot export an empty trace")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    scalars_path = directory / TRACE_SCALARS_NAME
    weights_path = directory / TRACE_WEIGHTS_NAME

    lines = ["round,error,alpha,beta,staged_accuracy"]
    for r in trace.rounds:
        lines.append(
            f"{r.round},{_fmt(r.error)},{_fmt(r.alpha)},{_fmt(r.beta)},"
            f"{_fmt(r.train_accuracy_staged)}"
        )
    scalars_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["round,bin_low,bin_high,count"]
    for r in trace.rounds:
        top = float(r.weights_after.max())
        counts, edges = np.histogram(r.weights_after, bins=WEIGHT_HIST_BINS, range=(0.0, top))
        for b in range(WEIGHT_HIST_BINS):
            lines.append(f"{r.round},{_fmt(edges[b])},{_fmt(edges[b + 1])},{counts[b]}")
    weights_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return scalars_path, weights_path


def read_trace_scalars(path: str | Path) -> list[dict]:
    """Parse a trace_scalars.csv back into per-round dicts."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [
            {
                "round": int(row["round"]),
                "error": float(row["error"]),
                "alpha": float(row["alpha"]),
                "beta": float(row["beta"]),
                "staged_accuracy": float(row["staged_accuracy"]),
            }
            for row in reader
        ]


def write_confusion_csv(matrix: ConfusionMatrix, path: str | Path) -> None:
    """Confusion matrix as CSV: header row of class names, one row per truth."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["truth\\prediction", *matrix.class_names])
        for name, row in zip(matrix.class_names, matrix.counts):
            writer.writerow([name, *(int(v) for v in row)])
