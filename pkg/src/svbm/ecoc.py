"""One-vs-one output-code wrapper turning binary SVMs into a multiclass learner.

Decoding is hinge-loss based: the predicted class minimizes the summed hinge
loss of its code row against the binary decision values, with zero code
entries contributing nothing. Pairwise subproblems whose weight mass has
collapsed are recorded as None columns and drop out of the loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DegenerateProblemError, DimensionMismatchError, TrainingError
from .svm import BinarySvmModel, SvmConfig, decision_values, train_weighted_svm

ONE_VS_ONE = "one-vs-one"


@dataclass(frozen=True)
class CodeMatrix:
    """K x L code over {-1, 0, +1}; column l defines binary subproblem l."""

    entries: np.ndarray
    scheme: str = ONE_VS_ONE

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.int8)
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2 or entries.shape[0] < 2 or entries.shape[1] < 1:
            raise ValueError(f"code matrix must be K x L with K >= 2, got {entries.shape}")
        if not np.all(np.isin(entries, (-1, 0, 1))):
            raise ValueError("code entries must be -1, 0, or +1")
        if len({tuple(row) for row in entries.tolist()}) != entries.shape[0]:
            raise ValueError("code rows must be pairwise distinct")
        if np.any((entries == 1).sum(axis=0) == 0) or np.any((entries == -1).sum(axis=0) == 0):
            raise ValueError("every column needs at least one +1 and one -1")

    @property
    def num_classes(self) -> int:
        return self.entries.shape[0]

    @property
    def num_columns(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class EcocModel:
    """A code matrix plus one trained binary SVM per column (None = skipped)."""

    code: CodeMatrix
    learners: tuple[BinarySvmModel | None, ...]

    def __post_init__(self):
        object.__setattr__(self, "learners", tuple(self.learners))
        if len(self.learners) != self.code.num_columns:
            raise DimensionMismatchError("one learner per code column required")

    @property
    def num_classes(self) -> int:
        return self.code.num_classes


def build_codebook(num_classes: int, scheme: str = ONE_VS_ONE) -> CodeMatrix:
    """One-vs-one codebook: column order is (0 vs 1), (0 vs 2), ..., (K-2 vs K-1)."""
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if scheme != ONE_VS_ONE:
        raise ValueError(f"unknown coding scheme {scheme!r}")
    pairs = [(i, j) for i in range(num_classes) for j in range(i + 1, num_classes)]
    entries = np.zeros((num_classes, len(pairs)), dtype=np.int8)
    for col, (i, j) in enumerate(pairs):
        entries[i, col] = 1
        entries[j, col] = -1
    return CodeMatrix(entries, scheme)


def train_ecoc(data: Dataset, sample_weights: np.ndarray, config: SvmConfig) -> EcocModel:
    """Train one weighted binary SVM per code column.

    Per column, only rows whose class has a non-zero code entry take part;
    their weights are renormalized so the cost scaling stays calibrated.
    Columns whose weight mass is degenerate come back as None. If every
    column degenerates, nothing was learned and TrainingError is raised.
    """
    w = np.asarray(sample_weights, dtype=np.float64)
    if w.shape != (data.n_samples,):
        raise DimensionMismatchError("sample_weights must align with dataset rows")
    code = build_codebook(data.n_classes)
    learners: list[BinarySvmModel | None] = []
    for col in range(code.num_columns):
        signs = code.entries[:, col]
        row_signs = signs[data.labels]
        mask = row_signs != 0
        binary_labels = row_signs[mask].astype(np.float64)
        if np.unique(binary_labels).size < 2:
            learners.append(None)
            continue
        w_col = w[mask]
        total = w_col.sum()
        if total <= 0.0:
            learners.append(None)
            continue
        try:
            model = train_weighted_svm(data.features[mask], binary_labels, w_col / total, config)
        except DegenerateProblemError:
            learners.append(None)
            continue
        learners.append(model)
    if all(m is None for m in learners):
        raise TrainingError("every pairwise subproblem was degenerate; no learner trained")
    return EcocModel(code, tuple(learners))


def ecoc_decision_matrix(model: EcocModel, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Binary decision values per (row, column) and the active-column mask."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    values = np.zeros((pts.shape[0], model.code.num_columns))
    active = np.zeros(model.code.num_columns, dtype=bool)
    for col, learner in enumerate(model.learners):
        if learner is None:
            continue
        values[:, col] = decision_values(learner, pts)
        active[col] = True
    return values, active


def predict_ecoc_batch(model: EcocModel, points: np.ndarray) -> np.ndarray:
    """Predicted class index per row: argmin of the per-row code losses."""
    values, active = ecoc_decision_matrix(model, points)
    entries = model.code.entries.astype(np.float64)
    # hinge loss of each class row against each column, zero entries masked out
    margins = entries[None, :, :] * values[:, None, :]
    hinge = np.maximum(0.0, 1.0 - margins)
    mask = (entries != 0.0)[None, :, :] & active[None, None, :]
    losses = np.where(mask, hinge, 0.0).sum(axis=2)
    return losses.argmin(axis=1)


def predict_ecoc(model: EcocModel, x: np.ndarray) -> int:
    """Predicted class index for one point; loss ties break to the lowest class."""
    x = np.asarray(x, dtype=np.float64).ravel()
    return int(predict_ecoc_batch(model, x)[0])
