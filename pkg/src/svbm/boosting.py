"""Boosting loop: structured subsampling, SVM/ECOC weak learners, classifier
weights from the clamped weighted error, residual-blended sample-weight
updates, and an adaptive history coefficient beta.

Sample weights are plain float arrays that sum to one. A round trains on a
deterministic weight-stratified subsample, but its error is always measured
on the full training set, which is what lets unsampled points gain weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, ScalerParams
from .ecoc import EcocModel, predict_ecoc_batch, train_ecoc
from .errors import (
    DegenerateProblemError,
    DimensionMismatchError,
    NotFittedError,
    TrainingError,
)
from .svm import SvmConfig

ERROR_FLOOR = 1e-10   # keeps the classifier weight finite when the error is 0
ERROR_CEILING = 0.4999  # keeps the classifier weight positive


@dataclass(frozen=True)
class SvbmConfig:
    """Training configuration for the boosted ensemble."""

    n_classifiers: int = 10
    sample_ratio: float = 0.5
    beta0: float = 0.5
    residual_enabled: bool = True
    svm: SvmConfig = field(default_factory=SvmConfig)
    seed: int = 42

    def __post_init__(self):
        if self.n_classifiers < 1:
            raise ValueError(f"n_classifiers must be >= 1, got {self.n_classifiers}")
        if not 0.0 < self.sample_ratio <= 1.0:
            raise ValueError(f"sample_ratio must be in (0, 1], got {self.sample_ratio}")
        if not 0.0 <= self.beta0 <= 1.0:
            raise ValueError(f"beta0 must be in [0, 1], got {self.beta0}")


@dataclass(frozen=True)
class RoundRecord:
    """Diagnostics of one successful boosting round."""

    round: int
    error: float       # weighted error, clamped to [ERROR_FLOOR, ERROR_CEILING]
    alpha: float
    beta: float        # value after this round's adjustment (0 when residual is off)
    subsample_indices: np.ndarray
    train_accuracy_staged: float
    weights_after: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.subsample_indices, dtype=np.int64)
        w = np.asarray(self.weights_after, dtype=np.float64)
        idx.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "subsample_indices", idx)
        object.__setattr__(self, "weights_after", w)


@dataclass(frozen=True)
class SkippedRound:
    """A round whose weak learner could not be trained."""

    round: int
    reason: str


@dataclass(frozen=True)
class TrainingTrace:
    rounds: tuple[RoundRecord, ...]
    skipped: tuple[SkippedRound, ...] = ()


@dataclass(frozen=True)
class SvbmEnsemble:
    """Trained weak learners with their vote weights and the input scaler."""

    learners: tuple[EcocModel, ...]
    alphas: np.ndarray
    config: SvbmConfig
    scaler: ScalerParams
    class_names: tuple[str, ...]

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=np.float64)
        alphas.flags.writeable = False
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "learners", tuple(self.learners))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if len(self.learners) == 0:
            raise NotFittedError("ensemble has no learners")
        if alphas.shape != (len(self.learners),):
            raise DimensionMismatchError("alphas must align with learners")
        if not np.all(np.isfinite(alphas)) or np.any(alphas <= 0.0):
            raise ValueError("classifier weights must be finite and positive")

    @property
    def n_classes(self) -> int:
        return self.learners[0].num_classes


def init_weights(n: int) -> np.ndarray:
    """Uniform starting weights: all ones, normalized to sum 1."""
    if n < 1:
        raise ValueError("need at least one sample")
    return np.full(n, 1.0 / n)


def check_weight_vector(weights: np.ndarray, normalized: bool = True, atol: float = 1e-9) -> np.ndarray:
    """Validate the weight-vector contract; returns the array for chaining."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise ValueError("weights must be finite and non-negative")
    if normalized and abs(w.sum() - 1.0) > atol:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w


def clamp_error(error: float) -> float:
    """Clamp a weighted error into [ERROR_FLOOR, ERROR_CEILING]."""
    if math.isnan(error):
        raise ValueError("error is NaN")
    return min(max(error, ERROR_FLOOR), ERROR_CEILING)


def structured_subsample(
    weights: np.ndarray,
    ratio: float,
    labels: np.ndarray,
    seed: int,
    round_index: int,
) -> np.ndarray:
    """Deterministic weight-stratified subsample of max(2, ceil(ratio*N)) rows.

    Rows are sorted by weight (descending, ties by index), split into that
    many near-equal contiguous strata, and the head of each stratum is taken.
    If the picks miss a class, the lowest-weight picks are swapped for the
    highest-weight unpicked rows of each missing class. seed and round_index
    are reserved for a randomized variant and do not affect this rule.
    """
    del seed, round_index
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    w = np.asarray(weights, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if w.shape != y.shape:
        raise DimensionMismatchError("weights and labels must align")
    n = w.size
    num_classes = int(y.max()) + 1
    # the 1e-9 guards against float artifacts like 0.1 * 30 = 3.0000000000000004;
    # the floor of num_classes keeps the class repair below feasible
    m = int(math.ceil(ratio * n - 1e-9))
    m = min(n, max(2, m, num_classes))

    order = np.argsort(-w, kind="stable")  # weight desc, index asc on ties
    heads = (np.arange(m) * n) // m
    selected = list(order[heads])

    counts = np.bincount(y[selected], minlength=num_classes)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        chosen = set(int(i) for i in selected)
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(n)
        for k in missing:
            candidate = next((int(i) for i in order if y[i] == k and int(i) not in chosen), None)
            if candidate is None:
                continue  # class absent from the data itself; nothing to repair with
            by_rank = sorted(selected, key=lambda i: rank[i])
            victim = next(
                (int(i) for i in reversed(by_rank) if counts[y[i]] > 1),
                None,
            )
            if victim is None:
                continue
            selected.remove(victim)
            selected.append(candidate)
            chosen.discard(victim)
            chosen.add(candidate)
            counts[y[victim]] -= 1
            counts[k] += 1
    return np.sort(np.asarray(selected, dtype=np.int64))


def compute_weighted_error(
    weights: np.ndarray, predictions: np.ndarray, truths: np.ndarray
) -> float:
    """Weight mass of the misclassified samples over the total weight mass."""
    w = np.asarray(weights, dtype=np.float64)
    p = np.asarray(predictions)
    t = np.asarray(truths)
    if not (w.shape == p.shape == t.shape):
        raise DimensionMismatchError("weights, predictions, and truths must align")
    return float(w[p != t].sum() / w.sum())


def classifier_weight(error: float) -> float:
    """Vote weight 0.5 * ln((1 - e) / e) of a learner with clamped error e."""
    if math.isnan(error):
        raise ValueError("error is NaN")
    if not 0.0 <= error <= 1.0:
        raise ValueError(f"error must be in [0, 1], got {error}")
    e = clamp_error(error)
    return 0.5 * math.log((1.0 - e) / e)


def update_weights(
    weights: np.ndarray,
    alpha: float,
    predictions: np.ndarray,
    truths: np.ndarray,
    learning_rate: float = 1.0,
) -> np.ndarray:
    """Scale correct samples by exp(-alpha) and mistakes by exp(+alpha).

    The result is intentionally unnormalized. learning_rate multiplies the
    exponent and defaults to 1.
    """
    w = np.asarray(weights, dtype=np.float64)
    p = np.asarray(predictions)
    t = np.asarray(truths)
    if not (w.shape == p.shape == t.shape):
        raise DimensionMismatchError("weights, predictions, and truths must align")
    if not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha}")
    signs = 2.0 * (p == t) - 1.0
    return w * np.exp(-alpha * learning_rate * signs)


def apply_residual(weights: np.ndarray, prev_weights: np.ndarray, beta: float) -> np.ndarray:
    """Blend in the previous round's weights: (w + beta * prev) / (1 + beta)."""
    w = np.asarray(weights, dtype=np.float64)
    prev = np.asarray(prev_weights, dtype=np.float64)
    if w.shape != prev.shape:
        raise DimensionMismatchError("weights and prev_weights must align")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    return (w + beta * prev) / (1.0 + beta)


def normalize_weights(weights: np.ndarray) -> np.ndarray:
    """Divide by the sum so the weights form a distribution."""
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if not math.isfinite(total) or total <= 0.0:
        raise ValueError(f"weight sum must be positive and finite, got {total!r}")
    return w / total


def adjust_beta(beta: float, t: int, n_classifiers: int, acc_t: float, acc_prev: float) -> float:
    """Per-round update of the history coefficient.

    A drop in staged accuracy nudges beta up by factor 1.05, an improvement
    shrinks it by 0.95; both are damped by (1 - t / (2T)) and clipped into
    [0, 1]. Late in training even the "up" branch can decrease beta; the
    formula is applied exactly as defined.
    """
    if not 1 <= t <= n_classifiers:
        raise ValueError(f"round {t} outside 1..{n_classifiers}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    decay = 1.0 - t / (2.0 * n_classifiers)
    if acc_t < acc_prev:
        return min(1.0, beta * 1.05 * decay)
    return max(0.0, beta * 0.95 * decay)


def staged_train_accuracy(
    learners: tuple[EcocModel, ...],
    alphas: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
) -> float:
    """Accuracy of the weighted vote of the given learners on (features, labels)."""
    if len(learners) == 0:
        raise NotFittedError("no learners to evaluate")
    X = np.asarray(features, dtype=np.float64)
    votes = np.zeros((X.shape[0], learners[0].num_classes))
    for alpha, learner in zip(alphas, learners):
        votes[np.arange(X.shape[0]), predict_ecoc_batch(learner, X)] += alpha
    return float((votes.argmax(axis=1) == np.asarray(labels)).mean())


def fit(
    train: Dataset, config: SvbmConfig, scaler: ScalerParams | None = None
) -> tuple[SvbmEnsemble, TrainingTrace]:
    """Train the boosted ensemble on an (already preprocessed) dataset.

    The optional scaler is stored on the ensemble and applied to prediction
    inputs; pass the one used to standardize `train`, or None when training
    on raw features. Rounds whose weak learner cannot be trained are logged
    in the trace and skipped; they still consume one of the T attempts.
    """
    if scaler is None:
        scaler = ScalerParams.identity(train.n_features)
    if scaler.means.shape[0] != train.n_features:
        raise DimensionMismatchError("scaler dimension does not match the data")
    X, y = train.features, train.labels
    n = train.n_samples
    weights = init_weights(n)
    beta = config.beta0 if config.residual_enabled else 0.0
    votes = np.zeros((n, train.n_classes))
    row_ids = np.arange(n)
    acc_prev = 0.0
    learners: list[EcocModel] = []
    alphas: list[float] = []
    rounds: list[RoundRecord] = []
    skipped: list[SkippedRound] = []
    for t in range(1, config.n_classifiers + 1):
        idx = structured_subsample(weights, config.sample_ratio, y, config.seed, t)
        subset = Dataset(X[idx], y[idx], train.class_names)
        sub_weights = normalize_weights(weights[idx])
        try:
            learner = train_ecoc(subset, sub_weights, config.svm)
        except (DegenerateProblemError, TrainingError) as exc:
            skipped.append(SkippedRound(t, str(exc)))
            continue
        predictions = predict_ecoc_batch(learner, X)
        error = clamp_error(compute_weighted_error(weights, predictions, y))
        alpha = classifier_weight(error)

        entering = weights
        weights = update_weights(weights, alpha, predictions, y)
        if config.residual_enabled:
            weights = apply_residual(weights, entering, beta)
        weights = normalize_weights(weights)

        learners.append(learner)
        alphas.append(alpha)
        votes[row_ids, predictions] += alpha
        acc_t = float((votes.argmax(axis=1) == y).mean())
        if config.residual_enabled:
            beta = adjust_beta(beta, t, config.n_classifiers, acc_t, acc_prev)
        acc_prev = acc_t
        rounds.append(RoundRecord(t, error, alpha, beta, idx, acc_t, weights.copy()))
    if not learners:
        raise TrainingError("no weak learner could be trained in any round")
    ensemble = SvbmEnsemble(tuple(learners), np.asarray(alphas), config, scaler, train.class_names)
    return ensemble, TrainingTrace(tuple(rounds), tuple(skipped))


def predict_ensemble_batch(ensemble: SvbmEnsemble, points: np.ndarray) -> np.ndarray:
    """Class index per row by weighted vote; ties break to the lowest class."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    X = ensemble.scaler.transform(pts)
    votes = np.zeros((X.shape[0], ensemble.n_classes))
    rows = np.arange(X.shape[0])
    for alpha, learner in zip(ensemble.alphas, ensemble.learners):
        votes[rows, predict_ecoc_batch(learner, X)] += alpha
    return votes.argmax(axis=1)


def predict_ensemble(ensemble: SvbmEnsemble, x: np.ndarray) -> int:
    """Predicted class index for a single raw (unstandardized) input vector."""
    x = np.asarray(x, dtype=np.float64).ravel()
    return int(predict_ensemble_batch(ensemble, x)[0])
