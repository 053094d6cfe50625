import numpy as np
import pytest

from svbm.boosting import ERROR_CEILING, ERROR_FLOOR, TrainingTrace
from svbm.data import Dataset, save_csv
from svbm.svm import BinarySvmModel, KernelSpec


def make_blobs(centers, n_per_class, spread, seed, class_names=None) -> Dataset:
    """Gaussian blobs, one cluster per class, deterministic in seed."""
    rng = np.random.default_rng(seed)
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    features = np.vstack([rng.normal(c, spread, (n_per_class, centers.shape[1])) for c in centers])
    labels = np.repeat(np.arange(len(centers)), n_per_class)
    if class_names is None:
        class_names = tuple(f"c{k}" for k in range(len(centers)))
    return Dataset(features, labels, class_names)


def flip_labels(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """Reassign a random fraction of labels to a different class (label noise)."""
    rng = np.random.default_rng(seed)
    labels = dataset.labels.copy()
    n_flip = int(round(fraction * dataset.n_samples))
    rows = rng.choice(dataset.n_samples, size=n_flip, replace=False)
    for r in rows:
        choices = [k for k in range(dataset.n_classes) if k != labels[r]]
        labels[r] = rng.choice(choices)
    return Dataset(dataset.features, labels, dataset.class_names)


def dataset_to_csv(dataset: Dataset, path) -> str:
    save_csv(dataset, path)
    return str(path)


def constant_learner(output: float, dim: int = 2) -> BinarySvmModel:
    """A binary model whose decision value is `output` everywhere.

    The single dual coefficient is denormal-tiny, so the bias dominates
    exactly in float64.
    """
    return BinarySvmModel(np.zeros((1, dim)), np.array([1e-300]), output, KernelSpec(1.0))


def assert_trace_invariants(trace: TrainingTrace, labels: np.ndarray, num_classes: int):
    """The per-round contract: weight sums, clamped errors, positive alphas,
    beta range, and subsample uniqueness/coverage."""
    labels = np.asarray(labels)
    previous_round = 0
    for r in trace.rounds:
        assert r.round > previous_round
        previous_round = r.round
        w = r.weights_after
        assert np.all(np.isfinite(w)) and np.all(w >= 0)
        assert abs(w.sum() - 1.0) <= 1e-9
        assert ERROR_FLOOR <= r.error <= ERROR_CEILING
        assert r.alpha > 0
        assert 0.0 <= r.beta <= 1.0
        idx = r.subsample_indices
        assert len(np.unique(idx)) == len(idx)
        assert idx.min() >= 0 and idx.max() < labels.size
        # class repair guarantees full coverage when the data has every class
        assert set(labels[idx].tolist()) == set(range(num_classes))


@pytest.fixture
def blobs2() -> Dataset:
    return make_blobs([[-2.0, -2.0], [2.0, 2.0]], 30, 0.6, seed=11, class_names=("neg", "pos"))


@pytest.fixture
def blobs3() -> Dataset:
    return make_blobs([[-3.0, 0.0], [3.0, 0.0], [0.0, 4.0]], 20, 0.6, seed=12)
