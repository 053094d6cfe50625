"""Weighted soft-margin binary SVM with an RBF kernel, trained by SMO.

Sample weights enter as per-sample box constraints C_i = C * N * w_i, so a
uniform weight vector reproduces the plain SVM with cost C. The solver picks
maximal-violating pairs deterministically (first occurrence wins ties), which
makes training bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateProblemError, DimensionMismatchError

SUPPORT_VECTOR_EPS = 1e-9  # dual values at or below this are pruned from the model
CLASS_MASS_EPS = 1e-9      # minimum per-class weight mass before the box degenerates
_ETA_EPS = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """RBF kernel parameters: k(x, z) = exp(-gamma * ||x - z||^2)."""

    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")


@dataclass(frozen=True)
class SvmConfig:
    """Solver settings. kernel=None resolves gamma from the training subset."""

    cost: float = 1.0
    tolerance: float = 1e-3
    max_passes: int = 200
    kernel: KernelSpec | None = None

    def __post_init__(self):
        if not (np.isfinite(self.cost) and self.cost > 0):
            raise ValueError(f"cost must be positive, got {self.cost}")
        if not (np.isfinite(self.tolerance) and self.tolerance > 0):
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_passes < 1:
            raise ValueError(f"max_passes must be >= 1, got {self.max_passes}")


@dataclass(frozen=True)
class BinarySvmModel:
    """A trained binary SVM: pruned support vectors and their dual weights."""

    support_vectors: np.ndarray   # (M, d)
    dual_coefficients: np.ndarray  # (M,), lambda_i * y_i, all non-zero
    bias: float
    kernel: KernelSpec
    converged: bool = field(default=True, compare=False)

    def __post_init__(self):
        sv = np.asarray(self.support_vectors, dtype=np.float64)
        coef = np.asarray(self.dual_coefficients, dtype=np.float64)
        sv.flags.writeable = False
        coef.flags.writeable = False
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coefficients", coef)
        if sv.ndim != 2 or sv.shape[0] < 1:
            raise ValueError("model needs at least one support vector")
        if coef.shape != (sv.shape[0],):
            raise DimensionMismatchError("dual_coefficients must align with support_vectors")
        if np.any(coef == 0.0):
            raise ValueError("dual coefficients must be non-zero after pruning")


def auto_gamma(features: np.ndarray) -> float:
    """Kernel width 1 / (d * mean per-column variance); 1/d if variance is zero."""
    X = np.asarray(features, dtype=np.float64)
    d = X.shape[1]
    v = float(X.var(axis=0).mean())
    if not np.isfinite(v) or v <= 0.0:
        return 1.0 / d
    return 1.0 / (d * v)


def rbf_kernel(x: np.ndarray, z: np.ndarray, spec: KernelSpec) -> float:
    """exp(-gamma * ||x - z||^2), in (0, 1]."""
    x = np.asarray(x, dtype=np.float64).ravel()
    z = np.asarray(z, dtype=np.float64).ravel()
    if x.shape != z.shape:
        raise DimensionMismatchError(f"vectors of length {x.size} and {z.size}")
    diff = x - z
    return float(np.exp(-spec.gamma * float(diff @ diff)))


def rbf_kernel_matrix(a: np.ndarray, b: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Pairwise RBF kernel values between the rows of a and b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(f"row dimensions {a.shape[1]} and {b.shape[1]} differ")
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-spec.gamma * sq)


def smo_solve(
    kernel: np.ndarray,
    labels: np.ndarray,
    box: np.ndarray,
    tolerance: float,
    max_iter: int,
) -> tuple[np.ndarray, bool, int]:
    """Maximize the SVM dual over 0 <= lam <= box, sum(lam * y) = 0.

    Returns (lam, converged, iterations). Each step optimizes the pair of
    variables with the largest first-order KKT violation; ties break toward
    the lowest index, so the iterate sequence is deterministic.
    """
    y = np.asarray(labels, dtype=np.float64)
    box = np.asarray(box, dtype=np.float64)
    n = y.size
    lam = np.zeros(n)
    g = np.zeros(n)  # g_i = sum_j lam_j y_j K_ij
    pos = y > 0
    converged = False
    it = 0
    while it < max_iter:
        e = y - g
        up = (pos & (lam < box)) | (~pos & (lam > 0.0))
        low = (pos & (lam > 0.0)) | (~pos & (lam < box))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, e, -np.inf)))
        j = int(np.argmin(np.where(low, e, np.inf)))
        if e[i] - e[j] <= tolerance:
            converged = True
            break

        # two-variable subproblem; flat directions (duplicate points) get a
        # floor on the curvature, which just pushes the step to a corner
        quad = max(kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j], _ETA_EPS)
        delta = -y[j] * (e[i] - e[j]) / quad  # change applied to lam_j
        old_i, old_j = lam[i], lam[j]
        # assign corners exactly so bound membership never drifts by roundoff
        if y[i] * y[j] < 0:
            diff = old_i - old_j  # conserved along the constraint line
            ni, nj = old_i + delta, old_j + delta
            if diff > 0.0:
                if nj < 0.0:
                    nj, ni = 0.0, diff
            else:
                if ni < 0.0:
                    ni, nj = 0.0, -diff
            if diff > box[i] - box[j]:
                if ni > box[i]:
                    ni, nj = box[i], box[i] - diff
            else:
                if nj > box[j]:
                    nj, ni = box[j], box[j] + diff
        else:
            total = old_i + old_j  # conserved along the constraint line
            ni, nj = old_i - delta, old_j + delta
            if total > box[i]:
                if ni > box[i]:
                    ni, nj = box[i], total - box[i]
            else:
                if nj < 0.0:
                    nj, ni = 0.0, total
            if total > box[j]:
                if nj > box[j]:
                    nj, ni = box[j], total - box[j]
            else:
                if ni < 0.0:
                    ni, nj = 0.0, total
        if ni == old_i and nj == old_j:
            break  # no movement possible on the worst violating pair
        lam[i], lam[j] = ni, nj
        g += ((ni - old_i) * y[i]) * kernel[i] + ((nj - old_j) * y[j]) * kernel[j]
        it += 1
    return lam, converged, it


def _bias_from_solution(lam: np.ndarray, box: np.ndarray, y: np.ndarray, g: np.ndarray) -> float:
    """Average offset over free support vectors; KKT interval midpoint otherwise."""
    e = y - g
    slack = 1e-10 * np.maximum(box, 1e-300)
    free = (lam > slack) & (lam < box - slack)
    if free.any():
        return float(e[free].mean())
    pos = y > 0
    at_lower = lam <= slack
    lo_set = (at_lower & pos) | (~at_lower & ~pos)
    hi_set = (at_lower & ~pos) | (~at_lower & pos)
    b_lo = float(e[lo_set].max()) if lo_set.any() else None
    b_hi = float(e[hi_set].min()) if hi_set.any() else None
    if b_lo is not None and b_hi is not None:
        return 0.5 * (b_lo + b_hi)
    if b_lo is not None:
        return b_lo
    if b_hi is not None:
        return b_hi
    return 0.0


def train_weighted_svm(
    features: np.ndarray,
    labels: np.ndarray,
    sample_weights: np.ndarray,
    config: SvmConfig,
) -> BinarySvmModel:
    """Train on labels in {-1, +1} with non-negative weights summing to 1.

    Raises DegenerateProblemError when one class is absent or carries
    (essentially) no weight mass, since the dual box then collapses.
    A solver that runs out of its iteration budget still returns the best
    iterate, flagged with converged=False.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    w = np.asarray(sample_weights, dtype=np.float64)
    n = X.shape[0]
    if X.ndim != 2 or y.shape != (n,) or w.shape != (n,):
        raise DimensionMismatchError("features, labels, and weights must align")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if not (np.all(np.isfinite(w)) and np.all(w >= 0.0)):
        raise ValueError("weights must be finite and non-negative")
    if abs(w.sum() - 1.0) > 1e-6:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    n_pos = int((y > 0).sum())
    if n_pos == 0 or n_pos == n:
        raise DegenerateProblemError("training set contains a single class")
    if min(w[y > 0].sum(), w[y < 0].sum()) < CLASS_MASS_EPS:
        raise DegenerateProblemError(
            "one class holds almost no weight mass; effective single-class problem"
        )

    spec = config.kernel if config.kernel is not None else KernelSpec(auto_gamma(X))
    box = config.cost * n * w
    kernel = rbf_kernel_matrix(X, X, spec)
    lam, converged, _ = smo_solve(kernel, y, box, config.tolerance, config.max_passes * n)
    g = kernel @ (lam * y)
    bias = _bias_from_solution(lam, box, y, g)
    keep = lam > SUPPORT_VECTOR_EPS
    if not keep.any():
        raise DegenerateProblemError("no support vectors survived; box constraints degenerate")
    return BinarySvmModel(
        support_vectors=X[keep].copy(),
        dual_coefficients=(lam * y)[keep],
        bias=bias,
        kernel=spec,
        converged=converged,
    )


def decision_values(model: BinarySvmModel, points: np.ndarray) -> np.ndarray:
    """Decision function of the model at each row of points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    kernel = rbf_kernel_matrix(pts, model.support_vectors, model.kernel)
    return kernel @ model.dual_coefficients + model.bias


def decision_value(model: BinarySvmModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    return float(decision_values(model, x)[0])


def predict_binary(model: BinarySvmModel, x: np.ndarray) -> int:
    """Sign of the decision value; an exact zero maps to +1."""
    return 1 if decision_value(model, x) >= 0.0 else -1


def dual_objective(
    features: np.ndarray,
    labels: np.ndarray,
    lambdas: np.ndarray,
    kernel_spec: KernelSpec,
) -> float:
    """Dual objective sum(lam) - 0.5 * lam' (K o yy') lam, for solver checks."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    lam = np.asarray(lambdas, dtype=np.float64)
    kernel = rbf_kernel_matrix(X, X, kernel_spec)
    coef = lam * y
    return float(lam.sum() - 0.5 * coef @ kernel @ coef)
