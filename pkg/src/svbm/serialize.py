"""Model persistence: a versioned JSON artifact that round-trips losslessly.

Floats are written through Python's shortest round-trip repr, so a saved and
reloaded ensemble predicts bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .boosting import SvbmConfig, SvbmEnsemble
from .data import ScalerParams
from .ecoc import CodeMatrix, EcocModel
from .errors import SvbmError
from .svm import BinarySvmModel, KernelSpec, SvmConfig

FORMAT_VERSION = 1


def _column_to_dict(model: BinarySvmModel | None) -> dict | None:
    if model is None:
        return None
    return {
        "support_vectors": [[float(v) for v in row] for row in model.support_vectors],
        "dual_coefficients": [float(v) for v in model.dual_coefficients],
        "bias": float(model.bias),
        "gamma": float(model.kernel.gamma),
        "converged": bool(model.converged),
    }


def _column_from_dict(payload: dict | None) -> BinarySvmModel | None:
    if payload is None:
        return None
    return BinarySvmModel(
        support_vectors=np.asarray(payload["support_vectors"], dtype=np.float64),
        dual_coefficients=np.asarray(payload["dual_coefficients"], dtype=np.float64),
        bias=float(payload["bias"]),
        kernel=KernelSpec(float(payload["gamma"])),
        converged=bool(payload["converged"]),
    )


def ensemble_to_dict(ensemble: SvbmEnsemble) -> dict:
    """The ensemble as a JSON-ready dict (the model file's content)."""
    cfg = ensemble.config
    return {
        "format_version": FORMAT_VERSION,
        "class_names": list(ensemble.class_names),
        "config": {
            "n_classifiers": cfg.n_classifiers,
            "sample_ratio": cfg.sample_ratio,
            "beta0": cfg.beta0,
            "residual_enabled": cfg.residual_enabled,
            "seed": cfg.seed,
            "svm": {
                "cost": cfg.svm.cost,
                "tolerance": cfg.svm.tolerance,
                "max_passes": cfg.svm.max_passes,
                "gamma": None if cfg.svm.kernel is None else cfg.svm.kernel.gamma,
            },
        },
        "scaler": {
            "means": [float(v) for v in ensemble.scaler.means],
            "std_devs": [float(v) for v in ensemble.scaler.std_devs],
        },
        "alphas": [float(a) for a in ensemble.alphas],
        "learners": [
            {
                "num_classes": learner.num_classes,
                "scheme": learner.code.scheme,
                "code": learner.code.entries.tolist(),
                "columns": [_column_to_dict(m) for m in learner.learners],
            }
            for learner in ensemble.learners
        ],
    }


def ensemble_from_dict(payload: dict) -> SvbmEnsemble:
    """Reconstruct an ensemble from the model-file dict."""
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise SvbmError(f"unsupported model format version {version!r}")
    svm_cfg = payload["config"]["svm"]
    gamma = svm_cfg.get("gamma")
    config = SvbmConfig(
        n_classifiers=int(payload["config"]["n_classifiers"]),
        sample_ratio=float(payload["config"]["sample_ratio"]),
        beta0=float(payload["config"]["beta0"]),
        residual_enabled=bool(payload["config"]["residual_enabled"]),
        seed=int(payload["config"]["seed"]),
        svm=SvmConfig(
            cost=float(svm_cfg["cost"]),
            tolerance=float(svm_cfg["tolerance"]),
            max_passes=int(svm_cfg["max_passes"]),
            kernel=None if gamma is None else KernelSpec(float(gamma)),
        ),
    )
    scaler = ScalerParams(
        np.asarray(payload["scaler"]["means"], dtype=np.float64),
        np.asarray(payload["scaler"]["std_devs"], dtype=np.float64),
    )
    learners = tuple(
        EcocModel(
            CodeMatrix(np.asarray(entry["code"], dtype=np.int8), entry["scheme"]),
            tuple(_column_from_dict(col) for col in entry["columns"]),
        )
        for entry in payload["learners"]
    )
    return SvbmEnsemble(
        learners=learners,
        alphas=np.asarray(payload["alphas"], dtype=np.float64),
        config=config,
        scaler=scaler,
        class_names=tuple(payload["class_names"]),
    )


def dumps_model(payload: dict) -> str:
    """Canonical text form of a model dict; stable across identical inputs."""
    return json.dumps(payload, indent=2) + "\n"


def save_model(ensemble: SvbmEnsemble, path: str | Path) -> None:
    Path(path).write_text(dumps_model(ensemble_to_dict(ensemble)), encoding="utf-8")


def load_model(path: str | Path) -> SvbmEnsemble:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SvbmError(f"cannot read model file {path}: {exc}") from exc
    return ensemble_from_dict(payload)
