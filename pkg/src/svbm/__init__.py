"""Boosted RBF-kernel SVM ensembles with structured subsampling and
residual-blended sample-weight updates."""

__version__ = "0.1.0"

from .boosting import (
    RoundRecord,
    SvbmConfig,
    SvbmEnsemble,
    TrainingTrace,
    fit,
    predict_ensemble,
    predict_ensemble_batch,
)
from .data import (
    Dataset,
    ScalerParams,
    apply_standardizer,
    fit_standardizer,
    load_csv,
    stratified_split,
)
from .ecoc import EcocModel, build_codebook, predict_ecoc, train_ecoc
from .errors import (
    DataError,
    DegenerateProblemError,
    DimensionMismatchError,
    NotFittedError,
    SvbmError,
    TrainingError,
)
from .metrics import ConfusionMatrix, accuracy, confusion, export_trace
from .serialize import load_model, save_model
from .svm import (
    BinarySvmModel,
    KernelSpec,
    SvmConfig,
    predict_binary,
    rbf_kernel,
    train_weighted_svm,
)

__all__ = [
    "BinarySvmModel",
    "ConfusionMatrix",
    "DataError",
    "Dataset",
    "DegenerateProblemError",
    "DimensionMismatchError",
    "EcocModel",
    "KernelSpec",
    "NotFittedError",
    "RoundRecord",
    "ScalerParams",
    "SvbmConfig",
    "SvbmEnsemble",
    "SvbmError",
    "SvmConfig",
    "TrainingError",
    "TrainingTrace",
    "accuracy",
    "apply_standardizer",
    "build_codebook",
    "confusion",
    "export_trace",
    "fit",
    "fit_standardizer",
    "load_csv",
    "load_model",
    "predict_binary",
    "predict_ecoc",
    "predict_ensemble",
    "predict_ensemble_batch",
    "rbf_kernel",
    "save_model",
    "stratified_split",
    "train_ecoc",
    "train_weighted_svm",
]
