"""FastAPI service over the core package.

The handle_* functions hold the whole request-to-response pipeline and are
called directly by the CLI in local mode; the HTTP routes are thin wrappers
around them.
"""

from __future__ import annotations

import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .boosting import (
    SvbmConfig,
    TrainingTrace,
    fit,
    predict_ensemble_batch,
)
from .data import (
    Dataset,
    ScalerParams,
    apply_standardizer,
    encode_labels,
    fit_standardizer,
    stratified_split,
)
from .errors import DataError, SvbmError
from .metrics import accuracy, confusion
from .schemas import (
    BenchRequest,
    BenchResponse,
    BenchRow,
    EvaluateRequest,
    EvaluateResponse,
    HealthResponse,
    ModelPayload,
    PredictRequest,
    PredictResponse,
    RoundPayload,
    SkippedRoundPayload,
    TrainRequest,
    TrainResponse,
    TrainSettings,
)
from .serialize import ensemble_from_dict, ensemble_to_dict
from .svm import KernelSpec, SvmConfig


def _features_array(rows: list[list[float]]) -> np.ndarray:
    if not rows:
        raise DataError("features are empty")
    width = len(rows[0])
    if width == 0 or any(len(r) != width for r in rows):
        raise DataError("feature rows must be non-empty and of equal length")
    return np.asarray(rows, dtype=np.float64)


def _svbm_config(settings: TrainSettings, **overrides) -> SvbmConfig:
    kernel = None if settings.svm.gamma is None else KernelSpec(settings.svm.gamma)
    params = dict(
        n_classifiers=settings.n_classifiers,
        sample_ratio=settings.sample_ratio,
        beta0=settings.beta0,
        residual_enabled=settings.residual,
        seed=settings.seed,
        svm=SvmConfig(
            cost=settings.svm.cost,
            tolerance=settings.svm.tolerance,
            max_passes=settings.svm.max_passes,
            kernel=kernel,
        ),
    )
    params.update(overrides)
    try:
        return SvbmConfig(**params)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def _prepare(dataset: Dataset, standardize: bool) -> tuple[Dataset, ScalerParams]:
    if standardize:
        scaler = fit_standardizer(dataset)
        return apply_standardizer(dataset, scaler), scaler
    return dataset, ScalerParams.identity(dataset.n_features)


def _fit_on(dataset: Dataset, settings: TrainSettings, **overrides):
    prepared, scaler = _prepare(dataset, settings.standardize)
    return fit(prepared, _svbm_config(settings, **overrides), scaler)


def handle_train(request: TrainRequest) -> TrainResponse:
    features = _features_array(request.features)
    labels, class_names = encode_labels(request.labels)
    dataset = Dataset(features, labels, class_names)
    ensemble, trace = _fit_on(dataset, request.settings)
    predictions = predict_ensemble_batch(ensemble, features)
    return TrainResponse(
        model=ModelPayload.model_validate(ensemble_to_dict(ensemble)),
        rounds=[
            RoundPayload(
                round=r.round,
                error=r.error,
                alpha=r.alpha,
                beta=r.beta,
                staged_accuracy=r.train_accuracy_staged,
                subsample_indices=[int(i) for i in r.subsample_indices],
                weights_after=[float(w) for w in r.weights_after],
            )
            for r in trace.rounds
        ],
        skipped_rounds=[
            SkippedRoundPayload(round=s.round, reason=s.reason) for s in trace.skipped
        ],
        train_accuracy=accuracy(predictions, labels),
    )


def handle_predict(request: PredictRequest) -> PredictResponse:
    ensemble = ensemble_from_dict(request.model.model_dump())
    features = _features_array(request.features)
    predictions = predict_ensemble_batch(ensemble, features)
    names = ensemble.class_names
    return PredictResponse(predictions=[names[k] for k in predictions])


def handle_evaluate(request: EvaluateRequest) -> EvaluateResponse:
    ensemble = ensemble_from_dict(request.model.model_dump())
    features = _features_array(request.features)
    if len(request.labels) != features.shape[0]:
        raise DataError("labels must align with feature rows")
    index = {name: k for k, name in enumerate(ensemble.class_names)}
    unknown = sorted(set(request.labels) - set(index))
    if unknown:
        raise DataError(f"labels not among the model's classes: {unknown}")
    truths = np.array([index[s] for s in request.labels], dtype=np.int64)
    predictions = predict_ensemble_batch(ensemble, features)
    matrix = confusion(predictions, truths, ensemble.n_classes, ensemble.class_names)
    return EvaluateResponse(
        accuracy=accuracy(predictions, truths),
        confusion=matrix.counts.tolist(),
        class_names=list(ensemble.class_names),
    )


def handle_bench(request: BenchRequest) -> BenchResponse:
    """Grid cells run in deterministic order: dataset, residual on/off, ratio, seed."""
    rows: list[BenchRow] = []
    for entry in request.datasets:
        features = _features_array(entry.features)
        labels, class_names = encode_labels(entry.labels)
        dataset = Dataset(features, labels, class_names)
        for residual in (True, False):
            for ratio in request.sample_ratios:
                for seed in request.seeds:
                    started = time.perf_counter()
                    train, test = stratified_split(dataset, request.test_fraction, seed)
                    ensemble, _ = _fit_on(
                        train,
                        request.settings,
                        residual_enabled=residual,
                        sample_ratio=ratio,
                        seed=seed,
                    )
                    test_accuracy = accuracy(
                        predict_ensemble_batch(ensemble, test.features), test.labels
                    )
                    rows.append(
                        BenchRow(
                            dataset=entry.name,
                            residual=residual,
                            sample_ratio=ratio,
                            seed=seed,
                            test_accuracy=test_accuracy,
                            wall_time_s=time.perf_counter() - started,
                        )
                    )
    return BenchResponse(rows=rows)


app = FastAPI(title="svbm", version=__version__)


@app.exception_handler(SvbmError)
async def _domain_error(request: Request, exc: SvbmError) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={"detail": str(exc), "error_type": type(exc).__name__},
    )


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/train", response_model=TrainResponse)
def train_endpoint(request: TrainRequest) -> TrainResponse:
    return handle_train(request)


@app.post("/predict", response_model=PredictResponse)
def predict_endpoint(request: PredictRequest) -> PredictResponse:
    return handle_predict(request)


@app.post("/evaluate", response_model=EvaluateResponse)
def evaluate_endpoint(request: EvaluateRequest) -> EvaluateResponse:
    return handle_evaluate(request)


@app.post("/bench", response_model=BenchResponse)
def bench_endpoint(request: BenchRequest) -> BenchResponse:
    return handle_bench(request)
