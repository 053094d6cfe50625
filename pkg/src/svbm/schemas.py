"""Pydantic request/response models for the HTTP service and the CLI client."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SvmSettings(BaseModel):
    """Weak-learner solver settings. gamma=None picks the per-subset heuristic."""

    cost: float = 1.0
    gamma: float | None = None
    tolerance: float = 1e-3
    max_passes: int = 200


class TrainSettings(BaseModel):
    n_classifiers: int = 10
    sample_ratio: float = 0.5
    beta0: float = 0.5
    residual: bool = True
    standardize: bool = True
    seed: int = 42
    svm: SvmSettings = Field(default_factory=SvmSettings)


class SvmColumnPayload(BaseModel):
    support_vectors: list[list[float]]
    dual_coefficients: list[float]
    bias: float
    gamma: float
    converged: bool


class LearnerPayload(BaseModel):
    num_classes: int
    scheme: str
    code: list[list[int]]
    columns: list[SvmColumnPayload | None]


class SvmConfigPayload(BaseModel):
    cost: float
    tolerance: float
    max_passes: int
    gamma: float | None


class ConfigPayload(BaseModel):
    n_classifiers: int
    sample_ratio: float
    beta0: float
    residual_enabled: bool
    seed: int
    svm: SvmConfigPayload


class ScalerPayload(BaseModel):
    means: list[float]
    std_devs: list[float]


class ModelPayload(BaseModel):
    """The model-file schema; matches serialize.ensemble_to_dict exactly."""

    format_version: int
    class_names: list[str]
    config: ConfigPayload
    scaler: ScalerPayload
    alphas: list[float]
    learners: list[LearnerPayload]


class RoundPayload(BaseModel):
    round: int
    error: float
    alpha: float
    beta: float
    staged_accuracy: float
    subsample_indices: list[int]
    weights_after: list[float]


class SkippedRoundPayload(BaseModel):
    round: int
    reason: str


class TrainRequest(BaseModel):
    features: list[list[float]]
    labels: list[str]
    settings: TrainSettings = Field(default_factory=TrainSettings)


class TrainResponse(BaseModel):
    model: ModelPayload
    rounds: list[RoundPayload]
    skipped_rounds: list[SkippedRoundPayload]
    train_accuracy: float


class PredictRequest(BaseModel):
    model: ModelPayload
    features: list[list[float]]


class PredictResponse(BaseModel):
    predictions: list[str]


class EvaluateRequest(BaseModel):
    model: ModelPayload
    features: list[list[float]]
    labels: list[str]


class EvaluateResponse(BaseModel):
    accuracy: float
    confusion: list[list[int]]
    class_names: list[str]


class BenchDataset(BaseModel):
    name: str
    features: list[list[float]]
    labels: list[str]


class BenchRequest(BaseModel):
    """Grid runner over residual on/off x sample ratios x seeds per dataset.

    settings supplies the remaining knobs; its residual, sample_ratio, and
    seed fields are overridden cell by cell.
    """

    datasets: list[BenchDataset]
    seeds: list[int] = Field(default_factory=lambda: [42])
    sample_ratios: list[float] = Field(default_factory=lambda: [0.5, 1.0])
    test_fraction: float = 0.3
    settings: TrainSettings = Field(default_factory=TrainSettings)


class BenchRow(BaseModel):
    dataset: str
    residual: bool
    sample_ratio: float
    seed: int
    test_accuracy: float
    wall_time_s: float


class BenchResponse(BaseModel):
    rows: list[BenchRow]


class HealthResponse(BaseModel):
    status: str
    version: str
