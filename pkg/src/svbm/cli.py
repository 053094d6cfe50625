"""Command-line client for training, prediction, evaluation, and benchmarks.

The CLI does local file I/O and delegates all computation to the service
handlers: in-process by default, over HTTP when --server is given. Exit
codes: 0 success, 2 bad flags, 3 data errors, 4 training failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import httpx
import numpy as np
from pydantic import BaseModel

from .boosting import RoundRecord, SkippedRound, TrainingTrace
from .data import load_csv, load_feature_csv
from .errors import (
    DataError,
    DegenerateProblemError,
    DimensionMismatchError,
    SvbmError,
    TrainingError,
)
from .metrics import ConfusionMatrix, export_trace, write_confusion_csv
from .schemas import (
    BenchDataset,
    BenchRequest,
    BenchResponse,
    EvaluateRequest,
    EvaluateResponse,
    ModelPayload,
    PredictRequest,
    PredictResponse,
    SvmSettings,
    TrainRequest,
    TrainResponse,
    TrainSettings,
)
from .serialize import dumps_model
from . import service

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_TRAINING = 4

_DATA_ERROR_TYPES = {"DataError", "DimensionMismatchError"}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _post(server: str, path: str, payload: dict) -> dict:
    """POST to a remote service; maps its error replies onto exit codes."""
    url = server.rstrip("/") + path
    try:
        response = httpx.post(url, json=payload, timeout=600.0)
    except httpx.HTTPError as exc:
        raise CliError(EXIT_DATA, f"cannot reach server {server}: {exc}") from exc
    if response.status_code == 200:
        return response.json()
    try:
        body = response.json()
    except json.JSONDecodeError:
        body = {}
    detail = body.get("detail", response.text)
    error_type = body.get("error_type", "")
    code = EXIT_DATA if error_type in _DATA_ERROR_TYPES or response.status_code == 422 else EXIT_TRAINING
    raise CliError(code, f"server error ({response.status_code}): {detail}")


_LOCAL_HANDLERS = {
    "/train": (service.handle_train, TrainResponse),
    "/predict": (service.handle_predict, PredictResponse),
    "/evaluate": (service.handle_evaluate, EvaluateResponse),
    "/bench": (service.handle_bench, BenchResponse),
}


def _call(server: str | None, path: str, request: BaseModel):
    handler, response_cls = _LOCAL_HANDLERS[path]
    if server:
        return response_cls.model_validate(_post(server, path, request.model_dump(mode="json")))
    return handler(request)


def _parse_label_column(value: str, allow_none: bool = False):
    if allow_none and value == "none":
        return None
    if value == "last":
        return "last"
    try:
        return int(value)
    except ValueError:
        options = '"last", "none", or a 0-based index' if allow_none else '"last" or a 0-based index'
        raise CliError(EXIT_USAGE, f"--label-column must be {options}, got {value!r}") from None


def _parse_gamma(value: str) -> float | None:
    if value == "auto":
        return None
    try:
        gamma = float(value)
    except ValueError:
        raise CliError(EXIT_USAGE, f'--gamma must be "auto" or a positive number, got {value!r}') from None
    if not gamma > 0:
        raise CliError(EXIT_USAGE, f"--gamma must be positive, got {value}")
    return gamma


def _train_settings(args: argparse.Namespace) -> TrainSettings:
    if not 0.0 < args.sample_ratio <= 1.0:
        raise CliError(EXIT_USAGE, f"--sample-ratio must be in (0, 1], got {args.sample_ratio}")
    if not 0.0 <= args.beta0 <= 1.0:
        raise CliError(EXIT_USAGE, f"--beta0 must be in [0, 1], got {args.beta0}")
    if args.n_classifiers < 1:
        raise CliError(EXIT_USAGE, f"--n-classifiers must be >= 1, got {args.n_classifiers}")
    if not args.C > 0:
        raise CliError(EXIT_USAGE, f"--C must be positive, got {args.C}")
    if not args.tolerance > 0:
        raise CliError(EXIT_USAGE, f"--tolerance must be positive, got {args.tolerance}")
    if args.max_passes < 1:
        raise CliError(EXIT_USAGE, f"--max-passes must be >= 1, got {args.max_passes}")
    return TrainSettings(
        n_classifiers=args.n_classifiers,
        sample_ratio=args.sample_ratio,
        beta0=args.beta0,
        residual=not args.no_residual,
        standardize=not args.no_standardize,
        seed=args.seed,
        svm=SvmSettings(
            cost=args.C,
            gamma=_parse_gamma(args.gamma),
            tolerance=args.tolerance,
            max_passes=args.max_passes,
        ),
    )


def _trace_from_response(response: TrainResponse) -> TrainingTrace:
    rounds = tuple(
        RoundRecord(
            round=r.round,
            error=r.error,
            alpha=r.alpha,
            beta=r.beta,
            subsample_indices=np.asarray(r.subsample_indices, dtype=np.int64),
            train_accuracy_staged=r.staged_accuracy,
            weights_after=np.asarray(r.weights_after, dtype=np.float64),
        )
        for r in response.rounds
    )
    skipped = tuple(SkippedRound(s.round, s.reason) for s in response.skipped_rounds)
    return TrainingTrace(rounds, skipped)


def cmd_train(args: argparse.Namespace) -> int:
    settings = _train_settings(args)
    dataset = load_csv(args.data, _parse_label_column(args.label_column), args.has_header)
    request = TrainRequest(
        features=dataset.features.tolist(),
        labels=dataset.label_strings(),
        settings=settings,
    )
    response: TrainResponse = _call(args.server, "/train", request)

    out_path = Path(args.out)
    out_path.write_text(dumps_model(response.model.model_dump()), encoding="utf-8")
    trace_dir = Path(args.trace_dir) if args.trace_dir else (out_path.parent or Path("."))
    scalars, weights = export_trace(_trace_from_response(response), trace_dir)
    for s in response.skipped_rounds:
        print(f"round {s.round} skipped: {s.reason}", file=sys.stderr)
    print(f"model written to {out_path}")
    print(f"trace written to {scalars} and {weights}")
    print(f"final training accuracy: {response.train_accuracy:.9g}")
    return EXIT_OK


def _load_model_payload(path: str) -> ModelPayload:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(EXIT_DATA, f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_DATA, f"model file is not valid JSON: {exc}") from exc
    try:
        return ModelPayload.model_validate(raw)
    except ValueError as exc:
        raise CliError(EXIT_DATA, f"model file does not match the expected schema: {exc}") from exc


def cmd_predict(args: argparse.Namespace) -> int:
    model = _load_model_payload(args.model)
    features = load_feature_csv(
        args.data, _parse_label_column(args.label_column, allow_none=True), args.has_header
    )
    request = PredictRequest(model=model, features=features.tolist())
    response: PredictResponse = _call(args.server, "/predict", request)
    text = "\n".join(response.predictions) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"predictions written to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    model = _load_model_payload(args.model)
    dataset = load_csv(args.data, _parse_label_column(args.label_column), args.has_header)
    request = EvaluateRequest(
        model=model,
        features=dataset.features.tolist(),
        labels=dataset.label_strings(),
    )
    response: EvaluateResponse = _call(args.server, "/evaluate", request)
    matrix = ConfusionMatrix(np.asarray(response.confusion), tuple(response.class_names))
    write_confusion_csv(matrix, args.confusion_out)
    print(f"accuracy: {response.accuracy:.9g}")
    print(f"confusion matrix written to {args.confusion_out}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    settings = _train_settings(args)
    if not 0.0 < args.test_fraction < 1.0:
        raise CliError(EXIT_USAGE, f"--test-fraction must be in (0, 1), got {args.test_fraction}")
    for ratio in args.sample_ratios:
        if not 0.0 < ratio <= 1.0:
            raise CliError(EXIT_USAGE, f"--sample-ratios entries must be in (0, 1], got {ratio}")
    datasets = []
    for path in args.data:
        ds = load_csv(path, _parse_label_column(args.label_column), args.has_header)
        datasets.append(
            BenchDataset(name=Path(path).stem, features=ds.features.tolist(), labels=ds.label_strings())
        )
    request = BenchRequest(
        datasets=datasets,
        seeds=args.seeds,
        sample_ratios=args.sample_ratios,
        test_fraction=args.test_fraction,
        settings=settings,
    )
    response: BenchResponse = _call(args.server, "/bench", request)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", "residual", "sample_ratio", "seed", "test_accuracy", "wall_time_s"])
        for row in response.rows:
            writer.writerow(
                [
                    row.dataset,
                    "on" if row.residual else "off",
                    f"{row.sample_ratio:.9g}",
                    row.seed,
                    f"{row.test_accuracy:.9g}",
                    f"{row.wall_time_s:.6f}",
                ]
            )
    print(f"{len(response.rows)} result rows written to {args.out}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run(service.app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _add_common_train_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--n-classifiers", type=int, default=10, help="boosting rounds (default 10)")
    sub.add_argument("--sample-ratio", type=float, default=0.5, help="subsample fraction per round (default 0.5)")
    sub.add_argument("--beta0", type=float, default=0.5, help="initial history coefficient (default 0.5)")
    sub.add_argument("--C", type=float, default=1.0, help="SVM cost (default 1.0)")
    sub.add_argument("--gamma", default="auto", help='RBF width, "auto" or a positive number (default auto)')
    sub.add_argument("--tolerance", type=float, default=1e-3, help="SMO KKT tolerance (default 1e-3)")
    sub.add_argument("--max-passes", type=int, default=200, help="SMO sweep budget (default 200)")
    sub.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    sub.add_argument("--no-residual", action="store_true", help="disable residual weight blending (ablation)")
    sub.add_argument("--no-standardize", action="store_true", help="train on raw feature scales")


def _add_io_flags(sub: argparse.ArgumentParser, label_default: str) -> None:
    sub.add_argument("--label-column", default=label_default,
                     help=f'label cell per row: "last" or a 0-based index (default {label_default})')
    sub.add_argument("--has-header", action="store_true", help="skip the first CSV row")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svbm",
        description="Boosted RBF-kernel SVM ensembles: train, predict, evaluate, benchmark.",
    )
    parser.add_argument("--server", default=None,
                        help="base URL of a running svbm service; default runs in-process")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="train an ensemble on a labeled CSV")
    train.add_argument("--data", required=True, help="training CSV")
    train.add_argument("--out", default="model.svbm", help="model file to write (default model.svbm)")
    train.add_argument("--trace-dir", default=None,
                       help="directory for trace CSVs (default: the model file's directory)")
    _add_io_flags(train, "last")
    _add_common_train_flags(train)
    train.set_defaults(handler=cmd_train)

    predict = commands.add_parser("predict", help="predict class names for a feature CSV")
    predict.add_argument("--model", required=True, help="model file from train")
    predict.add_argument("--data", required=True, help="feature CSV")
    predict.add_argument("--out", default=None, help="output path (default: stdout)")
    predict.add_argument("--label-column", default="none",
                         help='column to drop before predicting: "none", "last", or an index (default none)')
    predict.add_argument("--has-header", action="store_true", help="skip the first CSV row")
    predict.set_defaults(handler=cmd_predict)

    evaluate = commands.add_parser("evaluate", help="accuracy and confusion matrix on labeled data")
    evaluate.add_argument("--model", required=True, help="model file from train")
    evaluate.add_argument("--data", required=True, help="labeled CSV")
    evaluate.add_argument("--confusion-out", default="confusion.csv",
                          help="confusion matrix CSV path (default confusion.csv)")
    _add_io_flags(evaluate, "last")
    evaluate.set_defaults(handler=cmd_evaluate)

    bench = commands.add_parser("bench", help="ablation grid over datasets, ratios, and seeds")
    bench.add_argument("--data", required=True, nargs="+", help="one or more labeled CSVs")
    bench.add_argument("--out", default="bench_results.csv", help="results CSV (default bench_results.csv)")
    bench.add_argument("--seeds", type=int, nargs="+", default=[42, 43, 44], help="split/run seeds")
    bench.add_argument("--sample-ratios", type=float, nargs="+", default=[0.5, 1.0],
                       help="subsample fractions to sweep (default 0.5 1.0)")
    bench.add_argument("--test-fraction", type=float, default=0.3,
                       help="held-out fraction per split (default 0.3)")
    _add_io_flags(bench, "last")
    _add_common_train_flags(bench)
    bench.set_defaults(handler=cmd_bench)

    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (DataError, DimensionMismatchError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateProblemError, TrainingError) as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except SvbmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING


if __name__ == "__main__":
    sys.exit(main())
