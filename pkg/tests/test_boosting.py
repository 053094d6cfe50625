import math

import numpy as np
import pytest

import svbm.boosting as boosting
from svbm.boosting import (
    SvbmConfig,
    SvbmEnsemble,
    adjust_beta,
    apply_residual,
    classifier_weight,
    clamp_error,
    compute_weighted_error,
    fit,
    init_weights,
    normalize_weights,
    predict_ensemble,
    predict_ensemble_batch,
    staged_train_accuracy,
    structured_subsample,
    update_weights,
)
from svbm.data import Dataset, ScalerParams, apply_standardizer, fit_standardizer
from svbm.ecoc import EcocModel, build_codebook, predict_ecoc_batch, train_ecoc
from svbm.errors import (
    DegenerateProblemError,
    DimensionMismatchError,
    NotFittedError,
    TrainingError,
)
from svbm.svm import KernelSpec, SvmConfig

from conftest import assert_trace_invariants, constant_learner, flip_labels, make_blobs
from oracles import (
    adaboost_weight_trajectory,
    ref_adjust_beta,
    ref_apply_residual,
    ref_classifier_weight,
    ref_normalize,
    ref_update_weights,
    ref_weighted_error,
)


def constant_binary_ensemble(alphas, outputs, class_names=("A", "B")) -> SvbmEnsemble:
    """Two-class ensemble of constant voters: output > 0 votes class 0."""
    learners = tuple(
        EcocModel(build_codebook(2), (constant_learner(v),)) for v in outputs
    )
    return SvbmEnsemble(
        learners, np.asarray(alphas, dtype=float), SvbmConfig(), ScalerParams.identity(2), class_names
    )


class TestInitWeights:
    def test_uniform(self):
        assert init_weights(4).tolist() == [0.25, 0.25, 0.25, 0.25]

    def test_single_sample(self):
        assert init_weights(1).tolist() == [1.0]

    def test_sums_to_one(self):
        for n in (2, 3, 7, 100, 999):
            assert init_weights(n).sum() == pytest.approx(1.0, abs=1e-12)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            init_weights(0)


class TestStructuredSubsample:
    def test_four_sample_example(self):
        idx = structured_subsample(
            np.array([0.4, 0.3, 0.2, 0.1]), 0.5, np.array([0, 1, 1, 0]), seed=0, round_index=1
        )
        assert idx.tolist() == [0, 2]  # strata {0,1}, {2,3}; heads 0 and 2

    def test_four_sample_example_with_repair(self):
        # heads {0, 2} land on one class; the lowest-weight head swaps for
        # the best sample of the missing class
        idx = structured_subsample(
            np.array([0.4, 0.3, 0.2, 0.1]), 0.5, np.array([0, 1, 0, 1]), seed=0, round_index=1
        )
        assert idx.tolist() == [0, 1]

    def test_full_ratio_returns_everything(self):
        idx = structured_subsample(np.full(6, 1 / 6), 1.0, np.array([0, 0, 0, 1, 1, 1]), 0, 1)
        assert idx.tolist() == [0, 1, 2, 3, 4, 5]

    def test_uniform_ties_pick_stratum_heads(self):
        idx = structured_subsample(np.full(8, 0.125), 0.5, np.array([0, 0, 1, 1] * 2), 0, 1)
        assert idx.tolist() == [0, 2, 4, 6]

    def test_class_repair_swaps_in_missing_class(self):
        weights = np.array([0.3, 0.25, 0.15, 0.12, 0.08, 0.05, 0.03, 0.02])
        labels = np.array([0, 0, 0, 0, 0, 0, 0, 1])
        idx = structured_subsample(weights, 0.5, labels, 0, 1)
        # heads {0,2,4,6} miss class 1; the lowest-weight pick 6 gives way to 7
        assert idx.tolist() == [0, 2, 4, 7]

    def test_subsample_grows_to_cover_all_classes(self):
        weights = np.full(6, 1 / 6)
        labels = np.array([0, 0, 1, 1, 2, 2])
        idx = structured_subsample(weights, 0.2, labels, 0, 1)
        assert len(idx) == 3
        assert set(labels[idx].tolist()) == {0, 1, 2}

    def test_size_and_uniqueness_properties(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(4, 60))
            ratio = float(rng.uniform(0.05, 1.0))
            weights = rng.uniform(0, 1, n)
            weights /= weights.sum()
            labels = rng.integers(0, 2, n)
            labels[:2] = [0, 1]  # both classes exist
            idx = structured_subsample(weights, ratio, labels, 0, 1)
            expected = min(n, max(2, math.ceil(ratio * n - 1e-9), 2))
            assert len(idx) == expected
            assert len(np.unique(idx)) == len(idx)
            assert set(labels[idx].tolist()) == {0, 1}

    def test_bad_ratio(self):
        with pytest.raises(ValueError):
            structured_subsample(np.array([0.5, 0.5]), 0.0, np.array([0, 1]), 0, 1)


class TestWeightedError:
    def test_all_correct(self):
        assert compute_weighted_error(np.full(3, 1 / 3), np.array([0, 1, 2]), np.array([0, 1, 2])) == 0.0

    def test_uniform_half_wrong(self):
        eps = compute_weighted_error(
            np.full(4, 0.25), np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1])
        )
        assert eps == pytest.approx(0.5)

    def test_weighted_single_mistake(self):
        eps = compute_weighted_error(np.array([0.7, 0.3]), np.array([1, 1]), np.array([0, 1]))
        assert eps == pytest.approx(0.7)

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            compute_weighted_error(np.array([1.0]), np.array([0, 1]), np.array([0, 1]))

    def test_matches_reference_on_random_inputs(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            n = int(rng.integers(1, 30))
            w = rng.uniform(0.01, 1, n)
            p = rng.integers(0, 3, n)
            t = rng.integers(0, 3, n)
            ours = compute_weighted_error(w, p, t)
            assert ours == pytest.approx(ref_weighted_error(w, p, t), rel=1e-12)


class TestClassifierWeight:
    def test_half_error_clamps_to_ceiling(self):
        alpha = classifier_weight(0.5)
        assert alpha == pytest.approx(0.5 * math.log(0.5001 / 0.4999), rel=1e-12)
        assert alpha == pytest.approx(2.0000e-4, rel=1e-3)

    def test_point_one(self):
        assert classifier_weight(0.1) == pytest.approx(0.5 * math.log(9.0), rel=1e-12)

    def test_zero_error_clamps_to_floor(self):
        alpha = classifier_weight(0.0)
        assert alpha == pytest.approx(0.5 * math.log((1 - 1e-10) / 1e-10), rel=1e-12)
        assert alpha == pytest.approx(11.5129, rel=1e-4)

    def test_always_positive_and_finite(self):
        for eps in np.linspace(0.0, 1.0, 101):
            alpha = classifier_weight(float(eps))
            assert math.isfinite(alpha) and alpha > 0

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            classifier_weight(float("nan"))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            classifier_weight(1.5)


class TestUpdateWeights:
    def test_zero_alpha_is_identity(self):
        w = np.array([0.2, 0.8])
        out = update_weights(w, 0.0, np.array([0, 1]), np.array([1, 1]))
        assert out.tolist() == w.tolist()

    def test_ln2_example(self):
        out = update_weights(
            np.array([0.5, 0.5]), math.log(2.0), np.array([0, 0]), np.array([0, 1])
        )
        assert out == pytest.approx([0.25, 1.0], rel=1e-12)

    def test_all_correct_then_normalize_is_identity(self):
        rng = np.random.default_rng(1)
        w = rng.uniform(0.01, 1, 10)
        w /= w.sum()
        p = rng.integers(0, 2, 10)
        out = normalize_weights(update_weights(w, 0.7, p, p))
        assert out == pytest.approx(w, rel=1e-12)

    def test_monotone_emphasis(self):
        rng = np.random.default_rng(2)
        w = rng.uniform(0.01, 1, 20)
        p = rng.integers(0, 2, 20)
        t = rng.integers(0, 2, 20)
        out = update_weights(w, 0.3, p, t)
        wrong = p != t
        assert np.all(out[wrong] > w[wrong])
        assert np.all(out[~wrong] < w[~wrong])

    def test_matches_reference(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(1, 20))
            w = rng.uniform(0.01, 1, n)
            alpha = float(rng.uniform(0, 3))
            p = rng.integers(0, 4, n)
            t = rng.integers(0, 4, n)
            assert update_weights(w, alpha, p, t) == pytest.approx(
                ref_update_weights(w, alpha, p, t), rel=1e-12
            )


class TestApplyResidual:
    def test_beta_zero_is_identity(self):
        w = np.array([0.3, 0.7])
        assert apply_residual(w, np.array([0.5, 0.5]), 0.0).tolist() == w.tolist()

    def test_beta_one_averages(self):
        out = apply_residual(np.array([0.6, 0.4]), np.array([0.2, 0.8]), 1.0)
        assert out == pytest.approx([0.4, 0.6], rel=1e-12)

    def test_half_beta_example(self):
        out = apply_residual(np.array([0.6, 0.4]), np.array([0.5, 0.5]), 0.5)
        assert out == pytest.approx([0.85 / 1.5, 0.65 / 1.5], rel=1e-12)

    def test_convex_envelope(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = int(rng.integers(1, 15))
            w = rng.uniform(0, 1, n)
            prev = rng.uniform(0, 1, n)
            beta = float(rng.uniform(0, 1))
            out = apply_residual(w, prev, beta)
            assert np.all(out >= np.minimum(w, prev) - 1e-15)
            assert np.all(out <= np.maximum(w, prev) + 1e-15)

    def test_bad_beta(self):
        with pytest.raises(ValueError):
            apply_residual(np.array([1.0]), np.array([1.0]), 1.5)

    def test_matches_reference(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(1, 20))
            w, prev = rng.uniform(0, 1, n), rng.uniform(0, 1, n)
            beta = float(rng.uniform(0, 1))
            assert apply_residual(w, prev, beta) == pytest.approx(
                ref_apply_residual(w, prev, beta), rel=1e-12
            )


class TestNormalizeWeights:
    def test_simple(self):
        assert normalize_weights(np.array([2.0, 2.0])).tolist() == [0.5, 0.5]

    def test_idempotent(self):
        w = normalize_weights(np.array([1.0, 3.0]))
        assert w.tolist() == [0.25, 0.75]
        assert normalize_weights(w) == pytest.approx(w, abs=1e-12)

    def test_zero_sum_rejected(self):
        with pytest.raises(ValueError):
            normalize_weights(np.zeros(3))

    def test_matches_reference(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            w = rng.uniform(0.01, 5, int(rng.integers(1, 20)))
            assert normalize_weights(w) == pytest.approx(ref_normalize(w), rel=1e-12)


class TestAdjustBeta:
    def test_accuracy_drop_raises_beta(self):
        assert adjust_beta(0.5, 1, 10, acc_t=0.6, acc_prev=0.7) == pytest.approx(
            0.5 * 1.05 * 0.95, rel=1e-12
        )

    def test_accuracy_gain_lowers_beta(self):
        assert adjust_beta(0.5, 1, 10, acc_t=0.8, acc_prev=0.7) == pytest.approx(
            0.5 * 0.95 * 0.95, rel=1e-12
        )

    def test_stays_in_unit_interval(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            T = int(rng.integers(1, 30))
            t = int(rng.integers(1, T + 1))
            beta = float(rng.uniform(0, 1))
            out = adjust_beta(beta, t, T, float(rng.uniform(0, 1)), float(rng.uniform(0, 1)))
            assert 0.0 <= out <= 1.0

    def test_round_past_horizon_rejected(self):
        with pytest.raises(ValueError):
            adjust_beta(0.5, 11, 10, 0.5, 0.5)

    def test_matches_reference(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            T = int(rng.integers(1, 25))
            t = int(rng.integers(1, T + 1))
            beta = float(rng.uniform(0, 1))
            a, b = float(rng.uniform(0, 1)), float(rng.uniform(0, 1))
            assert adjust_beta(beta, t, T, a, b) == pytest.approx(
                ref_adjust_beta(beta, t, T, a, b), rel=1e-12
            )


class TestStagedAccuracy:
    def test_single_perfect_learner(self, blobs2):
        w = init_weights(blobs2.n_samples)
        model = train_ecoc(blobs2, w, SvmConfig(kernel=KernelSpec(1.0)))
        acc = staged_train_accuracy((model,), np.array([1.0]), blobs2.features, blobs2.labels)
        assert acc == 1.0

    def test_counting(self):
        # one constant learner voting class 0 on a 1-of-4 class-0 truth vector
        learner = EcocModel(build_codebook(2), (constant_learner(2.0, dim=1),))
        truths = np.array([0, 1, 1, 1])
        X = np.zeros((4, 1))
        assert staged_train_accuracy((learner,), np.array([1.0]), X, truths) == 0.25

    def test_heavier_learner_dominates(self):
        # two constant learners disagreeing everywhere; the 0.6-weight one wins
        a = EcocModel(build_codebook(2), (constant_learner(2.0, dim=1),))
        b = EcocModel(build_codebook(2), (constant_learner(-2.0, dim=1),))
        truths = np.array([0, 0, 1])
        X = np.zeros((3, 1))
        acc = staged_train_accuracy((a, b), np.array([0.6, 0.4]), X, truths)
        assert acc == staged_train_accuracy((a,), np.array([1.0]), X, truths) == pytest.approx(2 / 3)

    def test_empty_rejected(self):
        with pytest.raises(NotFittedError):
            staged_train_accuracy((), np.array([]), np.zeros((1, 1)), np.array([0]))


class TestFit:
    def test_single_round_full_sample_equals_direct_ecoc(self, blobs2):
        config = SvbmConfig(
            n_classifiers=1, sample_ratio=1.0, residual_enabled=False,
            svm=SvmConfig(kernel=KernelSpec(1.0)),
        )
        ensemble, trace = fit(blobs2, config)
        direct = train_ecoc(blobs2, init_weights(blobs2.n_samples), config.svm)
        probes = np.random.default_rng(0).normal(0, 3, (100, 2))
        assert np.array_equal(
            predict_ensemble_batch(ensemble, probes), predict_ecoc_batch(direct, probes)
        )
        assert len(trace.rounds) == 1
        assert trace.rounds[0].beta == 0.0

    def test_separable_blobs_reach_full_accuracy(self, blobs2):
        config = SvbmConfig(n_classifiers=5, sample_ratio=0.5)
        ensemble, trace = fit(blobs2, config)
        predictions = predict_ensemble_batch(ensemble, blobs2.features)
        assert np.array_equal(predictions, blobs2.labels)
        assert_trace_invariants(trace, blobs2.labels, blobs2.n_classes)

    def test_bit_identical_reruns(self):
        noisy = flip_labels(
            make_blobs([[-1.0, 0.0], [1.0, 0.0]], 25, 1.0, seed=3), 0.1, seed=4
        )
        config = SvbmConfig(n_classifiers=4, sample_ratio=0.6)
        _, trace_a = fit(noisy, config)
        _, trace_b = fit(noisy, config)
        assert len(trace_a.rounds) == len(trace_b.rounds)
        for ra, rb in zip(trace_a.rounds, trace_b.rounds):
            assert ra.error == rb.error
            assert ra.alpha == rb.alpha
            assert ra.beta == rb.beta
            assert np.array_equal(ra.subsample_indices, rb.subsample_indices)
            assert np.array_equal(ra.weights_after, rb.weights_after)

    def test_adaboost_reduction_matches_oracle(self):
        """Residual off, full sampling: the weight path is classic reweighting."""
        noisy = flip_labels(
            make_blobs([[-1.0, 0.0], [1.0, 0.0]], 10, 1.2, seed=9), 0.15, seed=10
        )
        assert noisy.n_samples == 20
        config = SvbmConfig(n_classifiers=10, sample_ratio=1.0, residual_enabled=False)
        ensemble, trace = fit(noisy, config)
        per_round = [
            predict_ecoc_batch(learner, noisy.features) for learner in ensemble.learners
        ]
        expected = adaboost_weight_trajectory(per_round, noisy.labels, noisy.n_samples)
        assert len(trace.rounds) == len(expected)
        for record, ref_weights in zip(trace.rounds, expected):
            np.testing.assert_allclose(record.weights_after, ref_weights, atol=1e-12, rtol=0)

    def test_residual_trace_invariants_on_noisy_data(self):
        noisy = flip_labels(
            make_blobs([[-1.0, 0.0], [1.0, 0.0]], 30, 1.0, seed=5), 0.1, seed=6
        )
        config = SvbmConfig(n_classifiers=6, sample_ratio=0.5)
        _, trace = fit(noisy, config)
        assert_trace_invariants(trace, noisy.labels, noisy.n_classes)
        assert len(trace.rounds) >= 1

    def test_scaler_is_stored_and_applied(self, blobs2):
        scaler = fit_standardizer(blobs2)
        standardized = apply_standardizer(blobs2, scaler)
        ensemble, _ = fit(standardized, SvbmConfig(n_classifiers=3), scaler)
        assert ensemble.scaler is scaler
        predictions = predict_ensemble_batch(ensemble, blobs2.features)  # raw inputs
        assert np.array_equal(predictions, blobs2.labels)

    def test_failed_round_is_recorded_and_skipped(self, blobs2, monkeypatch):
        calls = {"n": 0}
        real = boosting.train_ecoc

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 2:
                raise DegenerateProblemError("forced failure")
            return real(*args, **kwargs)

        monkeypatch.setattr(boosting, "train_ecoc", flaky)
        ensemble, trace = fit(blobs2, SvbmConfig(n_classifiers=4, sample_ratio=0.5))
        assert len(ensemble.learners) == 3
        assert [r.round for r in trace.rounds] == [1, 3, 4]
        assert len(trace.skipped) == 1
        assert trace.skipped[0].round == 2
        assert "forced failure" in trace.skipped[0].reason

    def test_every_round_failing_raises(self, blobs2, monkeypatch):
        def broken(*args, **kwargs):
            raise DegenerateProblemError("nope")

        monkeypatch.setattr(boosting, "train_ecoc", broken)
        with pytest.raises(TrainingError, match="no weak learner"):
            fit(blobs2, SvbmConfig(n_classifiers=3))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SvbmConfig(sample_ratio=1.5)
        with pytest.raises(ValueError):
            SvbmConfig(beta0=-0.1)
        with pytest.raises(ValueError):
            SvbmConfig(n_classifiers=0)


class TestPredictEnsemble:
    def test_single_learner(self):
        ensemble = constant_binary_ensemble([1.0], [2.0])
        assert predict_ensemble(ensemble, np.zeros(2)) == 0

    def test_weighted_vote_example(self):
        # alphas (1.0, 0.4, 0.4) voting (A, B, B): A holds 1.0 > 0.8
        ensemble = constant_binary_ensemble([1.0, 0.4, 0.4], [2.0, -2.0, -2.0])
        assert predict_ensemble(ensemble, np.zeros(2)) == 0

    def test_majority_of_weight_flips(self):
        ensemble = constant_binary_ensemble([0.5, 0.4, 0.4], [2.0, -2.0, -2.0])
        assert predict_ensemble(ensemble, np.zeros(2)) == 1

    def test_tie_breaks_to_lowest_class(self):
        # equal alphas voting class 2 and class 1 in a 3-class code: class 1 wins
        votes_class2 = EcocModel(
            build_codebook(3),
            (constant_learner(0.0), constant_learner(-2.0), constant_learner(-2.0)),
        )
        votes_class1 = EcocModel(
            build_codebook(3),
            (constant_learner(-2.0), constant_learner(0.0), constant_learner(2.0)),
        )
        ensemble = SvbmEnsemble(
            (votes_class2, votes_class1),
            np.array([0.7, 0.7]),
            SvbmConfig(),
            ScalerParams.identity(2),
            ("a", "b", "c"),
        )
        assert predict_ecoc_batch(votes_class2, np.zeros((1, 2)))[0] == 2
        assert predict_ecoc_batch(votes_class1, np.zeros((1, 2)))[0] == 1
        assert predict_ensemble(ensemble, np.zeros(2)) == 1

    def test_dimension_mismatch(self):
        ensemble = constant_binary_ensemble([1.0], [2.0])
        with pytest.raises(DimensionMismatchError):
            predict_ensemble(ensemble, np.zeros(5))

    def test_empty_ensemble_rejected(self):
        with pytest.raises(NotFittedError):
            SvbmEnsemble((), np.array([]), SvbmConfig(), ScalerParams.identity(2), ("a", "b"))
