"""Label-smoothing loss, softmax classifier training, and the
forced-choice / top-1 evaluators."""

import math

import numpy as np
import pytest

from photoscore.classify import (
    ClassifierModel,
    TrainConfig,
    _mean_loss_and_grad,
    _smoothing_targets,
    feature_matrix,
    forced_choice_accuracy,
    load_model,
    log_softmax,
    predict_logits,
    read_logits_csv,
    save_model,
    smoothing_loss,
    top1_accuracy,
    train_classifier,
    write_logits_csv,
)
from photoscore.corpus import FeatureVector
from photoscore.errors import PhotoscoreError


def _nll_oracle(logits, c):
    """Independent negative log softmax via plain python floats."""
    exps = [math.exp(v) for v in logits]
    return -math.log(exps[c] / sum(exps))


def _make_fv(**values):
    base = dict(width=10, height=10, resolution=1e-4, brightness=0.5,
                contrast=0.1, dynamic_range=0.2, object_cnt=1,
                has_detection=True, top_space=1.0, bottom_space=1.0,
                left_space=1.0, right_space=1.0, x_asymmetry=0.0,
                y_asymmetry=0.0, fgbg_area_ratio=0.5,
                bgfg_brightness_diff=0.1, bgfg_contrast_diff=0.1,
                bg_lightness=0.1, bg_nonuniformity=0.05)
    base.update(values)
    return FeatureVector(**base)


def _separable_rows(n_per_class=40, seed=0, spread=4.0):
    """Three linearly separable clusters over two informative features."""
    rng = np.random.default_rng(seed)
    rows = []
    for label, (mu_b, mu_c) in enumerate(((0.1, 0.1), (0.5, 0.9), (0.9, 0.2))):
        for _ in range(n_per_class):
            rows.append((_make_fv(
                brightness=mu_b * spread + rng.normal(0, 0.05),
                contrast=mu_c * spread + rng.normal(0, 0.05)), label))
    return rows


class TestSmoothingLoss:
    def test_uniform_logits_closed_form(self):
        # symmetry forces every log-probability to -ln 3
        expected = 1.05 * math.log(3.0)
        for c in (0, 1, 2):
            assert smoothing_loss((0.0, 0.0, 0.0), c, 0.05) == pytest.approx(
                expected, abs=1e-9)
        assert expected == pytest.approx(1.15354, abs=1e-5)

    def test_epsilon_zero_is_nll(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            logits = rng.normal(scale=3.0, size=3)
            c = int(rng.integers(0, 3))
            assert smoothing_loss(logits, c, 0.0) == pytest.approx(
                _nll_oracle(logits, c), abs=1e-12)

    def test_peaked_logits(self):
        expected = math.log1p(2.0 * math.exp(-10.0))
        assert smoothing_loss((10.0, 0.0, 0.0), 0, 0.0) == pytest.approx(
            expected, rel=1e-9)
        assert expected == pytest.approx(9.08e-5, abs=5e-7)

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            logits = rng.normal(scale=5.0, size=3)
            shift = rng.normal(scale=100.0)
            a = smoothing_loss(logits, 1, 0.05)
            b = smoothing_loss(logits + shift, 1, 0.05)
            assert a == pytest.approx(b, abs=1e-9)

    def test_non_finite_rejected(self):
        with pytest.raises(PhotoscoreError):
            smoothing_loss((np.inf, 0.0, 0.0), 0, 0.05)
        with pytest.raises(PhotoscoreError):
            smoothing_loss((np.nan, 0.0, 0.0), 0, 0.05)

    def test_epsilon_bounds(self):
        with pytest.raises(ValueError):
            smoothing_loss((0.0, 0.0, 0.0), 0, 1.0)


class TestLogSoftmax:
    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(2)
        for scale in (1.0, 10.0, 1e4):
            for _ in range(100):
                logits = rng.normal(scale=scale, size=3)
                total = np.exp(log_softmax(logits)).sum()
                assert total == pytest.approx(1.0, abs=1e-9)

    def test_extreme_logits_stable(self):
        lp = log_softmax(np.array([1e4, 0.0, -1e4]))
        assert np.all(lp <= 0.0)
        assert np.exp(lp).sum() == pytest.approx(1.0, abs=1e-9)


class TestTraining:
    def test_separable_reaches_train_accuracy(self):
        rows = _separable_rows(seed=3)
        model = train_classifier(rows, TrainConfig(epochs=600, learning_rate=0.5))
        scored = [(predict_logits(model, fv), label) for fv, label in rows]
        assert top1_accuracy(scored) >= 0.95

    def test_zero_epochs_uniform_predictions(self):
        rows = _separable_rows(seed=4)
        model = train_classifier(rows, TrainConfig(epochs=0))
        logits = predict_logits(model, rows[0][0])
        assert np.allclose(logits, 0.0)
        loss = smoothing_loss(logits, 0, 0.05)
        assert loss == pytest.approx(1.05 * math.log(3.0), abs=1e-9)

    def test_loss_non_increasing_at_small_lr(self):
        rows = _separable_rows(seed=5)
        model = train_classifier(rows, TrainConfig(epochs=200,
                                                   learning_rate=1e-3))
        trace = model.training_loss
        assert len(trace) == 200
        for earlier, later in zip(trace, trace[1:]):
            assert later <= earlier + 1e-12

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        Z1 = np.column_stack([rng.normal(size=(30, 4)), np.ones(30)])
        labels = rng.integers(0, 3, size=30)
        targets = _smoothing_targets(labels, 0.05)
        W = rng.normal(scale=0.5, size=(3, 5))
        _, grad = _mean_loss_and_grad(W, Z1, targets, l2=0.01)
        eps = 1e-6
        for i in range(3):
            for j in range(5):
                Wp, Wm = W.copy(), W.copy()
                Wp[i, j] += eps
                Wm[i, j] -= eps
                lp, _ = _mean_loss_and_grad(Wp, Z1, targets, l2=0.01)
                lm, _ = _mean_loss_and_grad(Wm, Z1, targets, l2=0.01)
                numeric = (lp - lm) / (2 * eps)
                assert grad[i, j] == pytest.approx(numeric, rel=1e-5, abs=1e-7)

    def test_deterministic(self):
        rows = _separable_rows(seed=7)
        a = train_classifier(rows, TrainConfig(epochs=50))
        b = train_classifier(rows, TrainConfig(epochs=50))
        assert np.array_equal(a.weights, b.weights)

    def test_requires_two_labels(self):
        rows = [( _make_fv(), 1) for _ in range(10)]
        with pytest.raises(PhotoscoreError):
            train_classifier(rows)

    def test_rows_with_absent_features_dropped_or_imputed(self):
        rows = _separable_rows(n_per_class=10, seed=8)
        rows.append((_make_fv(fgbg_area_ratio=None, bgfg_brightness_diff=None,
                              bgfg_contrast_diff=None, bg_lightness=None,
                              bg_nonuniformity=None), 0))
        dropped = train_classifier(rows, TrainConfig(epochs=5))
        imputed = train_classifier(rows, TrainConfig(epochs=5, impute=True))
        assert isinstance(dropped, ClassifierModel)
        assert isinstance(imputed, ClassifierModel)


class TestPredict:
    def test_zero_weight_model(self):
        rows = _separable_rows(seed=9)
        model = train_classifier(rows, TrainConfig(epochs=0))
        assert np.allclose(predict_logits(model, rows[5][0]), 0.0)

    def test_pure_function_of_features(self):
        rows = _separable_rows(seed=10)
        model = train_classifier(rows, TrainConfig(epochs=30))
        fv = rows[3][0]
        assert np.array_equal(predict_logits(model, fv),
                              predict_logits(model, fv))

    def test_bias_only_model_constant_logits(self):
        model = ClassifierModel(
            feature_names=["brightness"], weights=np.array([[0.0, 1.0],
                                                            [0.0, -0.5],
                                                            [0.0, 2.0]]),
            epsilon=0.05, feature_means=np.array([0.5]),
            feature_stds=np.array([1.0]))
        a = predict_logits(model, _make_fv(brightness=0.1))
        b = predict_logits(model, _make_fv(brightness=0.9))
        assert np.allclose(a, b)

    def test_absent_feature_requires_impute(self):
        rows = _separable_rows(seed=11)
        model = train_classifier(rows, TrainConfig(epochs=5))
        assert "brightness" in model.feature_names
        bad = _make_fv(brightness=None)
        with pytest.raises(PhotoscoreError, match="absent"):
            predict_logits(model, bad)
        logits = predict_logits(model, bad, impute=True)
        assert logits.shape == (3,)

    def test_unknown_feature_name(self):
        model = ClassifierModel(
            feature_names=["not_a_feature"], weights=np.zeros((3, 2)),
            epsilon=0.05, feature_means=np.zeros(1), feature_stds=np.ones(1))
        with pytest.raises(PhotoscoreError, match="unknown"):
            predict_logits(model, _make_fv())


class TestForcedChoice:
    def test_decision_uses_positive_vs_negative_logit(self):
        # Good label, x2 > x0: counted correct even though x1 is largest
        accuracy, n_used = forced_choice_accuracy([((0.2, 0.9, 0.5), 2)])
        assert (accuracy, n_used) == (1.0, 1)

    def test_tie_counts_as_negative(self):
        accuracy, n_used = forced_choice_accuracy([((1.0, -5.0, 1.0), 0)])
        assert (accuracy, n_used) == (1.0, 1)
        accuracy, _ = forced_choice_accuracy([((1.0, -5.0, 1.0), 2)])
        assert accuracy == 0.0

    def test_neutral_rows_excluded(self):
        scored = [((0.0, 9.0, 1.0), 1), ((0.0, 0.0, 1.0), 2)]
        accuracy, n_used = forced_choice_accuracy(scored)
        assert n_used == 1 and accuracy == 1.0

    def test_all_neutral_errors(self):
        with pytest.raises(PhotoscoreError, match="forced-choice"):
            forced_choice_accuracy([((0.0, 1.0, 0.0), 1)])

    def test_scale_invariance_of_decision(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            logits = rng.normal(size=3)
            label = int(rng.choice([0, 2]))
            base, _ = forced_choice_accuracy([(logits, label)])
            scaled, _ = forced_choice_accuracy([(logits * 17.0, label)])
            assert base == scaled

    def test_at_least_top1_on_non_neutral_rows(self):
        rng = np.random.default_rng(13)
        scored = [(rng.normal(size=3), int(rng.choice([0, 2])))
                  for _ in range(500)]
        fc, _ = forced_choice_accuracy(scored)
        assert fc >= top1_accuracy(scored)


class TestTop1:
    def test_perfect_one_hot(self):
        scored = [((9.0, 0.0, 0.0), 0), ((0.0, 9.0, 0.0), 1),
                  ((0.0, 0.0, 9.0), 2)]
        assert top1_accuracy(scored) == 1.0

    def test_uniform_logits_tie_to_class_zero(self):
        scored = [((0.0, 0.0, 0.0), label) for label in (0, 0, 1, 2)]
        assert top1_accuracy(scored) == pytest.approx(0.5)

    def test_empty_errors(self):
        with pytest.raises(PhotoscoreError):
            top1_accuracy([])


class TestPersistence:
    def test_model_round_trip(self, tmp_path):
        rows = _separable_rows(seed=14)
        model = train_classifier(rows, TrainConfig(epochs=40))
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert back.feature_names == model.feature_names
        assert np.allclose(back.weights, model.weights)
        assert back.epsilon == model.epsilon
        fv = rows[0][0]
        assert np.allclose(predict_logits(back, fv), predict_logits(model, fv))

    def test_logits_csv_round_trip(self, tmp_path):
        rows = [("a", np.array([0.5, -1.25, 3.0])),
                ("b", np.array([0.0, 0.0, 0.0]))]
        path = tmp_path / "scores.csv"
        write_logits_csv(rows, path)
        back = read_logits_csv(path)
        assert back[0][0] == "a"
        assert np.allclose(back[0][1], rows[0][1])
        assert np.allclose(back[1][1], rows[1][1])

    def test_feature_matrix_impute(self):
        rows = [_make_fv(), _make_fv(bg_lightness=None)]
        X, kept = feature_matrix(rows, impute=False)
        assert kept.tolist() == [0]
        X2, kept2 = feature_matrix(rows, impute=True)
        assert kept2.tolist() == [0, 1]
        assert np.isfinite(X2).all()
