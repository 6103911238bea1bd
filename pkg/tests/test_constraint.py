from __future__ import annotations

import numpy as np
import pytest

from botuner.constraint import (
    ErrorInjector,
    MapeTracker,
    RidgeConstraintModel,
    predict_with_injection,
)
from botuner.errors import SettingsError, UntrainedModelError


def ridge_oracle(features, values, alpha):
    """Independent dense solve of the penalized normal equations with an
    unpenalized intercept column."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(values, dtype=float)
    augmented = np.hstack([x, np.ones((x.shape[0], 1))])
    penalty = alpha * np.eye(x.shape[1] + 1)
    penalty[-1, -1] = 0.0
    theta = np.linalg.solve(augmented.T @ augmented + penalty, augmented.T @ y)
    return theta[:-1], theta[-1]


class TestRidgeFit:
    def test_under_two_observations_stays_untrained(self):
        model = RidgeConstraintModel()
        model.fit([[1.0, 2.0]], [3.0])
        assert not model.trained
        with pytest.raises(UntrainedModelError):
            model.predict([1.0, 2.0])

    def test_linear_target_recovered_as_alpha_vanishes(self, rng):
        x = rng.uniform(size=(20, 3))
        true_w = np.array([2.0, -1.0, 0.5])
        y = x @ true_w + 4.0
        model = RidgeConstraintModel(ridge_alpha=1e-10).fit(x, y)
        for row, target in zip(x, y):
            assert model.predict(row) == pytest.approx(target, abs=1e-6)

    def test_constant_target_goes_to_intercept(self, rng):
        x = rng.uniform(size=(10, 2))
        model = RidgeConstraintModel(ridge_alpha=1.0).fit(x, np.full(10, 3.25))
        assert model.intercept == pytest.approx(3.25, abs=1e-9)
        assert np.allclose(model.weights, 0.0, atol=1e-9)

    def test_fixed_system_matches_dense_oracle(self):
        x = np.array(
            [
                [0.1, 0.9, 0.3],
                [0.5, 0.2, 0.8],
                [0.9, 0.4, 0.1],
                [0.3, 0.7, 0.6],
                [0.6, 0.1, 0.5],
            ]
        )
        y = np.array([1.2, 0.7, 2.4, 1.9, 0.4])
        model = RidgeConstraintModel(ridge_alpha=1.0).fit(x, y)
        oracle_w, oracle_b = ridge_oracle(x, y, 1.0)
        assert model.weights == pytest.approx(oracle_w, abs=1e-8)
        assert model.intercept == pytest.approx(oracle_b, abs=1e-8)

    def test_alpha_must_be_positive(self):
        with pytest.raises(SettingsError):
            RidgeConstraintModel(ridge_alpha=0.0)

    def test_train_count_tracks_observations(self, rng):
        model = RidgeConstraintModel().fit(rng.uniform(size=(7, 2)), rng.uniform(size=7))
        assert model.trained and model.train_count == 7


class TestErrorInjector:
    def test_schedule_endpoints_exact(self):
        injector = ErrorInjector(enabled=True, epsilon0=1.5, n_err=50)
        assert injector.factor(0) == 1.5
        assert injector.factor(25) == 1.25
        for i in (50, 51, 75, 1000):
            assert injector.factor(i) == 1.0

    def test_factor_applies_only_when_enabled(self):
        model = RidgeConstraintModel(ridge_alpha=1e-8).fit(
            [[0.0], [0.5], [1.0]], [0.0, 0.5, 1.0]
        )
        on = ErrorInjector(enabled=True)
        off = ErrorInjector(enabled=False)
        raw = model.predict([0.5])
        assert predict_with_injection(model, [0.5], off, 0) == raw
        assert predict_with_injection(model, [0.5], None, 0) == raw
        assert predict_with_injection(model, [0.5], on, 0) == raw * 1.5

    def test_injection_never_touches_training_data(self):
        x = [[0.0], [0.5], [1.0]]
        y = [1.0, 2.0, 3.0]
        plain = RidgeConstraintModel().fit(x, y)
        wrapped = RidgeConstraintModel().fit(x, y)
        injector = ErrorInjector(enabled=True)
        predict_with_injection(wrapped, [0.3], injector, 0)
        assert np.array_equal(plain.weights, wrapped.weights)
        assert plain.intercept == wrapped.intercept

    def test_disabled_injection_bit_identical(self, rng):
        model = RidgeConstraintModel().fit(rng.uniform(size=(5, 2)), rng.uniform(size=5))
        injector = ErrorInjector(enabled=False)
        for _ in range(20):
            row = rng.uniform(size=2)
            assert predict_with_injection(model, row, injector, 3) == model.predict(row)

    def test_n_err_must_be_positive(self):
        with pytest.raises(SettingsError):
            ErrorInjector(n_err=0)


class TestMapeTracker:
    def test_exact_prediction_zero_error(self):
        tracker = MapeTracker()
        record = tracker.record(0, predicted=2.0, observed=2.0)
        assert record.ape == 0.0

    def test_five_percent_error(self):
        tracker = MapeTracker()
        record = tracker.record(0, predicted=2.1, observed=2.0)
        assert record.ape == pytest.approx(0.05, abs=1e-12)

    def test_mean_of_series(self):
        tracker = MapeTracker()
        tracker.record(0, predicted=2.1, observed=2.0)   # 5%
        tracker.record(1, predicted=1.03, observed=1.0)  # 3%
        assert tracker.mean_ape == pytest.approx(0.04, abs=1e-12)
        assert tracker.series() == [(0, pytest.approx(0.05)), (1, pytest.approx(0.03))]

    def test_zero_observation_skipped_with_warning(self, caplog):
        tracker = MapeTracker()
        with caplog.at_level("WARNING"):
            assert tracker.record(0, predicted=1.0, observed=0.0) is None
        assert not tracker.records
        assert "observed value is 0" in caplog.text
