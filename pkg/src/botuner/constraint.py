"""Online linear estimator of the constrained quality metric.

A ridge regression over the normalized quality-affecting knob values is
retrained periodically from all true (non-placeholder) observations.  An
optional error injector scales predictions on the read path to simulate an
inaccurate model during the early iterations; it never touches training
data.  Prediction accuracy on newly chosen configurations is tracked as
absolute percentage error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import SettingsError, UntrainedModelError

logger = logging.getLogger(__name__)

DEFAULT_RIDGE_ALPHA = 1.0
DEFAULT_EPSILON0 = 1.5
DEFAULT_ERROR_ITERATIONS = 50


class RidgeConstraintModel:
    """Ridge regression with unpenalized intercept, solved in closed form.

    Stays untrained (and refuses point predictions) until fit with at least
    two observations; callers bypass the acquisition gate in that state.
    """

    def __init__(self, ridge_alpha: float = DEFAULT_RIDGE_ALPHA):
        if ridge_alpha <= 0:
            raise SettingsError(f"ridge_alpha must be positive, got {ridge_alpha}")
        self.ridge_alpha = float(ridge_alpha)
        self.weights: np.ndarray | None = None
        self.intercept: float = 0.0
        self.trained: bool = False
        self.train_count: int = 0

    def fit(self, features, values) -> "RidgeConstraintModel":
        """Refit from scratch on the given feature rows and constraint values."""
        x = np.atleast_2d(np.asarray(features, dtype=float))
        y = np.asarray(values, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise SettingsError(f"got {x.shape[0]} feature rows but {y.shape[0]} values")
        if x.shape[0] < 2:
            logger.debug("constraint model not trained: %d observation(s)", x.shape[0])
            return self
        x_mean = x.mean(axis=0)
        y_mean = float(y.mean())
        xc = x - x_mean
        yc = y - y_mean
        d = x.shape[1]
        system = xc.T @ xc + self.ridge_alpha * np.eye(d)
        self.weights = np.linalg.solve(system, xc.T @ yc)
        self.intercept = y_mean - float(x_mean @ self.weights)
        self.trained = True
        self.train_count = int(x.shape[0])
        return self

    def predict(self, features) -> float:
        """Predict the constraint value for one feature row."""
        if not self.trained or self.weights is None:
            raise UntrainedModelError(
                "constraint model untrained: bypass the acquisition gate"
            )
        row = np.asarray(features, dtype=float).ravel()
        return float(row @ self.weights + self.intercept)


@dataclass(frozen=True)
class ErrorInjector:
    """Multiplicative prediction-error schedule.

    The factor starts at ``epsilon0`` and decreases linearly to 1 over the
    first ``n_err`` iterations, staying at exactly 1 afterwards.  Applies
    only to predictions, never to stored training targets.
    """

    enabled: bool = False
    epsilon0: float = DEFAULT_EPSILON0
    n_err: int = DEFAULT_ERROR_ITERATIONS

    def __post_init__(self) -> None:
        if self.n_err < 1:
            raise SettingsError(f"n_err must be >= 1, got {self.n_err}")

    def factor(self, iteration: int) -> float:
        return self.epsilon0 - (self.epsilon0 - 1.0) * min(iteration, self.n_err) / self.n_err

    def apply(self, prediction: float, iteration: int) -> float:
        if not self.enabled:
            return prediction
        return prediction * self.factor(iteration)


def predict_with_injection(
    model: RidgeConstraintModel,
    features,
    injector: ErrorInjector | None,
    iteration: int,
) -> float:
    """Model prediction for one feature row, scaled by the injector when enabled."""
    prediction = model.predict(features)
    if injector is None:
        return prediction
    return injector.apply(prediction, iteration)


@dataclass(frozen=True)
class MapeRecord:
    iteration: int
    predicted: float
    observed: float
    ape: float
    predict_time: float
    observe_time: float
    agent_id: int = 0


class MapeTracker:
    """Absolute percentage errors of predictions on newly chosen points.

    Each record pairs a prediction made at selection time with the observed
    value that arrived later; predictions always predate the observation's
    entry into any training set.
    """

    def __init__(self) -> None:
        self.records: list[MapeRecord] = []

    def record(
        self,
        iteration: int,
        predicted: float,
        observed: float,
        predict_time: float = 0.0,
        observe_time: float = 0.0,
        agent_id: int = 0,
    ) -> MapeRecord | None:
        if observed == 0:
            logger.warning(
                "skipping percentage-error record at iteration %d: observed value is 0",
                iteration,
            )
            return None
        rec = MapeRecord(
            iteration=iteration,
            predicted=float(predicted),
            observed=float(observed),
            ape=abs(predicted - observed) / abs(observed),
            predict_time=predict_time,
            observe_time=observe_time,
            agent_id=agent_id,
        )
        self.records.append(rec)
        return rec

    @property
    def mean_ape(self) -> float | None:
        if not self.records:
            return None
        return float(np.mean([r.ape for r in self.records]))

    def series(self) -> list[tuple[int, float]]:
        return [(r.iteration, r.ape) for r in self.records]
