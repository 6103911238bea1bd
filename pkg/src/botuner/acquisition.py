"""Expected Improvement, constraint gating and simplex-search maximization.

The acquisition is Expected Improvement for minimization, multiplied by a
gate derived from the constraint estimator: predicted-feasible points keep
their EI value, predicted-infeasible points are scaled by a small positive
penalty instead of being zeroed so the maximizer keeps a usable signal even
when everything looks infeasible.  Maximization runs a clamped Nelder-Mead
simplex search in the unit cube from several seeded uniform restarts and
projects the winner back onto the integer lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraint import ErrorInjector, RidgeConstraintModel, predict_with_injection
from .errors import NumericalError, SettingsError
from .gp import GPState, posterior_unchecked
from .knobs import Config, KnobSpace

DEFAULT_RESTARTS = 10
DEFAULT_GATE_PENALTY = 1e-3

_SIGMA_FLOOR = 1e-12
_VARIANCE_TOLERANCE = 1e-10
_TIE_TOLERANCE = 1e-12

_SIMPLEX_EDGE = 0.1
_MAX_ITERATIONS = 200
_DIAMETER_TOLERANCE = 1e-4
_REFLECTION = 1.0
_EXPANSION = 2.0
_CONTRACTION = 0.5
_SHRINK = 0.5

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _norm_pdf(z: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / _SQRT2))


def expected_improvement(mean: float, variance: float, incumbent: float) -> float:
    """Expected reduction below the incumbent for a normal belief (minimization).

    Zero-uncertainty beliefs yield zero: without variance there is nothing to
    gain from re-evaluating, whatever the mean.
    """
    if variance < 0.0:
        if variance < -_VARIANCE_TOLERANCE:
            raise NumericalError(f"negative predictive variance {variance}")
        variance = 0.0
    sigma = math.sqrt(variance)
    if sigma < _SIGMA_FLOOR:
        return 0.0
    z = (incumbent - mean) / sigma
    value = (incumbent - mean) * _norm_cdf(z) + sigma * _norm_pdf(z)
    return max(value, 0.0)


@dataclass
class AcquisitionContext:
    """Everything a single acquisition evaluation needs.

    ``incumbent`` is the best feasible observed objective once a feasible
    observation exists, and the best observed objective before that.
    ``constraint_model`` may be None or untrained, in which case the gate is
    bypassed entirely.
    """

    gp: GPState
    incumbent: float
    space: KnobSpace
    constraint_model: RidgeConstraintModel | None = None
    feasible_interval: tuple[float, float] = (-math.inf, math.inf)
    gate_penalty: float = DEFAULT_GATE_PENALTY
    injector: ErrorInjector | None = None
    iteration: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.feasible_interval
        if lo > hi:
            raise SettingsError(f"feasible interval has min {lo} > max {hi}")
        if self.gate_penalty <= 0:
            raise SettingsError(f"gate penalty must be positive, got {self.gate_penalty}")
        self._lower = np.array([k.lower for k in self.space.knobs], dtype=float)
        self._upper = np.array([k.upper for k in self.space.knobs], dtype=float)
        self._span = self._upper - self._lower
        self._quality_idx = list(self.space.quality_indices)

    def _rounded_quality_features(self, point: np.ndarray) -> np.ndarray:
        """Normalized quality projection of the lattice point ``point`` rounds to.

        Vectorized twin of denormalize_round + quality_features, used inside
        the maximization loop.
        """
        scaled = self._lower + np.clip(point, 0.0, 1.0) * self._span
        values = np.clip(np.floor(scaled + 0.5), self._lower, self._upper)
        return ((values - self._lower) / self._span)[self._quality_idx]


def constraint_gate(ctx: AcquisitionContext, config: Config) -> tuple[float, float | None]:
    """Gate factor for a candidate configuration, plus the prediction behind it.

    Returns (1.0, None) when no trained constraint model is available.
    """
    model = ctx.constraint_model
    if model is None or not model.trained:
        return 1.0, None
    predicted = predict_with_injection(
        model, ctx.space.quality_features(config), ctx.injector, ctx.iteration
    )
    lo, hi = ctx.feasible_interval
    gate = 1.0 if lo <= predicted <= hi else ctx.gate_penalty
    return gate, predicted


def integrated_acquisition(ctx: AcquisitionContext, point) -> float:
    """Constraint-gated Expected Improvement at one unit-cube point.

    The surrogate is queried at the continuous point; the gate is evaluated
    at the integer configuration that point would round to, so the gate and
    the transcript agree about what is predicted feasible.
    """
    u = np.asarray(point, dtype=float)
    mean, variance = posterior_unchecked(ctx.gp, u)
    value = expected_improvement(mean, variance, ctx.incumbent)
    if value == 0.0:
        return 0.0
    model = ctx.constraint_model
    if model is None or not model.trained:
        return value
    features = ctx._rounded_quality_features(u)
    predicted = float(features @ model.weights + model.intercept)
    if ctx.injector is not None:
        predicted = ctx.injector.apply(predicted, ctx.iteration)
    lo, hi = ctx.feasible_interval
    gate = 1.0 if lo <= predicted <= hi else ctx.gate_penalty
    return value * gate


def _simplex_diameter(vertices: np.ndarray) -> float:
    diff = vertices[:, None, :] - vertices[None, :, :]
    return math.sqrt(float(np.max(np.einsum("ijk,ijk->ij", diff, diff))))


def _nelder_mead_min(fn, start: np.ndarray) -> tuple[np.ndarray, float]:
    """Clamped Nelder-Mead minimization inside the unit cube."""
    d = start.shape[0]
    vertices = np.tile(start, (d + 1, 1))
    for k in range(d):
        if vertices[k + 1, k] + _SIMPLEX_EDGE <= 1.0:
            vertices[k + 1, k] += _SIMPLEX_EDGE
        else:
            vertices[k + 1, k] -= _SIMPLEX_EDGE
    values = np.array([fn(v) for v in vertices])

    for _ in range(_MAX_ITERATIONS):
        order = np.argsort(values, kind="stable")
        vertices = vertices[order]
        values = values[order]
        if _simplex_diameter(vertices) < _DIAMETER_TOLERANCE:
            break
        centroid = vertices[:-1].mean(axis=0)
        worst = vertices[-1]
        reflected = np.clip(centroid + _REFLECTION * (centroid - worst), 0.0, 1.0)
        f_reflected = fn(reflected)
        if f_reflected < values[0]:
            expanded = np.clip(centroid + _EXPANSION * (reflected - centroid), 0.0, 1.0)
            f_expanded = fn(expanded)
            if f_expanded < f_reflected:
                vertices[-1], values[-1] = expanded, f_expanded
            else:
                vertices[-1], values[-1] = reflected, f_reflected
        elif f_reflected < values[-2]:
            vertices[-1], values[-1] = reflected, f_reflected
        else:
            if f_reflected < values[-1]:
                contracted = np.clip(centroid + _CONTRACTION * (reflected - centroid), 0.0, 1.0)
                f_contracted = fn(contracted)
                accept = f_contracted <= f_reflected
            else:
                contracted = np.clip(centroid + _CONTRACTION * (worst - centroid), 0.0, 1.0)
                f_contracted = fn(contracted)
                accept = f_contracted < values[-1]
            if accept:
                vertices[-1], values[-1] = contracted, f_contracted
            else:
                best = vertices[0]
                for k in range(1, d + 1):
                    vertices[k] = np.clip(best + _SHRINK * (vertices[k] - best), 0.0, 1.0)
                    values[k] = fn(vertices[k])

    i_best = int(np.argmin(values))
    return vertices[i_best].copy(), float(values[i_best])


def maximize_function(
    fn,
    space: KnobSpace,
    restarts: int = DEFAULT_RESTARTS,
    seed: int | tuple = 0,
) -> tuple[Config, np.ndarray, float]:
    """Maximize a unit-cube function and project the winner to the lattice.

    Runs one clamped simplex search per seeded uniform restart; ties between
    restarts (within 1e-12) keep the earliest restart's result.
    """
    if restarts < 1:
        raise SettingsError(f"restarts must be >= 1, got {restarts}")
    rng = np.random.default_rng(seed)
    best_point: np.ndarray | None = None
    best_value = -math.inf
    for _ in range(restarts):
        start = rng.uniform(size=space.dimension)
        point, neg_value = _nelder_mead_min(lambda u: -fn(u), start)
        value = -neg_value
        if best_point is None or value > best_value + _TIE_TOLERANCE:
            best_point, best_value = point, value
    assert best_point is not None
    return space.denormalize_round(best_point), best_point, best_value


def maximize(
    ctx: AcquisitionContext,
    restarts: int = DEFAULT_RESTARTS,
    seed: int | tuple = 0,
) -> tuple[Config, np.ndarray, float]:
    """Maximize the integrated acquisition over the context's knob space."""
    return maximize_function(
        lambda u: integrated_acquisition(ctx, u), ctx.space, restarts=restarts, seed=seed
    )
