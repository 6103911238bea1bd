"""Gaussian-process surrogate over the unit cube.

Exact inference with an isotropic squared-exponential kernel.  Targets are
standardized to zero mean / unit variance at fit time, the prior mean is zero
in standardized space, and the length scale is picked from a small fixed grid
by exact log marginal likelihood.  The grid-based selection is a deliberate
stand-in for gradient-based hyperparameter tuning: it is deterministic, cheap
at the campaign sizes this package targets (about a thousand points), and
easy to verify against dense linear-algebra oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import KnobDomainError, NumericalError

DEFAULT_LENGTH_SCALE_GRID = (0.05, 0.1, 0.2, 0.3, 0.5, 1.0)
DEFAULT_NOISE_VARIANCE = 1e-6
JITTER_LADDER = (1e-6, 1e-4, 1e-2)
TARGET_STD_FLOOR = 1e-12

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GPSettings:
    length_scale_grid: tuple[float, ...] = DEFAULT_LENGTH_SCALE_GRID
    signal_variance: float = 1.0
    noise_variance: float = DEFAULT_NOISE_VARIANCE
    jitter_ladder: tuple[float, ...] = JITTER_LADDER


@dataclass(frozen=True)
class GPState:
    """Fitted surrogate: training data, hyperparameters and factor caches.

    ``cholesky_factor`` is the lower factor of the kernel gram matrix plus
    noise (and any jitter escalation), in standardized target space;
    ``alpha`` is the precomputed solve of that system against the
    standardized targets, and ``gram_inverse`` the full inverse assembled
    from the factor so point queries cost one matrix-vector product.
    """

    train_inputs: np.ndarray
    train_targets: np.ndarray
    length_scale: float
    signal_variance: float
    noise_variance: float
    target_mean: float
    target_std: float
    cholesky_factor: np.ndarray
    alpha: np.ndarray
    gram_inverse: np.ndarray
    train_sqnorms: np.ndarray

    @property
    def n_observations(self) -> int:
        return self.train_inputs.shape[0]

    @property
    def prior_variance(self) -> float:
        """Prior predictive variance in original target units."""
        return self.signal_variance * self.target_std**2


def _squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kernel(d2: np.ndarray, length_scale: float, signal_variance: float) -> np.ndarray:
    return signal_variance * np.exp(-d2 / (2.0 * length_scale**2))


def _cholesky_with_jitter(
    gram: np.ndarray, noise_variance: float, jitter_ladder: tuple[float, ...]
) -> np.ndarray:
    n = gram.shape[0]
    eye = np.eye(n)
    for extra in (0.0, *jitter_ladder):
        try:
            return np.linalg.cholesky(gram + (noise_variance + extra) * eye)
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(
        f"kernel matrix not positive definite after jitter escalation {jitter_ladder}"
    )


def _log_marginal_likelihood(factor: np.ndarray, alpha: np.ndarray, y: np.ndarray) -> float:
    n = y.shape[0]
    return float(
        -0.5 * y @ alpha - np.sum(np.log(np.diag(factor))) - 0.5 * n * _LOG_2PI
    )


def fit(inputs, targets, settings: GPSettings = GPSettings()) -> GPState:
    """Fit the surrogate to unit-cube inputs and raw objective values.

    The length scale is chosen from ``settings.length_scale_grid`` by
    maximizing the exact log marginal likelihood; ties go to the smaller
    scale (grid order is ascending and only strict improvements win).
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if x.shape[0] == 0:
        raise KnobDomainError("cannot fit a surrogate with zero observations")
    if x.shape[0] != y.shape[0]:
        raise KnobDomainError(
            f"got {x.shape[0]} inputs but {y.shape[0]} targets"
        )
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise KnobDomainError("non-finite value in training data")
    if np.any(x < -1e-9) or np.any(x > 1.0 + 1e-9):
        raise KnobDomainError("training inputs must lie in the unit cube")

    target_mean = float(np.mean(y))
    target_std = max(float(np.std(y)), TARGET_STD_FLOOR)
    y_std = (y - target_mean) / target_std

    d2 = _squared_distances(x, x)
    best: tuple[float, float, np.ndarray, np.ndarray] | None = None
    for length_scale in settings.length_scale_grid:
        gram = _kernel(d2, length_scale, settings.signal_variance)
        factor = _cholesky_with_jitter(gram, settings.noise_variance, settings.jitter_ladder)
        alpha = solve_triangular(
            factor.T, solve_triangular(factor, y_std, lower=True), lower=False
        )
        lml = _log_marginal_likelihood(factor, alpha, y_std)
        if best is None or lml > best[0]:
            best = (lml, length_scale, factor, alpha)
    assert best is not None
    _, length_scale, factor, alpha = best
    factor_inverse = solve_triangular(factor, np.eye(factor.shape[0]), lower=True)
    return GPState(
        train_inputs=x,
        train_targets=y,
        length_scale=float(length_scale),
        signal_variance=settings.signal_variance,
        noise_variance=settings.noise_variance,
        target_mean=target_mean,
        target_std=target_std,
        cholesky_factor=factor,
        alpha=alpha,
        gram_inverse=factor_inverse.T @ factor_inverse,
        train_sqnorms=np.einsum("ij,ij->i", x, x),
    )


def posterior_unchecked(state: GPState, u: np.ndarray) -> tuple[float, float]:
    """Posterior at a pre-validated query array; hot path for maximization."""
    d2 = state.train_sqnorms - 2.0 * (state.train_inputs @ u) + u @ u
    k_star = _kernel(d2, state.length_scale, state.signal_variance)
    mean_std = float(k_star @ state.alpha)
    var_std = state.signal_variance - float(k_star @ (state.gram_inverse @ k_star))
    var_std = max(var_std, 0.0)
    mean = state.target_mean + state.target_std * mean_std
    variance = var_std * state.target_std**2
    return mean, variance


def posterior(state: GPState, point) -> tuple[float, float]:
    """Posterior mean and variance at one unit-cube point, in original units.

    Variance is clamped at zero; the exact algebra can dip a hair below zero
    at training points.
    """
    u = np.asarray(point, dtype=float).ravel()
    if u.shape[0] != state.train_inputs.shape[1]:
        raise KnobDomainError(
            f"query has dimension {u.shape[0]}, surrogate expects {state.train_inputs.shape[1]}"
        )
    if not np.all(np.isfinite(u)):
        raise KnobDomainError("non-finite query point")
    return posterior_unchecked(state, u)
