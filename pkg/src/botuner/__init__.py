"""Constrained parallel Bayesian-optimization autotuner.

Tunes integer application knobs against a black-box evaluation that reports
an execution time and a quality metric, minimizing quality**3 * time subject
to a quality threshold.  Ships a centralized asynchronous strategy, an
ensemble of independent sequential agents, a sequential core and a random
baseline, plus a virtual-clock executor for deterministic desk-scale runs.
"""

from .acquisition import AcquisitionContext, expected_improvement, maximize
from .campaign import (
    CampaignResult,
    CampaignSettings,
    HistoryEntry,
    validate_settings,
)
from .constraint import ErrorInjector, MapeTracker, RidgeConstraintModel
from .executor import LocalExecutor, VirtualExecutor
from .knobs import Config, KnobSpace, KnobSpec, ligen8_space, load_space, resolve_space
from .optimizers import run_emaliboo, run_pamaliboo, run_random, run_sequential
from .report import aggregate_seeds, feasible_regret_curve, ranking_series
from .target import (
    CachedTarget,
    EvaluationResult,
    ExternalCommandTarget,
    SurrogateTarget,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionContext",
    "CachedTarget",
    "CampaignResult",
    "CampaignSettings",
    "Config",
    "ErrorInjector",
    "EvaluationResult",
    "ExternalCommandTarget",
    "HistoryEntry",
    "KnobSpace",
    "KnobSpec",
    "LocalExecutor",
    "MapeTracker",
    "RidgeConstraintModel",
    "SurrogateTarget",
    "VirtualExecutor",
    "aggregate_seeds",
    "expected_improvement",
    "feasible_regret_curve",
    "ligen8_space",
    "load_space",
    "maximize",
    "ranking_series",
    "resolve_space",
    "run_emaliboo",
    "run_pamaliboo",
    "run_random",
    "run_sequential",
    "validate_settings",
]
