"""Campaign-level data types shared by the tuning strategies and reporting."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .constraint import ErrorInjector, MapeRecord
from .errors import SettingsError
from .knobs import Config

DEFAULT_TOTAL_ITERATIONS = 1000
DEFAULT_INITIAL_POINTS = 30
DEFAULT_WORKERS = 10
DEFAULT_TRAINING_PERIOD = 3
DEFAULT_POLLING_SECONDS = 1.0
DEFAULT_RMSD_MAX = 2.1
DEFAULT_OVERHEAD_SECONDS = 20.0

STRATEGIES = ("sequential", "pamaliboo", "emaliboo", "random")


@dataclass(frozen=True)
class CampaignSettings:
    """Budget, parallelism and model knobs for one tuning campaign."""

    total_iterations: int = DEFAULT_TOTAL_ITERATIONS
    initial_points: int = DEFAULT_INITIAL_POINTS
    workers: int = DEFAULT_WORKERS
    training_period: int = DEFAULT_TRAINING_PERIOD
    polling_seconds: float = DEFAULT_POLLING_SECONDS
    rmsd_max: float = DEFAULT_RMSD_MAX
    seed: int = 0
    overhead_seconds: float = DEFAULT_OVERHEAD_SECONDS
    acquisition_restarts: int = 10
    gate_penalty: float = 1e-3
    ridge_alpha: float = 1.0
    error_injection: ErrorInjector = field(default_factory=ErrorInjector)

    def for_agent(self, agent_index: int) -> "CampaignSettings":
        """Per-agent settings for an ensemble member: split budget, own seed."""
        return replace(
            self,
            total_iterations=self.total_iterations // self.workers,
            initial_points=self.initial_points // self.workers,
            workers=1,
            seed=self.seed + agent_index,
        )


def validate_settings(settings: CampaignSettings, strategy: str | None = None) -> list[str]:
    """Every violated constraint as one human-readable diagnostic, no side effects."""
    problems = []
    s = settings
    if strategy is not None and strategy not in STRATEGIES:
        problems.append(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if s.workers < 1:
        problems.append(f"workers must be >= 1, got {s.workers}")
    if s.training_period < 1:
        problems.append(f"training_period must be positive, got {s.training_period}")
    if s.rmsd_max <= 0:
        problems.append(f"rmsd_max must be positive, got {s.rmsd_max}")
    if s.initial_points < 1:
        problems.append(f"initial_points must be >= 1, got {s.initial_points}")
    if s.total_iterations < s.initial_points:
        problems.append(
            f"total_iterations ({s.total_iterations}) must be >= initial_points ({s.initial_points})"
        )
    if s.polling_seconds <= 0:
        problems.append(f"polling_seconds must be positive, got {s.polling_seconds}")
    if s.overhead_seconds < 0:
        problems.append(f"overhead_seconds must be >= 0, got {s.overhead_seconds}")
    if s.acquisition_restarts < 1:
        problems.append(f"acquisition_restarts must be >= 1, got {s.acquisition_restarts}")
    if s.gate_penalty <= 0:
        problems.append(f"gate_penalty must be positive, got {s.gate_penalty}")
    if s.ridge_alpha <= 0:
        problems.append(f"ridge_alpha must be positive, got {s.ridge_alpha}")
    if strategy == "emaliboo":
        if s.workers >= 1 and s.total_iterations % s.workers != 0:
            problems.append(
                f"emaliboo requires total_iterations divisible by workers "
                f"(got {s.total_iterations} / {s.workers})"
            )
        if s.workers >= 1 and s.initial_points % s.workers != 0:
            problems.append(
                f"emaliboo requires initial_points divisible by workers "
                f"(got {s.initial_points} / {s.workers})"
            )
    return problems


def require_valid_settings(settings: CampaignSettings, strategy: str | None = None) -> None:
    problems = validate_settings(settings, strategy)
    if problems:
        raise SettingsError("; ".join(problems))


@dataclass(frozen=True)
class HistoryEntry:
    """One row of campaign history.

    Placeholder rows impute the surrogate's posterior mean for an evaluation
    that is still running; they carry no constraint value and disappear once
    the true result lands (or, for the final history, entirely).
    """

    config: Config
    objective: float
    constraint_value: float | None
    is_placeholder: bool
    iteration: int
    submit_time: float
    complete_time: float | None
    feasible: bool
    agent_id: int = 0


@dataclass(frozen=True)
class SelectionRecord:
    """What the optimizer believed when it chose a configuration."""

    iteration: int
    config: Config
    posterior_mean: float
    posterior_variance: float
    acquisition_value: float
    predicted_constraint: float | None
    predicted_feasible: bool | None
    time: float


@dataclass(frozen=True)
class TrainingEvent:
    """One retraining of the constraint model."""

    iteration: int
    time: float
    n_observations: int
    latest_observation_time: float


@dataclass
class CampaignResult:
    """Everything one campaign produced."""

    strategy: str
    seed: int
    settings: CampaignSettings
    history: list[HistoryEntry]
    selections: list[SelectionRecord] = field(default_factory=list)
    mape_records: list[MapeRecord] = field(default_factory=list)
    training_events: list[TrainingEvent] = field(default_factory=list)
    total_time: float = 0.0
    failures: int = 0
    per_agent: list["CampaignResult"] | None = None

    @property
    def true_entries(self) -> list[HistoryEntry]:
        return [e for e in self.history if not e.is_placeholder]

    @property
    def estimated_optimum(self) -> HistoryEntry | None:
        """Best feasible observation; best observation overall if none is feasible."""
        entries = self.true_entries
        if not entries:
            return None
        feasible = [e for e in entries if e.feasible]
        pool = feasible if feasible else entries
        return min(pool, key=lambda e: e.objective)

    @property
    def optimum_is_feasible(self) -> bool:
        best = self.estimated_optimum
        return best is not None and best.feasible


def current_incumbent(entries: list[HistoryEntry]) -> tuple[float, bool] | None:
    """Best objective among true observations, preferring feasible ones.

    Returns (value, from_feasible) or None when no true observation exists.
    """
    observed = [e for e in entries if not e.is_placeholder]
    if not observed:
        return None
    feasible = [e.objective for e in observed if e.feasible]
    if feasible:
        return min(feasible), True
    return min(e.objective for e in observed), False
