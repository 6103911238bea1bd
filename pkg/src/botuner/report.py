"""Post-processing of campaign histories into comparable metric series.

All series are step functions over completion time.  The feasible-objective
curve tracks the best feasible observation so far; segments before the first
feasible observation are undefined (None) rather than zero.  Aggregation
resamples step curves onto a shared grid with last-value-carried-forward and
averages only the defined samples, reporting coverage alongside.
"""

from __future__ import annotations

from dataclasses import dataclass

from .campaign import CampaignResult, HistoryEntry
from .errors import SettingsError

DEFAULT_GRID_STEP = 60.0


@dataclass(frozen=True)
class RegretPoint:
    """Best feasible objective at one completion instant.

    ``regret`` is the gap to the supplied ground-truth optimum and is None
    when no ground truth was given or nothing feasible has been seen yet.
    """

    time: float
    best_feasible_objective: float | None
    regret: float | None


@dataclass(frozen=True)
class AggregatePoint:
    time: float
    mean_objective: float | None
    mean_regret: float | None
    coverage: int


def _completed_entries(history: list[HistoryEntry]) -> list[HistoryEntry]:
    done = [e for e in history if not e.is_placeholder and e.complete_time is not None]
    return sorted(done, key=lambda e: (e.complete_time, e.iteration))


def feasible_regret_curve(
    history: list[HistoryEntry], ground_truth: float | None = None
) -> list[RegretPoint]:
    """Step curve of the best feasible objective over completion times."""
    points = []
    best: float | None = None
    for entry in _completed_entries(history):
        if entry.feasible:
            best = entry.objective if best is None else min(best, entry.objective)
        regret = None
        if best is not None and ground_truth is not None:
            regret = best - ground_truth
        points.append(
            RegretPoint(time=entry.complete_time, best_feasible_objective=best, regret=regret)
        )
    return points


def sample_step_curve(curve: list[RegretPoint], at: float) -> RegretPoint | None:
    """Last point at or before ``at``; None while the curve has not started."""
    chosen = None
    for point in curve:
        if point.time <= at:
            chosen = point
        else:
            break
    return chosen


def incumbent_at(curve: list[RegretPoint], at: float) -> float | None:
    point = sample_step_curve(curve, at)
    return point.best_feasible_objective if point is not None else None


def _curve_end(curve: list[RegretPoint]) -> float:
    return curve[-1].time if curve else 0.0


def _grid(end: float, step: float) -> list[float]:
    if step <= 0:
        raise SettingsError(f"grid step must be positive, got {step}")
    times = [0.0]
    t = step
    while t <= end + 1e-9:
        times.append(t)
        t += step
    if times[-1] < end:
        times.append(end)
    return times


def ranking_series(
    central: CampaignResult,
    ensemble: CampaignResult,
    grid_step: float = DEFAULT_GRID_STEP,
) -> list[tuple[float, float]]:
    """Rank of the centralized agent against the ensemble members over time.

    Rank 1 + the number of members whose feasible incumbent is strictly
    better at that instant; members without a feasible incumbent rank below
    anyone that has one, and exact ties do not count as better.  The series
    covers the overlap of the two campaigns' time windows.
    """
    if not ensemble.per_agent:
        raise SettingsError("ensemble result carries no per-agent traces")
    central_curve = feasible_regret_curve(central.history)
    agent_curves = [feasible_regret_curve(agent.history) for agent in ensemble.per_agent]
    end = min(_curve_end(central_curve), max(_curve_end(c) for c in agent_curves))
    series = []
    for t in _grid(end, grid_step):
        mine = incumbent_at(central_curve, t)
        others = [incumbent_at(curve, t) for curve in agent_curves]
        if mine is None:
            better = sum(1 for other in others if other is not None)
        else:
            better = sum(1 for other in others if other is not None and other < mine)
        series.append((t, float(1 + better)))
    return series


def average_rank_series(
    series_list: list[list[tuple[float, float]]],
) -> list[tuple[float, float]]:
    """Pointwise mean of ranking series sampled on identical grids."""
    if not series_list:
        raise SettingsError("nothing to average")
    length = min(len(s) for s in series_list)
    out = []
    for i in range(length):
        t = series_list[0][i][0]
        out.append((t, sum(s[i][1] for s in series_list) / len(series_list)))
    return out


def aggregate_curves(
    curves: list[list[RegretPoint]],
    grid_step: float = DEFAULT_GRID_STEP,
) -> list[AggregatePoint]:
    """Average step curves on a shared grid, skipping undefined segments."""
    if not curves:
        raise SettingsError("nothing to aggregate")
    end = max(_curve_end(c) for c in curves)
    out = []
    for t in _grid(end, grid_step):
        objectives = []
        regrets = []
        for curve in curves:
            value = incumbent_at(curve, t)
            if value is None:
                continue
            objectives.append(value)
            point = sample_step_curve(curve, t)
            if point is not None and point.regret is not None:
                regrets.append(point.regret)
        out.append(
            AggregatePoint(
                time=t,
                mean_objective=sum(objectives) / len(objectives) if objectives else None,
                mean_regret=sum(regrets) / len(regrets) if regrets else None,
                coverage=len(objectives),
            )
        )
    return out


def aggregate_seeds(
    results: list[CampaignResult],
    grid_step: float = DEFAULT_GRID_STEP,
    ground_truth: float | None = None,
) -> list[AggregatePoint]:
    """Average the feasible-objective curves of several seeded campaigns."""
    if not results:
        raise SettingsError("nothing to aggregate")
    curves = [feasible_regret_curve(r.history, ground_truth) for r in results]
    return aggregate_curves(curves, grid_step)


def mape_over_iterations(mape_records) -> list[tuple[int, float, int]]:
    """Mean absolute percentage error per iteration across agents and seeds.

    Returns (iteration, mean_ape, count) sorted by iteration.
    """
    buckets: dict[int, list[float]] = {}
    for record in mape_records:
        buckets.setdefault(record.iteration, []).append(record.ape)
    return [
        (iteration, sum(apes) / len(apes), len(apes))
        for iteration, apes in sorted(buckets.items())
    ]
