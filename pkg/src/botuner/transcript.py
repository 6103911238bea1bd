"""Campaign persistence: transcript CSV, prediction-error CSV, summary JSON.

Column order is stable and floats are serialized with repr so identical
campaigns produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .campaign import CampaignResult, HistoryEntry
from .constraint import MapeRecord
from .errors import SettingsError
from .knobs import KnobSpace
from .report import AggregatePoint, RegretPoint

FIXED_COLUMNS_BEFORE = ("iteration",)
FIXED_COLUMNS_AFTER = (
    "objective",
    "constraint_value",
    "is_placeholder",
    "feasible",
    "submit_time",
    "complete_time",
    "agent_id",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def transcript_columns(space: KnobSpace) -> list[str]:
    return [*FIXED_COLUMNS_BEFORE, *space.names, *FIXED_COLUMNS_AFTER]


def write_transcript(path: str | Path, space: KnobSpace, history: list[HistoryEntry]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(transcript_columns(space))
        for entry in history:
            writer.writerow(
                [
                    _fmt(entry.iteration),
                    *[_fmt(v) for v in entry.config],
                    _fmt(entry.objective),
                    _fmt(entry.constraint_value),
                    _fmt(entry.is_placeholder),
                    _fmt(entry.feasible),
                    _fmt(entry.submit_time),
                    _fmt(entry.complete_time),
                    _fmt(entry.agent_id),
                ]
            )


def transcript_bytes(space: KnobSpace, history: list[HistoryEntry]) -> bytes:
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(transcript_columns(space))
    for entry in history:
        writer.writerow(
            [
                _fmt(entry.iteration),
                *[_fmt(v) for v in entry.config],
                _fmt(entry.objective),
                _fmt(entry.constraint_value),
                _fmt(entry.is_placeholder),
                _fmt(entry.feasible),
                _fmt(entry.submit_time),
                _fmt(entry.complete_time),
                _fmt(entry.agent_id),
            ]
        )
    return buffer.getvalue().encode()


def read_transcript(path: str | Path) -> tuple[list[str], list[HistoryEntry]]:
    """Read a transcript; returns (knob names, history rows)."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header[: len(FIXED_COLUMNS_BEFORE)] != list(FIXED_COLUMNS_BEFORE) or header[
            -len(FIXED_COLUMNS_AFTER):
        ] != list(FIXED_COLUMNS_AFTER):
            raise SettingsError(f"{path}: not a campaign transcript (columns: {header})")
        knob_names = header[len(FIXED_COLUMNS_BEFORE): -len(FIXED_COLUMNS_AFTER)]
        d = len(knob_names)
        entries = []
        for row in reader:
            values = tuple(int(v) for v in row[1: 1 + d])
            tail = row[1 + d:]
            entries.append(
                HistoryEntry(
                    config=values,
                    objective=float(tail[0]),
                    constraint_value=float(tail[1]) if tail[1] else None,
                    is_placeholder=tail[2] == "true",
                    iteration=int(row[0]),
                    submit_time=float(tail[4]),
                    complete_time=float(tail[5]) if tail[5] else None,
                    feasible=tail[3] == "true",
                    agent_id=int(tail[6]),
                )
            )
    return knob_names, entries


MAPE_COLUMNS = (
    "iteration",
    "predicted",
    "observed",
    "ape",
    "predict_time",
    "observe_time",
    "agent_id",
)


def write_mape(path: str | Path, records: list[MapeRecord]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(MAPE_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    _fmt(r.iteration),
                    _fmt(r.predicted),
                    _fmt(r.observed),
                    _fmt(r.ape),
                    _fmt(r.predict_time),
                    _fmt(r.observe_time),
                    _fmt(r.agent_id),
                ]
            )


def read_mape(path: str | Path) -> list[MapeRecord]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != list(MAPE_COLUMNS):
            raise SettingsError(f"{path}: not a prediction-error file (columns: {header})")
        return [
            MapeRecord(
                iteration=int(row[0]),
                predicted=float(row[1]),
                observed=float(row[2]),
                ape=float(row[3]),
                predict_time=float(row[4]),
                observe_time=float(row[5]),
                agent_id=int(row[6]),
            )
            for row in reader
        ]


def write_summary(
    path: str | Path,
    space: KnobSpace,
    result: CampaignResult,
    cache_hit_rate: float | None = None,
) -> None:
    best = result.estimated_optimum
    payload = {
        "strategy": result.strategy,
        "seed": result.seed,
        "evaluations": len(result.true_entries),
        "failures": result.failures,
        "placeholders_remaining": sum(1 for e in result.history if e.is_placeholder),
        "selections": len(result.selections),
        "training_events": len(result.training_events),
        "total_time_seconds": result.total_time,
        "cache_hit_rate": cache_hit_rate,
        "incumbent": None
        if best is None
        else {
            "configuration": space.values_by_name(best.config),
            "objective": best.objective,
            "constraint_value": best.constraint_value,
            "feasible": best.feasible,
        },
        "incumbent_is_feasible": result.optimum_is_feasible,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_regret_csv(path: str | Path, curve: list[RegretPoint]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["time", "best_feasible_objective", "regret"])
        for point in curve:
            writer.writerow(
                [_fmt(point.time), _fmt(point.best_feasible_objective), _fmt(point.regret)]
            )


def write_ranking_csv(path: str | Path, series: list[tuple[float, float]]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["time", "rank"])
        for t, rank in series:
            writer.writerow([_fmt(t), _fmt(rank)])


def write_aggregate_csv(path: str | Path, points: list[AggregatePoint]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["time", "mean_objective", "mean_regret", "coverage"])
        for p in points:
            writer.writerow(
                [_fmt(p.time), _fmt(p.mean_objective), _fmt(p.mean_regret), _fmt(p.coverage)]
            )


def write_mape_report_csv(path: str | Path, rows: list[tuple[int, float, int]]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["iteration", "mape", "count"])
        for iteration, mape, count in rows:
            writer.writerow([_fmt(iteration), _fmt(mape), _fmt(count)])
