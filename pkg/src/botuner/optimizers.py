"""Tuning strategies over a black-box target.

Four drivers share one selection core (surrogate fit, periodic constraint
training, acquisition maximization):

- ``run_sequential``: classic one-at-a-time constrained BO.
- ``run_pamaliboo``: a single centralized agent submitting asynchronously to
  a worker pool; pending evaluations are imputed with the surrogate's
  posterior mean at submission so consecutive selections come from different
  posteriors, and every batch of collected completions drops all imputed
  rows and appends the true results.
- ``run_emaliboo``: an ensemble of independent sequential agents that share
  nothing; the merged result keeps per-agent traces and the best incumbent.
- ``run_random``: seeded uniform sampling dispatched on the same pool, as a
  baseline.

Budgets count successful evaluations: a failed evaluation is logged,
skipped, and does not consume an iteration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import gp
from .acquisition import AcquisitionContext, constraint_gate, maximize
from .campaign import (
    CampaignResult,
    CampaignSettings,
    HistoryEntry,
    SelectionRecord,
    TrainingEvent,
    current_incumbent,
    require_valid_settings,
)
from .constraint import MapeTracker, RidgeConstraintModel
from .errors import TargetError
from .knobs import Config, KnobSpace

logger = logging.getLogger(__name__)

_INIT_STREAM = 11
_SELECT_STREAM = 13
_RANDOM_STREAM = 17


def initial_configs(space: KnobSpace, settings: CampaignSettings) -> list[Config]:
    """The seeded initial design: uniform independent draws per knob."""
    rng = np.random.default_rng((settings.seed, _INIT_STREAM))
    return [space.sample(rng) for _ in range(settings.initial_points)]


def _selection_seed(seed: int, step: int) -> tuple[int, int, int]:
    return (seed, _SELECT_STREAM, step)


@dataclass(frozen=True)
class DriverSnapshot:
    """State handed to an observer callback at driver events."""

    event: str
    time: float
    bo_step: int
    running_jobs: int
    history: tuple[HistoryEntry, ...]


class _BoCore:
    """Selection machinery shared by the sequential and asynchronous drivers."""

    def __init__(self, space: KnobSpace, settings: CampaignSettings, agent_id: int = 0):
        self.space = space
        self.settings = settings
        self.agent_id = agent_id
        self.history: list[HistoryEntry] = []
        self.model = RidgeConstraintModel(settings.ridge_alpha)
        self.mape = MapeTracker()
        self.training_events: list[TrainingEvent] = []
        self.selections: list[SelectionRecord] = []
        self._gp_state: gp.GPState | None = None
        self._dirty = True
        self._warned_untrained = False

    def append(self, entry: HistoryEntry) -> None:
        self.history.append(entry)
        self._dirty = True

    def strip_placeholders(self) -> int:
        before = len(self.history)
        self.history = [e for e in self.history if not e.is_placeholder]
        removed = before - len(self.history)
        if removed:
            self._dirty = True
        return removed

    @property
    def true_entries(self) -> list[HistoryEntry]:
        return [e for e in self.history if not e.is_placeholder]

    def refit(self) -> gp.GPState:
        if self._dirty or self._gp_state is None:
            inputs = [self.space.normalize(e.config) for e in self.history]
            targets = [e.objective for e in self.history]
            self._gp_state = gp.fit(inputs, targets)
            self._dirty = False
        return self._gp_state

    def maybe_train_constraint(self, bo_step: int, now: float) -> None:
        if bo_step % self.settings.training_period != 0:
            return
        observed = self.true_entries
        if len(observed) < 2:
            return
        features = [self.space.quality_features(e.config) for e in observed]
        values = [e.constraint_value for e in observed]
        self.model.fit(features, values)
        self.training_events.append(
            TrainingEvent(
                iteration=bo_step,
                time=now,
                n_observations=len(observed),
                latest_observation_time=max(e.complete_time for e in observed),
            )
        )

    def select(self, bo_step: int, now: float):
        """Choose the next configuration under the current models.

        Returns (config, believed_mean, predicted_constraint).
        """
        state = self.refit()
        incumbent = current_incumbent(self.history)
        assert incumbent is not None, "selection requires at least one observation"
        if not self.model.trained and not self._warned_untrained:
            logger.warning(
                "constraint model untrained at step %d: acquisition gate bypassed", bo_step
            )
            self._warned_untrained = True
        ctx = AcquisitionContext(
            gp=state,
            incumbent=incumbent[0],
            space=self.space,
            constraint_model=self.model if self.model.trained else None,
            feasible_interval=(-math.inf, self.settings.rmsd_max),
            gate_penalty=self.settings.gate_penalty,
            injector=self.settings.error_injection,
            iteration=bo_step,
        )
        config, _, acq_value = maximize(
            ctx,
            restarts=self.settings.acquisition_restarts,
            seed=_selection_seed(self.settings.seed, bo_step),
        )
        mean, variance = gp.posterior(state, self.space.normalize(config))
        _, predicted = constraint_gate(ctx, config)
        lo, hi = ctx.feasible_interval
        self.selections.append(
            SelectionRecord(
                iteration=bo_step,
                config=config,
                posterior_mean=mean,
                posterior_variance=variance,
                acquisition_value=acq_value,
                predicted_constraint=predicted,
                predicted_feasible=(lo <= predicted <= hi) if predicted is not None else None,
                time=now,
            )
        )
        return config, mean, predicted


def _failure_guard(failures: int, budget: int) -> None:
    if failures > max(10 * budget, 100):
        raise TargetError(
            f"aborting campaign: {failures} failed evaluations against a budget of {budget}"
        )


def run_sequential(
    space: KnobSpace,
    target,
    settings: CampaignSettings,
    agent_id: int = 0,
) -> CampaignResult:
    """One-at-a-time constrained BO: select, evaluate, absorb, repeat."""
    require_valid_settings(settings, "sequential")
    core = _BoCore(space, settings, agent_id)
    clock = 0.0
    eval_index = 0
    failures = 0

    for config in initial_configs(space, settings):
        try:
            result = target(config)
        except TargetError as exc:
            failures += 1
            logger.warning("initial evaluation failed, skipping: %s", exc)
            _failure_guard(failures, settings.total_iterations)
            continue
        submit_time = clock
        clock += result.exec_time
        core.append(
            HistoryEntry(
                config=config,
                objective=result.objective,
                constraint_value=result.rmsd_p75,
                is_placeholder=False,
                iteration=eval_index,
                submit_time=submit_time,
                complete_time=clock,
                feasible=result.feasible,
                agent_id=agent_id,
            )
        )
        eval_index += 1

    bo_step = 0
    while len(core.history) < settings.total_iterations:
        core.maybe_train_constraint(bo_step, clock)
        config, _, predicted = core.select(bo_step, clock)
        clock += settings.overhead_seconds
        try:
            result = target(config)
        except TargetError as exc:
            failures += 1
            logger.warning("evaluation failed at step %d, skipping: %s", bo_step, exc)
            bo_step += 1
            _failure_guard(failures, settings.total_iterations)
            continue
        submit_time = clock
        clock += result.exec_time
        core.append(
            HistoryEntry(
                config=config,
                objective=result.objective,
                constraint_value=result.rmsd_p75,
                is_placeholder=False,
                iteration=eval_index,
                submit_time=submit_time,
                complete_time=clock,
                feasible=result.feasible,
                agent_id=agent_id,
            )
        )
        if predicted is not None:
            core.mape.record(
                iteration=bo_step,
                predicted=predicted,
                observed=result.rmsd_p75,
                predict_time=submit_time - settings.overhead_seconds,
                observe_time=clock,
                agent_id=agent_id,
            )
        eval_index += 1
        bo_step += 1

    return CampaignResult(
        strategy="sequential",
        seed=settings.seed,
        settings=settings,
        history=core.history,
        selections=core.selections,
        mape_records=core.mape.records,
        training_events=core.training_events,
        total_time=clock,
        failures=failures,
    )


@dataclass
class _Pending:
    eval_index: int
    bo_step: int | None
    predicted: float | None
    predict_time: float


def _emit(observer, event: str, executor, bo_step: int, history: list[HistoryEntry]) -> None:
    if observer is not None:
        observer(
            DriverSnapshot(
                event=event,
                time=executor.now(),
                bo_step=bo_step,
                running_jobs=executor.running_count(),
                history=tuple(history),
            )
        )


def run_pamaliboo(
    space: KnobSpace,
    target,
    executor,
    settings: CampaignSettings,
    observer=None,
) -> CampaignResult:
    """Centralized asynchronous BO on a worker pool.

    The driver never queues work: when every worker is busy it waits one
    polling interval and retries.  Each submission appends an imputed row at
    the surrogate's current posterior mean; any batch of collected
    completions first drops all imputed rows, then appends the true results.
    """
    require_valid_settings(settings, "pamaliboo")
    core = _BoCore(space, settings)
    pending: dict[int, _Pending] = {}
    successes = 0
    failures = 0
    eval_index = 0
    bo_step = 0
    budget = settings.total_iterations

    def absorb() -> None:
        nonlocal successes, failures
        jobs = executor.collect_completed()
        if not jobs:
            return
        core.strip_placeholders()
        for job in jobs:
            info = pending.pop(job.id)
            if job.error is not None or job.result is None:
                failures += 1
                logger.warning("evaluation %d failed, skipping: %s", job.id, job.error)
                _failure_guard(failures, budget)
                continue
            core.append(
                HistoryEntry(
                    config=job.config,
                    objective=job.result.objective,
                    constraint_value=job.result.rmsd_p75,
                    is_placeholder=False,
                    iteration=info.eval_index,
                    submit_time=job.submitted_at,
                    complete_time=job.completed_at,
                    feasible=job.result.feasible,
                    agent_id=0,
                )
            )
            successes += 1
            if info.predicted is not None:
                core.mape.record(
                    iteration=info.bo_step,
                    predicted=info.predicted,
                    observed=job.result.rmsd_p75,
                    predict_time=info.predict_time,
                    observe_time=job.completed_at,
                )
        _emit(observer, "collect", executor, bo_step, core.history)

    for config in initial_configs(space, settings):
        while executor.idle_workers() < 1:
            executor.wait()
            absorb()
        job_id = executor.submit(config)
        pending[job_id] = _Pending(
            eval_index=eval_index, bo_step=None, predicted=None, predict_time=executor.now()
        )
        eval_index += 1
    while pending:
        executor.wait()
        absorb()

    while True:
        absorb()
        if successes >= budget and not pending:
            break
        if successes + len(pending) >= budget or executor.idle_workers() < 1:
            executor.wait()
            continue
        core.maybe_train_constraint(bo_step, executor.now())
        config, believed_mean, predicted = core.select(bo_step, executor.now())
        predict_time = executor.now()
        executor.advance(settings.overhead_seconds)
        job_id = executor.submit(config)
        pending[job_id] = _Pending(
            eval_index=eval_index,
            bo_step=bo_step,
            predicted=predicted,
            predict_time=predict_time,
        )
        core.append(
            HistoryEntry(
                config=config,
                objective=believed_mean,
                constraint_value=None,
                is_placeholder=True,
                iteration=eval_index,
                submit_time=executor.now(),
                complete_time=None,
                feasible=False,
                agent_id=0,
            )
        )
        eval_index += 1
        bo_step += 1
        _emit(observer, "submit", executor, bo_step, core.history)

    core.history.sort(key=lambda e: e.iteration)
    _emit(observer, "done", executor, bo_step, core.history)
    return CampaignResult(
        strategy="pamaliboo",
        seed=settings.seed,
        settings=settings,
        history=core.history,
        selections=core.selections,
        mape_records=core.mape.records,
        training_events=core.training_events,
        total_time=executor.now(),
        failures=failures,
    )


def run_emaliboo(
    space: KnobSpace,
    target_factory,
    settings: CampaignSettings,
) -> CampaignResult:
    """Ensemble of independent sequential agents with split budget and seeds.

    Agent k runs with seed ``settings.seed + k``, a 1/q share of the total
    and initial budgets, and its own target instance (so quality caches are
    not shared).  The merged history tags each row with its agent.
    """
    require_valid_settings(settings, "emaliboo")
    agents: list[CampaignResult] = []
    for k in range(settings.workers):
        agents.append(run_sequential(space, target_factory(), settings.for_agent(k)))

    merged_history = [
        replace(entry, agent_id=k)
        for k, agent in enumerate(agents)
        for entry in agent.history
    ]
    merged_mape = [
        replace(record, agent_id=k)
        for k, agent in enumerate(agents)
        for record in agent.mape_records
    ]
    return CampaignResult(
        strategy="emaliboo",
        seed=settings.seed,
        settings=settings,
        history=merged_history,
        mape_records=merged_mape,
        total_time=max(agent.total_time for agent in agents),
        failures=sum(agent.failures for agent in agents),
        per_agent=agents,
    )


def run_random(
    space: KnobSpace,
    target,
    executor,
    settings: CampaignSettings,
) -> CampaignResult:
    """Seeded uniform sampling dispatched asynchronously on the worker pool."""
    require_valid_settings(settings, "random")
    rng = np.random.default_rng((settings.seed, _RANDOM_STREAM))
    history: list[HistoryEntry] = []
    pending: dict[int, int] = {}
    successes = 0
    failures = 0
    eval_index = 0
    budget = settings.total_iterations

    def absorb() -> None:
        nonlocal successes, failures
        for job in executor.collect_completed():
            index = pending.pop(job.id)
            if job.error is not None or job.result is None:
                failures += 1
                logger.warning("evaluation %d failed, skipping: %s", job.id, job.error)
                _failure_guard(failures, budget)
                continue
            history.append(
                HistoryEntry(
                    config=job.config,
                    objective=job.result.objective,
                    constraint_value=job.result.rmsd_p75,
                    is_placeholder=False,
                    iteration=index,
                    submit_time=job.submitted_at,
                    complete_time=job.completed_at,
                    feasible=job.result.feasible,
                    agent_id=0,
                )
            )
            successes += 1

    while True:
        absorb()
        if successes >= budget and not pending:
            break
        if successes + len(pending) >= budget or executor.idle_workers() < 1:
            executor.wait()
            continue
        job_id = executor.submit(space.sample(rng))
        pending[job_id] = eval_index
        eval_index += 1

    history.sort(key=lambda e: e.iteration)
    return CampaignResult(
        strategy="random",
        seed=settings.seed,
        settings=settings,
        history=history,
        total_time=executor.now(),
        failures=failures,
    )
