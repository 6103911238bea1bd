"""Asynchronous evaluation of configurations on a fixed pool of workers.

Two backends share one small surface (submit / collect_completed / wait /
advance / now).  The virtual backend runs on a simulated clock whose waits
jump straight to the next completion visible at polling granularity, which
makes campaign transcripts fully deterministic and desk-scale fast.  The
local backend runs evaluations concurrently in a thread pool, one slot per
worker, and is the seam where a cluster scheduler client could be added.

The driving optimizer never queues work: submissions are rejected outright
when every worker is busy, and the driver is expected to poll first.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass

from .errors import NoRunningJobsError, SettingsError, WorkerSaturatedError
from .knobs import Config
from .target import EvaluationResult

logger = logging.getLogger(__name__)

DEFAULT_POLLING_SECONDS = 1.0

PENDING = "pending"
RUNNING = "running"
DONE = "done"
FAILED = "failed"


@dataclass
class Job:
    """One submitted evaluation and its lifecycle."""

    id: int
    config: Config
    submitted_at: float
    state: str = PENDING
    result: EvaluationResult | None = None
    completed_at: float | None = None
    error: str | None = None


class VirtualExecutor:
    """Simulated worker pool on a virtual clock.

    Job durations equal each result's exec_time; driver-side selection cost
    is charged separately through advance().  Failed evaluations occupy a
    worker for one polling interval.
    """

    def __init__(self, target, workers: int,
                 polling_seconds: float = DEFAULT_POLLING_SECONDS):
        if workers < 1:
            raise SettingsError(f"workers must be >= 1, got {workers}")
        if polling_seconds <= 0:
            raise SettingsError(f"polling_seconds must be positive, got {polling_seconds}")
        self.target = target
        self.workers = workers
        self.polling_seconds = float(polling_seconds)
        self.clock = 0.0
        self._next_id = 0
        self._in_flight: dict[int, tuple[Job, float]] = {}

    def now(self) -> float:
        return self.clock

    def running_count(self) -> int:
        return sum(1 for _, finish in self._in_flight.values() if finish > self.clock)

    def idle_workers(self) -> int:
        return self.workers - self.running_count()

    def submit(self, config: Config) -> int:
        if self.idle_workers() < 1:
            raise WorkerSaturatedError(
                f"all {self.workers} workers busy at t={self.clock}"
            )
        job = Job(id=self._next_id, config=config, submitted_at=self.clock, state=RUNNING)
        self._next_id += 1
        try:
            result = self.target(config)
            duration = result.exec_time
            job.result = result
        except Exception as exc:
            job.error = repr(exc)
            duration = self.polling_seconds
        self._in_flight[job.id] = (job, self.clock + duration)
        return job.id

    def collect_completed(self) -> list[Job]:
        finished = [
            (finish, job)
            for job, finish in self._in_flight.values()
            if finish <= self.clock
        ]
        finished.sort(key=lambda pair: (pair[0], pair[1].id))
        out = []
        for finish, job in finished:
            del self._in_flight[job.id]
            job.completed_at = finish
            job.state = FAILED if job.error is not None else DONE
            out.append(job)
        return out

    def advance(self, seconds: float) -> None:
        """Charge driver-side time (selection overhead) to the virtual clock."""
        if seconds < 0:
            raise SettingsError(f"cannot advance the clock by {seconds}")
        self.clock += seconds

    def advance_until_any_completion(self) -> float:
        """Jump to the first polling tick at which some completion is visible.

        Returns the elapsed virtual seconds.
        """
        if not self._in_flight:
            raise NoRunningJobsError("nothing is running; nothing to wait for")
        earliest = min(finish for _, finish in self._in_flight.values())
        if earliest <= self.clock:
            return 0.0
        ticks = math.ceil(earliest / self.polling_seconds - 1e-9)
        new_clock = max(ticks * self.polling_seconds, self.clock)
        elapsed = new_clock - self.clock
        self.clock = new_clock
        return elapsed

    def wait(self) -> float:
        return self.advance_until_any_completion()


class LocalExecutor:
    """Thread-pool backend running one evaluation per worker slot.

    Timestamps are wall-clock seconds since the executor was created.
    """

    def __init__(self, target, workers: int,
                 polling_seconds: float = DEFAULT_POLLING_SECONDS):
        if workers < 1:
            raise SettingsError(f"workers must be >= 1, got {workers}")
        if polling_seconds <= 0:
            raise SettingsError(f"polling_seconds must be positive, got {polling_seconds}")
        self.target = target
        self.workers = workers
        self.polling_seconds = float(polling_seconds)
        self._pool = ThreadPoolExecutor(max_workers=workers)
        self._t0 = time.monotonic()
        self._next_id = 0
        self._in_flight: dict[int, tuple[Job, Future]] = {}

    def now(self) -> float:
        return time.monotonic() - self._t0

    def running_count(self) -> int:
        return sum(1 for _, future in self._in_flight.values() if not future.done())

    def idle_workers(self) -> int:
        return self.workers - self.running_count()

    def _run(self, config: Config) -> tuple[EvaluationResult, float]:
        result = self.target(config)
        return result, self.now()

    def submit(self, config: Config) -> int:
        if self.idle_workers() < 1:
            raise WorkerSaturatedError(f"all {self.workers} workers busy")
        job = Job(id=self._next_id, config=config, submitted_at=self.now(), state=RUNNING)
        self._next_id += 1
        self._in_flight[job.id] = (job, self._pool.submit(self._run, config))
        return job.id

    def collect_completed(self) -> list[Job]:
        out = []
        for job_id in list(self._in_flight):
            job, future = self._in_flight[job_id]
            if not future.done():
                continue
            del self._in_flight[job_id]
            try:
                result, finished_at = future.result()
                job.result = result
                job.completed_at = finished_at
                job.state = DONE
            except Exception as exc:
                job.error = repr(exc)
                job.completed_at = self.now()
                job.state = FAILED
                logger.warning("evaluation %d failed: %s", job.id, job.error)
            out.append(job)
        out.sort(key=lambda j: (j.completed_at, j.id))
        return out

    def advance(self, seconds: float) -> None:
        """Real time passes by itself; nothing to charge."""

    def wait(self) -> float:
        if not self._in_flight:
            raise NoRunningJobsError("nothing is running; nothing to wait for")
        time.sleep(self.polling_seconds)
        return self.polling_seconds

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
