"""Black-box evaluation targets.

Three interchangeable callables map a configuration to an evaluation result:
an analytic surrogate of the virtual-screening application, an external
command adapter that shells out to a user-provided wrapper script, and a
caching decorator that reuses the quality metric across configurations that
share their quality-affecting knob values.

The surrogate is a transparent stand-in for profiling-trained oracle models
that are not shippable.  Its structure mirrors the real application: the
quality metric depends only on the quality-affecting knobs and improves
(decreases) monotonically with quality effort, execution time grows with
quality effort, and the throughput-only knobs have interior sweet spots.
The coefficients are fixed constants of this package, not measurements.
"""

from __future__ import annotations

import json
import logging
import math
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import KnobDomainError, TargetError
from .knobs import Config, KnobSpace

logger = logging.getLogger(__name__)

DEFAULT_RMSD_MAX = 2.1

RMSD_FLOOR = 0.8
RMSD_RANGE = 2.6
RMSD_DECAY = 2.5
TIME_FLOOR = 30.0
TIME_QUALITY_SLOPE = 300.0
CUDA_TIME_WEIGHT = 80.0
CUDA_SWEET_SPOT = 0.6
BUFFER_TIME_WEIGHT = 40.0
BUFFER_SWEET_SPOT = 0.5

_OBJECTIVE_REL_TOL = 1e-9


@dataclass(frozen=True)
class EvaluationResult:
    """Outcome of one black-box evaluation.

    ``objective`` couples quality and speed as rmsd_p75**3 * exec_time
    (lower is better); ``wall_clock`` is the time the evaluation occupied a
    worker, which for simulated runs equals exec_time.
    """

    exec_time: float
    rmsd_p75: float
    objective: float
    feasible: bool
    wall_clock: float

    def __post_init__(self) -> None:
        expected = self.rmsd_p75**3 * self.exec_time
        scale = max(abs(expected), 1.0)
        if abs(self.objective - expected) > _OBJECTIVE_REL_TOL * scale:
            raise ValueError(
                f"objective {self.objective} inconsistent with rmsd^3*time {expected}"
            )


def make_result(exec_time: float, rmsd_p75: float, rmsd_max: float,
                wall_clock: float | None = None) -> EvaluationResult:
    return EvaluationResult(
        exec_time=float(exec_time),
        rmsd_p75=float(rmsd_p75),
        objective=float(rmsd_p75) ** 3 * float(exec_time),
        feasible=float(rmsd_p75) <= rmsd_max,
        wall_clock=float(exec_time) if wall_clock is None else float(wall_clock),
    )


def rmsd_surface(quality_mean: float) -> float:
    """Quality metric as a function of mean normalized quality effort."""
    return RMSD_FLOOR + RMSD_RANGE * math.exp(-RMSD_DECAY * quality_mean)


def time_surface(quality_mean: float, cuda_norm: float, buffer_norm: float) -> float:
    """Execution time (seconds) over quality effort and the throughput knobs."""
    return (
        TIME_FLOOR
        + TIME_QUALITY_SLOPE * quality_mean
        + CUDA_TIME_WEIGHT * abs(cuda_norm - CUDA_SWEET_SPOT)
        + BUFFER_TIME_WEIGHT * abs(buffer_norm - BUFFER_SWEET_SPOT)
    )


class SurrogateTarget:
    """Analytic stand-in for the real application, deterministic and instant.

    Works on any knob space: the quality effort is the mean of the
    normalized quality-affecting values, and the throughput terms apply only
    when the space contains knobs named ``cuda_threads`` / ``buffer_size``.
    """

    def __init__(self, space: KnobSpace, rmsd_max: float = DEFAULT_RMSD_MAX):
        self.space = space
        self.rmsd_max = float(rmsd_max)
        self._cuda_index = self._optional_index("cuda_threads")
        self._buffer_index = self._optional_index("buffer_size")

    def _optional_index(self, name: str) -> int | None:
        return self.space.index_of(name) if name in self.space.names else None

    def __call__(self, config: Config) -> EvaluationResult:
        normalized = self.space.normalize(config)
        quality = normalized[list(self.space.quality_indices)]
        quality_mean = float(quality.mean()) if quality.size else 0.0
        cuda_norm = (
            float(normalized[self._cuda_index])
            if self._cuda_index is not None
            else CUDA_SWEET_SPOT
        )
        buffer_norm = (
            float(normalized[self._buffer_index])
            if self._buffer_index is not None
            else BUFFER_SWEET_SPOT
        )
        rmsd = rmsd_surface(quality_mean)
        exec_time = time_surface(quality_mean, cuda_norm, buffer_norm)
        return make_result(exec_time, rmsd, self.rmsd_max)


class ExternalCommandTarget:
    """Adapter that evaluates a configuration by running a command.

    The command template must contain one ``{knob_name}`` placeholder per
    knob.  The command must print, as one line on standard output, a JSON
    object with keys ``exec_time`` (seconds) and ``rmsd_p75``; the last
    parseable line wins so wrappers may log freely before reporting.
    """

    def __init__(
        self,
        space: KnobSpace,
        command_template: str,
        rmsd_max: float = DEFAULT_RMSD_MAX,
        timeout_seconds: float | None = None,
    ):
        self.space = space
        self.command_template = command_template
        self.rmsd_max = float(rmsd_max)
        self.timeout_seconds = timeout_seconds
        missing = [name for name in space.names if f"{{{name}}}" not in command_template]
        if missing:
            raise KnobDomainError(
                f"command template is missing placeholders for knobs: {missing}"
            )

    def render(self, config: Config) -> list[str]:
        rendered = self.command_template.format(**self.space.values_by_name(config))
        return shlex.split(rendered)

    def __call__(self, config: Config) -> EvaluationResult:
        argv = self.render(config)
        started = time.monotonic()
        try:
            proc = subprocess.run(
                argv, capture_output=True, text=True, timeout=self.timeout_seconds
            )
        except subprocess.TimeoutExpired as exc:
            raise TargetError(
                f"evaluation timed out after {self.timeout_seconds}s: {argv[0]}",
                diagnostics=str(exc),
            ) from exc
        except OSError as exc:
            raise TargetError(f"could not execute {argv[0]}: {exc}") from exc
        wall = time.monotonic() - started
        if proc.returncode != 0:
            raise TargetError(
                f"evaluation command exited with {proc.returncode}",
                diagnostics=proc.stderr[-2000:],
            )
        payload = self._parse_stdout(proc.stdout)
        return make_result(
            exec_time=payload["exec_time"],
            rmsd_p75=payload["rmsd_p75"],
            rmsd_max=self.rmsd_max,
            wall_clock=wall,
        )

    @staticmethod
    def _parse_stdout(stdout: str) -> dict:
        for line in reversed(stdout.strip().splitlines()):
            line = line.strip()
            if not line.startswith("{"):
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError:
                continue
            if isinstance(payload, dict) and "exec_time" in payload and "rmsd_p75" in payload:
                return {
                    "exec_time": float(payload["exec_time"]),
                    "rmsd_p75": float(payload["rmsd_p75"]),
                }
        raise TargetError(
            "no JSON line with exec_time and rmsd_p75 found on standard output",
            diagnostics=stdout[-2000:],
        )


class CachedTarget:
    """Reuses the quality metric for configurations sharing quality knobs.

    On a hit the inner target still supplies the execution time, but the
    quality value comes from the cache; on a miss both come from the inner
    target and the quality value is stored.  The cache can be persisted as a
    flat JSON map so later campaigns on the same application skip most
    quality measurements.
    """

    def __init__(self, inner, space: KnobSpace, path: str | Path | None = None):
        self.inner = inner
        self.space = space
        self.path = Path(path) if path is not None else None
        self.entries: dict[str, float] = {}
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self.entries = {
                str(k): float(v) for k, v in json.loads(self.path.read_text()).items()
            }
            logger.info("loaded %d cached quality values from %s", len(self.entries), self.path)

    @property
    def rmsd_max(self) -> float:
        return self.inner.rmsd_max

    def __call__(self, config: Config) -> EvaluationResult:
        key = self.space.quality_key(config)
        result = self.inner(config)
        with self._lock:
            cached = self.entries.get(key)
            if cached is None:
                self.entries[key] = result.rmsd_p75
                self.misses += 1
                return result
            self.hits += 1
        return make_result(
            exec_time=result.exec_time,
            rmsd_p75=cached,
            rmsd_max=self.rmsd_max,
            wall_clock=result.wall_clock,
        )

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0

    def save(self, path: str | Path | None = None) -> None:
        destination = Path(path) if path is not None else self.path
        if destination is None:
            raise ValueError("no cache path configured")
        destination.write_text(json.dumps(self.entries, sort_keys=True, indent=0))
