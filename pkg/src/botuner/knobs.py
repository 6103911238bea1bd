"""Integer knob spaces: domain definition, normalization and cache keys.

A knob space is an ordered list of named integer ranges.  Each knob either
affects only the application throughput or both throughput and result
quality; the quality-affecting projection of a configuration drives the
constraint features and the result-quality cache key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import KnobDomainError

Config = tuple[int, ...]

DYNAMISM_KINDS = ("compile_time", "runtime")

DEFAULT_SPACE_NAME = "ligen8"


@dataclass(frozen=True)
class KnobSpec:
    """One integer knob: inclusive range plus metadata.

    ``dynamism`` records whether changing the knob requires rebuilding the
    application; the framework itself treats all knobs identically and only
    external adapters may care.
    """

    name: str
    lower: int
    upper: int
    affects_quality: bool
    dynamism: str = "runtime"

    def __post_init__(self) -> None:
        if not self.name or not self.name.replace("_", "").isalnum():
            raise KnobDomainError(f"invalid knob name: {self.name!r}")
        if self.lower >= self.upper:
            raise KnobDomainError(
                f"knob {self.name!r}: lower bound {self.lower} must be < upper {self.upper}"
            )
        if self.dynamism not in DYNAMISM_KINDS:
            raise KnobDomainError(
                f"knob {self.name!r}: dynamism must be one of {DYNAMISM_KINDS}, got {self.dynamism!r}"
            )

    @property
    def span(self) -> int:
        return self.upper - self.lower


@dataclass(frozen=True)
class KnobSpace:
    """Ordered collection of knobs defining the configuration box."""

    knobs: tuple[KnobSpec, ...]

    def __post_init__(self) -> None:
        if not self.knobs:
            raise KnobDomainError("a knob space needs at least one knob")
        names = [k.name for k in self.knobs]
        if len(set(names)) != len(names):
            raise KnobDomainError(f"duplicate knob names in space: {names}")

    @property
    def dimension(self) -> int:
        return len(self.knobs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(k.name for k in self.knobs)

    @property
    def quality_indices(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.knobs) if k.affects_quality)

    @property
    def quality_names(self) -> tuple[str, ...]:
        return tuple(k.name for k in self.knobs if k.affects_quality)

    def index_of(self, name: str) -> int:
        for i, k in enumerate(self.knobs):
            if k.name == name:
                return i
        raise KnobDomainError(f"no knob named {name!r} in space")

    def validate(self, config: Config) -> None:
        """Raise KnobDomainError naming the offending knob if config is invalid."""
        if len(config) != self.dimension:
            raise KnobDomainError(
                f"configuration has {len(config)} values, space has {self.dimension} knobs"
            )
        for value, knob in zip(config, self.knobs):
            if not isinstance(value, (int, np.integer)):
                raise KnobDomainError(f"knob {knob.name!r}: value {value!r} is not an integer")
            if not knob.lower <= value <= knob.upper:
                raise KnobDomainError(
                    f"knob {knob.name!r}: value {value} outside [{knob.lower}, {knob.upper}]"
                )

    def normalize(self, config: Config) -> np.ndarray:
        """Map an integer configuration to the unit cube, component-wise linear."""
        self.validate(config)
        return np.array(
            [(v - k.lower) / k.span for v, k in zip(config, self.knobs)], dtype=float
        )

    def denormalize_round(self, point) -> Config:
        """Map a unit-cube point back to the integer lattice.

        Components are clamped to [0, 1], scaled to the knob range and
        rounded half-up, so any finite point yields a valid configuration.
        """
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dimension,):
            raise KnobDomainError(
                f"point has shape {point.shape}, expected ({self.dimension},)"
            )
        values = []
        for u, knob in zip(point, self.knobs):
            if not math.isfinite(u):
                raise KnobDomainError(f"knob {knob.name!r}: non-finite coordinate {u!r}")
            clamped = min(max(float(u), 0.0), 1.0)
            scaled = knob.lower + clamped * knob.span
            values.append(int(min(max(math.floor(scaled + 0.5), knob.lower), knob.upper)))
        return tuple(values)

    def quality_key(self, config: Config) -> str:
        """Deterministic cache key built from the quality-affecting values only."""
        self.validate(config)
        return ",".join(str(config[i]) for i in self.quality_indices)

    def quality_features(self, config: Config) -> np.ndarray:
        """Normalized projection onto the quality-affecting knobs."""
        normalized = self.normalize(config)
        return normalized[list(self.quality_indices)]

    def sample(self, rng: np.random.Generator) -> Config:
        """Draw one configuration uniformly from the integer box."""
        return tuple(int(rng.integers(k.lower, k.upper + 1)) for k in self.knobs)

    def values_by_name(self, config: Config) -> dict[str, int]:
        self.validate(config)
        return {k.name: int(v) for k, v in zip(self.knobs, config)}


def ligen8_space() -> KnobSpace:
    """The built-in 8-knob virtual-screening tuning space.

    buffer_size is expressed in MB.
    """
    return KnobSpace(
        knobs=(
            KnobSpec("align_split", 8, 72, affects_quality=True, dynamism="compile_time"),
            KnobSpec("optimize_split", 8, 72, affects_quality=True, dynamism="compile_time"),
            KnobSpec("repetitions", 1, 5, affects_quality=True, dynamism="compile_time"),
            KnobSpec("cuda_threads", 32, 256, affects_quality=False, dynamism="runtime"),
            KnobSpec("num_restarts", 32, 256, affects_quality=True, dynamism="runtime"),
            KnobSpec("clipping", 10, 256, affects_quality=True, dynamism="runtime"),
            KnobSpec("sim_thresh", 1, 4, affects_quality=True, dynamism="runtime"),
            KnobSpec("buffer_size", 1, 20, affects_quality=False, dynamism="runtime"),
        )
    )


def space_from_entries(entries) -> KnobSpace:
    """Build a space from an iterable of knob mappings."""
    knobs = []
    for entry in entries:
        try:
            knobs.append(
                KnobSpec(
                    name=str(entry["name"]),
                    lower=int(entry["lower"]),
                    upper=int(entry["upper"]),
                    affects_quality=bool(entry["affects_quality"]),
                    dynamism=str(entry.get("dynamism", "runtime")),
                )
            )
        except KeyError as exc:
            raise KnobDomainError(f"knob entry missing field {exc}") from exc
    return KnobSpace(knobs=tuple(knobs))


def load_space(path: str | Path) -> KnobSpace:
    """Load a knob space from a TOML ([[knob]] tables) or JSON document."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
        entries = data["knobs"] if isinstance(data, dict) else data
    elif path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(text)
        entries = data.get("knob", data.get("knobs"))
        if entries is None:
            raise KnobDomainError(f"{path}: no [[knob]] tables found")
    else:
        raise KnobDomainError(f"{path}: unsupported space file suffix {path.suffix!r}")
    return space_from_entries(entries)


def resolve_space(name_or_path: str | Path) -> KnobSpace:
    """Resolve a built-in space name or a space file path."""
    if str(name_or_path) == DEFAULT_SPACE_NAME:
        return ligen8_space()
    path = Path(name_or_path)
    if path.exists():
        return load_space(path)
    raise KnobDomainError(
        f"unknown knob space {name_or_path!r} (not a built-in name, not a file)"
    )
