"""Campaign configuration: TOML loading, flag overrides and validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .campaign import STRATEGIES, CampaignSettings, validate_settings
from .constraint import ErrorInjector
from .errors import KnobDomainError, SettingsError
from .knobs import DEFAULT_SPACE_NAME, KnobSpace, resolve_space

TARGET_KINDS = ("surrogate", "external")
EXECUTOR_BACKENDS = ("virtual", "local")

REFERENCE_SETTINGS = CampaignSettings(
    total_iterations=1000,
    initial_points=30,
    workers=10,
    training_period=3,
    polling_seconds=1.0,
    rmsd_max=2.1,
    acquisition_restarts=10,
    gate_penalty=1e-3,
    ridge_alpha=1.0,
)


@dataclass
class CampaignConfig:
    """One tuning run: strategy, space, target, executor and budgets."""

    strategy: str = "pamaliboo"
    space: str = DEFAULT_SPACE_NAME
    target_kind: str = "surrogate"
    command: str | None = None
    timeout_seconds: float | None = None
    cache_file: str | None = None
    executor_backend: str = "virtual"
    settings: CampaignSettings = field(default_factory=CampaignSettings)
    seeds: list[int] = field(default_factory=lambda: [0])
    output_dir: str = "runs"

    def resolve_space(self) -> KnobSpace:
        return resolve_space(self.space)


def _load_toml(path: Path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(path.read_text())


def config_from_mapping(data: dict) -> CampaignConfig:
    campaign = data.get("campaign", {})
    knobspace = data.get("knobspace", {})
    target = data.get("target", {})
    executor = data.get("executor", {})
    acquisition = data.get("acquisition", {})
    constraint = data.get("constraint", {})
    injection = data.get("error_injection", {})

    settings = CampaignSettings(
        total_iterations=int(campaign.get("n_iterations", 1000)),
        initial_points=int(campaign.get("initial_points", 30)),
        workers=int(executor.get("workers", campaign.get("workers", 10))),
        training_period=int(constraint.get("period", 3)),
        polling_seconds=float(executor.get("polling_seconds", 1.0)),
        rmsd_max=float(campaign.get("rmsd_max", 2.1)),
        seed=int(campaign.get("seed", 0)),
        overhead_seconds=float(executor.get("overhead_seconds", 20.0)),
        acquisition_restarts=int(acquisition.get("restarts", 10)),
        gate_penalty=float(acquisition.get("gate_penalty", 1e-3)),
        ridge_alpha=float(constraint.get("alpha", 1.0)),
        error_injection=ErrorInjector(
            enabled=bool(injection.get("enabled", False)),
            epsilon0=float(injection.get("epsilon0", 1.5)),
            n_err=int(injection.get("n_err", 50)),
        ),
    )
    seeds = campaign.get("seeds", [settings.seed])
    return CampaignConfig(
        strategy=str(campaign.get("strategy", "pamaliboo")),
        space=str(knobspace.get("name", knobspace.get("file", DEFAULT_SPACE_NAME))),
        target_kind=str(target.get("kind", "surrogate")),
        command=target.get("command"),
        timeout_seconds=(
            float(target["timeout_seconds"]) if "timeout_seconds" in target else None
        ),
        cache_file=target.get("cache_file"),
        executor_backend=str(executor.get("backend", "virtual")),
        settings=settings,
        seeds=[int(s) for s in seeds],
        output_dir=str(campaign.get("output_dir", "runs")),
    )


def load_config(path: str | Path) -> CampaignConfig:
    path = Path(path)
    if not path.exists():
        raise SettingsError(f"config file not found: {path}")
    return config_from_mapping(_load_toml(path))


def apply_overrides(config: CampaignConfig, **overrides) -> CampaignConfig:
    """Apply CLI-style overrides; None values leave the config untouched."""
    settings_fields = {f.name for f in dataclasses.fields(CampaignSettings)}
    config_fields = {f.name for f in dataclasses.fields(CampaignConfig)}
    settings = config.settings
    for key, value in overrides.items():
        if value is None:
            continue
        if key in settings_fields:
            settings = dataclasses.replace(settings, **{key: value})
        elif key in config_fields:
            setattr(config, key, value)
        else:
            raise SettingsError(f"unknown override {key!r}")
    config.settings = settings
    return config


def validate_config(config: CampaignConfig) -> list[str]:
    """All violated constraints, without evaluating anything."""
    problems = []
    if config.strategy not in STRATEGIES:
        problems.append(f"unknown strategy {config.strategy!r}; expected one of {STRATEGIES}")
    if config.target_kind not in TARGET_KINDS:
        problems.append(
            f"unknown target {config.target_kind!r}; expected one of {TARGET_KINDS}"
        )
    if config.executor_backend not in EXECUTOR_BACKENDS:
        problems.append(
            f"unknown executor backend {config.executor_backend!r}; "
            f"expected one of {EXECUTOR_BACKENDS}"
        )
    space = None
    try:
        space = config.resolve_space()
    except KnobDomainError as exc:
        problems.append(str(exc))
    if config.target_kind == "external":
        if not config.command:
            problems.append("external target requires a command template")
        elif space is not None:
            missing = [n for n in space.names if f"{{{n}}}" not in config.command]
            if missing:
                problems.append(f"command template missing knob placeholders: {missing}")
    if not config.seeds:
        problems.append("at least one seed is required")
    problems.extend(
        validate_settings(config.settings, config.strategy if config.strategy in STRATEGIES else None)
    )
    return problems
