"""Command-line entry point: tune, validate, report and surrogate-eval."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .campaign import CampaignResult
from .config import (
    REFERENCE_SETTINGS,
    CampaignConfig,
    apply_overrides,
    load_config,
    validate_config,
)
from .constraint import ErrorInjector
from .errors import TunerError
from .executor import LocalExecutor, VirtualExecutor
from .knobs import KnobSpace, resolve_space
from .optimizers import run_emaliboo, run_pamaliboo, run_random, run_sequential
from .report import (
    aggregate_curves,
    feasible_regret_curve,
    mape_over_iterations,
    ranking_series,
)
from .target import CachedTarget, ExternalCommandTarget, SurrogateTarget
from .transcript import (
    read_mape,
    read_transcript,
    write_aggregate_csv,
    write_mape,
    write_mape_report_csv,
    write_ranking_csv,
    write_regret_csv,
    write_summary,
    write_transcript,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CAMPAIGN_FAILED = 1
EXIT_INVALID = 2


def _build_target(config: CampaignConfig, space: KnobSpace) -> CachedTarget:
    if config.target_kind == "surrogate":
        inner = SurrogateTarget(space, rmsd_max=config.settings.rmsd_max)
    else:
        inner = ExternalCommandTarget(
            space,
            config.command,
            rmsd_max=config.settings.rmsd_max,
            timeout_seconds=config.timeout_seconds,
        )
    return CachedTarget(inner, space, path=config.cache_file)


def _build_executor(config: CampaignConfig, target) -> VirtualExecutor | LocalExecutor:
    cls = VirtualExecutor if config.executor_backend == "virtual" else LocalExecutor
    return cls(
        target,
        workers=config.settings.workers,
        polling_seconds=config.settings.polling_seconds,
    )


def _run_one_seed(config: CampaignConfig, space: KnobSpace, seed: int) -> tuple[CampaignResult, float]:
    settings = dataclasses.replace(config.settings, seed=seed)
    if config.strategy == "emaliboo":
        targets: list[CachedTarget] = []

        def factory():
            targets.append(_build_target(config, space))
            return targets[-1]

        result = run_emaliboo(space, factory, settings)
        hits = sum(t.hits for t in targets)
        total = hits + sum(t.misses for t in targets)
        return result, (hits / total if total else 0.0)
    target = _build_target(config, space)
    if config.strategy == "sequential":
        result = run_sequential(space, target, settings)
    else:
        executor = _build_executor(config, target)
        if config.strategy == "pamaliboo":
            result = run_pamaliboo(space, target, executor, settings)
        else:
            result = run_random(space, target, executor, settings)
        if isinstance(executor, LocalExecutor):
            executor.shutdown()
    if config.cache_file:
        target.save()
    return result, target.hit_rate


def run_campaign(config: CampaignConfig) -> int:
    """Run every seed of a campaign, writing transcripts and summaries."""
    problems = validate_config(config)
    if problems:
        for problem in problems:
            print(f"invalid configuration: {problem}", file=sys.stderr)
        return EXIT_INVALID
    space = config.resolve_space()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for seed in config.seeds:
        try:
            result, hit_rate = _run_one_seed(config, space, seed)
        except TunerError as exc:
            logger.error("campaign with seed %d failed: %s", seed, exc)
            return EXIT_CAMPAIGN_FAILED
        write_transcript(out / f"transcript_{seed}.csv", space, result.history)
        write_mape(out / f"mape_{seed}.csv", result.mape_records)
        write_summary(out / f"summary_{seed}.json", space, result, cache_hit_rate=hit_rate)
        best = result.estimated_optimum
        print(
            f"seed {seed}: {len(result.true_entries)} evaluations, "
            f"best objective {best.objective:.4f} "
            f"({'feasible' if best.feasible else 'infeasible'}), "
            f"total time {result.total_time:.1f}s"
        )
    return EXIT_OK


def _parse_values(space: KnobSpace, args) -> tuple[int, ...]:
    if args.values:
        parts = [p for p in args.values.replace(",", " ").split() if p]
        if len(parts) != space.dimension:
            raise TunerError(
                f"expected {space.dimension} values ({', '.join(space.names)}), got {len(parts)}"
            )
        return tuple(int(p) for p in parts)
    if args.knob:
        by_name = {}
        for pair in args.knob:
            name, _, value = pair.partition("=")
            if not value:
                raise TunerError(f"--knob expects name=value, got {pair!r}")
            by_name[name] = int(value)
        missing = [n for n in space.names if n not in by_name]
        if missing:
            raise TunerError(f"missing knob values: {missing}")
        return tuple(by_name[n] for n in space.names)
    raise TunerError("provide --values or --knob name=value for every knob")


def _tune_config_from_args(args) -> CampaignConfig:
    config = load_config(args.config) if args.config else CampaignConfig()
    if args.reference_defaults:
        seed = config.settings.seed
        injection = config.settings.error_injection
        config.settings = dataclasses.replace(
            REFERENCE_SETTINGS, seed=seed, error_injection=injection
        )
    injector = config.settings.error_injection
    if args.inject_error:
        injector = ErrorInjector(
            enabled=True,
            epsilon0=args.epsilon0 if args.epsilon0 is not None else injector.epsilon0,
            n_err=args.n_err if args.n_err is not None else injector.n_err,
        )
    seeds = None
    if args.seeds:
        seeds = [int(s) for s in args.seeds.replace(",", " ").split()]
    apply_overrides(
        config,
        strategy=args.strategy,
        space=args.space,
        target_kind=args.target,
        command=args.command,
        timeout_seconds=args.timeout_seconds,
        cache_file=args.cache_file,
        executor_backend=args.backend,
        output_dir=args.output_dir,
        seeds=seeds,
        total_iterations=args.n_iterations,
        initial_points=args.initial_points,
        workers=args.workers,
        training_period=args.training_period,
        polling_seconds=args.polling_seconds,
        rmsd_max=args.rmsd_max,
        overhead_seconds=args.overhead_seconds,
        acquisition_restarts=args.restarts,
        gate_penalty=args.gate_penalty,
        ridge_alpha=args.ridge_alpha,
        error_injection=injector if args.inject_error else None,
    )
    return config


def _add_tune_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML campaign configuration file")
    parser.add_argument("--strategy", choices=["sequential", "pamaliboo", "emaliboo", "random"])
    parser.add_argument("--space", help="knob space name (ligen8) or TOML/JSON file")
    parser.add_argument("--target", choices=["surrogate", "external"])
    parser.add_argument("--command", help="command template for the external target")
    parser.add_argument("--timeout-seconds", type=float, dest="timeout_seconds")
    parser.add_argument("--cache-file", dest="cache_file", help="quality-cache JSON path")
    parser.add_argument("--backend", choices=["virtual", "local"])
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--seeds", help="comma-separated campaign seeds")
    parser.add_argument("--n-iterations", type=int, dest="n_iterations")
    parser.add_argument("--initial-points", type=int, dest="initial_points")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--training-period", type=int, dest="training_period")
    parser.add_argument("--polling-seconds", type=float, dest="polling_seconds")
    parser.add_argument("--rmsd-max", type=float, dest="rmsd_max")
    parser.add_argument("--overhead-seconds", type=float, dest="overhead_seconds")
    parser.add_argument("--restarts", type=int)
    parser.add_argument("--gate-penalty", type=float, dest="gate_penalty")
    parser.add_argument("--ridge-alpha", type=float, dest="ridge_alpha")
    parser.add_argument("--inject-error", action="store_true", dest="inject_error")
    parser.add_argument("--epsilon0", type=float)
    parser.add_argument("--n-err", type=int, dest="n_err")
    parser.add_argument(
        "--reference-defaults",
        action="store_true",
        help="pin the large-scale reference settings "
        "(N=1000, 30 initial points, q=10, P=3, 1s polling, rmsd_max=2.1)",
    )


def _cmd_tune(args) -> int:
    config = _tune_config_from_args(args)
    return run_campaign(config)


def _cmd_validate(args) -> int:
    config = _tune_config_from_args(args)
    problems = validate_config(config)
    if not problems:
        print("configuration OK")
        return EXIT_OK
    for problem in problems:
        print(problem)
    return EXIT_INVALID


def _cmd_report(args) -> int:
    inputs = [Path(p) for p in args.input]
    for path in inputs:
        if not path.exists():
            print(f"input not found: {path}", file=sys.stderr)
            return EXIT_INVALID
    if args.kind == "regret":
        _, history = read_transcript(inputs[0])
        curve = feasible_regret_curve(history, ground_truth=args.ground_truth)
        write_regret_csv(args.out, curve)
    elif args.kind == "mape":
        records = [r for path in inputs for r in read_mape(path)]
        write_mape_report_csv(args.out, mape_over_iterations(records))
    elif args.kind == "ranking":
        if len(inputs) != 2:
            print("ranking needs two inputs: central transcript, ensemble transcript",
                  file=sys.stderr)
            return EXIT_INVALID
        central = _result_from_transcript(inputs[0])
        ensemble = _result_from_transcript(inputs[1], split_agents=True)
        write_ranking_csv(args.out, ranking_series(central, ensemble, grid_step=args.grid_step))
    else:
        curves = []
        for path in inputs:
            _, history = read_transcript(path)
            curves.append(feasible_regret_curve(history, ground_truth=args.ground_truth))
        write_aggregate_csv(args.out, aggregate_curves(curves, grid_step=args.grid_step))
    if args.plot:
        _render_plot(args.kind, args.out, args.plot)
    print(f"wrote {args.out}")
    return EXIT_OK


def _result_from_transcript(path: Path, split_agents: bool = False) -> CampaignResult:
    from .campaign import CampaignSettings

    _, history = read_transcript(path)
    result = CampaignResult(
        strategy="unknown", seed=0, settings=CampaignSettings(), history=history
    )
    if split_agents:
        agent_ids = sorted({e.agent_id for e in history})
        result.per_agent = [
            CampaignResult(
                strategy="unknown",
                seed=0,
                settings=CampaignSettings(),
                history=[e for e in history if e.agent_id == agent],
            )
            for agent in agent_ids
        ]
    return result


def _render_plot(kind: str, csv_path: str, plot_path: str) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("plotting requires matplotlib (install the 'plot' extra)", file=sys.stderr)
        return
    import csv as csv_module

    with open(csv_path, newline="") as handle:
        reader = csv_module.reader(handle)
        header = next(reader)
        rows = [row for row in reader]
    xs = [float(r[0]) for r in rows if r[1]]
    ys = [float(r[1]) for r in rows if r[1]]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(xs, ys, drawstyle="steps-post")
    ax.set_xlabel(header[0])
    ax.set_ylabel(header[1])
    if kind in ("regret", "aggregate"):
        ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(plot_path, dpi=120)
    plt.close(fig)


def _cmd_surrogate_eval(args) -> int:
    space = resolve_space(args.space)
    config = _parse_values(space, args)
    target = SurrogateTarget(space, rmsd_max=args.rmsd_max)
    result = target(config)
    print(
        json.dumps(
            {
                "configuration": space.values_by_name(config),
                "exec_time": result.exec_time,
                "rmsd_p75": result.rmsd_p75,
                "objective": result.objective,
                "feasible": result.feasible,
                "wall_clock": result.wall_clock,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="botuner",
        description="Constrained parallel Bayesian-optimization autotuner",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    tune = sub.add_parser("tune", help="run a tuning campaign")
    _add_tune_flags(tune)
    tune.set_defaults(func=_cmd_tune)

    validate = sub.add_parser("validate", help="check a configuration without running")
    _add_tune_flags(validate)
    validate.set_defaults(func=_cmd_validate)

    report = sub.add_parser("report", help="post-process campaign transcripts")
    report.add_argument("kind", choices=["regret", "mape", "ranking", "aggregate"])
    report.add_argument("--input", nargs="+", required=True, help="transcript CSV files")
    report.add_argument("--ground-truth", type=float, dest="ground_truth")
    report.add_argument("--grid-step", type=float, dest="grid_step", default=60.0)
    report.add_argument("--out", required=True, help="output CSV path")
    report.add_argument("--plot", help="optional line-chart output file (PNG/SVG)")
    report.set_defaults(func=_cmd_report)

    one_shot = sub.add_parser("surrogate-eval", help="evaluate one configuration")
    one_shot.add_argument("--space", default="ligen8")
    one_shot.add_argument("--values", help="comma-separated values in knob order")
    one_shot.add_argument("--knob", action="append", help="name=value (repeatable)")
    one_shot.add_argument("--rmsd-max", type=float, dest="rmsd_max", default=2.1)
    one_shot.set_defaults(func=_cmd_surrogate_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except TunerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
