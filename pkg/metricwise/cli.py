"""Command line interface for metricwise."""

from __future__ import annotations

import argparse
import logging
import logging.config
import os
import sys
from pathlib import Path
from typing import TYPE_CHECKING

import colorlog
import yaml

from .config import load_scenario
from .const import (
    DEFAULT_B_MIN,
    DEFAULT_EPSILON,
    DEFAULT_LAMBDA,
    DEFAULT_LEVEL,
    DEFAULT_THRESHOLD,
    DOMAIN,
    ENV_SEED,
    EXIT_DEGENERATE,
    EXIT_ERROR,
    EXIT_OK,
    EXIT_VALIDATION,
    LOGGER,
    METHOD_ALIASES,
    MULTILABEL_METRICS,
)
from .exceptions import (
    DegenerateEstimate,
    DegenerateMetric,
    MetricwiseError,
    ValidationError,
)
from .harness import (
    calibration_sweep,
    cross_metric_sweep,
    multilabel_sweep,
    run_comparison,
    weights_sweep,
)
from .planner import draw_plan, estimate, make_plan
from .simulation import simulate_scenario
from .storage import (
    draw_from_dict,
    draw_to_dict,
    plan_from_dict,
    plan_to_dict,
    read_json,
    read_labels,
    read_predictions,
    write_frame,
    write_json,
    write_pool,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

DEFAULT_LOG_CONFIG = Path(__file__).resolve().parent.parent / "config" / "logging.yaml"


def setup_logging(*, verbose: bool = False, log_config: Path | None = None) -> None:
    """
    Configure logging from a YAML dictConfig, or a colored stream handler.

    Args:
        verbose: Log the package at debug level.
        log_config: dictConfig YAML; the repository default is used when present.

    """
    path = log_config or DEFAULT_LOG_CONFIG
    if path.is_file():
        with path.open(encoding="utf-8") as f:
            logging.config.dictConfig(yaml.safe_load(f))
    else:
        handler = colorlog.StreamHandler()
        handler.setFormatter(
            colorlog.ColoredFormatter(
                "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s"
            )
        )
        LOGGER.handlers[:] = [handler]
        LOGGER.setLevel(logging.INFO)
        LOGGER.propagate = False
    if verbose:
        LOGGER.setLevel(logging.DEBUG)


def _seed(value: int | None) -> int:
    if value is not None:
        return value
    raw = os.environ.get(ENV_SEED)
    if not raw:
        return 0
    try:
        return int(raw)
    except ValueError as err:
        msg = f"{ENV_SEED} must be an integer, got {raw!r}"
        raise ValidationError(msg) from err


def _levels(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as err:
        msg = f"Bad level list {text!r}"
        raise argparse.ArgumentTypeError(msg) from err


def _names(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def cmd_plan(args: argparse.Namespace) -> None:
    """Build a sampling plan for a predictions file."""
    pool = read_predictions(args.predictions, args.threshold)
    plan = make_plan(
        pool,
        args.metric,
        args.method,
        args.budget,
        lam=args.lam,
        seed=_seed(args.seed),
        b_min=args.b_min,
    )
    write_json(args.out, plan_to_dict(plan, pool))


def cmd_draw(args: argparse.Namespace) -> None:
    """Draw the points to label from a plan."""
    plan, pool = plan_from_dict(read_json(args.plan))
    seed = args.seed if args.seed is not None else plan.seed
    if seed is None:
        seed = _seed(None)
    draw = draw_plan(plan, seed)
    LOGGER.info("%d points need a label", draw.distinct)
    write_json(args.out, draw_to_dict(draw, plan, pool))


def cmd_estimate(args: argparse.Namespace) -> None:
    """Estimate a metric from labelled draws."""
    plan, pool = plan_from_dict(read_json(args.plan))
    draw = draw_from_dict(read_json(args.draw))
    labels = read_labels(args.labels, pool)
    report = estimate(
        pool,
        plan,
        draw,
        labels,
        args.eval_metric,
        level=args.level,
        epsilon=args.epsilon,
    )
    write_json(args.out, report.as_dict())


def cmd_simulate(args: argparse.Namespace) -> None:
    """Write a simulated pool with its labels."""
    config = load_scenario(args.config, full=args.full)
    pool, labels = simulate_scenario(config)
    write_pool(args.out, pool, labels)


def cmd_compare(args: argparse.Namespace) -> None:
    """Run the method comparison."""
    config = load_scenario(args.config, full=args.full)
    result = run_comparison(config)
    LOGGER.info("True %s is %.6f", result.metric, result.true_value)
    write_frame(args.out, result.to_frame())


def cmd_calibrate(args: argparse.Namespace) -> None:
    """Run the coverage sweep."""
    config = load_scenario(args.config, full=args.full)
    write_frame(args.out, calibration_sweep(config, args.levels))


def cmd_weights(args: argparse.Namespace) -> None:
    """Report plan saturation per budget."""
    config = load_scenario(args.config, full=args.full)
    write_frame(args.out, weights_sweep(config))


def cmd_cross(args: argparse.Namespace) -> None:
    """Run the planning metric against evaluation metric sweep."""
    config = load_scenario(args.config, full=args.full)
    frame = cross_metric_sweep(config, args.plan_metrics, args.eval_metrics)
    write_frame(args.out, frame)


def cmd_multilabel(args: argparse.Namespace) -> None:
    """Compare the samplers on micro and macro F1 of a multilabel pool."""
    config = load_scenario(args.config, full=args.full)
    if args.classes is not None:
        first = args.metrics[0] if args.metrics else MULTILABEL_METRICS[0]
        config = config.with_changes(
            n_classes=args.classes, metric_plan=first, metric_eval=first
        )
    write_frame(args.out, multilabel_sweep(config, args.metrics))


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with every subcommand."""
    parser = argparse.ArgumentParser(
        prog=DOMAIN, description="Label-efficient estimation of classifier metrics"
    )
    parser.add_argument("--verbose", action="store_true", help="Log debug detail")
    parser.add_argument(
        "--log-config", type=Path, default=None, help="Logging dictConfig YAML"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    plan = commands.add_parser("plan", help="Choose which points to label")
    plan.add_argument("--predictions", type=Path, required=True)
    plan.add_argument("--metric", default="F1")
    plan.add_argument("--method", default="bs", choices=sorted(METHOD_ALIASES))
    plan.add_argument(
        "--budget",
        type=float,
        required=True,
        help="Expected labels (bernoulli) or number of draws (importance, uniform)",
    )
    plan.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    plan.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    plan.add_argument("--b-min", type=float, default=DEFAULT_B_MIN)
    plan.add_argument("--seed", type=int, default=None)
    plan.add_argument("--out", type=Path, required=True)
    plan.set_defaults(func=cmd_plan)

    draw = commands.add_parser("draw", help="Draw the points to label")
    draw.add_argument("--plan", type=Path, required=True)
    draw.add_argument("--seed", type=int, default=None)
    draw.add_argument("--out", type=Path, required=True)
    draw.set_defaults(func=cmd_draw)

    report = commands.add_parser("estimate", help="Estimate from returned labels")
    report.add_argument("--plan", type=Path, required=True)
    report.add_argument("--draw", type=Path, required=True)
    report.add_argument("--labels", type=Path, required=True)
    report.add_argument("--eval-metric", default=None)
    report.add_argument("--level", type=float, default=DEFAULT_LEVEL)
    report.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    report.add_argument("--out", type=Path, required=True)
    report.set_defaults(func=cmd_estimate)

    sweeps = {
        "simulate": (cmd_simulate, "Write a simulated pool"),
        "compare": (cmd_compare, "Compare sampling methods"),
        "calibrate": (cmd_calibrate, "Measure interval coverage"),
        "weights": (cmd_weights, "Report plan saturation"),
        "cross": (cmd_cross, "Cross planning and evaluation metrics"),
        "multilabel": (cmd_multilabel, "Compare samplers on micro and macro F1"),
    }
    for name, (func, help_text) in sweeps.items():
        sweep = commands.add_parser(name, help=help_text)
        sweep.add_argument("--config", type=Path, default=None)
        sweep.add_argument(
            "--full", action="store_true", help="Use the full replication scale"
        )
        sweep.add_argument("--out", type=Path, required=True)
        sweep.set_defaults(func=func)
        if name == "calibrate":
            sweep.add_argument("--levels", type=_levels, default=[0.5, 0.9, 0.99])
        if name == "cross":
            for option in ("--plan-metrics", "--eval-metrics"):
                sweep.add_argument(option, type=_names, default=["F1", "Accuracy"])
        if name == "multilabel":
            sweep.add_argument("--classes", type=int, default=None)
            sweep.add_argument("--metrics", type=_names, default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run the command line.

    Returns:
        0 on success, 2 on invalid input, 3 on a degenerate estimate and 1 on
        any other failure.

    """
    args = build_parser().parse_args(argv)
    setup_logging(verbose=args.verbose, log_config=args.log_config)
    try:
        args.func(args)
    except ValidationError as err:
        LOGGER.error("Invalid input: %s", err)  # noqa: TRY400
        return EXIT_VALIDATION
    except (DegenerateMetric, DegenerateEstimate) as err:
        LOGGER.error("Degenerate estimate: %s", err)  # noqa: TRY400
        return EXIT_DEGENERATE
    except MetricwiseError as err:
        LOGGER.error("Failed: %s", err)  # noqa: TRY400
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
