#!/usr/bin/env python3
"""
Run every experiment sweep on one scenario and write the result tables.

This script runs the method comparison, the coverage sweep at three levels, the
saturation report, the planning-by-evaluation metric sweep and the micro and
macro F1 sweep on a multilabel pool, and writes one CSV per sweep into an output
directory. Use --full for the full replication scale; the desk scale finishes in
minutes.
"""

import argparse
import sys
import time
from pathlib import Path

from metricwise.config import load_scenario
from metricwise.exceptions import MetricwiseError
from metricwise.harness import (
    calibration_sweep,
    cross_metric_sweep,
    error_matrix,
    multilabel_sweep,
    run_comparison,
    weights_sweep,
)
from metricwise.storage import write_frame

CROSS_METRICS = ["Accuracy", "F1", "Precision", "Recall"]
CALIBRATION_LEVELS = [0.5, 0.9, 0.99]


def run_sweeps(config_file: str | None, out_dir: Path, *, full: bool) -> list[Path]:
    """
    Run the sweeps and write their tables.

    Args:
        config_file: Scenario file, None for the default scenario.
        out_dir: Directory receiving the CSV files.
        full: Use the full replication scale.

    Returns:
        Paths of the written files, in the order they were written.

    """
    config = load_scenario(config_file, full=full)
    print(
        f"Scenario: {config.n_points} points, {config.repetitions} repetitions, "
        f"budgets {list(config.budgets)}, seed {config.seed}"
    )
    print()
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    sweeps = [
        ("comparison", lambda: run_comparison(config).to_frame()),
        ("calibration", lambda: calibration_sweep(config, CALIBRATION_LEVELS)),
        ("weights", lambda: weights_sweep(config)),
        (
            "cross_metric",
            lambda: cross_metric_sweep(config, CROSS_METRICS, CROSS_METRICS),
        ),
        ("multilabel", lambda: multilabel_sweep(config)),
    ]
    for i, (name, sweep) in enumerate(sweeps, 1):
        print(f"[{i}/{len(sweeps)}] Running {name} sweep...")
        started = time.monotonic()
        frame = sweep()
        path = out_dir / f"{name}.csv"
        write_frame(path, frame)
        written.append(path)
        print(f"  ✓ {len(frame)} rows in {time.monotonic() - started:.1f} s")

        if name == "weights":
            onset = frame.attrs["saturation_onset"]
            print(f"  Bernoulli saturation starts at budget fraction {onset:.3f}")
        if name == "cross_metric":
            matrix = error_matrix(frame).reset_index(names="plan_metric")
            path = out_dir / "error_matrix.csv"
            write_frame(path, matrix)
            written.append(path)

    return written


def main() -> None:
    """Run the experiment sweeps."""
    parser = argparse.ArgumentParser(description="Replicate the metricwise sweeps")
    parser.add_argument(
        "--config",
        default=None,
        help="Scenario YAML or JSON file (default: the built-in scenario)",
    )
    parser.add_argument(
        "--out-dir",
        default="results",
        help="Directory for the CSV files (default: results)",
    )
    parser.add_argument(
        "--full",
        action="store_true",
        help="Use 11200 points and 3000 repetitions",
    )

    args = parser.parse_args()

    print("=" * 70)
    print("metricwise sweep replication")
    print("=" * 70)
    print()

    try:
        written = run_sweeps(args.config, Path(args.out_dir), full=args.full)
    except MetricwiseError as e:
        print(f"  ✗ Failed: {e}")
        sys.exit(1)

    print()
    for path in written:
        print(f"✓ Saved {path}")
    print()
    print("✓ Done!")


if __name__ == "__main__":
    main()
