#!/usr/bin/env python3
"""Render objective-trajectory and yearly-trend figures from run artifacts.

The engine emits data only (trajectory.csv, class_trend.csv); this script
is the external plotting tool.
"""
from __future__ import annotations

import argparse
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def plot_trajectory(run_dir: Path, out: Path) -> None:
    rows = list(csv.DictReader((run_dir / "trajectory.csv").open()))
    steps = [int(r["step"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    for column, label in [
        ("objective_lev", "lexical"),
        ("objective_bert", "token semantic"),
        ("objective_cos", "label cosine"),
    ]:
        values = [float(r[column]) for r in rows]
        ax.plot(steps, values, marker="o", label=label)
    ax.set_xlabel("adaptation step")
    ax.set_ylabel("objective (lower is better)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out)
    print(f"wrote {out}")


def plot_trend(run_dir: Path, out: Path) -> None:
    trend_path = run_dir / "class_trend.csv"
    if not trend_path.is_file():
        print(f"no {trend_path}; run `aham classify` first")
        return
    series: dict[str, dict[int, int]] = defaultdict(dict)
    for row in csv.DictReader(trend_path.open()):
        series[row["class"]][int(row["year"])] = int(row["count"])
    fig, ax = plt.subplots(figsize=(7, 4))
    for cls, counts in sorted(series.items()):
        years = sorted(counts)
        ax.plot(years, [counts[y] for y in years], marker="o", label=cls)
    ax.set_xlabel("year")
    ax.set_ylabel("documents")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out)
    print(f"wrote {out}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("run_dir", help="a runs/<run_id> directory")
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args()
    run_dir = Path(args.run_dir)
    out_dir = Path(args.out_dir) if args.out_dir else run_dir
    plot_trajectory(run_dir, out_dir / "trajectory.png")
    plot_trend(run_dir, out_dir / "class_trend.png")


if __name__ == "__main__":
    main()
