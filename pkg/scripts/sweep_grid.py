"""Coarse hyperparameter grid per method under the matched budgets.

Writes one row per (method, grid point) with the median fully cancelled
count over the configured instances.

    python scripts/sweep_grid.py --grid configs/default_grid.json --methods mcts sa --out results/grid
"""
from __future__ import annotations

import argparse
import itertools
import json
import statistics
from dataclasses import dataclass
from pathlib import Path

from pauliforge.bench import ExperimentSpec, run_suite


@dataclass
class SweepConfig:
    grid: Path
    out: Path
    methods: tuple[str, ...] = ("rl", "mcts", "sa")
    hidden: tuple[int, ...] | None = None


def grid_points(axes: dict) -> list[dict]:
    keys = sorted(axes)
    return [dict(zip(keys, values)) for values in itertools.product(*(axes[k] for k in keys))]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--grid", type=Path, default=Path("configs/default_grid.json"))
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--methods", nargs="+", default=["rl", "mcts", "sa"])
    ap.add_argument("--hidden", type=int, nargs="+")
    args = ap.parse_args()
    cfg = SweepConfig(args.grid, args.out, tuple(args.methods), tuple(args.hidden) if args.hidden else None)

    grid = json.loads(cfg.grid.read_text())
    lines = ["method;params;median_full;median_percent_full"]
    for method in cfg.methods:
        for point in grid_points(grid["grid"][method]):
            conf = dict(point)
            if method == "rl" and cfg.hidden:
                conf["hidden"] = list(cfg.hidden)
            spec = ExperimentSpec(name=f"grid-{method}", methods=(method,), configs={method: conf},
                                  budgets=grid["budgets"], **grid["instances"])
            rows = run_suite(spec).rows
            fulls = [r.best[method][1] for r in rows if method in r.best]
            pct = [r.percent(method)[1] for r in rows if method in r.best]
            med = statistics.median(fulls) if fulls else float("nan")
            med_pct = statistics.median(pct) if pct else float("nan")
            lines.append(f"{method};{json.dumps(point, sort_keys=True)};{med:.1f};{med_pct:.1f}")
            print(lines[-1], flush=True)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "grid.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
