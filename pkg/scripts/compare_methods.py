"""Budget-matched comparison of naive, DDQN, MCTS and SA on random instances.

    python scripts/compare_methods.py --spec configs/comparison.json --out results/comparison
    python scripts/compare_methods.py --spec configs/comparison.json --hidden 128 128 128 --out ...
"""
from __future__ import annotations

import argparse
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

from pauliforge.bench import ExperimentSpec, run_suite, write_suite


@dataclass
class CompareConfig:
    spec: Path
    out: Path
    hidden: tuple[int, ...] | None = None
    workers: int | None = None

    def load_spec(self) -> ExperimentSpec:
        raw = json.loads(self.spec.read_text())
        raw.pop("kind", None)
        if self.hidden:
            configs = dict(raw.get("configs", {}))
            configs["rl"] = {**configs.get("rl", {}), "hidden": list(self.hidden)}
            raw["configs"] = configs
        return ExperimentSpec.from_dict(raw)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--spec", type=Path, default=Path("configs/comparison.json"))
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--hidden", type=int, nargs="+", help="override the RL hidden layer widths")
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = CompareConfig(args.spec, args.out, tuple(args.hidden) if args.hidden else None, args.workers)

    spec = cfg.load_spec()
    start = time.perf_counter()
    result = run_suite(spec, cfg.workers)
    write_suite(result, cfg.out)
    methods = [m for m in spec.methods if m != "naive"]
    print(f"{'inst':>4} {'N_sim':>7} {'N_ind':>5} " + " ".join(f"{m + ' full':>10}" for m in methods))
    for row in result.rows:
        cells = [f"{row.best[m][1] if m in row.best else '-':>10}" for m in methods]
        print(f"{row.instance:>4} {row.n_sim:>7.1f} {row.n_ind:>5} " + " ".join(cells))
    print(f"done in {time.perf_counter() - start:.0f} s, results in {cfg.out}")


if __name__ == "__main__":
    main()
