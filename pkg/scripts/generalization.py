"""Train single agents on start sets of growing size and summarise them.

    python scripts/generalization.py --spec configs/generalization.json --out results/generalization
"""
from __future__ import annotations

import argparse
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from pauliforge.bench import RATIO_BANDS, GeneralizationConfig, generalization_csv, run_generalization
from pauliforge.util import canonical_json, config_hash


@dataclass
class GeneralizationRun:
    spec: Path
    out: Path
    hidden: tuple[int, ...] | None = None
    episodes: int | None = None

    def load(self) -> GeneralizationConfig:
        raw = json.loads(self.spec.read_text())
        raw.pop("kind", None)
        train = dict(raw.get("train", {}))
        if self.hidden:
            train["hidden"] = list(self.hidden)
        if self.episodes:
            train["episodes"] = self.episodes
        raw["train"] = train
        return GeneralizationConfig(**raw)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--spec", type=Path, default=Path("configs/generalization.json"))
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--hidden", type=int, nargs="+")
    ap.add_argument("--episodes", type=int)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    run = GeneralizationRun(args.spec, args.out, tuple(args.hidden) if args.hidden else None, args.episodes)

    gcfg = run.load()
    rows = run_generalization(gcfg)
    run.out.mkdir(parents=True, exist_ok=True)
    (run.out / "generalization.csv").write_text(generalization_csv(rows))
    manifest = {"spec": json.loads(canonical_json(gcfg)), "spec_hash": config_hash(gcfg)}
    (run.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for r in rows:
        below = sum(r.histogram[:RATIO_BANDS.index(1.0)])
        print(f"|S0|={r.size:<5} agent {r.agent}: mean learned {r.mean_learned:.1f}, "
              f"mean naive {r.mean_naive:.1f}, {100 * below:.0f}% of states below naive")


if __name__ == "__main__":
    main()
