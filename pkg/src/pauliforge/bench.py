"""Experiment orchestration: baselines, budget-matched comparisons, generalization."""
from __future__ import annotations

import json
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .compile import (GscInstance, SimultaneousSolution, SolutionMetrics, make_instance, metrics,
                      naive_individual, naive_simultaneous, verify_gscd)
from .heuristics.mcts import MctsConfig, mcts_run
from .heuristics.sa import SaConfig, sa_run
from .rl.ddqn import Stuck, TrainConfig, evaluate_greedy, train, write_curve
from .rl.env import RewardConfig
from .util import canonical_json, config_hash, thread_cap

log = logging.getLogger(__name__)

METHODS = ("naive", "rl", "sa", "mcts")
DEFAULT_BUDGETS = {"rl": 300_000, "mcts": 400_000, "sa": 500_000}


# ------------------------------------------------------------------ configs

def train_config(d: dict | None = None) -> TrainConfig:
    d = dict(d or {})
    if "reward" in d and isinstance(d["reward"], dict):
        d["reward"] = RewardConfig(**d["reward"])
    if "hidden" in d:
        d["hidden"] = tuple(d["hidden"])
    preset = d.pop("preset", None)
    if preset == "comparison":
        return TrainConfig.comparison(**d)
    if preset not in (None, "default"):
        raise ValueError(f"unknown preset {preset!r}")
    return TrainConfig(**d)


def sa_config(d: dict | None = None) -> SaConfig:
    return SaConfig(**(d or {}))


def mcts_config(d: dict | None = None) -> MctsConfig:
    return MctsConfig(**(d or {}))


_BUILDERS = {"rl": train_config, "sa": sa_config, "mcts": mcts_config}


@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "experiment"
    methods: tuple[str, ...] = ("naive",)
    q: int = 4
    t_size: int = 8
    instance_seeds: tuple[int, ...] = (0,)
    repeats: int = 1
    configs: dict = field(default_factory=dict, hash=False)
    budgets: dict = field(default_factory=lambda: dict(DEFAULT_BUDGETS), hash=False)
    baseline_orderings: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "instance_seeds", tuple(self.instance_seeds))
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if self.repeats < 1 or self.baseline_orderings < 1:
            raise ValueError("repeats and baseline_orderings must be >= 1")
        b = self.budgets
        chain = [b[m] for m in ("rl", "mcts", "sa") if m in self.methods and m in b]
        if any(x >= y for x, y in zip(chain, chain[1:])):
            raise ValueError("budgets must satisfy N_RL < N_MCTS < N_SA")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown spec keys {sorted(extra)}")
        d = dict(d)
        if "budgets" in d:
            d["budgets"] = {**DEFAULT_BUDGETS, **d["budgets"]}
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def method_config(self, method: str):
        """Method config with its evaluation budget folded in."""
        d = dict(self.configs.get(method, {}))
        budget = self.budgets.get(method)
        if method == "rl":
            d.setdefault("preset", "comparison")
            if budget is not None:
                d["step_budget"] = budget
        elif method in ("sa", "mcts") and budget is not None:
            d["budget"] = budget
        return _BUILDERS[method](d) if method in _BUILDERS else None

    def instances(self) -> list[GscInstance]:
        return [make_instance(self.q, self.t_size, s) for s in self.instance_seeds]


# ---------------------------------------------------------------- baselines

def baseline_counts(inst: GscInstance, orderings: int = 100, seed: int = 0) -> tuple[float, int]:
    """(mean raw simultaneous count over shuffled orderings, individual count)."""
    if orderings < 1:
        raise ValueError("orderings must be >= 1")
    rng = np.random.default_rng(seed)
    ind = naive_individual(inst)
    n_ind = ind.cost
    total = 0
    for _ in range(orderings):
        order = [int(i) for i in rng.permutation(len(inst.targets))]
        shuffled = inst.with_targets([inst.targets[i] for i in order])
        if naive_individual(shuffled).cost != n_ind:
            raise AssertionError("individual count depends on target order")
        total += naive_simultaneous(inst, order).raw_count
    return total / orderings, n_ind


# ---------------------------------------------------------------------- jobs

@dataclass(frozen=True)
class JobResult:
    instance: int
    method: str
    repeat: int
    seed: int
    evaluations: int
    metrics: SolutionMetrics | None
    diagnostic: str = ""
    curve: tuple = ()


def job_seed(spec_seed: int, instance_seed: int, method: str, repeat: int) -> int:
    ss = np.random.SeedSequence([spec_seed, instance_seed, METHODS.index(method), repeat])
    return int(ss.generate_state(1)[0])


def _check(inst: GscInstance, sol: SimultaneousSolution | None) -> str:
    if sol is None:
        return "no solution found"
    if not verify_gscd(inst, sol.gates):
        return "reported solution failed verification"
    return ""


def run_job(args) -> JobResult:
    inst, method, repeat, seed, cfg = args
    n_ind = naive_individual(inst).cost
    curve: tuple = ()
    if method == "naive":
        sol, evals = naive_simultaneous(inst), 0
        m = metrics(inst, sol, n_ind)
    elif method == "rl":
        res = train([inst], _reseed(cfg, seed))
        sol, evals = res.best.get(0), res.env_steps
        m = metrics(inst, sol, n_ind) if sol is not None else None
        curve = tuple(res.curve)
    else:
        run = sa_run if method == "sa" else mcts_run
        res = run(inst, _reseed(cfg, seed))
        sol, evals, m = res.solution, res.evaluations, res.metrics
    diag = _check(inst, sol)
    return JobResult(inst.seed, method, repeat, seed, evals, None if diag else m, diag, curve)


def _reseed(cfg, seed):
    return type(cfg)(**{**{f.name: getattr(cfg, f.name) for f in fields(cfg)}, "seed": seed})


def _map(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


# --------------------------------------------------------------------- suite

@dataclass(frozen=True)
class ResultRow:
    instance: int
    n_sim: float
    n_ind: int
    best: dict = field(default_factory=dict, hash=False)  # method -> (raw, full)
    median: dict = field(default_factory=dict, hash=False)  # method -> median full over repeats

    def percent(self, method: str) -> tuple[float, float]:
        raw, full = self.best[method]
        return 100.0 * raw / self.n_ind, 100.0 * full / self.n_ind


@dataclass
class SuiteResult:
    rows: list[ResultRow]
    jobs: list[JobResult]
    spec: ExperimentSpec


def run_suite(spec: ExperimentSpec, workers: int | None = None) -> SuiteResult:
    workers = thread_cap() if workers is None else workers
    insts = spec.instances()
    jobs = []
    for inst in insts:
        for method in spec.methods:
            if method == "naive":
                continue
            cfg = spec.method_config(method)
            for r in range(spec.repeats):
                jobs.append((inst, method, r, job_seed(spec.seed, inst.seed, method, r), cfg))
    results = _map(run_job, jobs, workers)
    rows = []
    for inst in insts:
        n_sim, n_ind = baseline_counts(inst, spec.baseline_orderings, spec.seed)
        best, median = {}, {}
        for method in spec.methods:
            if method == "naive":
                continue
            mine = [j for j in results if j.instance == inst.seed and j.method == method]
            ok = [j.metrics for j in mine if j.metrics is not None]
            for j in mine:
                if j.diagnostic:
                    log.warning("instance %s %s repeat %d: %s", inst.seed, method, j.repeat, j.diagnostic)
            if ok:
                top = min(ok, key=lambda m: (m.full_cancelled_count, m.raw_count))
                best[method] = (top.raw_count, top.full_cancelled_count)
                median[method] = statistics.median(m.full_cancelled_count for m in ok)
        rows.append(ResultRow(inst.seed, n_sim, n_ind, best, median))
    return SuiteResult(rows, results, spec)


def _fmt(x: float) -> str:
    return f"{x:.1f}"


def summary_csv(result: SuiteResult) -> str:
    methods = [m for m in result.spec.methods if m != "naive"]
    head = ["instance", "n_sim", "n_ind"]
    for m in methods:
        head += [f"{m}_raw", f"{m}_full", f"{m}_raw_pct", f"{m}_full_pct", f"{m}_median_full"]
    lines = [";".join(head)]
    for row in result.rows:
        cells = [str(row.instance), _fmt(row.n_sim), str(row.n_ind)]
        for m in methods:
            if m in row.best:
                raw, full = row.best[m]
                pr, pf = row.percent(m)
                cells += [str(raw), str(full), _fmt(pr), _fmt(pf), _fmt(row.median[m])]
            else:
                cells += [""] * 5
        lines.append(";".join(cells))
    return "\n".join(lines) + "\n"


def runs_csv(result: SuiteResult) -> str:
    lines = ["instance;method;repeat;seed;evaluations;raw_count;tail_cancelled_count;"
             "full_cancelled_count;diagnostic"]
    for j in sorted(result.jobs, key=lambda j: (j.instance, METHODS.index(j.method), j.repeat)):
        m = j.metrics
        counts = [str(m.raw_count), str(m.tail_cancelled_count), str(m.full_cancelled_count)] if m else ["", "", ""]
        lines.append(";".join([str(j.instance), j.method, str(j.repeat), str(j.seed), str(j.evaluations),
                               *counts, j.diagnostic]))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> list[dict]:
    rows = [ln.split(";") for ln in text.strip().splitlines()]
    return [dict(zip(rows[0], r)) for r in rows[1:]]


def manifest(spec: ExperimentSpec, extra: dict | None = None) -> dict:
    cfgs = {m: spec.method_config(m) for m in spec.methods if m != "naive"}
    out = {
        "version": __version__,
        "spec": json.loads(canonical_json(spec)),
        "spec_hash": config_hash(spec),
        "config_hashes": {m: config_hash(c) for m, c in cfgs.items()},
        "seeds": {
            f"{s}/{m}/{r}": job_seed(spec.seed, s, m, r)
            for s in spec.instance_seeds for m in cfgs for r in range(spec.repeats)
        },
    }
    if extra:
        out.update(extra)
    return out


def write_suite(result: SuiteResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in (("summary.csv", summary_csv(result)), ("runs.csv", runs_csv(result))):
        (out / name).write_text(text)
        written.append(out / name)
    for j in result.jobs:
        if j.curve:
            p = out / f"curve_{j.instance}_{j.method}_{j.repeat}.csv"
            write_curve(j.curve, p)
            written.append(p)
    (out / "manifest.json").write_text(json.dumps(manifest(result.spec), indent=2, sort_keys=True) + "\n")
    written.append(out / "manifest.json")
    return written


# ------------------------------------------------------------ generalization

RATIO_BANDS = (0.0, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0)


@dataclass(frozen=True)
class GeneralizationConfig:
    sizes: tuple[int, ...] = (1, 50, 100, 1000)
    q: int = 4
    t_size: int = 8
    agents: int = 1
    train: dict = field(default_factory=dict, hash=False)
    window: int = 1000  # trailing episodes averaged for the learned mean
    instance_seed: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(self.sizes))


@dataclass(frozen=True)
class GeneralizationRow:
    size: int
    agent: int
    mean_learned: float
    mean_naive: float
    histogram: tuple[float, ...]  # fractions per ratio band, last entry = stuck


def start_set(size: int, q: int, t_size: int, base_seed: int) -> list[GscInstance]:
    return [make_instance(q, t_size, base_seed + i) for i in range(size)]


def ratio_histogram(ratios: Sequence[float | None]) -> tuple[float, ...]:
    """Fraction of states per band [b_i, b_{i+1}); ``None`` (stuck) goes last."""
    counts = [0] * (len(RATIO_BANDS) + 1)
    for r in ratios:
        if r is None:
            counts[-1] += 1
            continue
        band = max(i for i, b in enumerate(RATIO_BANDS) if r >= b)
        counts[band] += 1
    n = max(len(ratios), 1)
    return tuple(c / n for c in counts)


def _generalization_job(args) -> GeneralizationRow:
    size, agent, cfg, insts, window = args
    res = train(insts, cfg)
    tail = res.raw_counts[-window:]
    naive = [naive_individual(i).cost for i in insts]
    ratios = []
    for inst, n_ind in zip(insts, naive):
        got = evaluate_greedy(res.policy, inst, cfg.max_actions)
        ratios.append(None if isinstance(got, Stuck) else got.raw_count / n_ind)
    mean_learned = float(np.mean(tail)) if tail else 0.0
    return GeneralizationRow(size, agent, mean_learned, float(np.mean(naive)), ratio_histogram(ratios))


def run_generalization(gcfg: GeneralizationConfig, workers: int | None = None) -> list[GeneralizationRow]:
    workers = thread_cap() if workers is None else workers
    jobs = []
    for size in gcfg.sizes:
        insts = start_set(size, gcfg.q, gcfg.t_size, gcfg.instance_seed)
        for agent in range(gcfg.agents):
            seed = int(np.random.SeedSequence([gcfg.seed, size, agent]).generate_state(1)[0])
            cfg = train_config({**gcfg.train, "seed": seed})
            jobs.append((size, agent, cfg, insts, gcfg.window))
    return _map(_generalization_job, jobs, workers)


def generalization_csv(rows: Sequence[GeneralizationRow]) -> str:
    bands = [f"ratio_ge_{b:g}" for b in RATIO_BANDS] + ["stuck"]
    lines = [";".join(["size", "agent", "mean_learned", "mean_naive", *bands])]
    for r in rows:
        lines.append(";".join([str(r.size), str(r.agent), _fmt(r.mean_learned), _fmt(r.mean_naive),
                               *(f"{h:.3f}" for h in r.histogram)]))
    return "\n".join(lines) + "\n"
