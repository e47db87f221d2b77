"""Command line entry point: ``pauliforge <subcommand> ...``."""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import (ExperimentSpec, GeneralizationConfig, baseline_counts, generalization_csv,
                    mcts_config, run_generalization, run_suite, sa_config, train_config,
                    write_suite)
from .compile import (SolutionMetrics, format_solution, make_instance, metrics, naive_individual,
                      naive_simultaneous, parse_solution_word, read_instance, solution_from_word,
                      verify_gscd, write_instance)
from .complexity import brute_gscd, brute_hamiltonian_path, hp2hps, hps2gscd, read_graph
from .heuristics.mcts import mcts_run
from .heuristics.sa import sa_run
from .rl.ddqn import save_checkpoint, train, write_curve
from .util import canonical_json, config_hash

METRIC_HEADER = ("instance;method;raw_count;tail_cancelled_count;full_cancelled_count;"
                 "naive_individual_count;percent_raw;percent_tail;percent_full;evaluations")


def _metric_line(name: str, method: str, m: SolutionMetrics | None, evals: int) -> str:
    if m is None:
        return ";".join([name, method, "", "", "", "", "", "", "", str(evals)])
    return ";".join([
        name, method, str(m.raw_count), str(m.tail_cancelled_count), str(m.full_cancelled_count),
        str(m.naive_individual_count), f"{m.percent_raw:.1f}", f"{m.percent_tail:.1f}",
        f"{m.percent_full:.1f}", str(evals)])


def _sha(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _load_json(path) -> dict:
    return json.loads(Path(path).read_text()) if path else {}


def _out(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, **entries) -> None:
    body = {"version": __version__, **entries}
    (out / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------------ commands

def cmd_bench(args) -> int:
    raw = _load_json(args.spec)
    kind = raw.pop("kind", "comparison")
    out = _out(args.out)
    if kind == "generalization":
        gcfg = GeneralizationConfig(**raw)
        rows = run_generalization(gcfg)
        (out / "generalization.csv").write_text(generalization_csv(rows))
        _write_manifest(out, kind=kind, spec=json.loads(canonical_json(gcfg)),
                        spec_hash=config_hash(gcfg))
    elif kind == "comparison":
        spec = ExperimentSpec.from_dict(raw)
        write_suite(run_suite(spec), out)
    else:
        raise SystemExit(f"unknown spec kind {kind!r}")
    print(f"wrote results to {out}")
    return 0


def cmd_make_instance(args) -> int:
    inst = make_instance(args.q, args.t, args.seed)
    write_instance(inst, args.out, sidecar=True)
    print(args.out)
    return 0


def cmd_compile_naive(args) -> int:
    inst = read_instance(args.instance)
    out = _out(args.out)
    name = Path(args.instance).stem
    sol = naive_simultaneous(inst)
    n_sim, n_ind = baseline_counts(inst, args.orderings, args.seed)
    m = metrics(inst, sol, n_ind)
    (out / f"{name}.naive.sol").write_text(format_solution(sol))
    (out / "metrics.csv").write_text("\n".join([METRIC_HEADER, _metric_line(name, "naive", m, 0)]) + "\n")
    (out / "baseline.csv").write_text(f"instance;n_sim;n_ind\n{name};{n_sim:.1f};{n_ind}\n")
    _write_manifest(out, command="compile-naive", instance=_sha(args.instance),
                    orderings=args.orderings, seed=args.seed)
    print(_metric_line(name, "naive", m, 0))
    return 0


def cmd_train(args) -> int:
    insts = [read_instance(p) for p in args.instances]
    cfg = train_config({**_load_json(args.config), **({"seed": args.seed} if args.seed is not None else {})})
    out = _out(args.out)
    res = train(insts, cfg, log_every=args.log_every)
    write_curve(res.curve, out / "curve.csv")
    lines = [METRIC_HEADER]
    for k, path in enumerate(args.instances):
        name = Path(path).stem
        sol = res.best.get(k)
        m = metrics(insts[k], sol, res.naive_counts[k]) if sol is not None else None
        if sol is not None:
            (out / f"{name}.rl.sol").write_text(format_solution(sol))
        lines.append(_metric_line(name, "rl", m, res.env_steps))
    (out / "metrics.csv").write_text("\n".join(lines) + "\n")
    if args.checkpoint:
        save_checkpoint(out / "checkpoint.npz", res.policy, None, len(res.curve), cfg)
    _write_manifest(out, command="train-ddqn", config=json.loads(canonical_json(cfg)),
                    config_hash=cfg.hash(), seed=cfg.seed,
                    instances=[_sha(p) for p in args.instances])
    print("\n".join(lines[1:]))
    return 0


def _cmd_search(args, method: str) -> int:
    inst = read_instance(args.instance)
    build, run = (sa_config, sa_run) if method == "sa" else (mcts_config, mcts_run)
    cfg = build({**_load_json(args.config), **({"seed": args.seed} if args.seed is not None else {})})
    out = _out(args.out)
    name = Path(args.instance).stem
    res = run(inst, cfg)
    if res.solution is not None:
        (out / f"{name}.{method}.sol").write_text(format_solution(res.solution))
    line = _metric_line(name, method, res.metrics, res.evaluations)
    (out / "metrics.csv").write_text(METRIC_HEADER + "\n" + line + "\n")
    _write_manifest(out, command=f"run-{method}", config=json.loads(canonical_json(cfg)),
                    config_hash=config_hash(cfg), seed=cfg.seed, instance=_sha(args.instance))
    print(line)
    return 0 if res.solution is not None else 1


def cmd_reduce_hp(args) -> int:
    g = read_graph(args.graph)
    if g.start is None:
        g = hp2hps(g)
    red = hps2gscd(g, args.q)
    out = _out(args.out)
    name = Path(args.graph).stem
    write_instance(red.instance, out / f"{name}.gsc", sidecar=True)
    labels = ["vertex;label"] + [f"{v};{red.labeled.vertex_labels[v]}" for v in sorted(red.labeled.vertex_labels)]
    (out / "labels.csv").write_text("\n".join(labels) + "\n")
    rows = ["q;targets;budget;hps_path;gscd_word"]
    entry = [str(red.instance.q), str(len(red.instance.targets)), str(red.budget), "", ""]
    if args.check:
        path = brute_hamiltonian_path(g, g.start)
        word = brute_gscd(red.instance, len(red.instance.targets))
        entry[3] = "yes" if path else "no"
        entry[4] = "yes" if word is not None else "no"
    rows.append(";".join(entry))
    (out / "reduction.csv").write_text("\n".join(rows) + "\n")
    _write_manifest(out, command="reduce-hp", graph=_sha(args.graph), q=red.instance.q)
    print(rows[1])
    return 0


def cmd_verify(args) -> int:
    inst = read_instance(args.instance)
    word = parse_solution_word(Path(args.solution).read_text())
    res = verify_gscd(inst, word, args.k)
    print("YES" if res else "NO")
    if res and args.out:
        out = _out(args.out)
        m = metrics(inst, solution_from_word(inst, word[:args.k] if args.k else word),
                    naive_individual(inst).cost)
        (out / "metrics.csv").write_text(
            METRIC_HEADER + "\n" + _metric_line(Path(args.instance).stem, "verify", m, 0) + "\n")
    return 0 if res else 1


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pauliforge", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run an experiment spec")
    b.add_argument("--spec", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(fn=cmd_bench)

    m = sub.add_parser("make-instance", help="write a random instance file")
    m.add_argument("--q", type=int, default=4)
    m.add_argument("--t", type=int, default=8)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", required=True)
    m.set_defaults(fn=cmd_make_instance)

    c = sub.add_parser("compile-naive", help="naive ladder compilation of one instance")
    c.add_argument("instance")
    c.add_argument("--out", required=True)
    c.add_argument("--orderings", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(fn=cmd_compile_naive)

    t = sub.add_parser("train-ddqn", help="train a double deep Q agent")
    t.add_argument("instances", nargs="+")
    t.add_argument("--config")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True)
    t.add_argument("--checkpoint", action="store_true")
    t.add_argument("--log-every", type=int, default=0)
    t.set_defaults(fn=cmd_train)

    for method in ("sa", "mcts"):
        s = sub.add_parser(f"run-{method}", help=f"run {method.upper()} on one instance")
        s.add_argument("instance")
        s.add_argument("--config")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", required=True)
        s.set_defaults(fn=lambda a, m=method: _cmd_search(a, m))

    r = sub.add_parser("reduce-hp", help="reduce a start-vertex graph to a GSCD instance")
    r.add_argument("graph")
    r.add_argument("--q", type=int)
    r.add_argument("--out", required=True)
    r.add_argument("--check", action="store_true", help="brute-force both sides")
    r.set_defaults(fn=cmd_reduce_hp)

    v = sub.add_parser("verify", help="decide whether a solution resolves an instance")
    v.add_argument("instance")
    v.add_argument("solution")
    v.add_argument("--k", type=int)
    v.add_argument("--out")
    v.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
