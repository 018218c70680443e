"""Command-line front end.

Exit codes: 0 satisfied/success, 3 not satisfied (or no estimate), 2 error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .conditions import (check_proposition, check_stationary_corollary, check_theorem1, check_theorem2,
                         check_theorem3, estimate_wolfowitz_N)
from .config import ExperimentConfig, load_config
from .errors import CapacityError, InvalidInputError, PreconditionError
from .graphs import graph_of, lifted_labels, to_dot
from .lifting import class_sums, lift
from .process import RNG_NAME
from .simulate import Verdict, classify, run, run_path, scrambling_monitor, verdict_summary

EXIT_OK, EXIT_ERROR, EXIT_UNSATISFIED = 0, 2, 3


def _dump(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def run_check(cfg: ExperimentConfig):
    c, p = cfg.check, cfg.process
    if c.theorem == "T1":
        return check_theorem1(p, c.L, c.delta)
    if c.theorem in ("T2", "T3", "C1", "C2") and c.mu is None:
        raise InvalidInputError(f"check.mu is required for {c.theorem}")
    if c.theorem == "T2":
        return check_theorem2(p, c.L, c.delta, c.mu)
    if c.theorem == "T3":
        if c.tau0 is None:
            raise InvalidInputError("check.tau0 is required for T3")
        return check_theorem3(p, c.tau0, c.L, c.delta, c.mu)
    if c.theorem in ("P1", "P2"):
        return check_proposition(p, c.theorem, c.L, c.delta, tau0=c.tau0)
    return check_stationary_corollary(p, c.theorem, c.delta, c.mu, tau0=c.tau0)


def cmd_check(cfg: ExperimentConfig) -> int:
    report = run_check(cfg)
    _dump(report.to_json(), cfg.output / f"{cfg.run_id}_report.json")
    return EXIT_OK if report.satisfied else EXIT_UNSATISFIED


def simulate_seed(cfg: ExperimentConfig, seed: int) -> tuple[str, Verdict]:
    init = cfg.initial_history(seed)
    fixed = cfg.path()
    if fixed is not None:
        traj = run_path(cfg.process.couplings, fixed[:cfg.run.horizon], init, seed)
    else:
        traj = run(cfg.process, init, cfg.run.horizon, seed)
    verdict = classify(traj, cfg.run.tol, cfg.run.tail, cfg.run.p_max)
    verdict.extras.update(rng=RNG_NAME, monitor=scrambling_monitor(cfg.process.couplings, traj.path))
    return traj.to_csv(), verdict


def _seed_job(args):
    cfg, seed = args
    return simulate_seed(cfg, seed)


def cmd_simulate(cfg: ExperimentConfig, jobs: int = 1) -> int:
    seeds = cfg.run.seeds
    work = [(cfg, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_seed_job, work))
    else:
        results = [_seed_job(w) for w in work]
    verdicts = []
    for seed, (csv_text, verdict) in zip(seeds, results):
        stem = cfg.output / f"{cfg.run_id}_seed{seed}"
        stem.parent.mkdir(parents=True, exist_ok=True)
        stem.with_suffix(".csv").write_text(csv_text)
        _dump(verdict.to_json(), stem.with_suffix(".json"))
        verdicts.append(verdict)
    summary = verdict_summary(verdicts)
    summary.update(run_id=cfg.run_id, seeds=seeds)
    _dump(summary, cfg.output / f"{cfg.run_id}_summary.json")
    return EXIT_OK


def cmd_wolfowitz(cfg: ExperimentConfig) -> int:
    w = cfg.wolfowitz
    mats = w.get("matrices")
    if mats is None:
        names = sorted(cfg.system)
        mats = [cfg.system[s].total for s in names]
    cap, mode = int(w.get("cap", 64)), w.get("mode", "exhaustive")
    seed, count = w.get("seed", 0), int(w.get("count", 1000))
    n = estimate_wolfowitz_N(mats, cap, mode, seed=seed, count=count)
    _dump({"N": n, "cap": cap, "mode": mode, "seed": seed, "count": count, "rng": RNG_NAME},
          cfg.output / f"{cfg.run_id}_wolfowitz.json")
    return EXIT_OK if n is not None else EXIT_UNSATISFIED


def cmd_render_graph(cfg: ExperimentConfig) -> int:
    r = cfg.render
    state = r.get("state", sorted(cfg.system)[0])
    if state not in cfg.system:
        raise InvalidInputError(f"render.state {state!r} is not a system state")
    dc = cfg.system[state]
    kind = r.get("matrix", "lifted")
    delta = float(r.get("delta", 0.0))
    if kind == "lifted":
        mat, labels = lift(dc).inner, lifted_labels(dc.m, dc.tau_max)
    elif kind == "total":
        mat, labels = dc.total, None
    elif kind == "class0":
        if "tau0" not in r:
            raise InvalidInputError("render.tau0 is required for matrix 'class0'")
        mat, labels = class_sums(dc, int(r["tau0"]))[0], None
    else:
        raise InvalidInputError(f"unknown render.matrix {kind!r}")
    dot = to_dot(graph_of(mat, delta), labels, name=f"{cfg.run_id}_{state}_{kind}")
    path = cfg.output / f"{cfg.run_id}_{state}_{kind}.dot"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delaysync", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [("check", "verify theorem hypotheses and write a report"),
                            ("simulate", "simulate every seed and classify the outcome"),
                            ("wolfowitz", "estimate the scrambling word length"),
                            ("render-graph", "emit a DOT graph of a coupling")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment JSON file")
        p.add_argument("--out", help="output directory (overrides config 'output')")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config override, value parsed as JSON when possible")
        if name == "simulate":
            p.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


COMMANDS = {"check": cmd_check, "wolfowitz": cmd_wolfowitz, "render-graph": cmd_render_graph}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.override, args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg, max(1, args.jobs))
        return COMMANDS[args.command](cfg)
    except (InvalidInputError, PreconditionError, CapacityError) as exc:
        print(f"delaysync: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
