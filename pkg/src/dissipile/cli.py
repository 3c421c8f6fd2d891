"""Command-line front end: stabilize, burn, sample, couple, rate, oracle.

Every report embeds the resolved configuration, the seed, and a build
identifier; fixed seeds give byte-identical outputs independent of the
thread count. Exit codes: 0 success, 1 experiment-level failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

import numpy as np

from . import __version__
from .burning import burning_test
from .coupling import (default_threads, make_origin_event, rate_experiment,
                       run_coupling_replicas)
from .lattice import build_box, build_grid
from .oracle import run_oracle_suite
from .sandpile import (TopplingParams, config_from_json, config_to_json,
                       run_chain, stabilize)
from .treecode import tree_to_json
from .wilson import wilson_sample

_BUILD_ID = None


def build_id() -> str:
    global _BUILD_ID
    if _BUILD_ID is None:
        ident = f"dissipile-{__version__}"
        try:
            here = os.path.dirname(os.path.abspath(__file__))
            rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"],
                                 cwd=here, capture_output=True, text=True,
                                 timeout=5)
            if rev.returncode == 0:
                ident += "+g" + rev.stdout.strip()
        except Exception:
            pass
        _BUILD_ID = ident
    return _BUILD_ID


def _default_seed() -> int:
    return int(os.environ.get("DISSIPILE_SEED", "1"))


def _emit(doc, path: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _read_config(path: str):
    with open(path) as f:
        return config_from_json(f.read())


def cmd_stabilize(args) -> int:
    heights, domain, params = _read_config(args.config)
    stable, odo = stabilize(heights, domain, params)
    doc = {
        "build": build_id(),
        "config": json.loads(config_to_json(stable, domain, params)),
        "odometer": [int(x) for x in odo],
        "topplings": int(odo.sum()),
    }
    _emit(doc, args.out)
    return 0


def cmd_burn(args) -> int:
    heights, domain, params = _read_config(args.config)
    from .treecode import discretize
    if params.mode == "continuous":
        xi = discretize(heights, params.d)
    else:
        xi = np.asarray(heights, dtype=np.int64)
    sched = burning_test(xi, domain)
    doc = {
        "build": build_id(),
        "allowed": sched.allowed,
        "rounds": [[list(map(int, domain.vertices[v])) for v in r]
                   for r in sched.rounds],
        "leftover": [list(map(int, domain.vertices[v]))
                     for v in sched.leftover],
    }
    _emit(doc, args.out)
    return 0


def _make_domain(args):
    if args.grid:
        dims = [int(x) for x in args.grid.split("x")]
        return build_grid(args.d, dims)
    return build_box(args.d, args.k, "cube")


def cmd_sample(args) -> int:
    seed = args.seed
    if args.what == "chain":
        if args.gamma != 0:
            raise ValueError("chain sampling is driven in discrete mode")
        domain = _make_domain(args)
        params = TopplingParams.discrete(args.d)
        final, _ = run_chain(domain, params, args.steps, seed)
        doc = {
            "build": build_id(), "seed": seed, "steps": args.steps,
            "config": json.loads(config_to_json(final, domain, params)),
        }
        _emit(doc, args.out)
        return 0
    # wilson
    domain = _make_domain(args)
    from .lattice import build_wired_graph
    graph = build_wired_graph(domain, args.gamma > 0)
    trees = []
    for s in range(args.samples):
        tree = wilson_sample(graph, args.gamma, seed=seed + s)
        trees.append(json.loads(tree_to_json(tree)))
    doc = {"build": build_id(), "seed": seed, "gamma": args.gamma,
           "samples": args.samples, "trees": trees}
    _emit(doc, args.out)
    return 0


def cmd_couple(args) -> int:
    threads = args.threads or default_threads()
    batch = run_coupling_replicas(args.d, args.k, args.gamma, args.replicas,
                                  args.seed, threads=threads,
                                  m_values=args.m or None)
    per_m = {}
    for i, m in enumerate(batch.m_values):
        p, se = batch.fail_rate(i)
        per_m[str(m)] = {"fail_rate": p, "fail_se": se}
    mi, p, se = batch.best_m()
    doc = {
        "build": build_id(),
        "config": {"d": args.d, "k": args.k, "gamma": args.gamma,
                   "replicas": args.replicas, "seed": args.seed,
                   "m_values": list(batch.m_values), "trunc0": batch.trunc0,
                   "truncg": batch.truncg},
        "per_m": per_m,
        "best_m": int(batch.m_values[mi]),
        "fail_rate": p, "fail_se": se,
        "inconclusive": int(batch.incon.sum()),
        "height_mismatch": int(batch.hmis.sum()),
    }
    if batch.schedule is not None:
        doc["schedule"] = {
            "m": batch.schedule.m, "r_prime": batch.schedule.r_prime,
            "r_big": batch.schedule.r_big, "n": batch.schedule.n,
            "beta": batch.schedule.beta, "lambda_ok": batch.schedule.lambda_ok,
            "warnings": list(batch.schedule.warnings)}
    _emit(doc, args.out)
    return 0


def _fmt(x) -> str:
    return repr(float(x))


def cmd_rate(args) -> int:
    gammas = [float(g) for g in args.gammas.split(",")]
    if args.replicas <= 0:
        raise ValueError("replicas must be positive")
    threads = args.threads or default_threads()
    event = make_origin_event(args.d, args.k, 2 * args.d)
    res = rate_experiment(args.d, args.k, gammas, args.replicas, args.seed,
                          threads=threads, event=event,
                          indep_replicas=args.indep_replicas)
    slope = res.fit.slope if res.fit else float("nan")
    slope_se = res.fit.slope_se if res.fit else float("nan")
    intercept = res.fit.intercept if res.fit else float("nan")
    lines = ["gamma,replicas,fail_rate,fail_se,gap_indep,gap_se,"
             "slope,slope_se,intercept"]
    for r in res.rows:
        lines.append(",".join([
            _fmt(r.gamma), str(r.replicas), _fmt(r.fail_rate),
            _fmt(r.fail_se), _fmt(r.gap_indep), _fmt(r.gap_se),
            _fmt(slope), _fmt(slope_se), _fmt(intercept)]))
    csv_text = "\n".join(lines) + "\n"
    csv_path = args.out + ".csv"
    with open(csv_path, "w") as f:
        f.write(csv_text)
    sidecar = {
        "build": build_id(),
        # thread count is omitted on purpose: results are contractually
        # independent of it and reports must be byte-identical
        "config": {"d": args.d, "k": args.k, "gammas": gammas,
                   "replicas": args.replicas,
                   "indep_replicas": args.indep_replicas,
                   "seed": args.seed},
        "rows": [{
            "gamma": r.gamma, "replicas": r.replicas,
            "fail_rate": r.fail_rate, "fail_se": r.fail_se,
            "best_m": r.best_m, "gap_indep": r.gap_indep,
            "gap_se": r.gap_se, "gap_coupled": r.gap_coupled,
            "gap_coupled_se": r.gap_coupled_se, "inconclusive": r.incon,
            "audit_ok": r.audit_ok,
            "per_m": {str(m): list(v) for m, v in r.per_m.items()},
        } for r in res.rows],
        "fit": None if res.fit is None else {
            "slope": res.fit.slope, "slope_se": res.fit.slope_se,
            "intercept": res.fit.intercept, "note": res.fit.note},
    }
    with open(args.out + ".json", "w") as f:
        f.write(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    if args.emit_gnuplot_script:
        gp = (
            "set logscale xy\n"
            "set xlabel 'gamma'\n"
            "set ylabel 'estimate'\n"
            "set datafile separator ','\n"
            f"plot '{os.path.basename(csv_path)}' using 1:3 skip 1 "
            "with linespoints title 'coupling failure rate', \\\n"
            f"     '{os.path.basename(csv_path)}' using 1:5 skip 1 "
            "with points title 'independent gap'\n")
        with open(args.out + ".gnuplot", "w") as f:
            f.write(gp)
    if not all(r.audit_ok for r in res.rows):
        sys.stderr.write("rate: domination audit failed\n")
        return 1
    return 0


def cmd_oracle(args) -> int:
    checks = run_oracle_suite(args.level)
    doc = {"build": build_id(), "level": args.level, "checks": checks,
           "all_pass": all(c["pass"] for c in checks)}
    _emit(doc, args.out)
    return 0 if doc["all_pass"] else 1


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dissipile",
        description="Dissipative sandpile simulator and coupling experiments")
    p.add_argument("--version", action="version", version=build_id())
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stabilize", help="stabilize a configuration file")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stabilize)

    s = sub.add_parser("burn", help="burn schedule of a configuration")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_burn)

    s = sub.add_parser("sample", help="sample the chain or spanning trees")
    s.add_argument("what", choices=["chain", "wilson"])
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--grid", help="rectangle dims like 2x2 (instead of --k)")
    s.add_argument("--gamma", type=float, default=0.0)
    s.add_argument("--steps", type=int, default=1000)
    s.add_argument("--samples", type=int, default=1)
    s.add_argument("--seed", type=int, default=_default_seed())
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("couple", help="coupled replicas at one gamma")
    s.add_argument("--d", type=int, required=True, choices=[2, 3])
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--replicas", type=int, default=1000)
    s.add_argument("--m", type=int, action="append")
    s.add_argument("--seed", type=int, default=_default_seed())
    s.add_argument("--threads", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_couple)

    s = sub.add_parser("rate", help="gamma-grid convergence experiment")
    s.add_argument("--d", type=int, required=True, choices=[2, 3])
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--gammas", required=True,
                   help="comma-separated, e.g. 1e-2,3e-3,1e-3")
    s.add_argument("--replicas", type=int, default=10000)
    s.add_argument("--indep-replicas", type=int)
    s.add_argument("--seed", type=int, default=_default_seed())
    s.add_argument("--threads", type=int)
    s.add_argument("--out", required=True, help="output path prefix")
    s.add_argument("--emit-gnuplot-script", action="store_true")
    s.set_defaults(func=cmd_rate)

    s = sub.add_parser("oracle", help="exact ground-truth check table")
    s.add_argument("--level", choices=["quick", "full"], default="quick")
    s.add_argument("--out")
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
