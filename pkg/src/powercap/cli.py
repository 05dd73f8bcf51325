"""Command-line front end: experiments, sweeps, built-in checks and trace audits."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, topology
from .engine import CSV_COLUMNS, SimConfig, SweepRow, compute_routes, run
from .experiments import BUILTINS, builtin, instances, load_spec, replay, run_experiment
from .optimal import optimal_capacity
from .phy import PhysicalParams, power_for_range
from .routing import SegmentRouteError, check_lemma3, segment_route
from .verify import (audit_trace, audit_trace_file, check_lemma2, check_theorem1,
                     check_theorem2, lemma2_bound, links_meeting_disc, random_feasible_set,
                     random_instance)

log = logging.getLogger(__name__)

CHECKS = ("theorem1", "theorem2", "lemma1", "lemma2", "lemma3")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_theorem1_suite(instances: int = 50, seed: int = 0) -> CheckResult:
    bad = [s for s in range(seed, seed + instances) if not check_theorem1(*random_instance(s))]
    return CheckResult("theorem1", not bad,
                       f"{instances - len(bad)}/{instances} instances non-decreasing"
                       + (f"; failing seeds {bad}" if bad else ""))


def check_theorem2_suite(m: int = 2, simulate: bool = False, workload: int = 500) -> CheckResult:
    rep = check_theorem2(m, simulate=simulate, workload=workload)
    detail = (f"n={rep.n} middle SINR {rep.middle_sinr:.3f} (min {rep.min_sinr:.3f}), "
              f"all feasible={rep.all_feasible}, chain={rep.routes_through_chain}, "
              f"gain bound {rep.gain_bound:g}")
    passed = rep.ok
    if simulate:
        k = 2 * m + 1
        detail += f", C_high {rep.c_high:.3f}W, C_low {rep.c_low:.3f}W"
        passed = passed and rep.c_high >= 0.95 * k and rep.c_low <= 0.55
    return CheckResult("theorem2", passed, detail)


def _sample_traces(workload: int = 20, seed: int = 0):
    """Short Cen and CS traces on a random network and a small grid, as lists of lines."""
    spec = builtin("exp2", reps=1, seed=seed, workload=workload)
    (_, net, flows), = instances(spec)
    grid = topology.gen_grid(8, 8, 200.0, workload)
    for net_, flows_ in ((net, flows), grid):
        for r in spec.ladder:
            for sched in ("cen", "cs"):
                buf = io.StringIO()
                run(SimConfig(net_, flows_, r=r, scheduler=sched, seed=seed), trace=buf)
                yield buf.getvalue().splitlines()


def check_lemma1_suite(traces=None) -> CheckResult:
    slots = sets = 0
    violations = []
    sources = [open(t) for t in traces] if traces else _sample_traces()
    for lines in sources:
        audit = audit_trace(lines)
        slots += audit.slots
        sets += audit.checked_sets
        violations += audit.violations
        if hasattr(lines, "close"):
            lines.close()
    return CheckResult("lemma1", not violations,
                       f"{slots} slots, {sets} succeeded sets, {len(violations)} violations")


def check_lemma2_suite(sets: int = 500, seed: int = 0, side: float = 1000.0,
                       d_min: float = 20.0) -> CheckResult:
    params = PhysicalParams()
    rng = np.random.default_rng(seed)
    bad = 0
    worst = 0.0
    for _ in range(sets):
        links = random_feasible_set(rng, params, side=side, d_min=d_min)
        center = rng.uniform(0.0, side, 2)
        R = float(rng.uniform(0.0, side / 4))
        if not check_lemma2(links, center, R, d_min, params):
            bad += 1
        worst = max(worst, links_meeting_disc(links, center, R) / lemma2_bound(R, d_min, params))
    return CheckResult("lemma2", bad == 0,
                       f"{sets} random maximal sets, {bad} violations, max count/bound {worst:.3f}")


def check_lemma3_suite(networks: int = 20, pairs: int = 100, n: int = 2000,
                       seed: int = 0, factor: float = 4.01) -> CheckResult:
    r_c = topology.critical_range(n)
    ok = total = 0
    for s in range(seed, seed + networks):
        net = topology.gen_uniform(n, 1.0, s)
        rng = np.random.default_rng(s)
        for _ in range(pairs):
            a, b = (int(v) for v in rng.choice(n, 2, replace=False))
            total += 1
            try:
                route = segment_route(net, a, b, r_c, factor * r_c)
            except SegmentRouteError:
                continue
            ok += check_lemma3(net, route, a, b, r_c)
    rate = ok / total
    return CheckResult("lemma3", rate >= 0.99, f"{ok}/{total} routes valid ({rate:.2%})")


def run_checks(which: str = "all", out=None, **opts) -> int:
    """Run the named check (or all) and print a pass/fail table; returns an exit status."""
    out = out or sys.stdout
    names = CHECKS if which == "all" else (which,)
    results = []
    for name in names:
        if name == "theorem1":
            results.append(check_theorem1_suite(opts.get("instances", 50), opts.get("seed", 0)))
        elif name == "theorem2":
            results.append(check_theorem2_suite(opts.get("m", 2), opts.get("simulate", False)))
        elif name == "lemma1":
            results.append(check_lemma1_suite(opts.get("trace")))
        elif name == "lemma2":
            results.append(check_lemma2_suite(opts.get("sets", 500), opts.get("seed", 0)))
        elif name == "lemma3":
            results.append(check_lemma3_suite(opts.get("networks", 20), opts.get("pairs", 100)))
        else:
            raise ValueError(f"unknown check {name!r}")
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}", file=out)
    return 0 if all(r.passed for r in results) else 1


def _sweep_file(args) -> int:
    net, flows = topology.load(args.topology)
    if not flows:
        raise SystemExit("topology file has no flows")
    if args.workload:
        flows = [topology.FlowSpec(f.src, f.dst, f.weight, args.workload) for f in flows]
    params = PhysicalParams()
    seeds = range(args.seed, args.seed + args.reps)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for seed in seeds:
        for r in args.r:
            routes = compute_routes(net, flows, r)
            for sched in args.scheduler:
                if sched == "opt":
                    cap = optimal_capacity(net, flows, power_for_range(r, params), params)
                    writer.writerow(["opt", args.routing, f"{r:g}", seed, "",
                                     f"{cap:.6f}", "", "", ""])
                    continue
                cfg = SimConfig(net, flows, r=r, params=params, scheduler=sched,
                                routing=args.routing, seed=seed, routes=routes)
                if args.trace_dir:
                    Path(args.trace_dir).mkdir(parents=True, exist_ok=True)
                    path = Path(args.trace_dir) / f"{sched}_r{r:g}_s{seed}.jsonl"
                    with open(path, "w") as tf:
                        rep = run(cfg, trace=tf)
                else:
                    rep = run(cfg)
                writer.writerow(SweepRow(sched, args.routing, r, seed, rep).csv_fields())
    if fh is not sys.stdout:
        fh.close()
    return 0


def _run(args) -> int:
    target = args.experiment
    if target.endswith(".json"):
        result = replay(target, args.out)
    else:
        overrides = {}
        for key in ("reps", "workload", "seed"):
            if getattr(args, key) is not None:
                overrides[key] = getattr(args, key)
        if args.r:
            overrides["ladder"] = args.r
        if args.scheduler:
            if "opt" in args.scheduler:
                raise SystemExit("the opt scheduler is only available in `sweep`")
            overrides["schedulers"] = args.scheduler
        if target in BUILTINS:
            spec = builtin(target, **overrides)
        else:
            spec = load_spec(target)
            for key, val in overrides.items():
                setattr(spec, key, val)
            spec.__post_init__()
        result = run_experiment(spec, args.out)
    if args.out is None:
        sys.stdout.write(result.csv_text)
    else:
        print(f"wrote {result.csv_path} and {result.manifest_path}")
    return 0


def _verify(args) -> int:
    status = 0
    for path in args.traces:
        audit = audit_trace_file(path)
        print(f"{path}: {audit.slots} slots, {audit.checked_sets} succeeded sets, "
              f"{len(audit.violations)} violations")
        for lineno, slot, what in audit.violations[:20]:
            print(f"  line {lineno} slot {slot}: {what}")
        if not audit.ok:
            status = 1
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="powercap", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a built-in experiment, a TOML spec or a JSON manifest")
    p.add_argument("experiment", help=f"one of {', '.join(BUILTINS)}, a .toml file or a .json manifest")
    p.add_argument("--scheduler", nargs="+", choices=("cs", "cen", "opt"))
    p.add_argument("--routing", default="hop", choices=("hop",))
    p.add_argument("--r", nargs="+", type=float, help="transmission range ladder in meters")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--workload", type=int)
    p.add_argument("--out", help="directory for <name>.csv and <name>.json")
    p.set_defaults(func=_run)

    p = sub.add_parser("sweep", help="sweep a saved topology file over a range ladder")
    p.add_argument("topology", help="JSON topology with flows (see topology.save)")
    p.add_argument("--scheduler", nargs="+", default=["cs", "cen"], choices=("cs", "cen", "opt"))
    p.add_argument("--routing", default="hop", choices=("hop",))
    p.add_argument("--r", nargs="+", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--workload", type=int)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--trace-dir", help="write a JSON-lines slot trace per run here")
    p.set_defaults(func=_sweep_file)

    p = sub.add_parser("checks", help="run the built-in lemma and theorem checks")
    p.add_argument("which", nargs="?", default="all", choices=CHECKS + ("all",))
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--sets", type=int, default=500)
    p.add_argument("--networks", type=int, default=20)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--simulate", action="store_true", help="theorem2: also simulate capacities")
    p.add_argument("--trace", nargs="+", help="lemma1: audit these traces instead of fresh runs")
    p.set_defaults(func=lambda a: run_checks(
        a.which, m=a.m, instances=a.instances, sets=a.sets, networks=a.networks,
        pairs=a.pairs, seed=a.seed, simulate=a.simulate, trace=a.trace))

    p = sub.add_parser("verify", help="audit JSON-lines slot traces")
    p.add_argument("traces", nargs="+")
    p.set_defaults(func=_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
