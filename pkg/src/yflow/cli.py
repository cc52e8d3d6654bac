"""Scenario runner and result emission.

Subcommands: ``run``, ``audit``, ``yamabe``, ``auxcheck``, ``moser``,
``plot``.  Exit codes: 0 success, 1 monitor failure, 2 configuration or
usage error, 3 solver abort.  ``YFLOW_OUT`` sets the default output root;
audit findings are warnings on stderr and never abort a run.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from typing import List, Optional

from . import auxfn, bounds
from .config import ConfigError, ScenarioConfig, load_scenario
from .flow import FlowConfig, SolverAbort, Trajectory, run
from .geometry import audit_assumptions
from .yamabe import YamabeOptions, estimate_yamabe_constant

TIMESERIES_COLUMNS = (
    "t", "dt", "rho", "vol", "min_u", "max_u", "min_S", "max_S",
    "s_minus_l2", "s_minus_linf", "energy_S_rho",
)

EXIT_OK = 0
EXIT_MONITOR = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _g17(v: float) -> str:
    return f"{v:.17g}"


def _out_root(arg_out: Optional[str]) -> str:
    return arg_out or os.environ.get("YFLOW_OUT") or "."


def write_timeseries(traj: Trajectory, path: str) -> None:
    lines = [",".join(TIMESERIES_COLUMNS)]
    for r in traj.records:
        lines.append(",".join(_g17(v) for v in (
            r.t, r.dt, r.rho, r.vol, r.min_u, r.max_u, r.min_S, r.max_S,
            r.s_minus_l2, r.s_minus_linf, r.energy,
        )))
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))


def write_monitors(results, path: str) -> None:
    lines = ["monitor_id,t,lhs,rhs,margin,verdict"]
    for res in results:
        if not res.applicable:
            lines.append(f"{res.monitor_id},nan,nan,nan,nan,not_applicable")
            continue
        for row in res.rows:
            lines.append(
                f"{res.monitor_id},{_g17(row.t)},{_g17(row.lhs)},{_g17(row.rhs)},"
                f"{_g17(row.margin)},{'pass' if row.verdict else 'FAIL'}"
            )
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))


def _emit_plots(traj: Trajectory, plot_dir: str) -> None:
    from .svgplot import render_series

    os.makedirs(plot_dir, exist_ok=True)
    ts = [r.t for r in traj.records]
    series = {
        "rho": [r.rho for r in traj.records],
        "vol": [r.vol for r in traj.records],
        "min_u": [r.min_u for r in traj.records],
        "max_u": [r.max_u for r in traj.records],
        "min_S": [r.min_S for r in traj.records],
        "max_S": [r.max_S for r in traj.records],
        "energy_S_rho": [r.energy for r in traj.records],
    }
    for name, vals in series.items():
        render_series(ts, vals, name, os.path.join(plot_dir, f"{name}.svg"))


def _scenario_run(cfg: ScenarioConfig, out_dir: str, quiet: bool) -> int:
    os.makedirs(out_dir, exist_ok=True)
    manifold = cfg.build()

    report = audit_assumptions(manifold, cfg.audit_q)
    if not quiet or not report.ok:
        print(report, file=sys.stderr)

    try:
        traj = run(manifold, cfg.flow, checkpoint_dir=out_dir)
    except SolverAbort as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        if exc.checkpoint_path:
            print(f"last valid checkpoint: {exc.checkpoint_path}", file=sys.stderr)
        return EXIT_SOLVER

    ledger = traj.ledger
    if "parabolic_sobolev" in cfg.monitors and ledger.s0_bounded:
        est = estimate_yamabe_constant(
            manifold,
            YamabeOptions(max_iter=cfg.yamabe_max_iter,
                          multistart=cfg.yamabe_multistart, seed=cfg.seed),
        )
        if est.value > 0.0:
            ledger.attach_sobolev(manifold, est.value)

    results = bounds.run_monitors(
        traj, names=cfg.monitors, p_values=cfg.p_values,
        sobolev_samples=cfg.sobolev_samples, seed=cfg.seed + 2024,
    )

    write_timeseries(traj, os.path.join(out_dir, "timeseries.csv"))
    write_monitors(results, os.path.join(out_dir, "monitors.csv"))
    with open(os.path.join(out_dir, "ledger.txt"), "w", encoding="utf-8") as fh:
        fh.write(ledger.describe() + "\n")
    if cfg.plots:
        _emit_plots(traj, os.path.join(out_dir, "plots"))

    failed = [r.monitor_id for r in results if r.applicable and not r.passed]
    if not quiet:
        for r in results:
            status = "n/a " if not r.applicable else ("pass" if r.passed else "FAIL")
            print(f"[{status}] {r.monitor_id}")
    if failed:
        print(f"monitor failures: {', '.join(failed)}", file=sys.stderr)
        return EXIT_MONITOR
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg = load_scenario(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    base_out = cfg.output_dir or os.path.join(_out_root(args.out), "out")
    if args.out:
        base_out = args.out

    if args.sweep:
        try:
            key, _, items = args.sweep.partition("=")
            values = [v for v in items.split(",") if v]
            if not key or not values:
                raise ValueError("sweep needs PARAM=a,b,c")
        except ValueError as exc:
            print(f"sweep error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return _run_sweep(args.config, key.strip(), values, base_out, args.quiet)
    return _scenario_run(cfg, base_out, args.quiet)


def _run_sweep(config_path: str, key: str, values: List[str], base_out: str,
               quiet: bool) -> int:
    import concurrent.futures as cf

    with open(config_path, "r", encoding="utf-8") as fh:
        base_text = fh.read()
    jobs = []
    for val in values:
        text = _override_key(base_text, key, val)
        jobs.append((text, os.path.join(base_out, f"{key}={val}")))
    worst = EXIT_OK
    with cf.ProcessPoolExecutor() as pool:
        futures = [pool.submit(_sweep_job, text, out) for text, out in jobs]
        for fut, (_, out) in zip(futures, jobs):
            code = fut.result()
            worst = max(worst, code)
            if not quiet:
                print(f"sweep {out}: exit {code}")
    return worst


def _override_key(text: str, key: str, value: str) -> str:
    lines = []
    replaced = False
    for line in text.splitlines():
        body = line.split("#", 1)[0]
        if "=" in body and body.split("=", 1)[0].strip() == key:
            lines.append(f"{key} = {value}")
            replaced = True
        else:
            lines.append(line)
    if not replaced:
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _sweep_job(config_text: str, out_dir: str) -> int:
    import tempfile

    with tempfile.NamedTemporaryFile("w", suffix=".cfg", delete=False) as fh:
        fh.write(config_text)
        tmp = fh.name
    try:
        cfg = load_scenario(tmp)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        os.unlink(tmp)
    return _scenario_run(cfg, out_dir, quiet=True)


def cmd_audit(args) -> int:
    try:
        cfg = load_scenario(args.config)
        manifold = cfg.build()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = audit_assumptions(manifold, cfg.audit_q)
    print(report)
    return EXIT_OK


def cmd_yamabe(args) -> int:
    try:
        cfg = load_scenario(args.config)
        manifold = cfg.build()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    est = estimate_yamabe_constant(
        manifold,
        YamabeOptions(max_iter=cfg.yamabe_max_iter,
                      multistart=cfg.yamabe_multistart, seed=cfg.seed),
    )
    tag = "" if est.converged else "  [not_converged]"
    print(f"Y_est = {est.value:.12g}  (upper bound; rotationally symmetric "
          f"competitors){tag}")
    print(f"iterations = {est.iterations}")
    return EXIT_OK


def cmd_auxcheck(args) -> int:
    ids = None
    if args.ineq:
        ids = [tok.strip() for tok in args.ineq.split(",") if tok.strip()]
        for ineq_id in ids:
            if ineq_id not in auxfn.catalogue_ids():
                print(f"unknown inequality {ineq_id!r}", file=sys.stderr)
                return EXIT_CONFIG
    rows = auxfn.run_catalogue(ids=ids, samples=args.samples, seed=args.seed)
    print(f"{'inequality':<10} {'samples':>9} {'violations':>11} {'worst margin':>14}")
    bad = 0
    for row in rows:
        print(f"{row.ineq_id:<10} {row.samples:>9} {row.violations:>11} "
              f"{row.worst_margin:>14.3e}")
        bad += row.violations
    if args.sharpness:
        print("\nout-of-region sharpness probes:")
        for ineq_id in ("I2", "I4"):
            if ids and ineq_id not in ids:
                continue
            v = auxfn.find_counterexample(ineq_id, budget=args.samples,
                                          seed=args.seed, out_of_region=True)
            if v is None:
                print(f"  {ineq_id}: no violation found (unexpected)")
                bad += 1
            else:
                print(f"  {ineq_id}: violated at beta={v.params.beta:.6g} "
                      f"L={v.params.L:.6g} n={v.params.n} x={v.x:.6g} "
                      f"(lhs {v.lhs:.6g} > rhs {v.rhs:.6g})")
    return EXIT_MONITOR if bad else EXIT_OK


def cmd_moser(args) -> int:
    try:
        cfg = load_scenario(args.config)
        manifold = cfg.build()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        traj = run(manifold, cfg.flow)
    except SolverAbort as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    beta = args.beta if args.beta is not None else cfg.moser_beta
    k_max = args.kmax if args.kmax is not None else cfg.moser_k_max
    report = bounds.moser_chain(traj, beta=beta, k_max=k_max)
    print(report.describe())
    return EXIT_OK if report.finite else EXIT_MONITOR


def cmd_plot(args) -> int:
    from .svgplot import render_series

    try:
        with open(args.csv, "r", encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        print(f"cannot read {args.csv}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if len(lines) < 2:
        print(f"{args.csv}: no data rows", file=sys.stderr)
        return EXIT_CONFIG
    header = lines[0].split(",")
    missing = [c for c in TIMESERIES_COLUMNS if c not in header]
    if missing:
        print(f"{args.csv}: missing columns {', '.join(missing)}", file=sys.stderr)
        return EXIT_CONFIG
    cols = {name: [] for name in header}
    for ln in lines[1:]:
        for name, tok in zip(header, ln.split(",")):
            cols[name].append(float(tok))
    out_dir = args.out or os.path.join(_out_root(None), "plots")
    os.makedirs(out_dir, exist_ok=True)
    ts = cols["t"]
    for name in ("rho", "vol", "min_u", "max_u", "min_S", "max_S", "energy_S_rho"):
        render_series(ts, cols[name], name, os.path.join(out_dir, f"{name}.svg"))
    print(f"wrote plots to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="yflow",
        description="Numerical laboratory for a volume-normalized conformal "
        "curvature flow on radial model manifolds, with a-posteriori bound "
        "monitors.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario with monitors")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out", default=None)
    run_p.add_argument("--sweep", default=None, metavar="PARAM=a,b,c")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--quiet", action="store_true")
    run_p.set_defaults(func=cmd_run)

    audit_p = sub.add_parser("audit", help="audit the standing assumptions")
    audit_p.add_argument("--config", required=True)
    audit_p.set_defaults(func=cmd_audit)

    yam_p = sub.add_parser("yamabe", help="estimate the conformal constant")
    yam_p.add_argument("--config", required=True)
    yam_p.set_defaults(func=cmd_yamabe)

    aux_p = sub.add_parser("auxcheck", help="sample the inequality catalogue")
    aux_p.add_argument("--ineq", default=None, metavar="I1,I2,...")
    aux_p.add_argument("--samples", type=int, default=100_000)
    aux_p.add_argument("--seed", type=int, default=auxfn.DEFAULT_SEED)
    aux_p.add_argument("--sharpness", action="store_true",
                       help="also probe just outside the validity regions")
    aux_p.set_defaults(func=cmd_auxcheck)

    moser_p = sub.add_parser("moser", help="cylinder norm chain diagnostics")
    moser_p.add_argument("--config", required=True)
    moser_p.add_argument("--beta", type=float, default=None)
    moser_p.add_argument("--kmax", type=int, default=None)
    moser_p.set_defaults(func=cmd_moser)

    plot_p = sub.add_parser("plot", help="render timeseries.csv to SVG")
    plot_p.add_argument("csv")
    plot_p.add_argument("--out", default=None)
    plot_p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
