"""Command line entry point: ``aoi-mec run | sweep | validate``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from collections import defaultdict

from .harness import ConfigError, evaluate_point, load_config, run_sweep, write_results
from .orchestrator import POLICIES, check_constraints
from .validation import ORACLE_SUITES, run_oracle_suites

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3


def _policies(text: str | None, default: list[str]) -> list[str]:
    if not text:
        return default
    if text.lower() == "all":
        return list(POLICIES)
    out = [p.strip().upper() for p in text.split(",") if p.strip()]
    for p in out:
        if p not in POLICIES:
            raise ConfigError(f"--policy: unknown policy {p!r}; choose from {', '.join(POLICIES)}")
    return out


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg.scenario.seed = args.seed
    if getattr(args, "replications", None) is not None:
        if args.replications < 1:
            raise ConfigError("--replications must be at least 1")
        cfg.replications = args.replications
    if args.strict_feasibility:
        cfg.misco = dataclasses.replace(cfg.misco, strict_feasibility=True)
    cfg.policies = _policies(args.policy, cfg.policies)
    return cfg


def _print_rows(rows, out=None):
    out = out or sys.stdout
    head = f"{'policy':<6} {'rep':>3} {'cost':>11} {'AoI':>9} {'energy':>9} " \
           f"{'sense':>6} {'edge':>4} {'iters':>5}  status"
    print(head, file=out)
    for r in rows:
        status = "not converged" if r.status == "ok" and not r.converged else r.status
        print(f"{r.policy:<6} {r.replication:>3} {r.system_cost:>11.5g} {r.mean_aoi:>9.4g} "
              f"{r.mean_energy:>9.3g} {r.sensing_share:>6.3f} {r.offloaders:>4d} "
              f"{r.total_iterations:>5d}  {status}", file=out)


def cmd_run(args) -> int:
    cfg = _load(args)
    spec = dataclasses.replace(cfg.scenario, sweep_axis=None, sweep_values=[])
    rows, bad = [], False
    for policy in cfg.policies:
        for rep in range(cfg.replications):
            row, fleet, env, report = evaluate_point(spec, policy, cfg.misco, replication=rep)
            rows.append(row)
            if report is None:
                bad = True
                continue
            for msg in check_constraints(fleet, report.decisions, env):
                print(f"warning: {policy} rep {rep}: {msg}", file=sys.stderr)
            if args.devices:
                d = report.decisions
                print(f"# {policy} rep {rep} (seed {row.seed})")
                print(f"{'dev':>4} {'s':>3} {'tau':>8} {'x':>2} {'repaired':>8}")
                for i, dev in enumerate(fleet):
                    print(f"{dev.id:>4} {d.sensing_attempts[i]:>3} {d.sampling_interval[i]:>8.4f} "
                          f"{d.offload[i]:>2} {str(d.repaired[i]):>8}")
            bad |= not report.converged
    print(f"N={spec.device_count} area={spec.area_side:g} m seed={spec.seed}")
    _print_rows(rows)
    if args.out:
        write_results(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
    if bad and cfg.misco.strict_feasibility:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    spec = cfg.scenario
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    if not spec.sweep_axis:
        raise ConfigError("sweep needs sweep.axis and sweep.values in the config")
    rows = run_sweep(spec, cfg.policies, cfg.replications, cfg.misco, jobs=args.jobs)
    write_results(rows, args.out)

    groups = defaultdict(list)
    for r in rows:
        groups[(r.sweep_value, r.policy)].append(r)
    print(f"sweep {spec.sweep_axis} over {len(spec.sweep_values)} values, "
          f"{len(cfg.policies)} policies, {cfg.replications} replications")
    print(f"{'value':>10} {'policy':<6} {'mean cost':>11} {'sense':>6} {'iters':>6} {'failed':>6}")
    for (v, p), rs in groups.items():
        ok = [r for r in rs if r.status == "ok"]
        cost = sum(r.system_cost for r in ok) / len(ok) if ok else float("nan")
        share = sum(r.sensing_share for r in ok) / len(ok) if ok else float("nan")
        iters = sum(r.total_iterations for r in ok) / len(ok) if ok else float("nan")
        print(f"{v!s:>10} {p:<6} {cost:>11.5g} {share:>6.3f} {iters:>6.1f} {len(rs) - len(ok):>6d}")
    print(f"wrote {len(rows)} rows to {args.out}")
    failed = any(r.status != "ok" or not r.converged for r in rows)
    if failed and cfg.misco.strict_feasibility:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_validate(args) -> int:
    names = args.suite or None
    results = run_oracle_suites(names, quick=args.quick)
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aoi-mec", description=(
        "Optimize sensing attempts, sampling intervals and offloading decisions "
        "for a fleet of sensing devices sharing one edge server."))
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, replications=True):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="scenario seed (overrides scenario.seed)")
        p.add_argument("--policy", help=f"comma-separated subset of {','.join(POLICIES)} or 'all'")
        if replications:
            p.add_argument("--replications", type=int)
        p.add_argument("--strict-feasibility", action="store_true",
                       help="fail instead of stretching intervals; exit 3 on any failed run")

    p = sub.add_parser("run", help="solve one scenario")
    common(p)
    p.add_argument("--out", help="write result rows as CSV")
    p.add_argument("--devices", action="store_true", help="print per-device decisions")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="parameter sweep from a config file")
    common(p)
    p.add_argument("--out", default="results.csv")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run the oracle suites")
    p.add_argument("--suite", action="append", choices=sorted(ORACLE_SUITES))
    p.add_argument("--quick", action="store_true", help="fewer instances")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
