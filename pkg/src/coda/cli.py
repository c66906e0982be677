"""Command line front end.

    coda run lattice6.cfg --check --out-trace trace.csv
    coda run --scenario minority10 --check
    coda run --topology "ring 12" --model coda --seed 4 --steps 10000 --check
    coda validate my.cfg
    coda scenarios [NAME]
    coda fuzz --runs 100

Exit status: 0 when every enabled check passes, 2 on a prediction mismatch, 1 on errors.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import scenarios as sc
from .graph import GraphError


def _with_seed(path: str, seed: int) -> str:
    if not path:
        return path
    p = Path(path)
    return str(p.with_name(f"{p.stem}.seed{seed}{p.suffix}"))


def _load(args) -> tuple[sc.ScenarioConfig, Path | None]:
    if args.config and args.scenario:
        raise sc.ConfigError(["give either a config file or --scenario, not both"])
    base_dir = None
    overrides = {}
    if args.topology:
        overrides["topology"] = args.topology
    if args.config:
        path = Path(args.config)
        cfg = sc.parse_config(path.read_text())
        base_dir = path.parent
    elif args.scenario:
        cfg = sc.builtin(args.scenario)
    elif args.topology:
        cfg = sc.ScenarioConfig(topology=args.topology)
    else:
        raise sc.ConfigError(["nothing to run: pass a config file, --scenario or --topology"])
    for flag, key in (
        ("seed", "seed"), ("model", "model"), ("steps", "max_steps"), ("tol", "tol_p"),
        ("stride", "stride"), ("out_trace", "out_trace"), ("out_report", "out_report"),
    ):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    if args.check is not None:
        overrides["checks"] = sc.CHECKS if args.check == "all" else tuple(
            c.strip() for c in args.check.split(",") if c.strip()
        )
    cfg = cfg.replace(**overrides)
    errors = sc.config_errors(cfg, base_dir)
    if errors:
        raise sc.ConfigError(errors)
    return cfg, base_dir


def _run_one(cfg: sc.ScenarioConfig, base_dir: Path | None) -> tuple[int, list[str]]:
    try:
        result = sc.run_scenario(cfg, base_dir)
    except (sc.ConfigError, GraphError, OSError) as exc:
        return sc.EXIT_ERROR, [f"error: {exc}"]
    tr = result.trace
    label = cfg.name or cfg.topology
    lines = [f"{label} seed={cfg.seed}: {tr.verdict} after {tr.steps} steps"]
    for c in result.checks:
        lines.append(f"  {c.status.upper():7s} {c.name}: {c.detail}")
    return result.exit_code, lines


def cmd_run(args) -> int:
    cfg, base_dir = _load(args)
    if not args.batch:
        code, lines = _run_one(cfg, base_dir)
        print("\n".join(lines))
        return code
    jobs = [
        cfg.replace(
            seed=cfg.seed + b,
            out_trace=_with_seed(cfg.out_trace, cfg.seed + b),
            out_report=_with_seed(cfg.out_report, cfg.seed + b),
        )
        for b in range(args.batch)
    ]
    codes = []
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        for code, lines in pool.map(_run_one, jobs, [base_dir] * len(jobs)):
            print("\n".join(lines))
            codes.append(code)
    if sc.EXIT_ERROR in codes:
        return sc.EXIT_ERROR
    return max(codes)


def cmd_validate(args) -> int:
    path = Path(args.config)
    cfg = sc.validate_config(path.read_text(), path.parent)
    sys.stdout.write(sc.format_config(cfg))
    return sc.EXIT_PASS


def cmd_scenarios(args) -> int:
    if args.name:
        sys.stdout.write(sc.format_config(sc.builtin(args.name)))
    else:
        for name in sc.BUILTINS:
            print(name)
    return sc.EXIT_PASS


def cmd_fuzz(args) -> int:
    from .fuzz import fuzz_run

    failed = 0
    for seed in range(args.seed, args.seed + args.runs):
        out = fuzz_run(seed, args.max_n)
        tr = out.trace
        status = "ok" if out.ok else "FAIL " + "; ".join(out.failures)
        print(f"seed {seed}: n={tr.graph.n} {tr.verdict} after {tr.steps} steps, "
              f"{out.audit['agent_steps_checked']} agent-steps audited: {status}")
        failed += not out.ok
    print(f"{args.runs - failed}/{args.runs} runs clean")
    return sc.EXIT_MISMATCH if failed else sc.EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coda", description="CODA / COCA opinion dynamics on graphs")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario and check it against predictions")
    r.add_argument("config", nargs="?", help="flat key = value scenario file")
    r.add_argument("--scenario", help="builtin scenario name (see 'coda scenarios')")
    r.add_argument("--topology", help="e.g. 'complete 100', 'ring 12', 'lattice 6x6', 'edges FILE'")
    r.add_argument("--model", help="coca, coda, or 'martins ALPHA'")
    r.add_argument("--seed", type=int)
    r.add_argument("--steps", type=int, help="max steps")
    r.add_argument("--tol", type=float, help="convergence tolerance on max |dp|")
    r.add_argument("--stride", type=int, help="record every STRIDE steps")
    r.add_argument("--out-trace", help="trace CSV path")
    r.add_argument("--out-report", help="report JSON path")
    r.add_argument("--check", nargs="?", const="all",
                   help="enable checks: all (default) or a comma list of " + ", ".join(sc.CHECKS))
    r.add_argument("--batch", type=int, default=0, help="run BATCH consecutive seeds")
    r.add_argument("--jobs", type=int, default=None, help="worker processes for --batch")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a config and print it in canonical form")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("scenarios", help="list builtin scenarios or print one")
    s.add_argument("name", nargs="?")
    s.set_defaults(func=cmd_scenarios)

    f = sub.add_parser("fuzz", help="audited CODA runs on random connected graphs")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--runs", type=int, default=100)
    f.add_argument("--max-n", type=int, default=30)
    f.set_defaults(func=cmd_fuzz)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except sc.ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return sc.EXIT_ERROR
    except (GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return sc.EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
