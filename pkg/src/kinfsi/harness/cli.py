"""Command line entry point: ``kinfsi {run,converge-time,converge-thick,stability}``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from ..fsi import SchemeKind, check_stability_bound, simulate
from .config import ConfigError, load_config
from .invariants import run_invariant_suite
from .studies import run_thick_scaling, run_time_convergence

log = logging.getLogger("kinfsi")

DEFAULT_OUTPUT = "kinfsi_out"


class CheckFailed(RuntimeError):
    pass


def _common(suppress: bool) -> argparse.ArgumentParser:
    # flags may come before or after the command; the copy attached to the
    # subcommands must not overwrite values already parsed
    kw = {"argument_default": argparse.SUPPRESS} if suppress else {}
    p = argparse.ArgumentParser(add_help=False, **kw)
    p.add_argument("--config", metavar="PATH", help="flat JSON configuration file")
    p.add_argument("--output", metavar="DIR", help="output directory (overrides output_dir)")
    p.add_argument("--threads", type=int, metavar="N", help="worker threads for independent runs")
    p.add_argument("--seed-check", action="store_true", help="run the invariant suite first")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    parser = argparse.ArgumentParser(
        prog="kinfsi", parents=[_common(suppress=False)],
        description="Kinematically coupled beta-scheme for fluid-structure interaction.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.add_parser("run", parents=[common], help="single simulation, writes ledger.csv")
    sub.add_parser("converge-time", parents=[common], help="temporal convergence study over beta and dt")
    sub.add_parser("converge-thick", parents=[common], help="thick-structure dt(h) scaling study")
    sub.add_parser("stability", parents=[common], help="large-step energy monotonicity check")
    return parser


def _output_dir(args, cfg) -> Path:
    out = Path(args.output or cfg.get("output_dir") or DEFAULT_OUTPUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args, cfg) -> None:
    scfg = cfg.scheme_config()
    params = cfg.params()
    out = _output_dir(args, cfg)
    every = cfg.get("snapshot_every", 0)
    steps = range(0, scfg.n_steps + 1, every) if every else ()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = simulate(scfg, params, snapshot_steps=steps, snapshot_dir=out / "snapshots" if every else None)
    res.ledger.to_csv(out / "ledger.csv")
    rep = check_stability_bound(res.ledger, scfg)
    print(f"{scfg.scheme.value} beta={scfg.beta:g} dt={scfg.dt:g} steps={scfg.n_steps}: {rep}")
    print(f"wrote {out / 'ledger.csv'}")


def cmd_stability(args, cfg) -> None:
    scfg = cfg.scheme_config(dt=1e-3, T=0.016, nx=40)
    params = cfg.params()
    out = _output_dir(args, cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = simulate(scfg, params)
    res.ledger.to_csv(out / "ledger.csv")
    rep = check_stability_bound(res.ledger, scfg)
    print(rep)
    problems = []
    if rep.max_balance_residual > 1e-8:
        problems.append(f"energy balance residual {rep.max_balance_residual:.2e} > 1e-8")
    if scfg.scheme is SchemeKind.SPLIT_THICK:
        h = params.L / scfg.nx
        threshold = cfg.get("stability_threshold", 1.0)
        applies = scfg.dt**2 <= threshold * h
        print(f"dt^2/h = {scfg.dt**2 / h:.3e} (threshold {threshold:g}): monotone decay {'required' if applies else 'not required'}")
    else:
        applies = True
    if applies and not rep.monotone:
        problems.append(f"energy increased after the pulse (relative {rep.worst_increase:.2e})")
    if problems:
        raise CheckFailed("; ".join(problems))


def _print_rates(report) -> None:
    for (case, norm), (slope, resid) in sorted(report.slopes.items()):
        print(f"{case:>14s} {norm:>8s} slope {slope: .3f} (fit residual {resid:.2e})")


def cmd_converge_time(args, cfg, threads) -> None:
    spec = cfg.study_spec(thick=False)
    out = _output_dir(args, cfg)
    report = run_time_convergence(spec, threads=threads, output_dir=out)
    _print_rates(report)
    print(f"wrote {out / 'rates.csv'}")


def cmd_converge_thick(args, cfg, threads) -> None:
    spec = cfg.study_spec(thick=True)
    out = _output_dir(args, cfg)
    report = run_thick_scaling(spec, threads=threads, output_dir=out)
    _print_rates(report)
    for (case, h), info in sorted(report.stability.items()):
        print(f"{case:>14s} h={h:.4g} dt={info['dt']:.4g} dt^2/h={info['dt2_over_h']:.2e} monotone={info['monotone']}")
    print(f"wrote {out / 'rates.csv'}")


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command is None and not args.seed_check:
        parser.print_usage(sys.stderr)
        print("kinfsi: error: a command is required", file=sys.stderr)
        return 2
    threads = args.threads if args.threads is not None else 1
    if threads < 1:
        print("kinfsi: error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        if args.seed_check:
            checks = run_invariant_suite()
            for c in checks:
                print(c)
            if not all(c.passed for c in checks):
                raise CheckFailed("invariant suite failed")
        if args.command == "run":
            cmd_run(args, cfg)
        elif args.command == "stability":
            cmd_stability(args, cfg)
        elif args.command == "converge-time":
            cmd_converge_time(args, cfg, threads)
        elif args.command == "converge-thick":
            cmd_converge_thick(args, cfg, threads)
    except ConfigError as exc:
        print(f"kinfsi: config error: {exc}", file=sys.stderr)
        return 2
    except CheckFailed as exc:
        print(f"kinfsi: check failed: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"kinfsi: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
