"""Command-line runner: ``awcga run | check | sweep``.

Exit codes: 0 ok, 2 config error, 3 invariant failure, 4 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time

from .config import apply_cell, load_config, parse_config, sweep_cells
from .engine import run
from .errors import BoundViolation, ConfigError, ContractViolation, ProjectionError
from .scenarios import run_preset, standard_basis_certificate

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_SOLVER = 0, 2, 3, 4
SWEEP_FIELDS = ("verdict", "final_residual", "steps", "steps_to_tolerance", "error")


def _execute(cfg):
    """Run one configured job; returns (trace, invariant_ok)."""
    if cfg.scenario is not None:
        res = run_preset(cfg.scenario)
        return res.trace, res.passed
    ctx = None
    if cfg.dictionary.kind == "standard_basis":
        ctx = standard_basis_certificate(cfg.target, cfg.space, cfg.schedules.eta0)
    trace = run(cfg.target, cfg.dictionary, cfg.space, cfg.schedules, cfg.policy,
                n_max=cfg.n_max, conv_tol=cfg.conv_tol, bound_ctx=ctx)
    return trace, True


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.seed)
    start = time.perf_counter()
    trace, ok = _execute(cfg)
    elapsed = time.perf_counter() - start
    out = args.out or cfg.out
    text = trace.to_csv(out)
    if out is None:
        sys.stdout.write(text)
    if not args.quiet:
        print(f"{trace.summary()} wall_time={elapsed:.3f}s", file=sys.stderr if out is None else sys.stdout)
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_check(args) -> int:
    from .checks import run_suite
    try:
        results = run_suite(args.suite)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    failed = [r for r in results if not r.passed]
    if not args.quiet:
        for r in results:
            print(r.line())
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_INVARIANT if failed else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.seed)
    cells = sweep_cells(cfg) if cfg.sweep else [{}]
    if cfg.sweep and any(len(v) == 0 for v in cfg.sweep.values()):
        cells = []
    params = [k for axis in cfg.sweep for k in axis.split("+")]
    out = args.out or cfg.out
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(params + list(SWEEP_FIELDS))
        for cell in cells:
            w.writerow([cell[k] for k in params] + _sweep_cell(cfg.raw, cell))
    finally:
        if out:
            fh.close()
    if not args.quiet:
        print(f"sweep: {len(cells)} cells", file=sys.stderr if not out else sys.stdout)
    return EXIT_OK


def _sweep_cell(raw, cell) -> list:
    try:
        cfg = parse_config(apply_cell(raw, cell))
        trace, _ = _execute(cfg)
    except (ConfigError, ContractViolation, ProjectionError, ValueError) as exc:
        return ["failed", "", "", "", f"{type(exc).__name__}: {exc}"]
    final = trace.residual_norms[-1]
    reached = trace.verdict_step if trace.verdict == "converged" else ""
    return [trace.verdict, format(float(final), ".17g"), len(trace), reached, ""]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="awcga", description="AWCGA experiment runner")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, metavar="PATH", help="TOML run configuration")
        p.add_argument("--out", metavar="PATH", help="output CSV (overrides the config)")
        p.add_argument("--seed", type=int, metavar="N", help="seed (overrides the config)")
        p.add_argument("--quiet", action="store_true", help="suppress the summary")

    p = sub.add_parser("run", help="execute one configured run or preset")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("check", help="run a property suite")
    p.add_argument("suite", nargs="?", default="all",
                   help="duality | modulus | rates | divergence | lemmas | bounds | all")
    common(p, config_required=False)
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("sweep", help="one run per cell of the config's [sweep] grid")
    common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractViolation, BoundViolation) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ProjectionError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
