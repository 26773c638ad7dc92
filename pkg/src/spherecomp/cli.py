"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, load, set_param
from .pipeline import (
    COMMAND_STAGES, dumps_report, run_pipeline, run_sweep, validate_report, write_curves_csv,
    write_grid_csv, write_lambda_csv, write_report,
)

log = logging.getLogger("spherecomp")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spherecomp", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="JSON report path (stdout if omitted)"):
        sp.add_argument("--config", required=True, help="scenario TOML file")
        sp.add_argument("--out", help=out_help)
        sp.add_argument("--seed", type=int, help="override the sampler seed")
        sp.add_argument("--deterministic", action="store_true",
                        help="omit wall-clock timings so identical runs give identical bytes")
        return sp

    common(sub.add_parser("lambda", help="curvature gap curve"),
           "CSV path for the t,lambda curve (the JSON report goes to --report or stdout)")
    sub.choices["lambda"].add_argument("--report", help="JSON report path")
    common(sub.add_parser("constants", help="comparison constants of model1"))
    common(sub.add_parser("keylemma", help="Jacobi deviation, Gronwall and closeness checks"))
    c = common(sub.add_parser("compare", help="key lemma plus Lipschitz estimate of F~"))
    c.add_argument("--curves", help="CSV path for t,lambda,phi_max,envelope_max")
    m = common(sub.add_parser("mollify-check", help="mollified blend immersion check (n=2)"))
    m.add_argument("--grid-csv", help="dump the blended map on the grid (x1,x2,Fx1,Fx2)")
    r = common(sub.add_parser("run", help="full pipeline"))
    r.add_argument("--curves", help="CSV path for t,lambda,phi_max,envelope_max")
    s = sub.add_parser("sweep", help="one report per parameter value plus sweep.csv")
    s.add_argument("--config", required=True)
    s.add_argument("--sweep", required=True, help="param=start:stop:steps, e.g. model2.beta=1e-4:1e-2:5")
    s.add_argument("--outdir", required=True)
    s.add_argument("--stage", choices=sorted(COMMAND_STAGES), default="run")
    s.add_argument("--seed", type=int)
    s.add_argument("--deterministic", action="store_true")
    return p


def _emit(report: dict, path) -> None:
    validate_report(report)
    if path:
        write_report(report, path)
    else:
        sys.stdout.write(dumps_report(report))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load(args.config)
        if args.seed is not None:
            cfg = set_param(cfg, "sampler.seed", args.seed)
        if args.command == "sweep":
            rows = run_sweep(cfg, args.sweep, args.outdir, args.stage, args.deterministic)
            log.info("wrote %d sweep points to %s", len(rows), args.outdir)
            return 0
        res = run_pipeline(cfg, args.command, args.deterministic)
        rep = res.report
        if args.command == "lambda":
            if args.out and res.lambda_curve is not None:
                write_lambda_csv(res.lambda_curve, args.out)
            _emit(rep, args.report or cfg.output.report)
        else:
            _emit(rep, args.out or cfg.output.report)
        curves = getattr(args, "curves", None) or cfg.output.curves
        if curves and res.curves is not None and args.command in ("compare", "run"):
            write_curves_csv(res.curves, curves)
        grid = getattr(args, "grid_csv", None) or cfg.output.grid_csv
        if grid and res.mollifier_cfg is not None:
            write_grid_csv(res, grid)
        if rep.get("error"):
            print(f"spherecomp: {rep['verdict']}: {rep['error']}", file=sys.stderr)
        return int(rep["exit_code"])
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"spherecomp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
