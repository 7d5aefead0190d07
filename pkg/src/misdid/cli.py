"""misdid command line: simulate, estimate, bounds, lambda, regions, decompose.

Exit status is 0 on success, 1 on a usage error, 2 when the data or an
identifying assumption is violated.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from .core import MisdidError
from .dataio import (
    EmpiricalRow,
    PanelFormat,
    ReportFormat,
    estimate_lambda_counts,
    estimate_lambda_periods,
    read_panel,
    render_report,
)
from .estimators import DEFAULT_BOOT_REPS, bootstrap_se, estimate_did
from .identification import att_bounds, classify_bias_region, decompose
from .montecarlo import McConfig, MisclassDesign, Mode, PanelKind, Threshold, draw_latent_panel, run_experiment


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _default_threads() -> int:
    env = os.environ.get("DIDMC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _add_design_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=[m.value for m in Mode], default="nondifferential",
                   help="how eps depends on outcomes (default: %(default)s)")
    p.add_argument("--panel", choices=[k.value for k in PanelKind], default="symmetric",
                   help="error pattern across arms (default: %(default)s)")
    p.add_argument("--rate", metavar="R[,R...]", type=_floats, default=None,
                   help="overall error rate(s) P(eps=1), comma-separated (default: none)")
    p.add_argument("--fn", type=float, default=None, help="P(eps=1|D*=1), with --fp (default: none)")
    p.add_argument("--fp", type=float, default=None, help="P(eps=1|D*=0), with --fn (default: none)")
    p.add_argument("--threshold", choices=[t.value for t in Threshold], default="per-arm",
                   help="gain cutoff rule for differential designs (default: %(default)s)")
    p.add_argument("--uncalibrated", action="store_true",
                   help="ignore the calibrated presets and map --rate analytically (default: off)")


def _designs(args) -> list[MisclassDesign]:
    explicit = args.fn is not None or args.fp is not None
    if explicit and args.rate is not None:
        raise UsageError("give either --rate or --fn/--fp, not both")
    if explicit:
        if args.fn is None or args.fp is None:
            raise UsageError("--fn and --fp must be given together")
        return [MisclassDesign.explicit(args.mode, args.fn, args.fp, args.threshold)]
    if not args.rate:
        raise UsageError("one of --rate or --fn/--fp is required")
    return [MisclassDesign.from_rate(args.mode, args.panel, r, not args.uncalibrated, args.threshold)
            for r in args.rate]


def _write(text: str, out: Optional[str]) -> None:
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise MisdidError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    if args.seed is None:
        raise UsageError("simulate requires --seed")
    results = [run_experiment(McConfig(args.n, args.reps, args.seed, d, tuple(args.lambda_), args.threads))
               for d in _designs(args)]
    meta = {"argv": args.argv, "seed": args.seed}
    _write(render_report(results, args.format, meta), args.out)
    return 0


def cmd_estimate(args) -> int:
    panel = read_panel(args.data, args.format_in)
    if args.bootstrap:
        est = bootstrap_se(panel, args.bootstrap, args.seed, args.threads)
    else:
        est = estimate_did(panel)
    row = EmpiricalRow.build(args.label, est, args.lambda_)
    _write(render_report([row], args.format, {"argv": args.argv, "seed": args.seed}), args.out)
    return 0


def cmd_bounds(args) -> int:
    for lam in args.lambda_:
        b = att_bounds(args.theta, lam)
        print(f"({b.lower:.6f}, {b.upper:.6f})")
    return 0


def cmd_lambda(args) -> int:
    if args.periods:
        est = estimate_lambda_periods(*args.periods)
    else:
        est = estimate_lambda_counts(*args.counts)
    print(est)
    return 0


def cmd_regions(args) -> int:
    for att in args.att:
        r = classify_bias_region(att, args.a, args.b, args.c, args.tol)
        low, high = r.thresholds
        print(f"att={att:g}\tregion={r.region.value}\tB/C={low:.6f}\tB/(C(1-A))={high:.6f}")
    return 0


def cmd_decompose(args) -> int:
    if args.seed is None:
        raise UsageError("decompose requires --seed")
    design = _designs(args)[0]
    dec = decompose(draw_latent_panel(args.n, design, args.seed))
    att_mc = "absent" if dec.att_mc is None else f"{dec.att_mc:.6f}"
    print(f"theta_did\t{dec.theta_did:.6f}")
    print(f"att_cc\t{dec.att_cc:.6f}")
    print(f"att_mc\t{att_mc}")
    print(f"w_cc\t{dec.w_cc:.6f}")
    print(f"w_mc\t{dec.w_mc:.6f}")
    print(f"pt_gap\t{dec.pt_gap:.6f}")
    print(f"theta_reconstructed\t{dec.theta_reconstructed:.6f}")
    print(f"residual\t{dec.residual:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="misdid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a Monte Carlo design and emit a simulation table")
    _add_design_flags(p)
    p.add_argument("--n", type=int, default=10_000, help="units per replication (default: %(default)s)")
    p.add_argument("--reps", type=int, default=500, help="replications (default: %(default)s)")
    p.add_argument("--seed", type=int, default=None, help="master seed, required (default: none)")
    p.add_argument("--lambda", dest="lambda_", metavar="L[,L...]", type=_floats, default=[0.4],
                   help="sensitivity bound(s), comma-separated (default: 0.4)")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=[f.value for f in ReportFormat], default="tsv",
                   help="report format (default: %(default)s)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $DIDMC_THREADS or CPU count)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="DID estimate, bootstrap SE and bounds for a CSV panel")
    p.add_argument("--data", required=True, help="CSV panel (required)")
    p.add_argument("--format-in", choices=[f.value for f in PanelFormat], default="long",
                   help="CSV layout (default: %(default)s)")
    p.add_argument("--lambda", dest="lambda_", metavar="L[,L...]", type=_floats, default=[0.4],
                   help="sensitivity bound(s), comma-separated (default: 0.4)")
    p.add_argument("--bootstrap", type=int, default=DEFAULT_BOOT_REPS,
                   help="bootstrap replicates, 0 disables (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed (default: %(default)s)")
    p.add_argument("--label", default="outcome", help="row label (default: %(default)s)")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=[f.value for f in ReportFormat], default="tsv",
                   help="report format (default: %(default)s)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $DIDMC_THREADS or CPU count)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bounds", help="ATT interval for a DID estimate and lambda")
    p.add_argument("--theta", type=float, required=True, help="DID estimate (required)")
    p.add_argument("--lambda", dest="lambda_", metavar="L[,L...]", type=_floats, required=True,
                   help="sensitivity bound(s), comma-separated (required)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("lambda", help="lambda from period or case-count ratios")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--periods", type=int, nargs=2, metavar=("AMBIGUOUS", "POST"),
                   help="ambiguous and total post-intervention periods (default: none)")
    g.add_argument("--counts", type=int, nargs=2, metavar=("AMBIGUOUS", "REFERENCE"),
                   help="cases in ambiguous years and reference cases (default: none)")
    p.set_defaults(func=cmd_lambda)

    p = sub.add_parser("regions", help="classify ATT values into bias regions")
    p.add_argument("--a", type=float, required=True, help="slope P(D=1)/P(D*=1) (required)")
    p.add_argument("--b", type=float, required=True, help="E[gain * eps | D*=1] (required)")
    p.add_argument("--c", type=float, required=True, help="P(D=0) (required)")
    p.add_argument("--att", metavar="X[,X...]", type=_floats, required=True, help="ATT value(s), comma-separated (required)")
    p.add_argument("--tol", type=float, default=1e-9, help="fixed-point tolerance (default: %(default)s)")
    p.set_defaults(func=cmd_regions)

    p = sub.add_parser("decompose", help="decomposition terms on one simulated latent panel")
    _add_design_flags(p)
    p.add_argument("--n", type=int, default=10_000, help="units (default: %(default)s)")
    p.add_argument("--seed", type=int, default=None, help="seed, required (default: none)")
    p.set_defaults(func=cmd_decompose)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.argv = argv
        if getattr(args, "threads", 0) is None:
            args.threads = _default_threads()
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except MisdidError as exc:
        print(f"misdid: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
