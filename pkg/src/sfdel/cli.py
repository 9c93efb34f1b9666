"""Command-line interface: ``sfdel {simulate,fit,test,coverage,semivariogram}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .fields import FactorizationError, simulate_field
from .harness import (MODELS, StudyConfig, _design, _field, make_estimating_function, rows_to_csv,
                      rows_to_json, run_coverage)
from .inference import (AllInfeasible, EmptyRegion, GridMask, confidence_region, matheron_semivariogram,
                        scaled_statistic, test)
from .io import DataError, read_sites_csv, write_sites_csv
from .sampling import PrototypeRegion, SamplingError, Seed, draw_sites
from .spectral import build_grid, periodogram

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

DEFAULT_BOUNDS = {"exp": [[0.05, 5.0], [0.05, 5.0]], "gauss": [[0.05, 5.0]]}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if not value > 0 or (kind is float and not math.isfinite(value)):
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return value
    return parse


def _unit_open(text):
    value = _positive(float)(text)
    if value >= 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1): {text!r}")
    return value


def _alpha(text):
    value = _positive(float)(text)
    if value > 0.5:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1/2]: {text!r}")
    return value


def _vector(text):
    try:
        out = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None
    if not all(math.isfinite(v) for v in out):
        raise argparse.ArgumentTypeError(f"non-finite entry in {text!r}")
    return out


def _matrix(text):
    """``"1,1;1,-1"`` -> ``[[1, 1], [1, -1]]``."""
    rows = [_vector(part) for part in text.split(";") if part.strip()]
    if not rows or len({len(r) for r in rows}) != 1:
        raise argparse.ArgumentTypeError(f"expected rows of equal length separated by ';': {text!r}")
    return rows


def _add_estimation_flags(p):
    p.add_argument("data", help="CSV file with header x,y,z")
    p.add_argument("--model", choices=MODELS, default="exp",
                   help="exp/gauss variogram fit, acf autocorrelation, cdf spectral distribution")
    p.add_argument("--lags", type=_matrix, default=[[1.0, 1.0], [1.0, -1.0]],
                   help='lag vectors (thresholds for cdf), e.g. "1,1;1,-1"')
    p.add_argument("--cstar", type=_positive(float), default=2.0)
    p.add_argument("--kappa", type=_unit_open, default=0.1)
    p.add_argument("--eta", type=_positive(float), default=1.0)
    p.add_argument("--alpha", type=_alpha, default=0.1)
    p.add_argument("--lambda", dest="lam", type=_positive(float),
                   help="sampling-region scale; overrides the sidecar")
    p.add_argument("--no-center", action="store_true", help="skip mean-centering in the DFT")
    p.add_argument("--format", choices=("json", "table"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sfdel", description="Frequency-domain empirical likelihood for "
                     "irregularly spaced spatial data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="draw sites and a field, write CSV")
    p.add_argument("output", help="CSV path; a .meta.json sidecar is written next to it")
    p.add_argument("--design", choices=("uniform", "mixture"), default="uniform")
    p.add_argument("--lambda", dest="lam", type=_positive(float), required=True)
    p.add_argument("--n", type=_positive(int), required=True)
    p.add_argument("--field", choices=("exp", "gauss"), default="exp")
    p.add_argument("--theta", type=_vector, default=[1.0, 1.0], help="exp field decay rates")
    p.add_argument("--range", dest="range_", type=_positive(float), default=1.0,
                   help="gauss field range")
    p.add_argument("--transform", choices=("none", "chisq"), default="none")
    p.add_argument("--theta1", type=_positive(float), default=7.5)
    p.add_argument("--shift", type=float, default=40.23)
    p.add_argument("--mean", type=float, default=0.0)
    p.add_argument("--variance", type=_positive(float), default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)

    p = sub.add_parser("fit", help="point estimate and confidence region")
    _add_estimation_flags(p)
    p.add_argument("--bounds", type=_matrix, help='search box, e.g. "0.05,5;0.05,5"')
    p.add_argument("--init", type=_vector, help="starting value for the point estimate")
    p.add_argument("--resolution", type=_positive(int), default=61,
                   help="grid points per axis for two-parameter regions")
    p.add_argument("--xtol", type=_positive(float), default=1e-4,
                   help="endpoint tolerance for one-parameter intervals")

    p = sub.add_parser("test", help="test a parameter value")
    _add_estimation_flags(p)
    p.add_argument("--theta0", type=_vector, required=True)

    p = sub.add_parser("coverage", help="Monte Carlo coverage study")
    p.add_argument("--config", required=True, help="study configuration (JSON)")
    p.add_argument("--workers", type=_positive(int), help="worker processes")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", help="write here instead of stdout")

    p = sub.add_parser("semivariogram", help="binned Matheron semivariogram")
    p.add_argument("data")
    p.add_argument("--bins", type=_positive(int), default=10)
    p.add_argument("--max-fraction", type=_positive(float), default=0.5)
    p.add_argument("--format", choices=("json", "table", "csv"), default="table")
    return parser


def _finite(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _table(rows, headers) -> str:
    cells = [[("" if v is None else f"{v:.6g}" if isinstance(v, float) else str(v)) for v in r]
             for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h)
              for i, h in enumerate(headers)]
    out = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    out += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(out) + "\n"


def _setup(args):
    """Validate flags, then load data; returns (fn, grid, sample, pgram)."""
    try:
        fn = make_estimating_function(args.model, args.lags)
        if args.model in ("exp", "gauss") and len(args.lags[0]) != 2:
            raise ValueError("variogram models need two-dimensional lags")
        if args.kappa >= args.eta or args.eta > 1:
            raise ValueError("need 0 < kappa < eta <= 1")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sample = read_sites_csv(args.data, lam=args.lam)
    if sample.d != _vectors(fn).shape[1]:
        raise DataError(f"{args.data}: data have dimension {sample.d}, lags have {_vectors(fn).shape[1]}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # eta = 1 is allowed on request
            grid = build_grid(sample.lam, args.kappa, args.eta, args.cstar, sample.d)
    except ValueError as exc:
        raise DataError(f"{args.data}: {exc}") from None
    return fn, grid, sample, periodogram(sample, grid, center=not args.no_center)


def _vectors(fn) -> np.ndarray:
    return fn.thresholds if hasattr(fn, "thresholds") else fn.lags


def _bounds(args, fn):
    if args.bounds is not None:
        b = np.asarray(args.bounds, dtype=float)
    elif args.model in DEFAULT_BOUNDS:
        b = np.asarray(DEFAULT_BOUNDS[args.model])
    elif args.model == "acf":
        b = np.tile([-1.0, 1.0], (fn.p, 1))
    else:
        b = np.tile([0.0, 1.0], (fn.p, 1))
    if b.shape != (fn.p, 2) or np.any(b[:, 0] >= b[:, 1]):
        raise UsageError(f"--bounds needs {fn.p} increasing lo,hi pairs")
    return b


def cmd_simulate(args, out):
    try:
        field = {"model": args.field, "theta": args.theta, "range": args.range_,
                 "mean": args.mean, "variance": args.variance}
        if args.transform == "chisq":
            field["transform"] = {"kind": "chisq", "theta1": args.theta1, "shift": args.shift}
        spec = _field(field)
        seed = Seed(args.seed, args.stream)
        if args.lam < 1:
            raise ValueError("--lambda must be at least 1")
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    sample = draw_sites(_design(args.design), PrototypeRegion.unit(2), args.lam, args.n, seed)
    sample = sample.with_values(simulate_field(spec, sample, seed))
    write_sites_csv(sample, args.output)
    out.write(f"wrote {sample.n} sites to {args.output}\n")


def cmd_fit(args, out):
    fn, grid, sample, pgram = _setup(args)
    bounds = _bounds(args, fn)
    if args.init is not None and len(args.init) != fn.p:
        raise UsageError(f"--init needs {fn.p} values")
    if fn.p > 2:
        raise UsageError("confidence regions are available for one or two parameters")
    region = confidence_region(fn, pgram, args.alpha, bounds, init=args.init,
                               resolution=args.resolution, xtol=args.xtol)
    if isinstance(region, GridMask):
        est = region.estimate
        intervals = [{"lo": lo, "hi": hi, "lo_open": bool(lo == b[0]), "hi_open": bool(hi == b[1])}
                     for (lo, hi), b in zip(region.projections(), bounds)]
        kind = "grid"
    else:
        est = np.array([region.estimate])
        intervals = [{"lo": region.lo, "hi": region.hi, "lo_open": region.lo_open,
                      "hi_open": region.hi_open}]
        kind = "interval"
    st = scaled_statistic(est, fn, pgram) if est is not None else None
    doc = {
        "model": args.model, "lags": _vectors(fn).tolist(),
        "lambda": sample.lam, "n": sample.n, "N": grid.N, "cstar": args.cstar, "kappa": args.kappa,
        "eta": args.eta, "alpha": args.alpha, "region_type": kind,
        "estimate": None if est is None else [float(v) for v in est],
        "neg_log_ratio": None if st is None else _finite(st.neg_log_ratio),
        "statistic": None if st is None else _finite(st.statistic),
        "a_n": None if st is None else _finite(st.a_n),
        "df": fn.p if st is None else st.df,
        "intervals": intervals,
        "region_inferred": bool(sample.meta.get("inferred", False)),
    }
    if args.format == "json":
        out.write(json.dumps(doc, indent=2) + "\n")
        return
    out.write(f"model {args.model}  N={grid.N}  n={sample.n}  lambda={sample.lam:g}  "
              f"alpha={args.alpha:g}\n")
    out.write(f"statistic {doc['statistic']}  a_n {doc['a_n']}\n")
    rows = [(f"theta{k + 1}", None if est is None else float(est[k]), iv["lo"], iv["hi"])
            for k, iv in enumerate(intervals)]
    pct = f"{100 * (1 - args.alpha):g}%"
    out.write(_table(rows, ["param", "estimate", f"{pct} lo", f"{pct} hi"]))


def cmd_test(args, out):
    fn, grid, sample, pgram = _setup(args)
    if len(args.theta0) != fn.p:
        raise UsageError(f"--theta0 needs {fn.p} values")
    res = test(args.theta0, fn, pgram, args.alpha)
    doc = {"theta0": args.theta0, "statistic": _finite(res.statistic), "df": res.df,
           "critical": res.critical, "pvalue": res.pvalue, "reject": res.reject,
           "status": res.status.value, "a_n": _finite(res.a_n), "alpha": args.alpha, "N": grid.N}
    if args.format == "json":
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        out.write(_table([(doc["statistic"], res.df, res.critical, res.pvalue, str(res.reject).lower(),
                           res.status.value)],
                         ["statistic", "df", "critical", "pvalue", "reject", "status"]))


def cmd_coverage(args, out):
    try:
        config = StudyConfig.from_json(args.config)
    except FileNotFoundError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise DataError(f"{args.config}: {exc}") from None
    rows = run_coverage(config, workers=args.workers)
    text = rows_to_json(config, rows) if args.format == "json" else rows_to_csv(rows)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)


def cmd_semivariogram(args, out):
    sample = read_sites_csv(args.data)
    if sample.n < 2:
        raise DataError(f"{args.data}: need at least two sites")
    rows = matheron_semivariogram(sample, args.bins, args.max_fraction)
    if args.format == "json":
        out.write(json.dumps(rows, indent=2) + "\n")
    elif args.format == "csv":
        out.write("midpoint,average,count\n")
        for r in rows:
            avg = "" if r["average"] is None else repr(r["average"])
            out.write(f"{r['midpoint']!r},{avg},{r['count']}\n")
    else:
        out.write(_table([(r["midpoint"], r["average"], r["count"]) for r in rows],
                         ["midpoint", "semivariance", "pairs"]))


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "test": cmd_test,
            "coverage": cmd_coverage, "semivariogram": cmd_semivariogram}


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except (DataError, OSError, FactorizationError, SamplingError, EmptyRegion, AllInfeasible,
            MemoryError) as exc:
        err.write(f"sfdel: error: {exc}\n")
        return EXIT_DATA
    except SystemExit as exc:  # --help and --version
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
