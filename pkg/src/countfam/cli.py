"""Command-line interface over CSV count data.

Commands: pmf, sample, fit, gof, compare, moments.  Randomized commands take
a --seed (defaulting to 12345) which is echoed on stderr; `sample` writes one
count per line so its output re-ingests as raw data.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .baselines import GenPoissonParams, NegBinomParams, genpoisson_pmf, negbinom_pmf
from .errors import DomainError, EvaluationError
from .gfpd import GfpdParams, gfpd_pmf_table, gfpd_summary
from .inference import MODELS, CountData, fit, fit_grid, fit_simplex, gof_chisq, compare, loglik
from .moments import SummaryStats
from .sampling import RngStream, sample_fpd, sample_wpd
from .wpd import SpecialCase, make_special_case, wpd_pmf_table, wpd_summary

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DOMAIN = 4
EXIT_EVAL = 5

DEFAULT_SEED = 12345
DEFAULT_MC_N = 500_000

_WPD_TAGS = {t.value for t in SpecialCase}


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def ingest(path: str, fmt: str = "raw") -> CountData:
    """Read count data from a file.

    raw: one non-negative integer per line.  histogram: "value,frequency"
    lines.  Blank lines are skipped; anything else is a parse error carrying
    the 1-based line number.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc}") from exc
    hist = {}
    n = 0
    for ln, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s:
            continue
        if fmt == "raw":
            try:
                v = _int_token(s)
            except ValueError:
                raise CliError(EXIT_PARSE, f"{path}:{ln}: not a non-negative integer: {s!r}")
            hist[v] = hist.get(v, 0) + 1
            n += 1
        else:
            parts = s.split(",")
            if len(parts) != 2:
                raise CliError(EXIT_PARSE, f"{path}:{ln}: expected 'value,frequency': {s!r}")
            try:
                v = _int_token(parts[0].strip())
                f = _int_token(parts[1].strip())
            except ValueError:
                raise CliError(EXIT_PARSE, f"{path}:{ln}: non-integer token: {s!r}")
            if f < 1:
                raise CliError(EXIT_PARSE, f"{path}:{ln}: frequency must be >= 1: {s!r}")
            hist[v] = hist.get(v, 0) + f
            n += f
    if n == 0:
        raise CliError(EXIT_PARSE, f"{path}: no data")
    try:
        return CountData(hist, n)
    except DomainError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from exc


def _int_token(s: str) -> int:
    if not s or not (s.isdigit() or (s[0] in "+" and s[1:].isdigit())):
        raise ValueError(s)
    return int(s)


# ---------------------------------------------------------------------------
# model construction from flags
# ---------------------------------------------------------------------------

def _require(args, *names):
    vals = []
    for n in names:
        v = getattr(args, n.replace("-", "_"), None)
        if v is None:
            raise CliError(EXIT_USAGE, f"--{n} is required for model {args.model!r}")
        vals.append(v)
    return vals


def _model_pmf_table(args, x_max):
    """pmf array on 0..x_max for the model named on the command line."""
    m = args.model
    if m == "fpd":
        alpha, mu = _require(args, "alpha", "mu")
        return gfpd_pmf_table(GfpdParams.fpd(alpha, mu), x_max=x_max)
    if m == "gfpd":
        alpha, beta, delta, mu = _require(args, "alpha", "beta", "delta", "mu")
        return gfpd_pmf_table(GfpdParams(alpha, beta, delta, mu), x_max=x_max)
    if m == "gfpd_aa1":
        alpha, mu = _require(args, "alpha", "mu")
        return gfpd_pmf_table(GfpdParams.aa1(alpha, mu), x_max=x_max)
    if m == "negbinom":
        r, p = _require(args, "r", "p")
        pp = NegBinomParams(r, p)
        xs = range(int(x_max) + 1) if x_max is not None else None
        if xs is None:
            return _adaptive_table(lambda x: negbinom_pmf(pp, x))
        return np.array([negbinom_pmf(pp, x) for x in xs])
    if m == "genpoisson":
        l1, l2 = _require(args, "lambda1", "lambda2")
        pp = GenPoissonParams(l1, l2)
        if x_max is None:
            return _adaptive_table(lambda x: genpoisson_pmf(pp, x))
        return np.array([genpoisson_pmf(pp, x) for x in range(int(x_max) + 1)])
    if m in _WPD_TAGS:
        p = _wpd_params(args)
        return wpd_pmf_table(p, x_max=x_max)
    raise CliError(EXIT_USAGE, f"unknown model {m!r}")


def _adaptive_table(pmf):
    out = []
    x = 0
    cum = 0.0
    while cum < 1.0 - 1e-10 and x < 100_000:
        v = pmf(x)
        out.append(v)
        cum += v
        x += 1
    return np.asarray(out)


def _wpd_params(args):
    tag = SpecialCase(args.model)
    free = {
        SpecialCase.POISSON: ("lam",),
        SpecialCase.COM_POISSON: ("lam", "nu"),
        SpecialCase.HYPER_POISSON: ("lam", "beta"),
        SpecialCase.ALT_MITTAG_LEFFLER: ("lam", "alpha", "beta"),
        SpecialCase.FRACTIONAL_COM_POISSON: ("lam", "alpha", "beta", "nu"),
        SpecialCase.ALT_GENERALIZED_ML: ("lam", "alpha", "beta", "gamma"),
        SpecialCase.MODEL_I: ("lam", "beta", "nu"),
        SpecialCase.MODEL_I_2PARAM: ("lam", "beta"),
        SpecialCase.MODEL_II: ("lam", "beta", "gamma"),
        SpecialCase.MODEL_II_2PARAM: ("beta", "gamma"),
    }[tag]
    vals = _require(args, *free)
    return make_special_case(tag, **dict(zip(free, vals)))


def _model_summary(args) -> SummaryStats:
    m = args.model
    if m == "fpd":
        alpha, mu = _require(args, "alpha", "mu")
        return gfpd_summary(GfpdParams.fpd(alpha, mu))
    if m == "gfpd":
        alpha, beta, delta, mu = _require(args, "alpha", "beta", "delta", "mu")
        return gfpd_summary(GfpdParams(alpha, beta, delta, mu))
    if m == "gfpd_aa1":
        alpha, mu = _require(args, "alpha", "mu")
        return gfpd_summary(GfpdParams.aa1(alpha, mu))
    if m == "negbinom":
        r, p = _require(args, "r", "p")
        pp = NegBinomParams(r, p)
        from .baselines import negbinom_skewness

        return SummaryStats(pp.mean, pp.variance, negbinom_skewness(pp), 1.0 / pp.p)
    if m in _WPD_TAGS:
        return wpd_summary(_wpd_params(args))
    raise CliError(EXIT_USAGE, f"moments not available for model {m!r}")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _emit_rows(rows, header, fmt, out):
    if fmt == "json":
        json.dump(rows, out, indent=2, default=float)
        out.write("\n")
        return
    if fmt == "csv":
        out.write(",".join(header) + "\n")
        for r in rows:
            out.write(",".join(_cell(r.get(h)) for h in header) + "\n")
        return
    widths = [max(len(h), *(len(_cell(r.get(h))) for r in rows)) for h in header]
    out.write("  ".join(h.ljust(w) for h, w in zip(header, widths)) + "\n")
    for r in rows:
        out.write("  ".join(_cell(r.get(h)).ljust(w) for h, w in zip(header, widths)) + "\n")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, dict):
        return ";".join(f"{k}={val:.6g}" for k, val in v.items())
    return str(v)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_pmf(args, out):
    table = _model_pmf_table(args, args.x_max)
    rows = [{"x": i, "probability": float(p)} for i, p in enumerate(table)]
    _emit_rows(rows, ["x", "probability"], args.output_format, out)
    return EXIT_OK


def _cmd_sample(args, out):
    rng = RngStream(args.seed)
    m = args.model
    if m == "fpd":
        alpha, mu = _require(args, "alpha", "mu")
        batch = sample_fpd(alpha, mu, args.n, rng)
    elif m in _WPD_TAGS:
        batch = sample_wpd(_wpd_params(args), args.n, rng)
    else:
        raise CliError(EXIT_USAGE, f"sampling not available for model {m!r}")
    for v in batch.values:
        out.write(f"{int(v)}\n")
    print(f"seed: {batch.seed}", file=sys.stderr)
    return EXIT_OK


def _fit_one(args, data):
    if args.model not in MODELS:
        raise CliError(EXIT_USAGE, f"model {args.model!r} is not fittable; choose from {sorted(MODELS)}")
    if args.method == "grid":
        return fit_grid(args.model, data, pool=not args.no_pool)
    if args.method == "simplex":
        return fit_simplex(args.model, data, pool=not args.no_pool)
    return fit(args.model, data, pool=not args.no_pool)


def _cmd_fit(args, out):
    data = ingest(args.input, args.format)
    res = _fit_one(args, data)
    row = res.to_dict()
    _emit_rows([row], ["model", "params", "loglik", "chi2", "df", "p_value", "converged"],
               args.output_format, out)
    return EXIT_OK


def _cmd_gof(args, out):
    data = ingest(args.input, args.format)
    spec = MODELS.get(args.model)
    if spec is None:
        raise CliError(EXIT_USAGE, f"model {args.model!r} is not testable; choose from {sorted(MODELS)}")
    theta = []
    for name in spec.param_names:
        v = getattr(args, name.replace("-", "_"), None)
        if v is None:
            raise CliError(EXIT_USAGE, f"--{name} is required for model {args.model!r}")
        theta.append(v)
    chi2, df, p = gof_chisq(args.model, tuple(theta), data, pool=not args.no_pool)
    ll = loglik(args.model, tuple(theta), data)
    row = {"model": args.model, "params": dict(zip(spec.param_names, theta)),
           "loglik": ll, "chi2": chi2, "df": df, "p_value": p, "converged": True}
    _emit_rows([row], ["model", "params", "loglik", "chi2", "df", "p_value"],
               args.output_format, out)
    return EXIT_OK


def _cmd_compare(args, out):
    data = ingest(args.input, args.format)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    rows = compare(models, data, pool=not args.no_pool)
    _emit_rows(rows, ["model", "params", "loglik", "chi2", "df", "p_value", "converged", "error"],
               args.output_format, out)
    return EXIT_OK


def _cmd_moments(args, out):
    s = _model_summary(args)
    row = {"mean": s.mean, "variance": s.variance, "skewness": s.skewness,
           "fisher_index": s.fisher_index}
    _emit_rows([row], ["mean", "variance", "skewness", "fisher_index"], args.output_format, out)
    return EXIT_OK


def _add_model_flags(p):
    p.add_argument("--model", required=True)
    for flag in ("alpha", "beta", "delta", "mu", "lam", "nu", "gamma",
                 "r", "p", "lambda1", "lambda2"):
        p.add_argument(f"--{flag}", type=float, default=None)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="countfam",
        description="Count-distribution toolkit: flexible Poisson-type laws, "
        "sampling, fitting and goodness of fit.",
    )
    ap.add_argument("--version", action="version", version=f"countfam {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pmf", help="tabulate a pmf as (x, probability) rows")
    _add_model_flags(p)
    p.add_argument("--x-max", type=int, default=None)
    p.add_argument("--output-format", choices=("table", "json", "csv"), default="csv")
    p.set_defaults(func=_cmd_pmf)

    p = sub.add_parser("sample", help="simulate counts, one per line")
    _add_model_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=_cmd_sample)

    for name, fn in (("fit", _cmd_fit), ("gof", _cmd_gof)):
        p = sub.add_parser(name)
        _add_model_flags(p)
        p.add_argument("--input", required=True)
        p.add_argument("--format", choices=("raw", "histogram"), default="raw")
        p.add_argument("--no-pool", action="store_true",
                       help="keep raw chi-square cells instead of pooling to expected >= 5")
        p.add_argument("--output-format", choices=("table", "json", "csv"), default="table")
        if name == "fit":
            p.add_argument("--method", choices=("auto", "grid", "simplex"), default="auto")
        p.set_defaults(func=fn)

    p = sub.add_parser("compare", help="fit several models and rank by p-value")
    p.add_argument("--models", required=True, help="comma-separated model names")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("raw", "histogram"), default="raw")
    p.add_argument("--no-pool", action="store_true")
    p.add_argument("--output-format", choices=("table", "json", "csv"), default="table")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("moments", help="mean/variance/skewness/Fisher index of a model")
    _add_model_flags(p)
    p.add_argument("--output-format", choices=("table", "json", "csv"), default="table")
    p.set_defaults(func=_cmd_moments)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args, sys.stdout)
    except CliError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.code
    except DomainError as exc:
        print(f"error[{EXIT_DOMAIN}]: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except EvaluationError as exc:
        print(f"error[{EXIT_EVAL}]: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
