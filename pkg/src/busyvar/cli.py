"""``busyvar`` command line.

Subcommands: compute, bounds, table1, simulate, order, cv, sweep.  JSON goes
to stdout by default (``--format csv`` for CSV; table1 and sweep default to
CSV).  Warnings go to stderr and into the JSON ``warnings`` field.

Exit codes: 0 success, 1 usage, 2 numeric failure, 3 infinite moment.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from . import bounds as bnd
from .core import (QueueInput, mean_busy_period, variance_integral, variance_md_exact, variance_mm_exact,
                   variance_series)
from .cv import cv_squared, exponentiality_diagnostic
from .dist import Deterministic, Exponential, format_spec, parse_spec
from .errors import BusyVarError, InfiniteMomentError, NumericError, ParseError
from .numerics import DEFAULT_REL_TOL
from .ordering import Outcome, check_variability_order, empirical_busy_order, variance_consequence
from .sim import SimConfig, busy_period_samples, simulate, write_samples

SCHEMA_VERSION = 1

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INFINITE = 0, 1, 2, 3

SERIES_NOTICE = ("series route multiplies the n>=3 sum by (1 + gamma_s^2); the uncorrected form "
                 "(method series-as-printed) underestimates the variance of non-deterministic service")
IMPROVED_NOTICE = ("improved upper bound: the as-printed variant carries factor 1 on its series part and is "
                   "not a valid bound (below the exact value at rho=0.5); the corrected variant uses factor 2")
DFR_NOTICE = "DFR bound is evaluated with the squared service coefficient of variation in its exponent"


class UsageError(BusyVarError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _num(x):
    """JSON-safe number: infinities become strings."""
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def _entry(quantity, method, value, err_est=0.0, **extra):
    out = {"quantity": quantity, "method": method, "value": _num(value), "err_est": _num(err_est)}
    out.update(extra)
    return out


def _report(command, inputs, results, warnings):
    return {"schema_version": SCHEMA_VERSION, "command": command, "inputs": inputs,
            "results": results, "warnings": warnings}


def _tolerance(args):
    if args.tol is not None:
        return args.tol
    env = os.environ.get("BUSYVAR_TOL")
    if env:
        try:
            return float(env)
        except ValueError:
            raise UsageError(f"BUSYVAR_TOL is not a number: {env!r}") from None
    return DEFAULT_REL_TOL


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-').replace('lam', 'lambda')} is required")


def _model(text):
    return parse_spec(text)


def _emit_results_csv(report, out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["quantity", "method", "value", "err_est"])
    for r in report["results"]:
        w.writerow([r["quantity"], r["method"], r["value"], r["err_est"]])


# ------------------------------------------------------------------ commands

def cmd_compute(args, out):
    _need(args, "dist", "lam")
    model = _model(args.dist)
    q = QueueInput(args.lam, model)
    tol = _tolerance(args)
    methods = ["integral", "series", "exact"] if args.method == "all" else [args.method]
    warnings = []
    results = [_entry("mean", "closed_form", mean_busy_period(q))]
    values = {}
    for m in methods:
        if m == "integral":
            r = variance_integral(q, rel_tol=tol)
        elif m in ("series", "series-as-printed"):
            r = variance_series(q, corrected=(m == "series"))
            warnings.append(SERIES_NOTICE)
        elif m == "exact":
            if isinstance(model, Exponential):
                r = variance_mm_exact(q.lam, q.rho)
            elif isinstance(model, Deterministic):
                r = variance_md_exact(q.lam, q.rho)
            else:
                warnings.append(f"no closed form for {model.family.value} service; exact route skipped")
                continue
        elif m == "mm-exact":
            r = variance_mm_exact(q.lam, q.rho)
            if not isinstance(model, Exponential):
                warnings.append("mm-exact is the exponential-service value at the same rho, "
                                "not the variance of this model")
        elif m == "md-exact":
            r = variance_md_exact(q.lam, q.rho)
            if not isinstance(model, Deterministic):
                warnings.append("md-exact is the constant-service value at the same rho, "
                                "not the variance of this model")
        values[r.method.value] = r.value
        results.append(_entry("variance", r.method.value, r.value, r.err_est, diagnostics={
            k: (_num(v) if isinstance(v, float) else v) for k, v in r.diagnostics.items()}))
    if args.method == "all":
        names = sorted(values)
        devs = {}
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                va, vb = values[a], values[b]
                if math.isfinite(va) and math.isfinite(vb):
                    devs[f"{a}~{b}"] = abs(va - vb) / max(abs(va), abs(vb), 1e-300)
        results.append({"quantity": "relative_deviation", "method": "pairwise", "value": devs, "err_est": 0.0})
    inputs = {"dist": format_spec(model), "lambda": args.lam, "rho": q.rho, "tol": tol}
    report = _report("compute", inputs, results, warnings)
    infinite = any(isinstance(v, float) and math.isinf(v) for v in values.values())
    if infinite:
        mom = model.moments()
        report["warnings"].append(f"infinite second moment (mu2 = {_num(mom.mu2)}): busy-period variance is infinite")
    return report, (EXIT_INFINITE if infinite else EXIT_OK)


def cmd_bounds(args, out):
    _need(args, "lam")
    lam = args.lam
    alpha, mu2, mu3 = args.alpha, args.mu2, args.mu3
    rho = args.rho
    if rho is None:
        if alpha is None:
            raise UsageError("give --rho or --alpha")
        rho = lam * alpha
    if alpha is None:
        alpha = rho / lam
    g2 = args.gamma_s2
    if g2 is None and mu2 is not None:
        g2 = mu2 / alpha ** 2 - 1.0
    classes = [c.lower() for c in (args.cls or [])]
    results, warnings = [], []
    if g2 is not None:
        rep = bnd.general_bounds(lam, rho, g2)
        results.append(_entry("lower", rep.variant.value, rep.lower))
        results.append(_entry("upper", rep.variant.value, rep.upper))
    elif not classes:
        raise UsageError("--gamma-s2 (or --mu2 with --alpha) is required for the general bounds")
    if args.improved_M is not None:
        for variant in ("corrected", "as_printed"):
            rep = bnd.improved_upper_mm(lam, rho, args.improved_M, variant)
            results.append(_entry("upper", rep.variant.value, rep.upper, M=args.improved_M,
                                  is_bound=rep.is_bound))
        warnings.append(IMPROVED_NOTICE)
        if g2 is not None and g2 != 1.0:
            warnings.append("the improved upper bound applies to exponential service (gamma_s2 = 1) only")
    for c in classes:
        if c in ("nbue", "nwue"):
            cmp_ = bnd.class_comparison(c, lam, rho)
            results.append(_entry("reference", f"class_{c}", cmp_.reference.value, cmp_.reference.err_est,
                                  relation=cmp_.relation, statement=cmp_.statement))
        elif c == "dfr":
            if g2 is None:
                raise UsageError("--class dfr needs --gamma-s2 (or --mu2)")
            rep = bnd.dfr_lower(lam, rho, g2)
            results.append(_entry("lower", rep.variant.value, rep.lower, rep.err_est))
            warnings.append(DFR_NOTICE)
            if g2 < 1:
                warnings.append("DFR service has gamma_s2 >= 1; the input is not DFR")
        elif c == "imrl":
            if mu2 is None or mu3 is None:
                raise UsageError("--class imrl needs --mu2 and --mu3")
            rep = bnd.imrl_lower(lam, alpha, mu2, mu3)
            results.append(_entry("lower", rep.variant.value, rep.lower, rep.err_est))
        else:
            raise UsageError(f"unknown class {c!r}")
    inputs = {"lambda": lam, "rho": rho, "gamma_s2": g2, "alpha": alpha, "mu2": mu2, "mu3": mu3,
              "improved_M": args.improved_M, "classes": classes}
    return _report("bounds", inputs, results, warnings), EXIT_OK


def _parse_rho_list(values):
    out = []
    for v in values:
        for part in str(v).split(","):
            if part.strip():
                try:
                    out.append(float(part))
                except ValueError:
                    raise UsageError(f"not a number in --rho-list: {part!r}") from None
    return out


def cmd_table1(args, out):
    rhos = _parse_rho_list(args.rho_list) if args.rho_list else list(bnd.TABLE1_RHOS)
    lam = args.lam if args.lam is not None else 1.0
    rows = bnd.table1(lam, rhos, args.M)
    notes = bnd.table1_footnotes(rows, lam, args.M)
    columns = bnd.TABLE1_COLUMNS if args.extended else bnd.TABLE1_COLUMNS[:4]
    if _format(args, "csv") == "csv":
        w = csv.writer(out, lineterminator="\n")
        out.write(f"# busyvar table1 schema_version={SCHEMA_VERSION} lambda={lam!r} M={args.M}\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) for v in row.as_tuple()[:len(columns)]])
        for n in notes:
            out.write(f"# note: {n}\n")
        for n in notes:
            print(f"warning: {n}", file=sys.stderr)
        return None, EXIT_OK
    results = [{c: _num(v) for c, v in zip(columns, row.as_tuple())} for row in rows]
    return _report("table1", {"lambda": lam, "rho_list": rhos, "M": args.M}, results, notes), EXIT_OK


def cmd_simulate(args, out):
    _need(args, "dist", "lam", "n", "seed")
    model = _model(args.dist)
    cfg = SimConfig(args.lam, model, args.n, args.seed, args.streams)
    stats, samples = simulate(cfg, keep_samples=bool(args.emit_samples))
    if args.emit_samples:
        write_samples(args.emit_samples, samples)
    results = [{"quantity": "busy_period", "method": "simulation", **{k: _num(v) if isinstance(v, float) else
                                                                     ([_num(x) for x in v] if isinstance(v, list)
                                                                      else v)
                                                                     for k, v in stats.as_dict().items()}}]
    warnings = []
    mom = model.moments()
    q = QueueInput(args.lam, model)
    ref_mean = mean_busy_period(q)
    results.append(_entry("mean", "closed_form", ref_mean,
                          covered=bool(stats.ci95_mean[0] <= ref_mean <= stats.ci95_mean[1])))
    if math.isfinite(mom.mu2):
        v = variance_integral(q, rel_tol=_tolerance(args))
        results.append(_entry("variance", v.method.value, v.value, v.err_est,
                              covered=bool(stats.ci95_variance[0] <= v.value <= stats.ci95_variance[1])))
    else:
        warnings.append("infinite second moment: the sample variance does not converge")
    inputs = {"dist": format_spec(model), "lambda": args.lam, "rho": q.rho, "n": args.n, "seed": args.seed,
              "streams": args.streams, "emit_samples": args.emit_samples}
    return _report("simulate", inputs, results, warnings), EXIT_OK


def _verdict_dict(v):
    out = {"outcome": v.outcome.value, "witness_t": _num(v.witness_t), "gap": _num(v.gap),
           "mean_check": {"passed": v.mean_check.passed, "mean1": _num(v.mean_check.mean1),
                          "mean2": _num(v.mean_check.mean2)}}
    if v.mean_check.p_value is not None:
        out["mean_check"]["p_value"] = _num(v.mean_check.p_value)
    if v.effect_size is not None:
        out["effect_size"] = _num(v.effect_size)
    if v.note:
        out["note"] = v.note
    return out


def cmd_order(args, out):
    _need(args, "dist1", "dist2")
    m1, m2 = _model(args.dist1), _model(args.dist2)
    verdict = check_variability_order(m1, m2)
    results = [{"quantity": "variability_order", "method": "grid", **_verdict_dict(verdict)}]
    warnings = []
    if args.lam is not None:
        if verdict.outcome is Outcome.HOLDS:
            cons = variance_consequence(m1, m2, args.lam)
            results.append(_entry("variance_1", cons.first.method.value, cons.first.value, cons.first.err_est))
            results.append(_entry("variance_2", cons.second.method.value, cons.second.value,
                                  cons.second.err_est))
            results.append(_entry("variance_margin", "difference", cons.margin, violated=cons.violated))
            if cons.violated:
                warnings.append("variance ordering violated beyond tolerance: numerical problem suspected")
        else:
            warnings.append("order does not hold; variance consequence not evaluated")
    if args.empirical:
        if args.lam is None:
            raise UsageError("--empirical needs --lambda")
        seed = args.seed if args.seed is not None else 0
        s1 = busy_period_samples(SimConfig(args.lam, m1, args.n, seed, args.streams))
        s2 = busy_period_samples(SimConfig(args.lam, m2, args.n, seed + 1, args.streams))
        ev = empirical_busy_order(s1, s2)
        results.append({"quantity": "busy_period_order", "method": "empirical", **_verdict_dict(ev)})
    inputs = {"dist1": format_spec(m1), "dist2": format_spec(m2), "lambda": args.lam,
              "empirical": bool(args.empirical)}
    return _report("order", inputs, results, warnings), EXIT_OK


def cmd_cv(args, out):
    _need(args, "dist", "lam")
    model = _model(args.dist)
    q = QueueInput(args.lam, model)
    tol = _tolerance(args)
    res = cv_squared(q, rel_tol=tol)
    verdict = exponentiality_diagnostic(q, threshold=args.threshold, rel_tol=tol)
    results = [
        _entry("beta", "integral", res.beta, res.err_est / (2 * math.exp(q.rho) * q.lam / math.expm1(q.rho) ** 2)),
        _entry("gamma_B2", "integral", res.gamma_B2, res.err_est),
        _entry("exponentiality_gap", "integral", res.exponentiality_gap, res.err_est,
               verdict=verdict.label, threshold=args.threshold),
    ]
    code = EXIT_OK if math.isfinite(res.gamma_B2) else EXIT_INFINITE
    inputs = {"dist": format_spec(model), "lambda": args.lam, "rho": q.rho, "tol": tol}
    return _report("cv", inputs, results, []), code


SWEEP_COLUMNS = {
    "mean": ("mean_busy",),
    "integral": ("var_integral", "var_integral_err"),
    "series": ("var_series", "var_series_err"),
    "mm-exact": ("var_mm_exact",),
    "md-exact": ("var_md_exact",),
    "bounds": ("lower_1_3", "upper_1_3"),
    "cv": ("gamma_b2", "cv_gap"),
}


def _rho_range(text):
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"--rho-range must look like a:b:step, got {text!r}") from None
    if step <= 0 or b < a or a <= 0:
        raise UsageError("--rho-range needs 0 < a <= b and step > 0")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 12) for i in range(n)]


def cmd_sweep(args, out):
    _need(args, "dist", "lam", "rho_range")
    base = _model(args.dist)
    lam = args.lam
    tol = _tolerance(args)
    whats = args.what or ["integral"]
    rows = []
    warnings = []
    if "series" in whats:
        warnings.append(SERIES_NOTICE)
    for rho in _rho_range(args.rho_range):
        model = base.scaled(rho / (lam * base.mean))
        q = QueueInput(lam, model)
        row = {"rho": rho}
        for w in whats:
            if w == "mean":
                row["mean_busy"] = mean_busy_period(q)
            elif w == "integral":
                r = variance_integral(q, rel_tol=tol)
                row["var_integral"], row["var_integral_err"] = r.value, r.err_est
            elif w == "series":
                r = variance_series(q)
                row["var_series"], row["var_series_err"] = r.value, r.err_est
            elif w == "mm-exact":
                row["var_mm_exact"] = variance_mm_exact(lam, rho).value
            elif w == "md-exact":
                row["var_md_exact"] = variance_md_exact(lam, rho).value
            elif w == "bounds":
                rep = bnd.general_bounds(lam, rho, model.moments().gamma_s2)
                row["lower_1_3"], row["upper_1_3"] = rep.lower, rep.upper
            elif w == "cv":
                c = cv_squared(q, rel_tol=tol)
                row["gamma_b2"], row["cv_gap"] = c.gamma_B2, c.exponentiality_gap
        rows.append(row)
    columns = ["rho"] + [c for w in whats for c in SWEEP_COLUMNS[w]]
    if _format(args, "csv") == "csv":
        out.write(f"# busyvar sweep schema_version={SCHEMA_VERSION} dist={format_spec(base)} lambda={lam!r}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(row[c])) for c in columns])
        for n in warnings:
            print(f"warning: {n}", file=sys.stderr)
        return None, EXIT_OK
    results = [{c: _num(row[c]) for c in columns} for row in rows]
    inputs = {"dist": format_spec(base), "lambda": lam, "rho_range": args.rho_range, "what": whats}
    return _report("sweep", inputs, results, warnings), EXIT_OK


# ------------------------------------------------------------------ parser

def _format(args, default):
    return args.format or default


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--tol", type=float, default=None, help="relative quadrature tolerance")
    common.add_argument("--config", default=None, help="JSON file whose keys mirror the flags")

    parser = _Parser(prog="busyvar", description="M/G/infinity busy-period variance toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("compute", parents=[common], help="busy-period variance of one queue")
    p.add_argument("--dist")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--method", default="integral",
                   choices=("integral", "series", "series-as-printed", "mm-exact", "md-exact", "all"))
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("bounds", parents=[common], help="variance bounds from a few moments")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--gamma-s2", dest="gamma_s2", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--mu2", type=float)
    p.add_argument("--mu3", type=float)
    p.add_argument("--improved-M", dest="improved_M", type=int)
    p.add_argument("--class", dest="cls", action="append", choices=("nbue", "nwue", "dfr", "imrl"))
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("table1", parents=[common], help="exponential-service bounds table")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--rho-list", dest="rho_list", nargs="+")
    p.add_argument("--M", dest="M", type=int, default=14)
    p.add_argument("--extended", action="store_true")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo busy periods")
    p.add_argument("--dist")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--streams", type=int, default=1)
    p.add_argument("--emit-samples", dest="emit_samples")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("order", parents=[common], help="variability order of two service models")
    p.add_argument("--dist1")
    p.add_argument("--dist2")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--empirical", action="store_true")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--streams", type=int, default=1)
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("cv", parents=[common], help="busy-period coefficient of variation")
    p.add_argument("--dist")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--threshold", type=float, default=0.01)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("sweep", parents=[common], help="quantities over a range of rho")
    p.add_argument("--dist")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--rho-range", dest="rho_range")
    p.add_argument("--what", action="append", choices=tuple(SWEEP_COLUMNS))
    p.set_defaults(func=cmd_sweep)
    return parser


_CONFIG_ALIASES = {"lambda": "lam", "class": "cls", "improved-m": "improved_M", "improved_m": "improved_M"}


def _apply_config(parser, args, argv):
    """Reparse with the config file's values as defaults, so explicit flags win."""
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    defaults = {}
    for key, value in data.items():
        dest = _CONFIG_ALIASES.get(key, key.replace("-", "_"))
        if dest in ("config", "command", "func") or not hasattr(args, dest):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        defaults[dest] = value
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        args = _apply_config(parser, args, argv)
        report, code = args.func(args, out)
    except (UsageError, ParseError) as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE
    except InfiniteMomentError as exc:
        print(f"infinite moment: {exc}", file=err)
        return EXIT_INFINITE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=err)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE
    if report is not None:
        for w in report["warnings"]:
            print(f"warning: {w}", file=err)
        if _format(args, "json") == "csv":
            _emit_results_csv(report, out)
        else:
            out.write(json.dumps(report, indent=2, allow_nan=False) + "\n")
    if code == EXIT_INFINITE and report is None:
        print("infinite second moment: busy-period variance is infinite", file=err)
    return code


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
