"""Command-line front end.

    awcalc expand  --family stretched-exp:2 --trunc 200 --out s.json
    awcalc growth  s.json --radii log10:10:10:100 --out profile.csv
    awcalc tkn     --kmax 8
    awcalc deq     eq.json
    awcalc wvcheck s.json --n 1

Exit status: 0 success, 2 invalid input, 3 numerical regime failure,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

import mpmath

from . import __version__
from .awdeq import growth_certificate, newton_polygon, predicted_nu, read_equation
from .awop import PolyRep
from .awseries import (
    PowerSeries,
    TailModel,
    expand_from_evaluator,
    power_to_aw,
    read_series,
    series_evaluator,
    series_to_json,
    tkn_table,
)
from .errors import AWError, InputError, InvariantViolation
from .growth import (
    CSV_COLUMNS,
    CoefficientFamily,
    ComparisonConfig,
    build_profile,
    log10_grid,
    profile_to_csv,
    wv_ratio,
    tail_sum_check,
    maximal_term_detail,
)
from .numkit import PrecisionCtx, QParam, format_decimal, parse_coefficient, parse_decimal, to_mpf

log = logging.getLogger("awcalc")


class RunConfig:
    """Validated global options; every numeric field is parsed exactly."""

    def __init__(self, ns: argparse.Namespace) -> None:
        self.q_text = ns.q
        self.q = QParam(ns.q)
        self.ctx = PrecisionCtx(_int(ns.precision_bits, "--precision-bits"))
        self.trunc = _int(ns.trunc, "--trunc")
        if self.trunc < 1:
            raise InputError("--trunc must be >= 1")
        self.cfg = ComparisonConfig(
            delta=parse_decimal(ns.delta),
            gamma=parse_decimal(ns.gamma),
            beta=parse_decimal(ns.beta),
            omega=parse_decimal(ns.omega),
            h=parse_decimal(ns.h),
        )
        self.radii_text = ns.radii
        self.grid = _parse_radii(ns.radii)
        self.format = ns.format
        self.jobs = _int(ns.jobs, "--jobs")

    def provenance(self, command: str, **extra) -> dict:
        c = self.cfg
        doc = {
            "tool": "awcalc",
            "version": __version__,
            "command": command,
            "q": self.q_text,
            "precision_bits": self.ctx.bits,
            "guard_bits": self.ctx.guard_bits,
            "trunc": self.trunc,
            "delta": str(c.delta),
            "gamma": str(c.gamma),
            "beta": str(c.beta),
            "omega": str(c.omega),
            "h": c.h,
            "radii": self.radii_text,
        }
        doc.update(extra)
        return doc


def _int(text, flag: str) -> int:
    try:
        v = Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{flag} must be an integer, got {text!r}") from None
    if v.denominator != 1:
        raise InputError(f"{flag} must be an integer, got {text!r}")
    return int(v)


def _parse_radii(spec: str):
    parts = spec.split(":")
    if len(parts) != 4 or parts[0] != "log10":
        raise InputError(f"--radii must look like log10:start:step:count, got {spec!r}")
    return log10_grid(parts[1], parts[2], _int(parts[3], "--radii count"))


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _num(v, rc: RunConfig, digits: int | None = None) -> str:
    with rc.ctx.working():
        return format_decimal(v, digits or rc.ctx.digits())


# ---------------------------------------------------------------------------
# subcommands


def _series_for_expand(args, rc: RunConfig):
    ctx, q = rc.ctx, rc.q
    chosen = [x for x in (args.family, args.poly, args.power) if x is not None]
    if len(chosen) != 1:
        raise InputError("give exactly one of --family, --poly or a power-series file")
    if args.poly is not None:
        with ctx.working():
            cs = [to_mpf(parse_coefficient(t)) for t in args.poly.split(",")]
        return power_to_aw(PowerSeries.from_poly(PolyRep(cs)), q, ctx), "poly"
    if args.power is not None:
        try:
            with open(args.power) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise InputError(f"power-series file not found: {args.power}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"power-series file is not valid JSON: {exc}") from None
        if not isinstance(doc, dict) or "coefficients" not in doc:
            raise InputError("power-series file is missing required key 'coefficients'")
        with ctx.working():
            cs = tuple(to_mpf(parse_coefficient(c)) for c in doc["coefficients"])
        tail = TailModel.from_json(doc.get("tail_model"))
        ps = PowerSeries(cs, tail)
        return power_to_aw(ps, q, ctx, rigorous=tail is not None and tail.certified), "power"
    name, _, param = args.family.partition(":")
    if name == "monomial":
        d = _int(param, "monomial degree")
        if d < 0:
            raise InputError("monomial degree must be >= 0")
        return power_to_aw(PowerSeries.from_poly(PolyRep.monomial(d)), q, ctx), "monomial"
    if name == "stretched-exp":
        if not param:
            raise InputError("stretched-exp needs a parameter, e.g. stretched-exp:2")
        return CoefficientFamily("stretched-exp", parse_decimal(param)).series(q, rc.trunc, ctx), "family"
    if name == "gauss-q":
        return CoefficientFamily("gauss-q").series(q, rc.trunc, ctx), "family"
    raise InputError(f"unknown family {args.family!r}; expected monomial:d, stretched-exp:g or gauss-q")


def cmd_expand(args, rc: RunConfig) -> int:
    s, kind = _series_for_expand(args, rc)
    ctx = rc.ctx
    with ctx.working():
        # Re-expanding the truncated series from its own node values must give the
        # stored coefficients back; phi_k vanishes at node j < k, so only the
        # first m + 1 coefficients enter node m.
        m = min(s.K, 24)
        back = expand_from_evaluator(series_evaluator(s, ctx), s.center, m, s.q, ctx)
        roundtrip = max(abs(u - v) for u, v in zip(back.coeffs, s.coeffs[: m + 1]))
        amax = max(abs(c) for c in s.coeffs)
    prov = rc.provenance("expand", source=args.family or args.poly or args.power)
    doc = series_to_json(s, ctx, prov)
    _emit(_dump_json(doc), args.out)
    summary = (f"coefficients: {len(s.coeffs)}\nmax |a_n|: {_num(amax, rc, 20)}\n"
               f"round-trip residual (first {m + 1} coefficients): {_num(roundtrip, rc, 6)}\n")
    (sys.stdout if args.out else sys.stderr).write(summary)
    return 0


def cmd_growth(args, rc: RunConfig) -> int:
    s = read_series(args.series, rc.ctx)
    rows = build_profile(s, rc.grid, rc.cfg, rc.ctx, wv_n=args.n, jobs=rc.jobs)
    prov = rc.provenance("growth", series=args.series, wv_n=args.n)
    if rc.format == "json":
        out = {"provenance": prov, "columns": list(CSV_COLUMNS), "rows": []}
        text = profile_to_csv(rows)
        lines = text.strip().split("\n")[1:]
        for line in lines:
            out["rows"].append(dict(zip(CSV_COLUMNS, _split_csv(line))))
        _emit(_dump_json(out), args.out)
    else:
        _emit(profile_to_csv(rows, provenance="provenance: " + json.dumps(prov, sort_keys=True)), args.out)
    return 0


def _split_csv(line: str) -> list:
    import csv

    return next(csv.reader([line]))


def cmd_tkn(args, rc: RunConfig) -> int:
    kmax = _int(args.kmax, "--kmax")
    if kmax < 0:
        raise InputError("--kmax must be >= 0")
    t = tkn_table(kmax, rc.q, rc.ctx)
    digits = rc.ctx.digits()
    prov = rc.provenance("tkn", kmax=kmax)
    with rc.ctx.working():
        entries = [(k, n, format_decimal(t.get(k, n), digits)) for k in range(kmax + 1) for n in range(k + 1)]
    if rc.format == "json":
        doc = {"provenance": prov, "entries": [{"k": k, "n": n, "T": v} for k, n, v in entries]}
        _emit(_dump_json(doc), args.out)
    else:
        lines = ["# provenance: " + json.dumps(prov, sort_keys=True), "k,n,T"]
        lines += [f"{k},{n},{v}" for k, n, v in entries]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_deq(args, rc: RunConfig) -> int:
    eq = read_equation(args.equation, rc.ctx)
    poly = newton_polygon(eq)
    ctx = rc.ctx
    preds = []
    with ctx.working():
        ln10 = mpmath.log(10)
        for chi in poly.positive_slopes:
            vals = [{"radius": text, "predicted_nu": format_decimal(
                predicted_nu(eq, chi=chi, log_r=to_mpf(e) * ln10, ctx=ctx), 20)} for text, e in rc.grid]
            preds.append({"chi": str(chi), "values": vals})
    doc = {
        "provenance": rc.provenance("deq", equation=args.equation),
        "order": eq.order,
        "generators": [list(g) for g in poly.generators],
        "vertices": [list(v) for v in poly.vertices],
        "edge_slopes": [str(s) for s in poly.edge_slopes],
        "positive_slopes": [str(s) for s in poly.positive_slopes],
        "predictions": preds,
    }
    if args.series:
        s = read_series(args.series, ctx)
        rows = [r for r in build_profile(s, rc.grid, rc.cfg, ctx, wv_n=0, jobs=rc.jobs) if r.nu is not None]
        with ctx.working():
            lrs = [r.log10_r * ln10 for r in rows]
        nus = [r.nu for r in rows]
        mask = [bool(r.normal) for r in rows] if args.normal_mask else None
        rep = growth_certificate(eq, s, lrs, nus, ctx, normal=mask)
        doc["certificate"] = {
            "verdict": rep.verdict.value,
            "chi": None if rep.chi is None else str(rep.chi),
            "sigma_log": None if rep.sigma_log is None else _num(rep.sigma_log, rc, 12),
            "band": str(rep.band),
            "normal_mask": bool(args.normal_mask),
            "detail": rep.detail,
        }
    if not poly.positive_slopes:
        doc["note"] = "no positive slope: no central-index prediction"
    _emit(_dump_json(doc), args.out)
    return 0


def cmd_wvcheck(args, rc: RunConfig) -> int:
    s = read_series(args.series, rc.ctx)
    n = _int(args.n, "--n")
    ctx = rc.ctx
    rows = []
    for text, e in rc.grid:
        with ctx.working():
            r = mpmath.mpf(10) ** int(e) if e.denominator == 1 else mpmath.power(10, to_mpf(e))
        row = {"radius": text}
        try:
            mt = maximal_term_detail(s, r, rc.cfg, ctx)
            row["nu"] = mt.nu
            R = wv_ratio(s, n, r, rc.cfg, ctx, normalization=args.normalization, mt=mt)
            with ctx.working():
                row["dev"] = abs(R - 1)
            try:
                row["tail"] = tail_sum_check(s, r, rc.cfg, ctx, mt).ratio
            except AWError as exc:
                row["status"] = type(exc).__name__
        except AWError as exc:
            row["status"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    devs = [r.get("dev") for r in rows]
    tails = [r.get("tail") for r in rows]
    endpoint = devs[0] is not None and devs[-1] is not None and devs[-1] < devs[0]
    top = devs[-5:]
    monotone = all(v is not None for v in top) and all(b < a for a, b in zip(top, top[1:]))
    ttop = tails[-5:]
    tail_mono = all(v is not None for v in ttop) and all(b < a for a, b in zip(ttop, ttop[1:]))
    verdict = "DECREASING" if endpoint and monotone else "NOT_DECREASING"
    prov = rc.provenance("wvcheck", series=args.series, n=n, normalization=args.normalization)
    if rc.format == "json":
        doc = {
            "provenance": prov,
            "rows": [{"radius": r["radius"], "nu": r.get("nu"),
                      "abs_R_minus_1": None if r.get("dev") is None else _num(r["dev"], rc, 12),
                      "tail_ratio": None if r.get("tail") is None else _num(r["tail"], rc, 12),
                      "status": r.get("status", "ok")} for r in rows],
            "endpoint_decrease": endpoint,
            "top5_decreasing": monotone,
            "tail_top5_decreasing": tail_mono,
            "verdict": verdict,
        }
        _emit(_dump_json(doc), args.out)
    else:
        lines = ["# provenance: " + json.dumps(prov, sort_keys=True), "radius,nu,abs_R_minus_1,tail_ratio,status"]
        for r in rows:
            lines.append(",".join([
                r["radius"], str(r.get("nu", "")),
                "" if r.get("dev") is None else _num(r["dev"], rc, 12),
                "" if r.get("tail") is None else _num(r["tail"], rc, 12),
                r.get("status", "ok"),
            ]))
        lines.append(f"# endpoint_decrease={str(endpoint).lower()} top5_decreasing={str(monotone).lower()} "
                     f"tail_top5_decreasing={str(tail_mono).lower()}")
        lines.append(f"# verdict: {verdict}")
        _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", default="1/2", help="base q in (0,1), decimal or rational (default 1/2)")
    common.add_argument("--precision-bits", default="512", help="working precision in bits (default 512)")
    common.add_argument("--trunc", default="400", help="number of coefficients for built-in families (default 400)")
    common.add_argument("--delta", default="0.5")
    common.add_argument("--gamma", default="1.5")
    common.add_argument("--beta", default="10")
    common.add_argument("--omega", default="9")
    common.add_argument("--h", default="0")
    common.add_argument("--radii", default="log10:10:10:100", help="log10:start:step:count")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--jobs", default="1", help="worker processes for per-radius work")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="awcalc", description=__doc__.split("\n")[0] if __doc__ else None)
    p.add_argument("--version", action="version", version=f"awcalc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("expand", parents=[common], help="write a series file")
    e.add_argument("power", nargs="?", default=None, help="power-series JSON file")
    e.add_argument("--family", default=None, help="monomial:d | stretched-exp:g | gauss-q")
    e.add_argument("--poly", default=None, help="comma-separated power-basis coefficients, constant first")
    e.set_defaults(func=cmd_expand, default_format="json")

    g = sub.add_parser("growth", parents=[common], help="growth profile of a series file")
    g.add_argument("series")
    g.add_argument("--n", type=int, default=1, help="difference order for the ratio column (0 to skip)")
    g.set_defaults(func=cmd_growth, default_format="csv")

    t = sub.add_parser("tkn", parents=[common], help="table of T(k, n)")
    t.add_argument("--kmax", required=True)
    t.set_defaults(func=cmd_tkn, default_format="csv")

    d = sub.add_parser("deq", parents=[common], help="Newton polygon and central-index prediction")
    d.add_argument("equation")
    d.add_argument("--series", default=None, help="optional solution series to certify")
    d.add_argument("--normal-mask", action="store_true",
                   help="compare the certificate only at radii that pass the q-normality test")
    d.set_defaults(func=cmd_deq, default_format="json")

    w = sub.add_parser("wvcheck", parents=[common], help="ratio trend along the radius grid")
    w.add_argument("series")
    w.add_argument("--n", default="1")
    w.add_argument("--normalization", choices=("corrected", "published"), default="corrected")
    w.set_defaults(func=cmd_wvcheck, default_format="csv")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.format is None:
        args.format = args.default_format
    try:
        rc = RunConfig(args)
        return args.func(args, rc)
    except InvariantViolation as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except AWError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
