"""Command-line front end: ``conjlab <subcommand> ...``.

Exit status 0 on success, 2 when a computation could not be resolved at the
available precision or window, 3 on invalid input.  Errors go to stderr as
one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Any, Sequence

from . import analysis, conjugacy, padic
from .errors import ConjlabError, InputError
from .exactnum import AlphaOracle, as_rational, format_rational, oracle_less_than
from .sturmian import (ConstructorConfig, Shape, Variant, ZeroRunFamily, construct_word, convergents,
                       sturmian_stream)
from .words import FiniteWord, WordStream, to_runlength

CSV_HEADER = "# conjugacy-lab v1"


# -- formatting ----------------------------------------------------------------


def fmt_double(x: float) -> str:
    return format(float(x), ".17g")


def _json(obj: Any) -> str:
    """JSON text with Fractions as "num/den" strings and doubles at 17
    significant digits."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, Fraction):
        return json.dumps(format_rational(obj))
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_double(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell(x: Any) -> str:
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, float):
        return fmt_double(x)
    if x is None:
        return ""
    return str(x)


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(c) for c in r])
    return buf.getvalue()


def _plain(report: dict) -> str:
    lines = []
    for k, v in report.items():
        if isinstance(v, (list, tuple)):
            v = " ".join(_cell(x) if not isinstance(x, (list, tuple, dict)) else _json(x) for x in v)
        elif isinstance(v, dict):
            v = _json(v)
        else:
            v = _cell(v)
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


class Output:
    """A report dict plus an optional table; rendered per --format."""

    def __init__(self, report: dict, header: Sequence[str] | None = None, rows: Sequence[Sequence[Any]] = ()):
        self.report = report
        self.header = header
        self.rows = rows

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return _json(self.report) + "\n"
        if fmt == "csv":
            if self.header is None:
                items = [(k, v) for k, v in self.report.items() if not isinstance(v, (list, tuple, dict))]
                return _csv(["key", "value"], items)
            return _csv(self.header, self.rows)
        return _plain(self.report)


# -- word sources ----------------------------------------------------------------


def _add_source(p: argparse.ArgumentParser, constructor: bool = True) -> None:
    g = p.add_argument_group("word source (exactly one)")
    g.add_argument("--word", help="literal or run-length word, e.g. 100101 or '1^4 0 (1^3 0)^2'")
    g.add_argument("--sturmian", metavar="ALPHA", help="1c_alpha for ln2, ln2/ln3, golden, surd:a,b,d,c or a rational")
    g.add_argument("--variant", choices=[v.value for v in Variant], default="upper",
                   help="upper = 1c_alpha, lower = 0c_alpha")
    g.add_argument("--parity-of", metavar="Q", help="parity vector of a rational with odd denominator")
    if constructor:
        g.add_argument("--construct", action="store_true", help="use the constructor flags below")
        _add_constructor(p)


def _add_constructor(p: argparse.ArgumentParser, with_alpha: bool = True) -> None:
    g = p.add_argument_group("constructor")
    if with_alpha:
        g.add_argument("--alpha", default="ln2", help="target slope (default ln2)")
    g.add_argument("--family", default="identity",
                   help="zero-run lengths: identity, sixths, quarters, q:Q, sub:c/d, pow:beta, poly:c0,c1,...")
    g.add_argument("--shape", choices=[s.value for s in Shape], default="zeros-first")
    g.add_argument("--m-rule", choices=["auto", "index", "zeros"], default="auto",
                   help="n in the height formula: loop index or zero-run length (auto picks by shape)")


def _config(args, alpha: AlphaOracle | None = None, top: int = 20) -> ConstructorConfig:
    rule = {"auto": None, "index": True, "zeros": False}[args.m_rule]
    return ConstructorConfig(alpha or AlphaOracle.parse(args.alpha), ZeroRunFamily.parse(args.family),
                             Shape(args.shape), top=top, m_uses_index=rule)


def _source(args) -> tuple[str, WordStream, FiniteWord | None]:
    """(kind, stream, finite word if the source is finite)."""
    chosen = [k for k in ("word", "sturmian", "parity_of") if getattr(args, k, None) is not None]
    if getattr(args, "construct", False):
        chosen.append("construct")
    if len(chosen) != 1:
        raise InputError("give exactly one word source: --word, --sturmian, --parity-of or --construct")
    kind = chosen[0]
    if kind == "word":
        u = FiniteWord.parse(args.word)
        return kind, WordStream.from_finite(u), u
    if kind == "sturmian":
        return kind, sturmian_stream(AlphaOracle.parse(args.sturmian), args.variant), None
    if kind == "parity_of":
        return kind, conjugacy.parity_stream(as_rational(args.parity_of)), None
    stream, _ = construct_word(_config(args, top=0))
    return kind, stream, None


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def _non_negative(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


# -- subcommands ---------------------------------------------------------------


def cmd_phi(args) -> Output:
    kind, stream, word = _source(args)
    depth = args.depth or (word.length if word is not None else 64)
    u = stream.prefix(depth)
    report: dict[str, Any] = {"source": kind, "depth": depth, "prefix": to_runlength(u) if depth else "",
                              "phi": u.phi, "height": u.height,
                              "Phi": conjugacy.phi_finite(u), "Phi_double": float(conjugacy.phi_finite(u))}
    if depth:
        report["C"] = conjugacy.cycle_value(u)
        report["T0"] = Fraction(u.phi, 1 << depth)
    rows = []
    if args.partials:
        partials = conjugacy.phi_partials(stream, depth)
        report["partials"] = partials
        rows = [(l, x, float(x)) for l, x in enumerate(partials, 1)]
    if args.padic2:
        e = padic.phi_2adic(stream, args.padic2)
        report["padic2_digits"] = str(e)
        report["padic2_residues"] = e.residue_values()
    if args.estimate is not None:
        est = conjugacy.phi_limit_estimate(stream, as_rational(args.estimate), args.slope_floor,
                                           max_depth=args.max_depth)
        report["estimate"] = est.value
        report["estimate_double"] = float(est.value)
        report["estimate_depth"] = est.depth
        report["certified"] = est.certified
        report["tail_bound"] = None if est.tail_bound is None else float(est.tail_bound)
        report["diverging"] = est.diverging
    return Output(report, ["l", "Phi_partial", "double"] if rows else None, rows)


def cmd_trajectory(args) -> Output:
    if args.rational is not None:
        if any(getattr(args, k) is not None for k in ("word", "sturmian", "parity_of")) or args.construct:
            raise InputError("--rational cannot be combined with a word source")
        z = as_rational(args.rational)
        pts = conjugacy.trajectory(z, args.steps)
        rows = [(i, x, float(x), x.numerator & 1) for i, x in enumerate(pts)]
        header = ["step", "exact", "double", "parity"]
        report = {"start": z, "steps": args.steps, "points": pts}
    else:
        kind, stream, _ = _source(args)
        x = as_rational(args.x)
        pts = conjugacy.pseudo_trajectory(x, stream, args.steps)
        digits = stream.prefix_bytes(args.steps)
        rows = [(i, p, float(p), digits[i] if i < args.steps else "") for i, p in enumerate(pts)]
        header = ["step", "exact", "double", "digit"]
        report = {"source": kind, "x": x, "steps": args.steps, "points": pts}
    return Output(report, header, rows)


def cmd_construct(args) -> Output:
    cfg = _config(args, top=args.top)
    stream, log = construct_word(cfg)
    word = log.word()
    factors = [{"n": r.n, "f": r.f, "m": r.m, "L": r.L, "H": r.H, "Z": r.Z} for r in log]
    report: dict[str, Any] = {"alpha": cfg.oracle.label, "family": cfg.family.name, "shape": cfg.shape.value,
                              "top": args.top, "length": word.length, "word": to_runlength(word),
                              "distances": log.distances(), "factors": factors}
    if args.analyze:
        s = analysis.slope_stats(stream, args.window)
        report["slope"] = {"verdict": s.verdict.value, "liminf_proxy": float(s.liminf_proxy),
                           "limsup_proxy": float(s.limsup_proxy), "decaying": s.decaying}
        cands = {"sixths": analysis.SIXTHS_LIMIT_POINTS,
                 "quarters": analysis.QUARTERS_LIMIT_POINTS}.get(cfg.family.name)
        if s.verdict is analysis.SlopeVerdict.Straddles:
            r = analysis.ratio_criterion(stream, args.window, candidates=cands)
            report["ratio"] = {"verdict": r.verdict.value, "ells": list(r.ells[:50]), "count": len(r.ells),
                               "tail_max": None if r.tail_max is None else float(r.tail_max),
                               "limit_points": list(r.limit_points),
                               "max_offset": None if r.max_offset is None else float(r.max_offset),
                               "histogram": {fmt_double(k): v for k, v in r.histogram.items()}}
    rows = [(r.n, r.f, r.m, r.L, r.H, r.Z, d) for r, d in zip(log, log.distances())]
    return Output(report, ["n", "f", "m", "L", "H", "Z", "D"], rows)


def _index_list(args, stream_alpha: AlphaOracle | None) -> list[int]:
    spec = args.L
    if spec in ("odd-convergents", "even-convergents"):
        if stream_alpha is None:
            raise InputError("convergent index sequences need a --sturmian source")
        cf = convergents(stream_alpha, args.max_k)
        want = 1 if spec == "odd-convergents" else 0
        return [cf.q(k) for k in range(1, len(cf)) if k % 2 == want]
    try:
        out = [int(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"index list must be comma-separated integers, got {spec!r}")
    if not out or any(x < 1 for x in out):
        raise InputError("index list must hold positive integers")
    return out


def cmd_3adic(args) -> Output:
    if args.table1:
        kind, stream = "sturmian", sturmian_stream(AlphaOracle.log_ratio_23())
        if any(getattr(args, k) is not None for k in ("word", "sturmian", "parity_of")):
            kind, stream, _ = _source(args)
        rows = [padic.table1_row(stream, l) for l in range(1, args.table1 + 1)]
        header = ["l", "prefix", "T_u(0)", "C(u)", "residues", "digits"]
        report = {"source": kind, "rows": [dict(zip(header, r.cells())) for r in rows]}
        out = Output(report, header, [r.cells() for r in rows])
        return out
    kind, stream, _ = _source(args)
    alpha = AlphaOracle.parse(args.sturmian) if kind == "sturmian" else None
    idx = _index_list(args, alpha)
    if len(idx) == 1:
        # one index: its own chain, nothing to stabilize against
        u = stream.prefix(idx[0])
        res = padic.cycle_residues_3(u, min(u.height, args.depth))
        digits = padic.digits_from_residues(res, 3)
        report = {"source": kind, "indices": idx, "digits": "".join(map(str, digits)), "residues": res}
        return Output(report, ["n", "modulus", "residue"], [(n, 3 ** n, r) for n, r in enumerate(res, 1)])
    e = padic.output_3adic(stream, idx, args.depth)
    report = {"source": kind, "indices": idx, "digits": str(e), "residues": e.residue_values()}
    return Output(report, ["n", "modulus", "residue"], e.to_csv_rows())


def _sweep_point(task: tuple[str, str, str, str, int, str]) -> tuple[str, bool, float, int, bool]:
    spec, family, shape, m_rule, depth, eps = task
    alpha = AlphaOracle.parse(spec)
    rule = {"auto": None, "index": True, "zeros": False}[m_rule]
    stream, _ = construct_word(ConstructorConfig(alpha, ZeroRunFamily.parse(family), Shape(shape), 0, rule))
    est = conjugacy.phi_limit_estimate(stream, Fraction(eps), max_depth=depth)
    return spec, alpha.is_rational, float(est.value), est.depth, est.diverging


def _grid(args) -> list[str]:
    specs: list[str] = []
    if args.grid:
        try:
            lo, hi, count = args.grid.split(":")
            lo, hi, n = as_rational(lo), as_rational(hi), int(count)
        except ValueError:
            raise InputError("--grid must read LO:HI:COUNT")
        if n < 0:
            raise InputError("grid count must be non-negative")
        specs += [format_rational(lo + (hi - lo) * i / (n - 1)) for i in range(n)] if n > 1 else (
            [format_rational(lo)] if n == 1 else [])
    if args.alphas:
        specs += [s.strip() for s in args.alphas.split(",") if s.strip()]
    lower = AlphaOracle.log_ratio_23()
    for s in specs:
        a = AlphaOracle.parse(s)
        if not (oracle_less_than(lower, a) and oracle_less_than(a, AlphaOracle.exact(1))):
            raise InputError(f"alpha {s} is outside (ln2/ln3, 1)")
    return specs


def cmd_sweep_alpha(args) -> Output:
    specs = _grid(args)
    tasks = [(s, args.family, args.shape, args.m_rule, args.depth, args.eps) for s in specs]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    header = ["alpha", "rational", "estimate", "depth", "diverging"]
    report = {"family": args.family, "shape": args.shape, "depth": args.depth,
              "rows": [dict(zip(header, r)) for r in rows]}
    return Output(report, header, [(s, int(r), v, d, int(dv)) for s, r, v, d, dv in rows])


def cmd_stats(args) -> Output:
    chosen = [k for k in ("means", "distribution", "sigma", "mu_bound", "cone") if getattr(args, k) is not None]
    if len(chosen) != 1:
        raise InputError("give exactly one of --means, --distribution, --sigma, --mu-bound, --cone")
    what = chosen[0]
    if what == "means":
        m = analysis.means(args.means)
        return Output({"count": m.count, "arithmetic": m.arithmetic, "geometric": m.geometric,
                       "arithmetic_target": float(analysis.mean_interval().mid),
                       "geometric_target": 2 ** 0.5 / 6})
    if what == "distribution":
        a, b, m = args.distribution
        try:
            count = int(m)
        except ValueError:
            raise InputError(f"term count must be an integer, got {m!r}")
        if count < 1:
            raise InputError("term count must be positive")
        d = analysis.distribution_check(count, as_rational(a), as_rational(b))
        return Output({"count": d.count, "low": d.low, "high": d.high, "frequency": d.frequency,
                       "theoretical": d.theoretical})
    if what == "sigma":
        s = analysis.sigma_perm(args.sigma)
        return Output({"k": s.k, "sigma": list(s.sigma), "reading_order": list(s.reading_order)},
                      ["i", "sigma"], list(enumerate(s.sigma, 1)))
    if what == "mu_bound":
        b = analysis.christoffel_mu_bound(args.mu_bound)
        return Output({"k": b.k, "p": b.p, "deviation": float(b.deviation.mid), "band_low": b.band[0],
                       "band_high": b.band[1], "holds": b.holds})
    c = analysis.cone_limits(as_rational(args.x), args.cone)
    lo, hi = analysis.cone_targets()
    rows = sorted(c.odd + c.even)
    return Output({"x": c.x, "odd_target": float(lo.mid), "even_target": float(hi.mid),
                   "odd": [[k, q, float(r)] for k, q, r in c.odd],
                   "even": [[k, q, float(r)] for k, q, r in c.even]},
                  ["k", "q", "ratio_exact", "ratio"], [(k, q, r, float(r)) for k, q, r in rows])


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conjlab", description="Exact experiments with the 3x+1 conjugacy map.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=["json", "csv", "plain"], default="json")
        p.add_argument("--output", "-o", help="write to this file instead of stdout")

    p = sub.add_parser("phi", help="Phi of a prefix, partial sums, 2-adic digits, limit estimate")
    _add_source(p)
    p.add_argument("--depth", type=_non_negative, help="prefix length (default: word length, or 64)")
    p.add_argument("--partials", action="store_true", help="list Phi of every prefix")
    p.add_argument("--padic2", type=_positive, metavar="N", help="first N digits of Phi(v) in Z_2")
    p.add_argument("--estimate", metavar="EPS", help="estimate Phi_R(v) with next-term threshold EPS")
    p.add_argument("--slope-floor", metavar="R", help="certify the estimate assuming h/l >= R on the tail")
    p.add_argument("--max-depth", type=_positive, default=4096)
    common(p)
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("trajectory", help="trajectory of a rational or pseudo-trajectory over a word")
    p.add_argument("--rational", help="start value with odd denominator")
    _add_source(p)
    p.add_argument("--x", default="0", help="start value for a pseudo-trajectory over a word source")
    p.add_argument("--steps", type=_non_negative, default=20)
    common(p)
    p.set_defaults(func=cmd_trajectory, format_default="csv")

    p = sub.add_parser("construct", help="build a word from zero-run lengths and a target slope")
    _add_constructor(p)
    p.add_argument("--top", type=_non_negative, default=20, help="number of factors")
    p.add_argument("--analyze", action="store_true", help="add slope and ratio reports")
    p.add_argument("--window", type=_positive, default=20000, help="window for --analyze")
    common(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("3adic", help="3-adic output along an index sequence, or the prefix table")
    _add_source(p)
    p.add_argument("--L", default="odd-convergents",
                   help="odd-convergents, even-convergents or a comma-separated index list")
    p.add_argument("--max-k", type=_positive, default=16, help="convergents to consider")
    p.add_argument("--depth", type=_positive, default=30, help="digits wanted")
    p.add_argument("--table1", type=_positive, metavar="LMAX", help="rows l = 1..LMAX (default word 1c_{ln2/ln3})")
    common(p)
    p.set_defaults(func=cmd_3adic)

    p = sub.add_parser("sweep-alpha", help="Phi_R estimates of constructed words over a grid of slopes")
    p.add_argument("--grid", help="LO:HI:COUNT, rational endpoints inside (ln2/ln3, 1)")
    p.add_argument("--alphas", help="comma-separated slope specs, e.g. ln2,7/10")
    _add_constructor(p, with_alpha=False)
    p.add_argument("--depth", type=_positive, default=2000)
    p.add_argument("--eps", default="1/100000000")
    p.add_argument("--jobs", type=_positive, default=1)
    common(p)
    p.set_defaults(func=cmd_sweep_alpha, format_default="csv")

    p = sub.add_parser("stats", help="term statistics, permutations, deviation bands, cone limits")
    p.add_argument("--means", type=_positive, metavar="M")
    p.add_argument("--distribution", nargs=3, metavar=("A", "B", "M"))
    p.add_argument("--sigma", type=int, metavar="K")
    p.add_argument("--mu-bound", type=int, metavar="K")
    p.add_argument("--cone", type=_positive, metavar="K")
    p.add_argument("--x", default="0", help="start value for --cone")
    common(p)
    p.set_defaults(func=cmd_stats)
    return parser


_NEGATIVE = re.compile(r"^-\d")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Rewrite ``--flag -65/27`` as ``--flag=-65/27`` so argparse does not
    read the value as an option."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a.startswith("--") and "=" not in a and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _explicit(argv: Sequence[str], flag: str) -> bool:
    return any(a == flag or a.startswith(flag + "=") for a in argv)


def main(argv: Sequence[str] | None = None) -> int:
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors are invalid input here
        return 3 if exc.code else 0
    if not _explicit(argv, "--format") and hasattr(args, "format_default"):
        args.format = args.format_default
    try:
        text = args.func(args).render(args.format)
    except ConjlabError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return exc.exit_code
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
