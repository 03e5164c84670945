"""Batch front end: problem specs in JSON, expansions and tables out.

Pipeline per spec: solve the critical-point system, classify the points,
build the local frame at the chosen minimal point, expand (nondegenerate or
degenerate route), evaluate against the exact coefficient oracle, and emit a
paper-style CSV table plus a machine-readable JSON result.

Exit codes: 2 no valid critical point, 3 minimality unknown without the
override flag, 4 degenerate Hessian in more than two variables; anything else
malformed exits 1.  Diagnostics go to stderr as JSON.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp, mpc, mpf

from . import __version__
from .expansion import (
    DegenerateHessianError,
    combine_expansions,
    expand_degenerate,
    expand_smooth,
    expand_univariate,
)
from .geometry import (
    Direction,
    GeometryError,
    build_report,
    solve_critical,
)
from .localframe import (
    FrameError,
    build_frame,
    degenerate_phase_order,
    smooth_phase_order,
    vanishing_order,
)
from .oracle import decimal_str, maclaurin_table
from .series import DEFAULT_BITS, Precision, SeriesError, SparsePoly, workprec

PRECISION_ENV = "SMOOTHASYM_PRECISION"

EXIT_NO_CRITICAL = 2
EXIT_MINIMALITY_UNKNOWN = 3
EXIT_DEGENERATE_HIGH_DIM = 4


class PipelineExit(Exception):
    def __init__(self, code, message, **details):
        super().__init__(message)
        self.code = code
        self.diagnostic = {"error": message, **details}


def complex_to_json(z, digits=None):
    z = mpc(z)
    digits = digits or int(mp.prec / 3.32) + 2
    return {"re": mp.nstr(z.real, digits), "im": mp.nstr(z.imag, digits)}


def format_value(z, digits=10):
    """Decimal string; collapses to the real part when imaginary dust only."""
    z = mpc(z)
    if abs(z.imag) <= mpf("1e-9") * max(abs(z.real), mpf(1e-30)):
        return mp.nstr(z.real, digits)
    return f"{mp.nstr(z.real, digits)}{'+' if z.imag >= 0 else ''}{mp.nstr(z.imag, digits)}j"


@dataclass
class ProblemSpec:
    """One expansion request: F = G/H^p along a direction."""

    variables: list
    G_num: SparsePoly
    H: SparsePoly
    p: int
    alpha: Direction
    N: int
    n_values: list
    G_den: SparsePoly = None
    seeds: list = None
    assume_strictly_minimal: bool = False
    force_degenerate: bool = False
    precision: Precision = Precision()

    def __post_init__(self):
        d = len(self.variables)
        if self.H.nvars != d or self.G_num.nvars != d:
            raise SeriesError("polynomial arity does not match the variable list")
        if self.G_den is not None and self.G_den.nvars != d:
            raise SeriesError("denominator arity does not match the variable list")
        if self.p < 1:
            raise SeriesError("p must be a positive integer")
        if self.N < 1:
            raise SeriesError("N must be a positive integer")
        if self.alpha.d != d:
            raise SeriesError("direction length does not match the variable list")

    @property
    def d(self):
        return len(self.variables)

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        variables = list(obj["variables"])
        d = len(variables)
        G = obj["G"]
        if isinstance(G, dict) and "numer" in G:
            G_num = SparsePoly.from_json(G["numer"], nvars=d)
            G_den = SparsePoly.from_json(G["denom"], nvars=d) if G.get("denom") else None
        else:
            G_num = SparsePoly.from_json(G, nvars=d)
            G_den = None
        H = SparsePoly.from_json(obj["H"], nvars=d)
        overrides = obj.get("overrides", {})
        seeds = None
        if obj.get("seeds"):
            seeds = [
                [_parse_complex(z) for z in point] for point in obj["seeds"]
            ]
        bits = int(obj.get("precision_bits", _default_bits()))
        return cls(
            variables=variables,
            G_num=G_num,
            G_den=G_den,
            H=H,
            p=int(obj.get("p", 1)),
            alpha=Direction(tuple(Fraction(a) for a in obj["alpha"])),
            N=int(obj.get("N", 2)),
            n_values=[int(n) for n in obj.get("n_values", [1, 2, 4, 8, 16])],
            seeds=seeds,
            assume_strictly_minimal=bool(overrides.get("assume_strictly_minimal", False)),
            force_degenerate=bool(overrides.get("force_degenerate", False)),
            precision=Precision(bits),
        )


def _parse_complex(z):
    if isinstance(z, (list, tuple)):
        re, im = z
    else:
        re, im = z, 0
    re = Fraction(re) if isinstance(re, str) else re
    im = Fraction(im) if isinstance(im, str) else im
    return mpc(mpf(re.numerator) / re.denominator if isinstance(re, Fraction) else re,
               mpf(im.numerator) / im.denominator if isinstance(im, Fraction) else im)


def _default_bits():
    env = os.environ.get(PRECISION_ENV)
    return int(env) if env else DEFAULT_BITS


def provenance(spec):
    return {
        "tool": f"smoothasym {__version__}",
        "precision_bits": spec.precision.bits,
        "overrides": {
            "assume_strictly_minimal": spec.assume_strictly_minimal,
            "force_degenerate": spec.force_degenerate,
        },
    }


# -- point selection -----------------------------------------------------------


def analyze_critical_points(spec):
    """Solve the system and classify every solution; raises on empty."""
    if not spec.H.constant_term():
        raise PipelineExit(EXIT_NO_CRITICAL, "origin on variety: H(0) = 0")
    if spec.G_den is not None and not spec.G_den.constant_term():
        raise PipelineExit(1, "G denominator vanishes at the origin")
    try:
        points, iso = solve_critical(spec.H, spec.alpha, seeds=spec.seeds)
    except GeometryError as exc:
        raise PipelineExit(EXIT_NO_CRITICAL, f"critical solve failed: {exc}")
    if not points:
        raise PipelineExit(
            EXIT_NO_CRITICAL,
            "no critical point converged; supply seeds for more than two variables",
        )
    reports = []
    for i, pt in enumerate(points):
        others = [q for q in points if q is not pt]
        rep = build_report(spec.H, spec.alpha, pt, other_points=others)
        rep.isolated = iso[i]
        reports.append(rep)
    return reports


def select_expansion_points(spec, reports):
    """The smooth minimal point(s) the expansion is taken around."""
    smooth = [r for r in reports if r.smooth]
    if not smooth:
        raise PipelineExit(EXIT_NO_CRITICAL, "no smooth critical point found")
    chosen = [r for r in smooth if r.minimality.kind == "strictly-minimal"]
    if not chosen and spec.assume_strictly_minimal:
        chosen = [r for r in smooth if r.minimality.kind != "not-minimal"]
    if not chosen:
        kinds = sorted({r.minimality.kind for r in smooth})
        raise PipelineExit(
            EXIT_MINIMALITY_UNKNOWN,
            "no strictly minimal critical point certified "
            f"(verdicts: {', '.join(kinds)}); pass --assume-strictly-minimal to "
            "override",
            verdicts=kinds,
        )
    # keep the group with the largest exponential base |c^(-alpha)|
    def base_mag(rep):
        out = mpf(1)
        for z, a in zip(rep.point, spec.alpha.alpha):
            out *= abs(z) ** (-mpf(a.numerator) / a.denominator)
        return out

    best = max(base_mag(r) for r in chosen)
    group = [r for r in chosen if base_mag(r) >= best * (1 - mpf("1e-9"))]
    return group


# -- expansion construction ------------------------------------------------------


def build_expansion(spec, reports=None):
    """Full route: reports -> frames -> expansion (single point or combined)."""
    if not spec.H.constant_term():
        raise PipelineExit(EXIT_NO_CRITICAL, "origin on variety: H(0) = 0")
    if spec.d == 1:
        return _build_expansion_univariate(spec), reports or []
    if reports is None:
        reports = analyze_critical_points(spec)
    group = select_expansion_points(spec, reports)
    expansions = []
    for rep in group:
        expansions.append(_expand_at_point(spec, rep))
    exp = combine_expansions(expansions)
    return exp, reports


def _expand_at_point(spec, report):
    order = smooth_phase_order(spec.N, spec.d)
    try:
        frame = build_frame(
            spec.G_num,
            spec.H,
            spec.p,
            spec.alpha,
            report.point,
            order,
            G_den=spec.G_den,
            reordering=report.reordering,
        )
    except FrameError as exc:
        raise PipelineExit(EXIT_NO_CRITICAL, f"frame construction failed: {exc}")
    if not spec.force_degenerate:
        try:
            return expand_smooth(frame, spec.N)
        except DegenerateHessianError:
            pass
    if spec.d != 2:
        raise PipelineExit(
            EXIT_DEGENERATE_HIGH_DIM,
            "degenerate phase Hessian in more than two variables is out of scope",
        )
    try:
        v = vanishing_order(frame.phase)
        needed = degenerate_phase_order(spec.N, v)
        if frame.order < needed:
            frame = build_frame(
                spec.G_num,
                spec.H,
                spec.p,
                spec.alpha,
                report.point,
                needed,
                G_den=spec.G_den,
                reordering=report.reordering,
            )
        return expand_degenerate(frame, spec.N, v=v)
    except FrameError as exc:
        raise PipelineExit(EXIT_NO_CRITICAL, f"degenerate route failed: {exc}")


def _build_expansion_univariate(spec):
    try:
        points, _ = solve_critical(spec.H, spec.alpha)
    except GeometryError as exc:
        raise PipelineExit(EXIT_NO_CRITICAL, f"critical solve failed: {exc}")
    if not points:
        raise PipelineExit(EXIT_NO_CRITICAL, "the variety has no points")
    rho = min(abs(p[0]) for p in points)
    ring = [p for p in points if abs(p[0]) <= rho * (1 + mpf("1e-9"))]
    expansions = []
    for (c,) in ring:
        try:
            expansions.append(
                expand_univariate(
                    spec.G_num, spec.H, spec.p, (c,), G_den=spec.G_den,
                    direction=spec.alpha,
                )
            )
        except Exception as exc:
            raise PipelineExit(EXIT_NO_CRITICAL, f"univariate expansion failed: {exc}")
    return combine_expansions(expansions)


# -- table assembly ---------------------------------------------------------------


def evaluation_rows(spec, expansion):
    """Paper-style rows: n, exact, one-term, N-term, signed relative errors.

    Relative error convention matches the published tables:
    ``(exact - approx) / exact``.
    """
    usable = [n for n in spec.n_values if spec.alpha.n_is_integral(n)]
    skipped = [n for n in spec.n_values if n not in usable]
    if not usable:
        raise PipelineExit(
            1,
            "no requested n gives integral coefficient indices for this direction",
            skipped=[int(n) for n in skipped],
        )
    bounds = tuple(
        max(spec.alpha.index_for(n)[j] for n in usable) for j in range(spec.d)
    )
    table = maclaurin_table(spec.G_num, spec.H, spec.p, bounds, G_den=spec.G_den)
    rows = []
    for n in usable:
        idx = spec.alpha.index_for(n)
        exact = table.coeff_at(idx)
        exact_mp = _rat_to_mpc(exact)
        approx1, _ = expansion.evaluate(n, terms=1)
        approxN, _ = expansion.evaluate(n)
        rel1 = (exact_mp - approx1) / exact_mp if exact_mp != 0 else mpc("nan")
        relN = (exact_mp - approxN) / exact_mp if exact_mp != 0 else mpc("nan")
        rows.append(
            {
                "n": n,
                "index": list(idx),
                "exact": exact,
                "approx_1": approx1,
                "approx_N": approxN,
                "rel_err_1": rel1,
                "rel_err_N": relN,
            }
        )
    return rows, skipped


def _rat_to_mpc(value):
    from .series import coef_to_mpc

    return coef_to_mpc(value)


def rows_to_csv(rows):
    lines = ["n,exact,approx_1,approx_N,rel_err_1,rel_err_N"]
    for row in rows:
        lines.append(
            ",".join(
                [
                    str(row["n"]),
                    decimal_str(row["exact"], 10),
                    format_value(row["approx_1"], 10),
                    format_value(row["approx_N"], 10),
                    format_value(row["rel_err_1"], 10),
                    format_value(row["rel_err_N"], 10),
                ]
            )
        )
    return "\n".join(lines) + "\n"


# -- the three commands ------------------------------------------------------------


def run_expand(spec):
    """expansion + oracle comparison; returns (result dict, csv text)."""
    with workprec(spec.precision.bits):
        expansion, reports = build_expansion(spec)
        rows, skipped = evaluation_rows(spec, expansion)
        result = {
            "provenance": provenance(spec),
            "critical_points": [r.to_json() for r in reports],
            "expansion": expansion.to_json(),
            "table": [
                {
                    "n": row["n"],
                    "index": row["index"],
                    "exact": decimal_str(row["exact"], 20),
                    "approx_1": format_value(row["approx_1"], 20),
                    "approx_N": format_value(row["approx_N"], 20),
                    "rel_err_1": format_value(row["rel_err_1"], 20),
                    "rel_err_N": format_value(row["rel_err_N"], 20),
                }
                for row in rows
            ],
        }
        if skipped:
            result["skipped_n"] = [int(n) for n in skipped]
        return result, rows_to_csv(rows)


def run_critical(spec):
    """Critical-point reports only."""
    with workprec(spec.precision.bits):
        if spec.d == 1:
            points, iso = solve_critical(spec.H, spec.alpha)
            if not points:
                raise PipelineExit(EXIT_NO_CRITICAL, "the variety has no points")
            reports = [
                build_report(spec.H, spec.alpha, pt,
                             other_points=[q for q in points if q is not pt])
                for pt in points
            ]
        else:
            reports = analyze_critical_points(spec)
        return {
            "provenance": provenance(spec),
            "critical_points": [r.to_json() for r in reports],
        }


def run_oracle(spec, digits=10):
    """Exact coefficients at the requested indices, as CSV rows."""
    with workprec(spec.precision.bits):
        usable = [n for n in spec.n_values if spec.alpha.n_is_integral(n)]
        if not usable:
            raise PipelineExit(1, "no requested n gives integral indices")
        bounds = tuple(
            max(spec.alpha.index_for(n)[j] for n in usable) for j in range(spec.d)
        )
        table = maclaurin_table(spec.G_num, spec.H, spec.p, bounds, G_den=spec.G_den)
        header = (
            [f"beta_{v}" for v in spec.variables] + ["exact_rational", "decimal"]
        )
        lines = [",".join(header)]
        for n in usable:
            idx = spec.alpha.index_for(n)
            val = table.coeff_at(idx)
            lines.append(
                ",".join([str(i) for i in idx] + [str(val), decimal_str(val, digits)])
            )
        return "\n".join(lines) + "\n"


# -- argument handling ---------------------------------------------------------------


def _apply_cli_overrides(spec_obj, args):
    if args.N is not None:
        spec_obj["N"] = args.N
    if args.n_values is not None:
        spec_obj["n_values"] = [int(x) for x in args.n_values.split(",") if x]
    if args.precision_bits is not None:
        spec_obj["precision_bits"] = args.precision_bits
    if args.assume_strictly_minimal:
        spec_obj.setdefault("overrides", {})["assume_strictly_minimal"] = True
    if args.seeds is not None:
        spec_obj["seeds"] = json.loads(args.seeds)
    return spec_obj


def _write_or_print(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="smoothasym",
        description="Asymptotics of Maclaurin coefficients of G/H^p at smooth "
        "minimal critical points, validated against an exact oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("expand", "full pipeline: critical points, expansion, oracle table"),
        ("critical", "critical-point reports only"),
        ("oracle", "exact coefficients at the requested indices"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--input", required=True, help="problem spec JSON file")
        sp.add_argument("--N", type=int, default=None, help="number of terms")
        sp.add_argument("--n-values", dest="n_values", default=None,
                        help="comma-separated evaluation indices")
        sp.add_argument("--precision-bits", dest="precision_bits", type=int,
                        default=None)
        sp.add_argument("--assume-strictly-minimal", action="store_true",
                        help="expand at an uncertified minimal point anyway")
        sp.add_argument("--seeds", default=None,
                        help="JSON list of seed points for the solver")
        sp.add_argument("--out-json", dest="out_json", default=None)
        sp.add_argument("--out-csv", dest="out_csv", default=None)
    args = parser.parse_args(argv)

    try:
        with open(args.input) as fh:
            spec_obj = json.load(fh)
        spec_obj = _apply_cli_overrides(spec_obj, args)
        spec = ProblemSpec.from_json(spec_obj)
        if args.command == "expand":
            result, csv_text = run_expand(spec)
            _write_or_print(json.dumps(result, indent=2, sort_keys=True) + "\n",
                            args.out_json)
            if args.out_csv:
                _write_or_print(csv_text, args.out_csv)
            else:
                sys.stdout.write(csv_text)
        elif args.command == "critical":
            result = run_critical(spec)
            _write_or_print(json.dumps(result, indent=2, sort_keys=True) + "\n",
                            args.out_json)
        else:
            csv_text = run_oracle(spec)
            _write_or_print(csv_text, args.out_csv)
        return 0
    except PipelineExit as exc:
        sys.stderr.write(json.dumps(exc.diagnostic, sort_keys=True) + "\n")
        return exc.code
    except (SeriesError, GeometryError, FrameError, ValueError, KeyError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc)}, sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
