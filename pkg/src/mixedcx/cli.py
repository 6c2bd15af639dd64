"""Command line: presentation files, named scenarios, generic homology, Witt checks.

Presentation file grammar (one statement per line, '#' starts a comment)::

    name = C2
    base = Q[x]                  # Q or Q[x]
    kind = free                  # free or commutative
    gen y1 degree=1 weight=1
    gen y2 degree=3 weight=2
    relation t^2 = 0             # nilpotency of a generator
    d y1 = x
    d y2 = y1*y1
    curvature = -x*t

Exit codes: 0 all checks pass, 1 mathematical mismatch, 2 usage or parse
error, 3 resource limit.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from . import witt as W
from .conventions import conventions_hash, conventions_text
from .dgcore import (COMM, FREE, DgPresentation, Generator, PresentationError,
                     validate_presentation)
from .exactalg import LIMIT_ENV, QQ, QX, ComplexError, ResourceLimitError, homology
from .hochschild import (TruncationPolicy, hochschild_mixed, hochschild_second_kind,
                         homology_with_u_action, negative_cyclic)
from .scenarios import (CATALOG, ResultTable, Row, UnknownScenario, UnsafeParameters,
                        _rows_from_report, _trust, check_safe, run_scenario)

SCHEMA = "mixedcx.result/1"
CSV_HEADER = ["degree", "rank", "invariant_factors", "u_action", "trusted"]
EXIT_PASS, EXIT_MISMATCH, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


@dataclass
class ParseError(ValueError):
    line: int
    column: int
    message: str

    def __str__(self):
        return f"line {self.line}, column {self.column}: {self.message}"


_KINDS = {"free": FREE, "commutative": COMM, "comm": COMM}
_BASES = {"Q": QQ, "Q[x]": QX}
_GEN = re.compile(r"gen\s+([A-Za-z_]\w*)(.*)$")
_ATTR = re.compile(r"\s*(\w+)\s*=\s*(-?\d+)")
_REL = re.compile(r"relation\s+([A-Za-z_]\w*)\s*\^\s*(\d+)\s*=\s*0\s*$")
_DIFF = re.compile(r"d\s+([A-Za-z_]\w*)\s*=(.*)$")
_KV = re.compile(r"(name|base|kind|curvature)\s*=(.*)$")


def parse_presentation(text: str) -> DgPresentation:
    """Parse the line format above into a validated presentation."""
    base, kind, name = QX, COMM, ""
    gens: List[dict] = []
    diff: Dict[str, str] = {}
    curvature = None
    where: Dict[str, tuple] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        body = line.lstrip()
        if not body:
            continue
        col = len(line) - len(body) + 1
        if body.startswith("gen ") or body == "gen":
            m = _GEN.match(body)
            if not m:
                raise ParseError(ln, col, "expected 'gen NAME degree=D [weight=W]'")
            attrs, rest, pos = {}, m.group(2), m.start(2)
            while rest.strip():
                a = _ATTR.match(rest)
                if not a or a.group(1) not in ("degree", "weight"):
                    raise ParseError(ln, col + pos + len(rest) - len(rest.lstrip()),
                                     f"bad generator attribute {rest.strip()!r}")
                attrs[a.group(1)] = int(a.group(2))
                pos += a.end()
                rest = rest[a.end():]
            if "degree" not in attrs:
                raise ParseError(ln, col, f"generator {m.group(1)!r} has no degree")
            gens.append({"name": m.group(1), **attrs})
            where[m.group(1)] = (ln, col)
            continue
        if body.startswith("relation"):
            m = _REL.match(body)
            if not m:
                raise ParseError(ln, col, "expected 'relation NAME^N = 0'")
            g = next((g for g in gens if g["name"] == m.group(1)), None)
            if g is None:
                raise ParseError(ln, col + m.start(1), f"relation on undeclared generator {m.group(1)!r}")
            g["nilpotency"] = int(m.group(2))
            continue
        m = _KV.match(body)
        if m:
            key, val = m.group(1), m.group(2).strip()
            vcol = col + m.start(2) + len(m.group(2)) - len(m.group(2).lstrip())
            if key == "name":
                name = val
            elif key == "base":
                if val not in _BASES:
                    raise ParseError(ln, vcol, f"base must be Q or Q[x], not {val!r}")
                base = _BASES[val]
            elif key == "kind":
                if val not in _KINDS:
                    raise ParseError(ln, vcol, f"kind must be free or commutative, not {val!r}")
                kind = _KINDS[val]
            else:
                curvature = val
                where["curvature"] = (ln, vcol)
            continue
        m = _DIFF.match(body)
        if m:
            diff[m.group(1)] = m.group(2).strip()
            where["d " + m.group(1)] = (ln, col + m.start(2))
            continue
        raise ParseError(ln, col, f"unrecognised statement {body!r}")
    try:
        generators = [Generator(g["name"], g["degree"], g.get("weight", 0), g.get("nilpotency"))
                      for g in gens]
        P = DgPresentation(base, kind, generators, {}, None, name)
    except PresentationError as e:
        raise ParseError(1, 1, str(e)) from None
    for key, expr in [("d " + k, v) for k, v in diff.items()] + (
            [("curvature", curvature)] if curvature is not None else []):
        ln, col = where[key]
        try:
            P.element(expr)
        except PresentationError as e:
            raise ParseError(ln, col, str(e)) from None
    for g in diff:
        if g not in P.index:
            ln, col = where["d " + g]
            raise ParseError(ln, col, f"differential for undeclared generator {g!r}")
    P = DgPresentation(base, kind, generators, diff, curvature, name)
    rep = validate_presentation(P)
    if not rep.ok:
        key = "curvature" if rep.failing == "curvature" else "d " + str(rep.failing)
        ln, col = where.get(key, where.get(rep.failing, (1, 1)))
        raise ParseError(ln, col, f"invalid presentation: {rep.message}")
    return P


# ------------------------------------------------------------------ output


def _row_dict(r: Row) -> dict:
    return {"degree": r.degree, "rank": r.rank, "invariant_factors": list(r.invariant_factors),
            "u_action": r.u_action, "trusted": r.trusted}


def table_to_dict(t: ResultTable, timing: bool = False) -> dict:
    out = {
        "schema": SCHEMA,
        "scenario": t.scenario,
        "parameters": {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(t.params.items())},
        "expected": t.expected,
        "conventions": t.conventions,
        "trust_window": list(t.trust_window) if t.trust_window else None,
        "passed": t.passed,
        "checks": [{"name": c.name, "ok": c.ok, "detail": c.detail} for c in t.checks],
        "rows": [_row_dict(r) for r in t.rows],
    }
    if timing:
        out["seconds"] = round(t.seconds, 3)
    return out


def table_from_dict(d: dict) -> ResultTable:
    if d.get("schema") != SCHEMA:
        raise ValueError(f"unknown schema {d.get('schema')!r}")
    t = ResultTable(d["scenario"], d["parameters"], d["expected"])
    t.rows = [Row(r["degree"], r["rank"], r["invariant_factors"], r["u_action"], r["trusted"])
              for r in d["rows"]]
    from .scenarios import Check
    t.checks = [Check(c["name"], c["ok"], c["detail"]) for c in d["checks"]]
    t.trust_window = tuple(d["trust_window"]) if d["trust_window"] else None
    return t


def emit(t: ResultTable, fmt: str = "text", timing: bool = False) -> bytes:
    """Serialize a table; identical tables give identical bytes."""
    if fmt == "json":
        return (json.dumps(table_to_dict(t, timing), indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in t.rows:
            w.writerow([r.degree, r.rank, " ".join(r.invariant_factors), r.u_action,
                        "true" if r.trusted else "false"])
        return buf.getvalue().encode()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"scenario   {t.scenario}",
             "parameters " + ", ".join(f"{k}={v}" for k, v in sorted(t.params.items())),
             f"expected   {t.expected}",
             f"trusted    {t.trust_window}",
             f"conventions {t.conventions}"]
    if timing:
        lines.append(f"seconds    {t.seconds:.3f}")
    lines.append("")
    lines.append(f"{'degree':>6} {'rank':>5}  {'factors':<16} {'u-action':<14} trusted")
    for r in t.rows:
        lines.append(f"{r.degree:>6} {r.rank:>5}  {' '.join(r.invariant_factors) or '-':<16} "
                     f"{r.u_action or '-':<14} {'yes' if r.trusted else 'no'}")
    lines.append("")
    for c in t.checks:
        lines.append(f"[{'pass' if c.ok else 'FAIL'}] {c.name}" + (f"  ({c.detail})" if c.detail else ""))
    lines.append("PASS" if t.passed else "FAIL")
    return ("\n".join(lines) + "\n").encode()


def golden_rows(t: ResultTable) -> List[dict]:
    return [_row_dict(r) for r in t.rows if r.trusted]


def compare_golden(t: ResultTable, path: str) -> Optional[str]:
    """None when the trusted rows equal the golden file's rows."""
    with open(path) as fh:
        want = json.load(fh)
    got = golden_rows(t)
    if got == want.get("rows"):
        return None
    return f"trusted rows differ from {path}"


def write_golden(t: ResultTable, path: str):
    d = table_to_dict(t)
    d["rows"] = golden_rows(t)
    for k in ("checks", "passed"):
        d.pop(k)
    with open(path, "w") as fh:
        fh.write(json.dumps(d, indent=2) + "\n")


# ---------------------------------------------------------------- commands


def _window(s: str):
    m = re.fullmatch(r"\s*(-?\d+)\s*:\s*(-?\d+)\s*", s)
    if not m:
        raise argparse.ArgumentTypeError(f"window must look like a:b, got {s!r}")
    a, b = int(m.group(1)), int(m.group(2))
    if a > b:
        raise argparse.ArgumentTypeError(f"empty window {s!r}")
    return (a, b)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixedcx", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--format", choices=("text", "json", "csv"), default="text")
        sp.add_argument("--limit-nonzeros", type=int, help="abort elimination beyond this many nonzeros")
        sp.add_argument("--timing", action="store_true", help="include wall time in the output")

    v = sub.add_parser("verify", help="run a named scenario")
    v.add_argument("scenario", choices=sorted(CATALOG))
    v.add_argument("--n", type=int)
    v.add_argument("--window", type=_window)
    v.add_argument("--u-order", type=int)
    v.add_argument("--trust-margin", type=int)
    v.add_argument("--weight-bound", type=int)
    v.add_argument("--length", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--golden", help="compare trusted rows with a golden json file")
    v.add_argument("--write-golden", help="store trusted rows as a golden json file")
    v.add_argument("--allow-unsafe", action="store_true", help="run outside the safe ranges")
    common(v)

    h = sub.add_parser("homology", help="Hochschild or negative cyclic homology of a presentation file")
    h.add_argument("file")
    h.add_argument("--window", type=_window, default=(0, 6))
    h.add_argument("--u-order", type=int, help="negative cyclic homology mod u^N instead of HH")
    h.add_argument("--trust-margin", type=int, default=2)
    h.add_argument("--weight-bound", type=int)
    h.add_argument("--reduced", action="store_true", help="use the reduced (normalized) complex")
    common(h)

    w = sub.add_parser("witt", help="rationality of a series 1 + a1 t + ... over Q")
    w.add_argument("coeffs", help="comma separated a1,a2,...")
    w.add_argument("--degree-bound", type=int, default=2)
    common(w)

    sub.add_parser("scenarios", help="list the scenario catalog")
    sub.add_parser("conventions", help="print the sign convention table")
    return p


def _cmd_verify(a) -> ResultTable:
    params = {"n": a.n, "window": a.window, "u_order": a.u_order, "trust_margin": a.trust_margin,
              "weight_bound": a.weight_bound, "length": a.length, "seed": a.seed}
    params = {k: v for k, v in params.items() if v is not None}
    problems = check_safe(params)
    if problems:
        if not a.allow_unsafe:
            raise UnsafeParameters("; ".join(problems) + " (use --allow-unsafe to override)")
        print("warning: " + "; ".join(problems), file=sys.stderr)
    return run_scenario(a.scenario, params, allow_unsafe=True)


def _cmd_homology(a) -> ResultTable:
    with open(a.file, encoding="utf-8") as fh:
        P = parse_presentation(fh.read())
    curved = not P.curvature.is_zero()
    lo, hi = a.window
    params = {"file": os.path.basename(a.file), "window": [lo, hi]}
    if a.u_order:
        params["u_order"] = a.u_order
        N = a.u_order
        inner = TruncationPolicy((lo, hi + 2 * N), N, a.trust_margin, a.weight_bound)
    else:
        inner = TruncationPolicy((lo, hi), 1, a.trust_margin, a.weight_bound)
    M = (hochschild_second_kind(P, inner) if curved
         else hochschild_mixed(P, inner, reduced_unit=a.reduced))
    errs = M.check_identities()
    if a.u_order:
        CC = negative_cyclic(M, TruncationPolicy((lo, hi), a.u_order, a.trust_margin))
        rep = homology_with_u_action(CC)
        what = f"HC^- mod u^{a.u_order}"
    else:
        rep = homology(M.complex)
        what = "HH (second kind)" if curved else "HH"
    t = ResultTable("homology", params, f"{what} of {P.name or params['file']}")
    t.rows = _rows_from_report(rep)
    t.trust_window = _trust(rep)
    t.check("b^2 = B^2 = bB + Bb = 0", not errs, "; ".join(errs))
    return t.sort()


def _cmd_witt(a) -> ResultTable:
    from fractions import Fraction
    from gmpy2 import mpq
    cs = [mpq(Fraction(c.strip())) for c in a.coeffs.split(",") if c.strip()]
    w = W.WittVector(W.RATIONALS, tuple(cs))
    rep = W.is_rational(w, a.degree_bound)
    t = ResultTable("witt", {"coeffs": a.coeffs, "degree_bound": a.degree_bound},
                    f"rational of degree <= {a.degree_bound}")
    for k, g in enumerate(W.ghost(w), 1):
        t.rows.append(Row(k, 1, [str(g)], "", True))
    detail = ""
    if rep.rational:
        detail = (f"numerator {[str(c) for c in rep.numerator]}, "
                  f"denominator {[str(c) for c in rep.denominator]}")
    t.check("rational", rep.rational and W.verify_certificate(w, rep), detail)
    return t


def _run_command(a) -> ResultTable:
    if a.command == "verify":
        return _cmd_verify(a)
    if a.command == "homology":
        return _cmd_homology(a)
    return _cmd_witt(a)


def _join_negative_windows(argv: List[str]) -> List[str]:
    """Let '--window -8:0' through argparse, which would read -8:0 as an option."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--window" and i + 1 < len(argv):
            out.append("--window=" + argv[i + 1])
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(_join_negative_windows(sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    if a.command == "scenarios":
        for name, (fn, params) in sorted(CATALOG.items()):
            print(f"{name:<20} {params}")
        return EXIT_PASS
    if a.command == "conventions":
        sys.stdout.write(conventions_text())
        print(f"hash: {conventions_hash()}")
        return EXIT_PASS
    saved = os.environ.get(LIMIT_ENV)
    if a.limit_nonzeros is not None:
        os.environ[LIMIT_ENV] = str(a.limit_nonzeros)
    try:
        t = _run_command(a)
    except ResourceLimitError as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ParseError, UnsafeParameters, UnknownScenario, OSError, PresentationError,
            ComplexError, W.PrecisionError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if saved is None:
            os.environ.pop(LIMIT_ENV, None)
        else:
            os.environ[LIMIT_ENV] = saved
    status = EXIT_PASS if t.passed else EXIT_MISMATCH
    if getattr(a, "golden", None):
        msg = compare_golden(t, a.golden)
        t.check("golden file", msg is None, msg or a.golden)
        status = EXIT_PASS if t.passed else EXIT_MISMATCH
    if getattr(a, "write_golden", None):
        write_golden(t, a.write_golden)
    sys.stdout.buffer.write(emit(t, a.format, a.timing))
    sys.stdout.flush()
    return status


if __name__ == "__main__":
    sys.exit(main())
