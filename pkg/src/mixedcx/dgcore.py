"""Finitely presented (curved) dg algebras over Q or Q[x].

Two multiplication kinds are supported:

* ``"free"``: free associative algebra; monomials are words (tuples of
  generator indices).
* ``"commutative"``: graded-commutative polynomial algebra; monomials are
  non-decreasing tuples of generator indices, odd generators occur at most
  once, and reordering picks up the Koszul sign.

Generators may carry a nilpotency bound ``g^N = 0``.  The coefficient ``x``
of Q[x] is central and of degree 0; it is never a generator.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .exactalg import ONE, QQ, QX, ZERO, Poly, X

FREE = "free"
COMM = "commutative"

Monomial = Tuple[int, ...]


class PresentationError(ValueError):
    pass


class BasisNotFinite(PresentationError):
    pass


@dataclass(frozen=True)
class Generator:
    name: str
    degree: int
    weight: int = 0
    nilpotency: Optional[int] = None  # g^N = 0


class DgPresentation:
    """Generators, monomial relations, differential and curvature."""

    def __init__(self, base: str, kind: str, generators: Sequence[Generator],
                 differential: Optional[Dict[str, object]] = None,
                 curvature: object = None, name: str = ""):
        if base not in (QQ, QX):
            raise PresentationError(f"unknown base ring {base!r}")
        if kind not in (FREE, COMM):
            raise PresentationError(f"unknown multiplication kind {kind!r}")
        names = [g.name for g in generators]
        if len(set(names)) != len(names):
            raise PresentationError("generator names must be unique")
        if base == QX and "x" in names:
            raise PresentationError("'x' is the coefficient variable of Q[x], not a generator")
        self.base = base
        self.kind = kind
        self.gens: Tuple[Generator, ...] = tuple(generators)
        self.index = {g.name: i for i, g in enumerate(self.gens)}
        self.name = name
        self._d: Dict[int, Element] = {}
        for gname, expr in (differential or {}).items():
            if gname not in self.index:
                raise PresentationError(f"differential for unknown generator {gname!r}")
            self._d[self.index[gname]] = self.element(expr)
        self.curvature = self.element(curvature) if curvature is not None else self.zero()

    # ------------------------------------------------------------ elements

    def element(self, obj) -> "Element":
        if isinstance(obj, Element):
            if obj.P is not self:
                raise PresentationError("element belongs to another presentation")
            return obj
        if isinstance(obj, str):
            return parse_expression(self, obj)
        if isinstance(obj, dict):
            return Element(self, obj)
        return self.scalar(obj)

    def zero(self) -> "Element":
        return Element(self, {})

    def one(self) -> "Element":
        return Element(self, {(): ONE})

    def scalar(self, c) -> "Element":
        c = c if isinstance(c, Poly) else Poly.const(c)
        if self.base == QQ and not c.is_const():
            raise PresentationError("x is not a scalar over Q")
        return Element(self, {(): c})

    def gen(self, name: str) -> "Element":
        i = self.index[name]
        m = self.mono_mul((), (i,))
        return Element(self, {m[1]: ONE}) if m else self.zero()

    def mono_degree(self, m: Monomial) -> int:
        return sum(self.gens[i].degree for i in m)

    def mono_weight(self, m: Monomial) -> int:
        return sum(self.gens[i].weight for i in m)

    def mono_str(self, m: Monomial) -> str:
        if not m:
            return "1"
        out = []
        k = 0
        while k < len(m):
            j = k
            while j < len(m) and m[j] == m[k]:
                j += 1
            nm = self.gens[m[k]].name
            out.append(nm if j - k == 1 else f"{nm}^{j - k}")
            k = j
        return "*".join(out)

    def mono_mul(self, a: Monomial, b: Monomial) -> Optional[Tuple[int, Monomial]]:
        """Product of normal-form monomials: (sign, monomial) or None if zero."""
        if self.kind == FREE:
            w = a + b
            if not self._nil_ok_word(w, len(a)):
                return None
            return 1, w
        # graded-commutative merge with Koszul sign
        sign = 1
        odd_a = [i for i in a if self.gens[i].degree % 2]
        for j in b:
            if self.gens[j].degree % 2:
                # j passes every odd generator of a that sorts after it
                if sum(1 for i in odd_a if i > j) % 2:
                    sign = -sign
        w = tuple(sorted(a + b))
        for k in range(1, len(w)):
            if w[k] == w[k - 1] and self.gens[w[k]].degree % 2:
                return None
        if not self._nil_ok_sorted(w):
            return None
        return sign, w

    def _nil_ok_word(self, w, split):
        if not w:
            return True
        run = 1
        for k in range(1, len(w)):
            if w[k] == w[k - 1]:
                run += 1
            else:
                run = 1
            N = self.gens[w[k]].nilpotency
            if N is not None and run >= N:
                return False
        N = self.gens[w[0]].nilpotency
        return N is None or N > 1

    def _nil_ok_sorted(self, w):
        counts: Dict[int, int] = {}
        for i in w:
            counts[i] = counts.get(i, 0) + 1
        for i, c in counts.items():
            N = self.gens[i].nilpotency
            if N is not None and c >= N:
                return False
        return True

    # ---------------------------------------------------------- differential

    def d_gen(self, i: int) -> "Element":
        return self._d.get(i, self.zero())

    def differential(self, a: "Element") -> "Element":
        out: Dict[Monomial, Poly] = {}
        for m, c in a.terms.items():
            for mm, cc in self.d_monomial(m).items():
                _acc(out, mm, c * cc)
        return Element(self, out)

    def d_monomial(self, m: Monomial) -> Dict[Monomial, Poly]:
        cache = self.__dict__.setdefault("_dcache", {})
        if m in cache:
            return cache[m]
        out: Dict[Monomial, Poly] = {}
        sign_deg = 0
        for k, g in enumerate(m):
            dg = self._d.get(g)
            if dg is not None and dg.terms:
                left, right = m[:k], m[k + 1:]
                s = -1 if sign_deg % 2 else 1
                for dm, dc in dg.terms.items():
                    r1 = self.mono_mul(left, dm)
                    if r1 is None:
                        continue
                    r2 = self.mono_mul(r1[1], right)
                    if r2 is None:
                        continue
                    _acc(out, r2[1], dc * (s * r1[0] * r2[0]))
            sign_deg += self.gens[g].degree
        cache[m] = out
        return out

    def is_semi_free(self) -> bool:
        return all(g.nilpotency is None for g in self.gens)

    def __repr__(self):
        return f"DgPresentation({self.name or '?'}, base={self.base}, kind={self.kind}, " \
               f"gens={[g.name for g in self.gens]})"


def _acc(d: Dict, key, val: Poly):
    nv = d.get(key, ZERO) + val
    if nv.c:
        d[key] = nv
    elif key in d:
        del d[key]


class Element:
    """Linear combination of normal-form monomials with Poly coefficients."""

    __slots__ = ("P", "terms")

    def __init__(self, P: DgPresentation, terms: Dict[Monomial, object]):
        self.P = P
        clean = {}
        for m, c in terms.items():
            c = c if isinstance(c, Poly) else Poly.const(c)
            if c.c:
                clean[tuple(m)] = c
        self.terms: Dict[Monomial, Poly] = clean

    def _other(self, o) -> "Element":
        if isinstance(o, Element):
            if o.P is not self.P:
                raise PresentationError("presentation mismatch")
            return o
        return self.P.scalar(o)

    def __add__(self, o):
        o = self._other(o)
        out = dict(self.terms)
        for m, c in o.terms.items():
            _acc(out, m, c)
        return Element(self.P, out)

    __radd__ = __add__

    def __neg__(self):
        return Element(self.P, {m: -c for m, c in self.terms.items()})

    def __sub__(self, o):
        return self + (-self._other(o))

    def __rsub__(self, o):
        return self._other(o) - self

    def __mul__(self, o):
        if isinstance(o, (Poly, int, Fraction)) or type(o).__name__ == "mpq":
            o = o if isinstance(o, Poly) else Poly.const(o)
            return Element(self.P, {m: c * o for m, c in self.terms.items()})
        o = self._other(o)
        return multiply(self, o)

    def __rmul__(self, o):
        if isinstance(o, Element):
            return multiply(o, self)
        return self * o

    def __pow__(self, e: int):
        out = self.P.one()
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, o):
        if isinstance(o, Element):
            return self.P is o.P and self.terms == o.terms
        try:
            return self == self._other(o)
        except Exception:
            return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self):
        return not self.terms

    def degrees(self) -> set:
        return {self.P.mono_degree(m) for m in self.terms}

    def degree(self) -> int:
        ds = self.degrees()
        if len(ds) != 1:
            raise PresentationError(f"element {self} is not homogeneous")
        return ds.pop()

    def homogeneous_part(self, degree: int) -> "Element":
        return Element(self.P, {m: c for m, c in self.terms.items()
                                if self.P.mono_degree(m) == degree})

    def d(self) -> "Element":
        return self.P.differential(self)

    def __repr__(self):
        return f"Element({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=lambda m: (len(m), m)):
            c = self.terms[m]
            ms = self.P.mono_str(m)
            if ms == "1":
                parts.append(f"({c})")
            elif c == ONE:
                parts.append(ms)
            else:
                parts.append(f"({c})*{ms}")
        return " + ".join(parts)


def multiply(a: Element, b: Element) -> Element:
    if a.P is not b.P:
        raise PresentationError("presentation mismatch")
    P = a.P
    out: Dict[Monomial, Poly] = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            r = P.mono_mul(m1, m2)
            if r is None:
                continue
            _acc(out, r[1], c1 * c2 if r[0] > 0 else -(c1 * c2))
    return Element(P, out)


def differential(a: Element) -> Element:
    return a.P.differential(a)


# ------------------------------------------------------------------ parsing

_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(.))")


def parse_expression(P: DgPresentation, text: str) -> Element:
    """Parse sums of products such as ``-x*t``, ``y1*y2 + y2*y1``, ``3/2*t^2``."""
    toks = []
    for num, name, op in _TOKEN.findall(text):
        if num:
            toks.append(("num", num))
        elif name:
            toks.append(("name", name))
        elif op.strip():
            toks.append(("op", op))
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else (None, None)

    def take():
        nonlocal pos
        if pos >= len(toks):
            raise PresentationError(f"unexpected end of {text!r}")
        t = toks[pos]
        pos += 1
        return t

    def atom():
        kind, val = peek()
        if kind == "num":
            take()
            return P.scalar(Fraction(val))
        if kind == "name":
            take()
            if val == "x" and P.base == QX:
                base = P.scalar(X)
            elif val in P.index:
                base = P.gen(val)
            else:
                raise PresentationError(f"unknown symbol {val!r}")
            if peek() == ("op", "^"):
                take()
                k, e = take()
                if k != "num":
                    raise PresentationError("exponent must be a number")
                base = base ** int(e)
            return base
        if (kind, val) == ("op", "("):
            take()
            v = expr()
            if take() != ("op", ")"):
                raise PresentationError("missing ')'")
            if peek() == ("op", "^"):
                take()
                k, e = take()
                v = v ** int(e)
            return v
        raise PresentationError(f"unexpected token {val!r} in {text!r}")

    def term():
        v = atom()
        while peek() == ("op", "*"):
            take()
            v = v * atom()
        return v

    def expr():
        sign = 1
        if peek() in (("op", "-"), ("op", "+")):
            sign = -1 if take()[1] == "-" else 1
        v = term() * sign
        while peek() in (("op", "+"), ("op", "-")):
            s = take()[1]
            t = term()
            v = v + t if s == "+" else v - t
        return v

    if not toks:
        return P.zero()
    out = expr()
    if pos != len(toks):
        raise PresentationError(f"trailing input in {text!r}")
    return out


# ------------------------------------------------------------ validation


@dataclass
class ValidationReport:
    ok: bool
    failing: Optional[str] = None
    message: str = ""

    def __bool__(self):
        return self.ok


def validate_presentation(P: DgPresentation, check_weights: bool = False) -> ValidationReport:
    """Degree homogeneity of d, d(h) = 0 and d^2 a = h a - a h on generators."""
    h = P.curvature
    if h.terms and h.degrees() != {-2}:
        return ValidationReport(False, "curvature", "curvature must have degree -2")
    for i, g in enumerate(P.gens):
        dg = P.d_gen(i)
        if dg.terms and dg.degrees() != {g.degree - 1}:
            return ValidationReport(False, g.name, f"d({g.name}) is not of degree {g.degree - 1}")
        if check_weights and dg.terms and {P.mono_weight(m) for m in dg.terms} != {g.weight}:
            return ValidationReport(False, g.name, f"d({g.name}) does not preserve weight")
        if g.nilpotency is not None and dg.terms:
            a = P.gen(g.name)
            N = g.nilpotency
            img = P.zero()
            for k in range(N):
                s = -1 if (k * g.degree) % 2 else 1
                img = img + (a ** k) * dg * (a ** (N - 1 - k)) * s
            if not img.is_zero():
                return ValidationReport(False, g.name, f"d({g.name}^{N}) != 0")
    if not P.differential(h).is_zero():
        return ValidationReport(False, "curvature", "d(h) != 0")
    for i, g in enumerate(P.gens):
        a = P.gen(g.name)
        lhs = P.differential(P.differential(a))
        rhs = h * a - a * h
        if lhs != rhs:
            return ValidationReport(False, g.name, f"d^2({g.name}) = {lhs} but [h,{g.name}] = {rhs}")
    return ValidationReport(True, None, "pass")


# ----------------------------------------------------------- enumeration


def monomial_basis(P: DgPresentation, window: Tuple[int, int],
                   weight_bound: Optional[int] = None) -> Dict[int, List[Monomial]]:
    """Normal-form monomials with degree in ``window``, grouped by degree.

    Ordering inside a degree: weight, then word order.
    """
    lo, hi = window
    degs = [g.degree for g in P.gens]
    pos = any(d > 0 for d in degs)
    neg = any(d < 0 for d in degs)
    if pos and neg:
        bad = [g.name for g in P.gens if g.degree != 0]
        raise BasisNotFinite(f"basis not finite in window: mixed-sign generator degrees {bad}")
    zero = [g for g in P.gens if g.degree == 0]
    for g in zero:
        if g.nilpotency is None and (weight_bound is None or g.weight <= 0):
            raise BasisNotFinite(f"basis not finite in window: degree-0 generator {g.name} "
                                 "without nilpotency relation")
    if P.kind == FREE and len(zero) > 1 and weight_bound is None:
        raise BasisNotFinite("basis not finite in window: several degree-0 generators "
                             f"{[g.name for g in zero]} in a free algebra")
    out: Dict[int, List[Monomial]] = {k: [] for k in range(lo, hi + 1)}

    def within(deg):
        return (deg <= hi) if pos else (deg >= lo) if neg else True

    seen = set()

    def rec(m: Monomial, deg: int, wt: int):
        if lo <= deg <= hi and (weight_bound is None or wt <= weight_bound):
            if m not in seen:
                seen.add(m)
                out[deg].append(m)
        start = m[-1] if (P.kind == COMM and m) else 0
        for i in range(start, len(P.gens)):
            g = P.gens[i]
            nd = deg + g.degree
            nw = wt + g.weight
            if not within(nd):
                continue
            if weight_bound is not None and g.weight > 0 and nw > weight_bound:
                continue
            r = P.mono_mul(m, (i,))
            if r is None:
                continue
            rec(r[1], nd, nw)

    rec((), 0, 0)
    for k in out:
        out[k].sort(key=lambda m: (P.mono_weight(m), len(m), m))
    return out


# ------------------------------------------------------------- morphisms


@dataclass
class AlgebraMorphism:
    source: DgPresentation
    target: DgPresentation
    images: Dict[str, Element] = field(default_factory=dict)

    def __post_init__(self):
        imgs = {}
        for g in self.source.gens:
            img = self.target.element(self.images.get(g.name, self.target.zero()))
            if img.terms and img.degrees() != {g.degree}:
                raise PresentationError(f"image of {g.name} has degree {img.degrees()}, "
                                        f"expected {g.degree}")
            imgs[g.name] = img
        self.images = imgs

    def apply(self, a: Element) -> Element:
        if a.P is not self.source:
            raise PresentationError("element not in the source presentation")
        T = self.target
        out = T.zero()
        for m, c in a.terms.items():
            r = T.one()
            for i in m:
                r = r * self.images[self.source.gens[i].name]
            out = out + r * c
        return out


def apply_morphism(f: AlgebraMorphism, a: Element) -> Element:
    return f.apply(a)


def is_chain_algebra_map(f: AlgebraMorphism) -> ValidationReport:
    for g in f.source.gens:
        a = f.source.gen(g.name)
        lhs = f.apply(f.source.differential(a))
        rhs = f.target.differential(f.apply(a))
        if lhs != rhs:
            return ValidationReport(False, g.name, f"f(d {g.name}) = {lhs} but d f({g.name}) = {rhs}")
    return ValidationReport(True, None, "pass")


def identity_morphism(P: DgPresentation) -> AlgebraMorphism:
    return AlgebraMorphism(P, P, {g.name: P.gen(g.name) for g in P.gens})


# --------------------------------------------------- standard families


def algebra_Cn(n: int) -> DgPresentation:
    """Q[x]<y_1..y_n>, |y_i| = 2i-1, d y_1 = x, d y_{i+1} = sum_j y_j y_{i+1-j}."""
    gens = [Generator(f"y{i}", 2 * i - 1, weight=i) for i in range(1, n + 1)]
    diff = {"y1": "x"}
    for i in range(1, n):
        diff[f"y{i + 1}"] = " + ".join(f"y{j}*y{i + 1 - j}" for j in range(1, i + 1))
    return DgPresentation(QX, FREE, gens, diff, name=f"C{n}")


def truncated_poly(n: int) -> DgPresentation:
    """Q[x]/x^n over Q, with x as a degree-0 generator."""
    return DgPresentation(QQ, COMM, [Generator("x", 0, weight=1, nilpotency=n)], name=f"A{n}")


def koszul_Bn(n: int) -> DgPresentation:
    """B_n = Q[x, xi_n] over Q[x], |xi| = 1, d xi = x^n."""
    return DgPresentation(QX, COMM, [Generator("xi", 1, weight=n)], {"xi": f"x^{n}"},
                          name=f"B{n}")


def curved_truncated(n: int) -> DgPresentation:
    """(Q[x,t]/t^{n+1}, d = 0, h = -x t) with |t| = -2."""
    return DgPresentation(QX, COMM, [Generator("t", -2, weight=1, nilpotency=n + 1)],
                          {}, curvature="-x*t", name=f"A(t^{n + 1},-xt)")


def resolved_curved(n: int, curved: bool = True) -> DgPresentation:
    """Q[x,t,xi] with |t| = -2, |xi| = -2n-1, d xi = t^{n+1}; curvature -x t."""
    gens = [Generator("t", -2, weight=1), Generator("xi", -2 * n - 1, weight=n + 1)]
    return DgPresentation(QX, COMM, gens, {"xi": f"t^{n + 1}"},
                          curvature="-x*t" if curved else None, name=f"Atilde{n}")
