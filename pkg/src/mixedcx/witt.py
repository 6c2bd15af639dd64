"""Big Witt vectors 1 + a_1 t + ... + a_L t^L over Q or Q[x] at finite precision.

Addition is series multiplication, ghost components are the coefficients of
-t d/dt log w, multiplication is defined through the ghost map (an
isomorphism over Q-algebras), and rationality is decided against a degree
bound by an exact Pade system.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from gmpy2 import mpq

from . import qlinalg as ql
from .exactalg import Poly

RATIONALS = "Q"
POLYNOMIALS = "Q[x]"


class PrecisionError(ValueError):
    pass


def _zero(ring):
    return Poly() if ring == POLYNOMIALS else mpq(0)


def _one(ring):
    return Poly.const(1) if ring == POLYNOMIALS else mpq(1)


def _coerce(ring, a):
    if ring == POLYNOMIALS:
        return a if isinstance(a, Poly) else Poly.const(a)
    if isinstance(a, Poly):
        raise TypeError("polynomial coefficient in a Witt vector over Q")
    return mpq(a)


def _scale(ring, a, q):
    q = mpq(q)
    return a * Poly.const(q) if ring == POLYNOMIALS else a * q


@dataclass(frozen=True)
class WittVector:
    ring: str
    coeffs: Tuple  # a_1 .. a_L

    def __post_init__(self):
        if self.ring not in (RATIONALS, POLYNOMIALS):
            raise ValueError(f"unknown coefficient ring {self.ring!r}")
        if len(self.coeffs) < 1:
            raise PrecisionError("precision must be >= 1")
        object.__setattr__(self, "coeffs", tuple(_coerce(self.ring, a) for a in self.coeffs))

    @property
    def L(self) -> int:
        return len(self.coeffs)

    def series(self) -> List:
        return [_one(self.ring)] + list(self.coeffs)

    def truncate(self, L: int) -> "WittVector":
        if L > self.L:
            raise PrecisionError(f"cannot raise precision {self.L} to {L}")
        return WittVector(self.ring, self.coeffs[:L])

    def __add__(self, other):
        return witt_add(self, other)

    def __neg__(self):
        return witt_neg(self)

    def __sub__(self, other):
        return witt_add(self, witt_neg(other))

    def __mul__(self, other):
        return witt_mul(self, other)

    def __str__(self):
        terms = ["1"] + [f"({a})*t^{k}" for k, a in enumerate(self.coeffs, 1) if a != 0]
        return " + ".join(terms)


def from_series(ring: str, series: Sequence, L: int) -> WittVector:
    s = list(series) + [0] * (L + 1)
    if s[0] != 1 and not (isinstance(s[0], Poly) and s[0] == Poly.const(1)):
        raise ValueError("a big Witt vector is a series with constant term 1")
    return WittVector(ring, tuple(s[1:L + 1]))


def zero(L: int, ring: str = RATIONALS) -> WittVector:
    return WittVector(ring, (_zero(ring),) * L)


def one(L: int, ring: str = RATIONALS) -> WittVector:
    """Multiplicative unit 1 - t (all ghost components 1)."""
    return WittVector(ring, (_coerce(ring, -1),) + (_zero(ring),) * (L - 1))


def teichmuller(a, L: int, ring: str = RATIONALS) -> WittVector:
    """1 - a t."""
    return WittVector(ring, (-_coerce(ring, a),) + (_zero(ring),) * (L - 1))


def _check(w: WittVector, v: WittVector):
    if w.ring != v.ring:
        raise ValueError("coefficient rings differ")
    if w.L != v.L:
        raise PrecisionError(f"precision mismatch: {w.L} vs {v.L}")


def _series_mul(ring, a, b, L):
    out = [_zero(ring)] * (L + 1)
    for i, x in enumerate(a[:L + 1]):
        if x == 0:
            continue
        for j, y in enumerate(b[:L + 1 - i]):
            out[i + j] = out[i + j] + x * y
    return out


def witt_add(w: WittVector, v: WittVector) -> WittVector:
    _check(w, v)
    return from_series(w.ring, _series_mul(w.ring, w.series(), v.series(), w.L), w.L)


def witt_neg(w: WittVector) -> WittVector:
    """Series inverse."""
    s = w.series()
    inv = [_one(w.ring)] + [_zero(w.ring)] * w.L
    for m in range(1, w.L + 1):
        acc = _zero(w.ring)
        for k in range(1, m + 1):
            acc = acc + s[k] * inv[m - k]
        inv[m] = -acc
    return from_series(w.ring, inv, w.L)


def ghost(w: WittVector) -> List:
    """gh_m = coefficient of t^m in -t d/dt log w(t), m = 1..L."""
    a = w.series()
    gh = []
    for m in range(1, w.L + 1):
        acc = _scale(w.ring, a[m], -m)
        for k in range(1, m):
            acc = acc - gh[k - 1] * a[m - k]
        gh.append(acc)
    return gh


def from_ghost(gh: Sequence, ring: str = RATIONALS) -> WittVector:
    """Inverse of ghost (Newton identities)."""
    L = len(gh)
    a = [_one(ring)] + [_zero(ring)] * L
    gh = [_coerce(ring, g) for g in gh]
    for m in range(1, L + 1):
        acc = _zero(ring)
        for k in range(1, m + 1):
            acc = acc + gh[k - 1] * a[m - k]
        a[m] = _scale(ring, acc, mpq(-1, m))
    return from_series(ring, a, L)


def witt_mul(w: WittVector, v: WittVector) -> WittVector:
    _check(w, v)
    return from_ghost([x * y for x, y in zip(ghost(w), ghost(v))], w.ring)


def verschiebung(w: WittVector, n: int) -> WittVector:
    """V_n w(t) = w(t^n), truncated back to precision L."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s = [_zero(w.ring)] * (w.L + 1)
    for k, a in enumerate(w.series()):
        if k * n <= w.L:
            s[k * n] = a
    return from_series(w.ring, s, w.L)


def frobenius(w: WittVector, n: int) -> WittVector:
    """gh_m(F_n w) = gh_{nm}(w); the result has precision L // n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if w.L // n < 1:
        raise PrecisionError(f"precision {w.L} too small for F_{n}")
    gh = ghost(w)
    return from_ghost([gh[n * m - 1] for m in range(1, w.L // n + 1)], w.ring)


def integer_multiple(w: WittVector, n: int) -> WittVector:
    """n . w in Witt addition (the n-th power of the series)."""
    out = zero(w.L, w.ring)
    for _ in range(n):
        out = witt_add(out, w)
    return out


# ------------------------------------------------------------ rationality


@dataclass
class RationalityReport:
    rational: bool
    degree_bound: int
    precision: int
    numerator: Optional[List] = None  # f_0 .. f_d
    denominator: Optional[List] = None  # g_0 = 1, g_1 .. g_e

    def certificate(self):
        return (self.numerator, self.denominator) if self.rational else None


def is_rational(w: WittVector, D: int) -> RationalityReport:
    """Is w = f/g with deg f, deg g <= D (g(0) = 1), as far as precision L shows?

    The coefficients c_k of w must satisfy sum_{j<=e} g_j c_{k-j} = 0 for
    D < k <= L (the Hankel/Pade system).  Requires L >= 2D + 2 so that the
    system has at least D + 2 equations for D unknowns.  The smallest
    denominator degree e that works is reported, with f = (g w) mod t^{D+1}.
    """
    if w.ring != RATIONALS:
        raise NotImplementedError("rationality is decided over Q coefficients")
    if w.L < 2 * D + 2:
        raise PrecisionError(f"precision {w.L} < 2D + 2 = {2 * D + 2}")
    c = w.series()
    L = w.L
    for e in range(0, D + 1):
        # unknowns g_1..g_e; equations for k = D+1..L: c_k + sum_j g_j c_{k-j} = 0
        rows = list(range(D + 1, L + 1))
        A = ql.matrix(len(rows), e, {(r, j - 1): c[k - j] for r, k in enumerate(rows)
                                     for j in range(1, e + 1) if k - j >= 0 and c[k - j] != 0})
        b = ql.matrix(len(rows), 1, {(r, 0): -c[k] for r, k in enumerate(rows) if c[k] != 0})
        if e == 0:
            if all(c[k] == 0 for k in rows):
                return RationalityReport(True, D, L, [mpq(x) for x in c[:D + 1]], [mpq(1)])
            continue
        aug = ql.matrix(len(rows), e + 1, {**{(i, j): A[i, j] for i in range(len(rows))
                                              for j in range(e) if A[i, j] != 0},
                                           **{(i, e): b[i, 0] for i in range(len(rows))
                                              if b[i, 0] != 0}})
        ra = ql.rank(A)
        if ra != ql.rank(aug):
            continue
        g = _particular_solution(aug, e)
        den = [mpq(1)] + g
        num = [sum((den[j] * c[k - j] for j in range(len(den)) if k - j >= 0), mpq(0))
               for k in range(D + 1)]
        while len(num) > 1 and num[-1] == 0:
            num.pop()
        return RationalityReport(True, D, L, num, den)
    return RationalityReport(False, D, L)


def _particular_solution(aug, e: int) -> List[mpq]:
    R, r = aug.rref()
    sol = [mpq(0)] * e
    row = 0
    for j in range(e):
        if row < r and R[row, j] != 0:
            v = R[row, e]
            sol[j] = mpq(int(v.p), int(v.q))
            row += 1
    return sol


def series_of_ratio(f: Sequence, g: Sequence, L: int) -> WittVector:
    """Expand f/g (g(0) = 1) to precision L."""
    f = [mpq(a) for a in f] + [mpq(0)] * (L + 1)
    g = [mpq(a) for a in g] + [mpq(0)] * (L + 1)
    if g[0] != 1:
        raise ValueError("denominator must have constant term 1")
    out = []
    for m in range(L + 1):
        acc = f[m] - sum((g[j] * out[m - j] for j in range(1, m + 1)), mpq(0))
        out.append(acc)
    return from_series(RATIONALS, out, L)


def verify_certificate(w: WittVector, rep: RationalityReport) -> bool:
    """Re-expand f/g and compare with w at its precision."""
    if not rep.rational:
        return False
    return series_of_ratio(rep.numerator, rep.denominator, w.L) == w
