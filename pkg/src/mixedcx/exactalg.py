"""Exact scalars, sparse matrices over Q and Q[x], Smith normal form, homology.

Everything here is exact: rationals are ``gmpy2.mpq`` and polynomials are
dense tuples of them (lowest degree first).  The two coefficient rings are
tagged ``"Q"`` and ``"Q[x]"``; a rational is just a polynomial of degree <= 0.
"""
from __future__ import annotations

import heapq
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from gmpy2 import mpq

QQ = "Q"
QX = "Q[x]"
RINGS = (QQ, QX)

DEFAULT_LIMIT_NONZEROS = 5000
LIMIT_ENV = "MIXEDCX_LIMIT_NONZEROS"


class ResourceLimitError(RuntimeError):
    """Raised when a dense elimination would exceed the configured size cap."""


class ComplexError(ValueError):
    """Raised for malformed complexes (shape mismatch, d^2 != 0)."""


def limit_nonzeros() -> int:
    return int(os.environ.get(LIMIT_ENV, DEFAULT_LIMIT_NONZEROS))


def _q(c) -> mpq:
    return c if type(c) is type(mpq(0)) else mpq(c)


class Poly:
    """Univariate polynomial over Q, immutable, trailing zeros trimmed."""

    __slots__ = ("c", "_h")

    def __init__(self, coeffs: Iterable = ()):
        cs = [_q(a) for a in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.c: Tuple[mpq, ...] = tuple(cs)
        self._h = None

    @classmethod
    def _raw(cls, cs: Tuple) -> "Poly":
        # trusted fast path: cs is a trimmed tuple of mpq
        p = object.__new__(cls)
        p.c = cs
        p._h = None
        return p

    @classmethod
    def const(cls, a) -> "Poly":
        return cls((a,))

    @classmethod
    def monomial(cls, e: int, a=1) -> "Poly":
        return cls([0] * e + [a])

    @property
    def deg(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def is_const(self) -> bool:
        return len(self.c) <= 1

    def is_unit(self) -> bool:
        return len(self.c) == 1

    def lead(self) -> mpq:
        return self.c[-1] if self.c else mpq(0)

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.c == other.c
        if isinstance(other, (int, type(mpq(0)))):
            return self.c == Poly.const(other).c
        return NotImplemented

    def __hash__(self):
        if self._h is None:
            self._h = hash(self.c)
        return self._h

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        if not self.c:
            return "0"
        terms = []
        for e in range(len(self.c) - 1, -1, -1):
            a = self.c[e]
            if a == 0:
                continue
            mono = "" if e == 0 else ("x" if e == 1 else f"x^{e}")
            if mono and a == 1:
                s = mono
            elif mono and a == -1:
                s = "-" + mono
            elif mono:
                s = f"{a}*{mono}"
            else:
                s = str(a)
            terms.append(s)
        out = terms[0]
        for t in terms[1:]:
            out += t if t.startswith("-") else "+" + t
        return out

    def __neg__(self):
        return Poly._raw(tuple(-a for a in self.c))

    def __add__(self, other):
        if type(other) is not Poly:
            other = _coerce(other)
        a, b = self.c, other.c
        if len(a) < len(b):
            a, b = b, a
        if not b:
            return self if a is self.c else other
        out = list(a)
        for i, v in enumerate(b):
            out[i] += v
        while out and not out[-1]:
            out.pop()
        return Poly._raw(tuple(out))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if type(other) is not Poly:
            other = _coerce(other)
        if not self.c or not other.c:
            return ZERO
        if len(other.c) == 1:
            s = other.c[0]
            return Poly._raw(tuple(a * s for a in self.c))
        if len(self.c) == 1:
            s = self.c[0]
            return Poly._raw(tuple(a * s for a in other.c))
        out = [mpq(0)] * (len(self.c) + len(other.c) - 1)
        for i, a in enumerate(self.c):
            if a == 0:
                continue
            for j, b in enumerate(other.c):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = ONE
        for _ in range(e):
            out = out * self
        return out

    def divmod(self, other: "Poly") -> Tuple["Poly", "Poly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.c)
        dq = other.deg
        if len(r) - 1 < dq:
            return ZERO, self
        inv = 1 / other.c[-1]
        q = [mpq(0)] * (len(r) - dq)
        for k in range(len(r) - 1 - dq, -1, -1):
            coef = r[k + dq] * inv
            q[k] = coef
            if coef:
                for j, b in enumerate(other.c):
                    r[k + j] -= coef * b
        return Poly(q), Poly(r[:dq])

    def __floordiv__(self, other):
        return self.divmod(_coerce(other))[0]

    def __mod__(self, other):
        return self.divmod(_coerce(other))[1]

    def divides(self, other: "Poly") -> bool:
        if self.is_zero():
            return other.is_zero()
        return other.divmod(self)[1].is_zero()

    def monic(self) -> "Poly":
        if not self.c:
            return self
        inv = 1 / self.c[-1]
        return Poly(a * inv for a in self.c)

    def eval(self, x0) -> mpq:
        acc = mpq(0)
        for a in reversed(self.c):
            acc = acc * x0 + a
        return acc

    def valuation(self) -> int:
        """x-adic valuation; -1 for zero."""
        for i, a in enumerate(self.c):
            if a != 0:
                return i
        return -1


def _coerce(v) -> Poly:
    if isinstance(v, Poly):
        return v
    return Poly.const(v)


ZERO = Poly()
ONE = Poly.const(1)
X = Poly.monomial(1)


def poly_gcd(a: Poly, b: Poly) -> Poly:
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def normalize_factor(p: Poly, ring: str) -> Poly:
    """Associate representative: 1 for units over Q, monic over Q[x]."""
    if p.is_zero():
        return p
    if ring == QQ or p.is_unit():
        return ONE
    return p.monic()


# ---------------------------------------------------------------- matrices


@dataclass(frozen=True)
class SparseMatrix:
    nrows: int
    ncols: int
    entries: Dict[Tuple[int, int], Poly] = field(default_factory=dict)
    ring: str = QX

    def __post_init__(self):
        if self.ring not in RINGS:
            raise ValueError(f"unknown ring {self.ring!r}")
        clean = {}
        for (i, j), v in self.entries.items():
            if type(v) is not Poly:
                v = _coerce(v)
            if v.is_zero():
                continue
            if not (0 <= i < self.nrows and 0 <= j < self.ncols):
                raise IndexError(f"entry {(i, j)} outside {self.nrows}x{self.ncols}")
            if self.ring == QQ and not v.is_const():
                raise ValueError(f"non-constant entry {v} in a matrix over Q")
            clean[(i, j)] = v
        object.__setattr__(self, "entries", clean)

    @classmethod
    def zero(cls, nrows, ncols, ring=QX):
        return cls(nrows, ncols, {}, ring)

    @classmethod
    def identity(cls, n, ring=QX):
        return cls(n, n, {(i, i): ONE for i in range(n)}, ring)

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence], ring=QX, ncols=None):
        nr = len(rows)
        nc = ncols if ncols is not None else (len(rows[0]) if rows else 0)
        ent = {}
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                v = _coerce(v)
                if v:
                    ent[(i, j)] = v
        return cls(nr, nc, ent, ring)

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self):
        return len(self.entries)

    def get(self, i, j) -> Poly:
        return self.entries.get((i, j), ZERO)

    def to_dense(self) -> List[List[Poly]]:
        out = [[ZERO] * self.ncols for _ in range(self.nrows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def rows(self) -> List[Dict[int, Poly]]:
        out: List[Dict[int, Poly]] = [dict() for _ in range(self.nrows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.ncols, self.nrows,
                            {(j, i): v for (i, j), v in self.entries.items()}, self.ring)

    def scale(self, s) -> "SparseMatrix":
        s = _coerce(s)
        return SparseMatrix(self.nrows, self.ncols,
                            {k: v * s for k, v in self.entries.items()}, self.ring)

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        ent = dict(self.entries)
        for k, v in other.entries.items():
            ent[k] = ent.get(k, ZERO) + v
        return SparseMatrix(self.nrows, self.ncols, ent, _join(self.ring, other.ring))

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        orows = other.rows()
        acc: Dict[Tuple[int, int], Poly] = {}
        for (i, k), a in self.entries.items():
            for j, b in orows[k].items():
                key = (i, j)
                acc[key] = acc.get(key, ZERO) + a * b
        return SparseMatrix(self.nrows, other.ncols, acc, _join(self.ring, other.ring))

    def apply(self, v: Sequence) -> List[Poly]:
        if len(v) != self.ncols:
            raise ValueError(f"vector length {len(v)} != {self.ncols}")
        out = [ZERO] * self.nrows
        for (i, j), a in self.entries.items():
            vj = v[j]
            if vj:
                out[i] = out[i] + a * _coerce(vj)
        return out

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        return hash((self.shape, frozenset(self.entries.items())))

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "SparseMatrix":
        rpos = {r: a for a, r in enumerate(rows)}
        cpos = {c: b for b, c in enumerate(cols)}
        ent = {(rpos[i], cpos[j]): v for (i, j), v in self.entries.items()
               if i in rpos and j in cpos}
        return SparseMatrix(len(rows), len(cols), ent, self.ring)

    def evaluate(self, x0) -> "SparseMatrix":
        """Base change Q[x] -> Q at x = x0."""
        return SparseMatrix(self.nrows, self.ncols,
                            {k: Poly.const(v.eval(x0)) for k, v in self.entries.items()}, QQ)


def _join(r1, r2):
    return QX if QX in (r1, r2) else QQ


def block_matrix(blocks: Dict[Tuple[int, int], SparseMatrix], row_sizes, col_sizes, ring=QX):
    roff = [0]
    for s in row_sizes:
        roff.append(roff[-1] + s)
    coff = [0]
    for s in col_sizes:
        coff.append(coff[-1] + s)
    ent = {}
    for (bi, bj), m in blocks.items():
        for (i, j), v in m.entries.items():
            key = (roff[bi] + i, coff[bj] + j)
            ent[key] = ent.get(key, ZERO) + v
    return SparseMatrix(roff[-1], coff[-1], ent, ring)


# ------------------------------------------------------ Smith normal form


@dataclass
class SmithResult:
    """``left @ M @ right == diag(factors padded with zeros)``."""

    factors: List[Poly]
    left: SparseMatrix
    right: SparseMatrix
    left_inv: SparseMatrix
    right_inv: SparseMatrix


def _check_limit(nnz: int):
    lim = limit_nonzeros()
    if nnz > lim:
        raise ResourceLimitError(
            f"dense elimination on {nnz} nonzeros exceeds limit {lim} "
            f"(raise it with --limit-nonzeros or ${LIMIT_ENV})")


def _min_pivot(A, t, nr, nc):
    best = None
    for i in range(t, nr):
        row = A[i]
        for j in range(t, nc):
            v = row[j]
            if v.c:
                key = (v.deg, i, j)
                if best is None or key < best:
                    best = key
                    if key[0] == 0:
                        return best
    return best


def smith_normal_form(M: SparseMatrix) -> SmithResult:
    """Smith normal form with transforms.

    Pivot rule: nonzero entry of minimal degree, ties broken by (row, col).
    Factors are monic over Q[x] and 1 over Q.
    """
    _check_limit(M.nnz)
    nr, nc = M.shape
    A = M.to_dense()
    L = [[ONE if i == j else ZERO for j in range(nr)] for i in range(nr)]
    Li = [[ONE if i == j else ZERO for j in range(nr)] for i in range(nr)]
    R = [[ONE if i == j else ZERO for j in range(nc)] for i in range(nc)]
    Ri = [[ONE if i == j else ZERO for j in range(nc)] for i in range(nc)]

    def swap_rows(i, k):
        A[i], A[k] = A[k], A[i]
        L[i], L[k] = L[k], L[i]
        for row in Li:  # Li <- Li @ P
            row[i], row[k] = row[k], row[i]

    def swap_cols(j, k):
        for row in A:
            row[j], row[k] = row[k], row[j]
        for row in R:
            row[j], row[k] = row[k], row[j]
        Ri[j], Ri[k] = Ri[k], Ri[j]

    def add_row(dst, src, q):  # row_dst -= q * row_src
        for arr in (A, L):
            s, d = arr[src], arr[dst]
            for j in range(len(d)):
                if s[j].c:
                    d[j] = d[j] - q * s[j]
        for row in Li:  # inverse: col_src += q * col_dst
            if row[dst].c:
                row[src] = row[src] + q * row[dst]

    def add_col(dst, src, q):  # col_dst -= q * col_src
        for arr in (A, R):
            for row in arr:
                if row[src].c:
                    row[dst] = row[dst] - q * row[src]
        s, d = Ri[src], Ri[dst]  # inverse: row_src += q * row_dst
        for j in range(len(s)):
            if d[j].c:
                s[j] = s[j] + q * d[j]

    def scale_row(i, s):
        inv = 1 / s
        A[i] = [v * inv for v in A[i]]
        L[i] = [v * inv for v in L[i]]
        for row in Li:
            row[i] = row[i] * s

    factors: List[Poly] = []
    t = 0
    while t < min(nr, nc):
        piv = _min_pivot(A, t, nr, nc)
        if piv is None:
            break
        _, i, j = piv
        if i != t:
            swap_rows(t, i)
        if j != t:
            swap_cols(t, j)
        while True:
            p = A[t][t]
            clean = True
            for i in range(t + 1, nr):
                v = A[i][t]
                if v.c:
                    q, r = v.divmod(p)
                    add_row(i, t, q)
                    if r.c:
                        clean = False
            for j in range(t + 1, nc):
                v = A[t][j]
                if v.c:
                    q, r = v.divmod(p)
                    add_col(j, t, q)
                    if r.c:
                        clean = False
            if not clean:
                piv = None
                for i in range(t, nr):
                    v = A[i][t]
                    if v.c and (piv is None or v.deg < piv[0]):
                        piv = (v.deg, i, t)
                for j in range(t, nc):
                    v = A[t][j]
                    if v.c and (piv is None or v.deg < piv[0]):
                        piv = (v.deg, t, j)
                _, i, j = piv
                if i != t:
                    swap_rows(t, i)
                if j != t:
                    swap_cols(t, j)
                continue
            # divisibility: pivot must divide the rest of the block
            bad = None
            for i in range(t + 1, nr):
                for j in range(t + 1, nc):
                    v = A[i][j]
                    if v.c and not p.divides(v):
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, Poly.const(-1))
        scale_row(t, A[t][t].lead())
        factors.append(A[t][t])
        t += 1

    ring = M.ring
    return SmithResult(
        factors=factors,
        left=SparseMatrix.from_dense(L, ring, nr),
        right=SparseMatrix.from_dense(R, ring, nc),
        left_inv=SparseMatrix.from_dense(Li, ring, nr),
        right_inv=SparseMatrix.from_dense(Ri, ring, nc),
    )


def _markowitz_unit_elimination(M: SparseMatrix):
    """Eliminate constant (unit) pivots sparsely.

    Returns (number of unit pivots, residual rows as dicts).  Each unit
    pivot contributes an invariant factor 1 and is removed with its row and
    column, which leaves the remaining Smith form unchanged.
    """
    rows: Dict[int, Dict[int, Poly]] = {}
    cols: Dict[int, set] = {}
    for (i, j), v in M.entries.items():
        rows.setdefault(i, {})[j] = v
        cols.setdefault(j, set()).add(i)
    units = 0
    heap = [(len(r), i) for i, r in rows.items()]
    heapq.heapify(heap)
    while heap:
        rl, pi = heapq.heappop(heap)
        row = rows.get(pi)
        if row is None or len(row) != rl:
            continue  # stale entry
        best = None
        for j, v in row.items():
            if len(v.c) == 1:
                key = (len(cols[j]), j)
                if best is None or key < best:
                    best = key
        if best is None:
            continue  # no unit in this row now; re-queued if it changes
        pj = best[1]
        prow = rows.pop(pi)
        inv = 1 / prow[pj].c[0]
        for j in prow:
            cols[j].discard(pi)
        for r in sorted(cols[pj]):
            row = rows[r]
            q = row[pj] * inv
            for j, v in prow.items():
                nv = row.get(j, ZERO) - q * v
                if nv.c:
                    if j not in row:
                        cols[j].add(r)
                    row[j] = nv
                elif j in row:
                    del row[j]
                    cols[j].discard(r)
            if not row:
                del rows[r]
            else:
                heapq.heappush(heap, (len(row), r))
        del cols[pj]
        units += 1
    return units, rows


def invariant_factors(M: SparseMatrix) -> List[Poly]:
    """Invariant factors only (no transforms); sparse unit pre-elimination."""
    units, rows = _markowitz_unit_elimination(M)
    if not rows:
        return [ONE] * units
    if M.ring == QQ:  # any nonzero constant is a unit, so nothing is left
        raise AssertionError("unit elimination left entries over Q")
    ridx = sorted(rows)
    cidx = sorted({j for r in rows.values() for j in r})
    rpos = {r: a for a, r in enumerate(ridx)}
    cpos = {c: b for b, c in enumerate(cidx)}
    ent = {(rpos[i], cpos[j]): v for i, row in rows.items() for j, v in row.items()}
    sub = SparseMatrix(len(ridx), len(cidx), ent, M.ring)
    _check_limit(sub.nnz)
    return [ONE] * units + _factors_only(sub)


def _factors_only(M: SparseMatrix) -> List[Poly]:
    # transform-free variant of smith_normal_form
    nr, nc = M.shape
    A = M.to_dense()
    factors = []
    t = 0
    while t < min(nr, nc):
        piv = _min_pivot(A, t, nr, nc)
        if piv is None:
            break
        _, i, j = piv
        A[t], A[i] = A[i], A[t]
        for row in A:
            row[t], row[j] = row[j], row[t]
        while True:
            p = A[t][t]
            clean = True
            prow = A[t]
            for i in range(t + 1, nr):
                v = A[i][t]
                if v.c:
                    q, r = v.divmod(p)
                    row = A[i]
                    for j in range(t, nc):
                        if prow[j].c:
                            row[j] = row[j] - q * prow[j]
                    if r.c:
                        clean = False
            for j in range(t + 1, nc):
                v = prow[j]
                if v.c:
                    q, r = v.divmod(p)
                    for row in A[t:]:
                        if row[t].c:
                            row[j] = row[j] - q * row[t]
                    if r.c:
                        clean = False
            if not clean:
                piv = None
                for i in range(t, nr):
                    v = A[i][t]
                    if v.c and (piv is None or v.deg < piv[0]):
                        piv = (v.deg, i, t)
                for j in range(t, nc):
                    v = A[t][j]
                    if v.c and (piv is None or v.deg < piv[0]):
                        piv = (v.deg, t, j)
                _, i, j = piv
                A[t], A[i] = A[i], A[t]
                for row in A:
                    row[t], row[j] = row[j], row[t]
                continue
            bad = None
            for i in range(t + 1, nr):
                if any(v.c and not p.divides(v) for v in A[i][t + 1:]):
                    bad = i
                    break
            if bad is None:
                break
            A[t] = [a + b for a, b in zip(A[t], A[bad])]
        factors.append(A[t][t].monic())
        t += 1
    return factors


def rank(M: SparseMatrix) -> int:
    return len(invariant_factors(M))


def solve_factor(M: SparseMatrix, v: Sequence) -> Optional[List[Poly]]:
    """Return w with M @ w == v over the ring of M, or None if no solution."""
    if len(v) != M.nrows:
        raise ValueError(f"vector length {len(v)} != {M.nrows} rows")
    v = [_coerce(a) for a in v]
    if M.ring == QQ and any(not a.is_const() for a in v):
        raise ValueError("non-constant right-hand side over Q")
    S = smith_normal_form(M)
    c = S.left.apply(v)
    y = [ZERO] * M.ncols
    for i, f in enumerate(S.factors):
        q, r = c[i].divmod(f)
        if r.c:
            return None
        y[i] = q
    if any(a.c for a in c[len(S.factors):]):
        return None
    return S.right.apply(y)


# ---------------------------------------------------------------- complexes


@dataclass
class FreeComplex:
    """Bounded window of a complex of finite free modules.

    ``d[k]`` maps degree k to degree k-1 and has shape (rank(k-1), rank(k)).
    Degrees outside ``[dmin, dmax]`` are zero as far as this object knows;
    ``exact_below`` / ``exact_above`` say whether that is the truth (the
    complex really vanishes there) or a truncation.
    """

    dmin: int
    dmax: int
    bases: Dict[int, List] = field(default_factory=dict)
    d: Dict[int, SparseMatrix] = field(default_factory=dict)
    ring: str = QX
    exact_below: bool = False
    exact_above: bool = False
    # optional grading preserved by d; homology is then computed blockwise
    weights: Optional[Dict[int, List]] = None
    # explicit trusted band, overriding the window-edge rule
    trusted_band: Optional[Tuple[int, int]] = None

    def rank(self, k: int) -> int:
        return len(self.bases.get(k, ()))

    def degrees(self):
        return range(self.dmin, self.dmax + 1)

    def diff(self, k: int) -> SparseMatrix:
        m = self.d.get(k)
        if m is None:
            return SparseMatrix.zero(self.rank(k - 1) if self.dmin <= k - 1 else 0,
                                     self.rank(k) if k <= self.dmax else 0, self.ring)
        return m

    def validate(self) -> None:
        for k in self.degrees():
            self.bases.setdefault(k, [])
        for k, m in self.d.items():
            if not (self.dmin < k <= self.dmax):
                raise ComplexError(f"differential at degree {k} leaves window")
            if m.shape != (self.rank(k - 1), self.rank(k)):
                raise ComplexError(
                    f"d_{k} has shape {m.shape}, expected {(self.rank(k - 1), self.rank(k))}")
        for k in range(self.dmin + 2, self.dmax + 1):
            if not (self.diff(k - 1) @ self.diff(k)).is_zero():
                raise ComplexError(f"d_{k - 1} d_{k} != 0")

    def trusted(self, k: int, margin: int = 1) -> bool:
        if self.trusted_band is not None:
            return self.trusted_band[0] <= k <= self.trusted_band[1]
        lo = self.dmin if self.exact_below else self.dmin + margin
        hi = self.dmax if self.exact_above else self.dmax - margin
        return lo <= k <= hi

    def direct_sum(self, other: "FreeComplex") -> "FreeComplex":
        lo, hi = min(self.dmin, other.dmin), max(self.dmax, other.dmax)
        bases = {k: [(0, b) for b in self.bases.get(k, [])] + [(1, b) for b in other.bases.get(k, [])]
                 for k in range(lo, hi + 1)}
        d = {}
        for k in range(lo + 1, hi + 1):
            a, b = self.diff(k) if self.dmin < k <= self.dmax else None, \
                other.diff(k) if other.dmin < k <= other.dmax else None
            blocks = {}
            if a is not None:
                blocks[(0, 0)] = a
            if b is not None:
                blocks[(1, 1)] = b
            d[k] = block_matrix(blocks,
                                [len(self.bases.get(k - 1, [])), len(other.bases.get(k - 1, []))],
                                [len(self.bases.get(k, [])), len(other.bases.get(k, []))],
                                _join(self.ring, other.ring))
        return FreeComplex(lo, hi, bases, d, _join(self.ring, other.ring))


@dataclass
class HomologyReport:
    ring: str
    free_rank: Dict[int, int] = field(default_factory=dict)
    torsion: Dict[int, List[Poly]] = field(default_factory=dict)
    generators: Dict[int, List[List[Poly]]] = field(default_factory=dict)
    torsion_generators: Dict[int, List[List[Poly]]] = field(default_factory=dict)
    trusted: Dict[int, bool] = field(default_factory=dict)
    action: Dict[int, SparseMatrix] = field(default_factory=dict)
    # internal data for expressing cycles in the chosen basis
    _coords: Dict[int, object] = field(default_factory=dict, repr=False)

    def degrees(self):
        return sorted(self.free_rank)

    def trusted_degrees(self):
        return [k for k in self.degrees() if self.trusted.get(k)]

    def summary(self, k):
        return self.free_rank[k], [str(f) for f in self.torsion[k]]


def homology(C: FreeComplex, margin: int = 1, generators: bool = False,
             degrees: Optional[Iterable[int]] = None) -> HomologyReport:
    """Degreewise homology over the coefficient ring of C.

    Free rank = rank ker d_k - rank im d_{k+1}; torsion = nonunit invariant
    factors of d_{k+1} (the cokernel of d_k's kernel is free).
    """
    C.validate()
    rep = HomologyReport(C.ring)
    degs = list(C.degrees()) if degrees is None else list(degrees)
    need = set()
    for k in degs:
        need.update((k, k + 1))
    facs = {k: (_graded_factors(C, k) if C.dmin <= k <= C.dmax else []) for k in need}
    for k in degs:
        inc = facs[k + 1] if k + 1 <= C.dmax else []
        out = facs[k] if k > C.dmin else []
        rep.free_rank[k] = C.rank(k) - len(out) - len(inc)
        rep.torsion[k] = [f for f in inc if not f.is_unit()]
        rep.trusted[k] = C.trusted(k, margin)
        if generators:
            _attach_generators(rep, C, k)
    return rep


def _graded_factors(C: FreeComplex, k: int) -> List[Poly]:
    m = C.diff(k)
    if C.weights is None or k - 1 < C.dmin:
        return invariant_factors(m)
    rw, cw = C.weights.get(k - 1, []), C.weights.get(k, [])
    rows: Dict = {}
    cols: Dict = {}
    for i, w in enumerate(rw):
        rows.setdefault(w, []).append(i)
    for j, w in enumerate(cw):
        cols.setdefault(w, []).append(j)
    for (i, j) in m.entries:
        if rw[i] != cw[j]:
            raise ComplexError(f"d_{k} does not preserve the weight grading")
    out = []
    for w in sorted(set(rows) & set(cols), key=repr):
        out.extend(invariant_factors(m.submatrix(rows[w], cols[w])))
    return sorted(out, key=lambda f: (f.deg, f.c))


def _attach_generators(rep: HomologyReport, C: FreeComplex, k: int):
    n = C.rank(k)
    inc = C.diff(k + 1) if k + 1 <= C.dmax else SparseMatrix.zero(n, 0, C.ring)
    out = C.diff(k) if k > C.dmin else SparseMatrix.zero(0, n, C.ring)
    S = smith_normal_form(inc)
    r = len(S.factors)
    P = S.left_inv  # columns: adapted basis of C_k
    tail = list(range(r, n))
    dP = out @ P.submatrix(range(n), tail)
    S2 = smith_normal_form(dP)
    r2 = len(S2.factors)
    free_cols = list(range(r2, len(tail)))
    Pd = P.to_dense()
    V = S2.right.to_dense()
    gens = []
    for c in free_cols:
        vec = [ZERO] * n
        for a, t in enumerate(tail):
            coef = V[a][c]
            if coef.c:
                for i in range(n):
                    if Pd[i][t].c:
                        vec[i] = vec[i] + Pd[i][t] * coef
        gens.append(vec)
    tors = []
    tfac = []
    for i, f in enumerate(S.factors):
        if not f.is_unit():
            tors.append([Pd[row][i] for row in range(n)])
            tfac.append(f)
    rep.generators[k] = gens
    rep.torsion_generators[k] = tors
    rep._coords[k] = (S.left, r, S.factors, S2.right_inv, r2, tail)


def homology_coords(rep: HomologyReport, k: int, cycle: Sequence) -> Tuple[List[Poly], List[Poly]]:
    """Coordinates of a cycle: (free part, torsion part reduced mod factors)."""
    L, r, facs, Vinv, r2, tail = rep._coords[k]
    c = L.apply(list(cycle))
    tors = []
    for i, f in enumerate(facs):
        if not f.is_unit():
            tors.append(c[i] % f)
    w = Vinv.apply([c[t] for t in tail])
    if any(v.c for v in w[:r2]):
        raise ComplexError(f"vector is not a cycle in degree {k}")
    return w[r2:], tors
