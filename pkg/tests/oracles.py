"""Independent reference computations used by the tests.

Dense Gaussian elimination over fractions.Fraction (no code shared with the
package), and random complexes over Q[x] whose homology is known by
construction: a direct sum of free summands and two-term pieces
Q[x] --f--> Q[x], conjugated by random unimodular basis changes.
"""
from fractions import Fraction
import random

from mixedcx.exactalg import QQ, QX, FreeComplex, Poly, SparseMatrix

PRIMES = {"x": (0, 1), "x-1": (-1, 1), "x+2": (2, 1)}  # coefficient lists, low first


def fraction_rank(rows):
    """Rank of a dense list-of-lists matrix over Q by Gaussian elimination."""
    A = [[Fraction(v) for v in row] for row in rows]
    if not A or not A[0]:
        return 0
    nr, nc = len(A), len(A[0])
    r = 0
    for c in range(nc):
        piv = next((i for i in range(r, nr) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(nr):
            if i != r and A[i][c] != 0:
                f = A[i][c] / A[r][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        r += 1
        if r == nr:
            break
    return r


def evaluated_rows(M: SparseMatrix, x0):
    """Dense Fraction matrix of M at x = x0."""
    out = [[Fraction(0)] * M.ncols for _ in range(M.nrows)]
    for (i, j), p in M.entries.items():
        acc = Fraction(0)
        for e, c in enumerate(p.c):
            acc += Fraction(int(c.numerator), int(c.denominator)) * Fraction(x0) ** e
        out[i][j] = acc
    return out


def oracle_ranks_over_q(C: FreeComplex, x0=Fraction(7, 3)):
    """Homology dimensions of C over Q (or of C at generic x = x0 over Q[x])."""
    rk = {}
    for k in range(C.dmin, C.dmax + 2):
        if C.dmin < k <= C.dmax:
            rk[k] = fraction_rank(evaluated_rows(C.diff(k), x0))
        else:
            rk[k] = 0
    return {k: C.rank(k) - rk[k] - rk[k + 1] for k in C.degrees()}


def _poly(cs):
    return Poly([Fraction(c) for c in cs])


def elementary_divisors(factors):
    """Multiset of prime-power divisors of a list of polynomials built from
    x, x-1, x+2; raises if anything else remains."""
    out = []
    for f in factors:
        f = f.monic()
        for name, cs in PRIMES.items():
            p = _poly(cs)
            e = 0
            while not f.is_const() and p.divides(f):
                f = f // p
                e += 1
            if e:
                out.append((name, e))
        if not f.is_const():
            raise AssertionError(f"unexpected factor {f}")
    return sorted(out)


def _random_unimodular(n, rng, ring):
    """U, U^{-1} as dense lists of Poly, from random elementary operations."""
    one, zero = Poly.const(1), Poly()
    U = [[one if i == j else zero for j in range(n)] for i in range(n)]
    V = [[one if i == j else zero for j in range(n)] for i in range(n)]
    if n < 2:
        return U, V
    for _ in range(2 * n):
        i, j = rng.sample(range(n), 2)
        c = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
        q = Poly.monomial(rng.randint(0, 1) if ring == QX else 0, c)
        # U <- E U with E = I + q e_ij ; U^{-1} <- U^{-1} E^{-1}
        U[i] = [a + q * b for a, b in zip(U[i], U[j])]
        for row in V:
            row[j] = row[j] - row[i] * q
    return U, V


def _dense_mul(A, B):
    n, m, p = len(A), len(B), len(B[0]) if B else 0
    out = [[Poly() for _ in range(p)] for _ in range(n)]
    for i in range(n):
        for k in range(m):
            a = A[i][k]
            if a.is_zero():
                continue
            for j in range(p):
                b = B[k][j]
                if not b.is_zero():
                    out[i][j] = out[i][j] + a * b
    return out


def random_complex(rng: random.Random, ring=QX, max_total=60):
    """Random complex with known homology.

    Returns (C, free, torsion) where free[k] is the free rank in degree k and
    torsion[k] the elementary divisors of the torsion in degree k."""
    ndeg = rng.randint(2, 5)
    lo = rng.randint(-3, 3)
    degs = list(range(lo, lo + ndeg))
    cands = [[1], [2], [-1, 1], [0, 1], [2, 1], [0, 0, 1], [0, -1, 1], [4, 4, 1], [0, 2, 1]]
    if ring == QQ:
        cands = [[1], [2], [-3]]
    free = {k: 0 for k in degs}
    torsion = {k: [] for k in degs}
    basis = {k: [] for k in degs}
    edges = []  # (k, src index, tgt index, f)
    total = 0
    while total < max_total - 2 and rng.random() < 0.93:
        k = rng.choice(degs)
        if rng.random() < 0.3 or k == degs[0]:
            basis[k].append(("free", len(basis[k])))
            free[k] += 1
            total += 1
        else:
            f = _poly(rng.choice(cands))
            basis[k].append(("src", len(basis[k])))
            basis[k - 1].append(("tgt", len(basis[k - 1])))
            edges.append((k, len(basis[k]) - 1, len(basis[k - 1]) - 1, f))
            if not f.is_const():
                torsion[k - 1].append(f)
            total += 2
    d0 = {k: [[Poly() for _ in basis[k]] for _ in basis[k - 1]] for k in degs[1:]}
    for k, s, t, f in edges:
        d0[k][t][s] = f
    UV = {k: _random_unimodular(len(basis[k]), rng, ring) for k in degs}
    d = {}
    for k in degs[1:]:
        if not basis[k] or not basis[k - 1]:
            d[k] = SparseMatrix.zero(len(basis[k - 1]), len(basis[k]), ring)
            continue
        M = _dense_mul(_dense_mul(UV[k - 1][0], d0[k]), UV[k][1])
        d[k] = SparseMatrix.from_dense(M, ring, ncols=len(basis[k]))
    C = FreeComplex(degs[0], degs[-1], {k: list(range(len(basis[k]))) for k in degs}, d, ring,
                    True, True)
    C.validate()
    return C, free, {k: elementary_divisors(v) for k, v in torsion.items()}
