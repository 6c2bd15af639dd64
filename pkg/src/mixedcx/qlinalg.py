"""Exact linear algebra over Q on python-flint matrices: subspaces, kernels,
quotient coordinates, Kronecker products."""
from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

import flint
from gmpy2 import mpq

from .exactalg import ComplexError


def fq(v) -> "flint.fmpq":
    """mpq / int / fmpq -> fmpq."""
    if isinstance(v, flint.fmpq):
        return v
    v = mpq(v)
    return flint.fmpq(int(v.numerator), int(v.denominator))


def matrix(nrows: int, ncols: int, entries: Dict[Tuple[int, int], object] = None):
    M = flint.fmpq_mat(nrows, ncols)
    for (i, j), v in (entries or {}).items():
        M[i, j] = fq(v)
    return M


def identity(n: int):
    return matrix(n, n, {(i, i): 1 for i in range(n)})


def kron(A, B):
    ar, ac, br, bc = A.nrows(), A.ncols(), B.nrows(), B.ncols()
    M = flint.fmpq_mat(ar * br, ac * bc)
    for i in range(ar):
        for j in range(ac):
            a = A[i, j]
            if a == 0:
                continue
            for k in range(br):
                for l in range(bc):
                    b = B[k, l]
                    if b != 0:
                        M[i * br + k, j * bc + l] = a * b
    return M


def rank(M) -> int:
    if M.nrows() == 0 or M.ncols() == 0:
        return 0
    return M.rank()


def is_zero(M) -> bool:
    return all(M[i, j] == 0 for i in range(M.nrows()) for j in range(M.ncols()))


def column(M, j) -> List:
    return [M[i, j] for i in range(M.nrows())]


def apply(M, v: Sequence) -> List:
    if M.ncols() == 0:
        return [flint.fmpq(0)] * M.nrows()
    out = M * flint.fmpq_mat(len(v), 1, list(v))
    return [out[i, 0] for i in range(out.nrows())]


class Space:
    """Subspace of Q^n held as a matrix whose columns are a basis."""

    def __init__(self, n: int, cols):
        self.n = n
        cols = [c for c in cols if any(c)]
        if not cols:
            self.basis = []
            return
        M = flint.fmpq_mat(len(cols), n, [a for c in cols for a in c])
        R, r = M.rref()
        self.basis = [[R[i, j] for j in range(n)] for i in range(r)]

    @property
    def dim(self):
        return len(self.basis)

    def __add__(self, other):
        return Space(self.n, self.basis + other.basis)


def kernel(A, ncols: int):
    """Basis of {v : A v = 0} for a flint matrix A (nrows may be 0)."""
    if A.nrows() == 0:
        return [[flint.fmpq(1 if i == j else 0) for i in range(ncols)] for j in range(ncols)]
    R, r = A.rref()
    pivots = []
    row = 0
    for j in range(ncols):
        if row < r and R[row, j] != 0:
            pivots.append(j)
            row += 1
    free = [j for j in range(ncols) if j not in set(pivots)]
    out = []
    for fj in free:
        v = [flint.fmpq(0)] * ncols
        v[fj] = flint.fmpq(1)
        for i, pj in enumerate(pivots):
            v[pj] = -R[i, fj]
        out.append(v)
    return out


def quotient_coords(den: Space, reps: List, v) -> List:
    """Coordinates of v modulo den in the basis reps (v must lie in den + span reps)."""
    cols = den.basis + reps
    n = den.n
    if not reps:
        return []
    M = flint.fmpq_mat(n, len(cols) + 1)
    for j, c in enumerate(cols):
        for i in range(n):
            M[i, j] = c[i]
    for i in range(n):
        M[i, len(cols)] = v[i]
    R, r = M.rref()
    sol = [flint.fmpq(0)] * len(cols)
    row = 0
    for j in range(len(cols) + 1):
        if row < r and R[row, j] != 0:
            if j == len(cols):
                raise ComplexError("vector outside the subquotient")
            sol[j] = R[row, len(cols)]
            row += 1
    return sol[den.dim:]


