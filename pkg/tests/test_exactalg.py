import itertools
import random

import pytest
from hypothesis import given, strategies as st

from mixedcx.exactalg import (QQ, QX, X, ComplexError, FreeComplex, Poly, ResourceLimitError,
                              SparseMatrix, homology, invariant_factors, poly_gcd, smith_normal_form,
                              solve_factor)
from oracles import elementary_divisors, oracle_ranks_over_q, random_complex

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4)
polys = st.lists(rationals, min_size=0, max_size=4).map(Poly)


@st.composite
def matrices(draw, max_size=6):
    r = draw(st.integers(1, max_size))
    c = draw(st.integers(1, max_size))
    sparse = draw(st.floats(0.2, 1.0))
    rows = [[draw(polys) if draw(st.floats(0, 1)) < sparse else Poly() for _ in range(c)]
            for _ in range(r)]
    return SparseMatrix.from_dense(rows, QX, ncols=c)


def _diag(factors, shape):
    return SparseMatrix(shape[0], shape[1], {(i, i): f for i, f in enumerate(factors)}, QX)


def _det(rows):
    n = len(rows)
    if n == 0:
        return Poly.const(1)
    out = Poly()
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = Poly.const(-1 if inv % 2 else 1)
        for i, j in enumerate(perm):
            term = term * rows[i][j]
        out = out + term
    return out


def _determinantal_divisor(M, k):
    g = Poly()
    A = M.to_dense()
    for rs in itertools.combinations(range(M.nrows), k):
        for cs in itertools.combinations(range(M.ncols), k):
            g = poly_gcd(g, _det([[A[i][j] for j in cs] for i in rs]))
    return g.monic() if not g.is_zero() else g


def test_poly_arithmetic_small_cases():
    p = Poly([1, 2, 3])
    assert p * Poly.const(0) == Poly()
    q, r = (X * X - Poly.const(1)).divmod(X - Poly.const(1))
    assert q == X + Poly.const(1) and r.is_zero()
    assert poly_gcd(X * X, X * (X + Poly.const(1))) == X
    assert Poly([0, 0, 5]).valuation() == 2


@given(polys, polys, polys)
def test_poly_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    if not b.is_zero():
        q, r = a.divmod(b)
        assert q * b + r == a and (r.is_zero() or r.deg < b.deg)


@given(matrices())
def test_smith_normal_form_transforms(M):
    S = smith_normal_form(M)
    assert S.left @ M @ S.right == _diag(S.factors, M.shape)
    assert S.left @ S.left_inv == SparseMatrix.identity(M.nrows, QX)
    assert S.right @ S.right_inv == SparseMatrix.identity(M.ncols, QX)
    for f, g in zip(S.factors, S.factors[1:]):
        assert f.divides(g)
    assert [f.monic() for f in S.factors] == invariant_factors(M)


@given(matrices(max_size=4))
def test_factors_match_determinantal_divisors(M):
    fs = invariant_factors(M)
    prod = Poly.const(1)
    for k, f in enumerate(fs, 1):
        prod = prod * f
        assert prod.monic() == _determinantal_divisor(M, k)
    if len(fs) < min(M.shape):
        assert _determinantal_divisor(M, len(fs) + 1).is_zero()


def test_smith_known_example():
    M = SparseMatrix.from_dense([[X, Poly.const(1)], [Poly(), X]])
    assert invariant_factors(M) == [Poly.const(1), X * X]


def test_solve_factor():
    M = SparseMatrix.from_dense([[X]])
    assert solve_factor(M, [X * X]) == [X]
    assert solve_factor(M, [Poly.const(1)]) is None


def test_complex_rejects_nonzero_square():
    d = {1: SparseMatrix.from_dense([[Poly.const(1)]]), 2: SparseMatrix.from_dense([[Poly.const(1)]])}
    C = FreeComplex(0, 2, {0: [0], 1: [0], 2: [0]}, d, QX)
    with pytest.raises(ComplexError):
        C.validate()


def test_complex_rejects_bad_shape():
    C = FreeComplex(0, 1, {0: [0], 1: [0, 1]}, {1: SparseMatrix.from_dense([[X]])}, QX)
    with pytest.raises(ComplexError):
        C.validate()


def test_koszul_complex_of_x_has_torsion():
    C = FreeComplex(0, 1, {0: ["1"], 1: ["xi"]}, {1: SparseMatrix.from_dense([[X]])}, QX, True, True)
    h = homology(C)
    assert h.free_rank == {0: 0, 1: 0} and h.torsion[0] == [X]


@pytest.mark.parametrize("seed", range(30))
def test_homology_against_construction_and_dense_oracle(seed):
    rng = random.Random(seed)
    C, free, tors = random_complex(rng, QX if seed % 2 else QQ)
    h = homology(C)
    oracle = oracle_ranks_over_q(C)
    for k in C.degrees():
        assert h.free_rank[k] == free[k] == oracle[k]
        assert elementary_divisors(h.torsion[k]) == tors[k]


@pytest.mark.parametrize("seed", range(10))
def test_homology_of_direct_sum_adds(seed):
    rng = random.Random(1000 + seed)
    C1, _, _ = random_complex(rng, QX, 30)
    C2, _, _ = random_complex(rng, QX, 30)
    S = C1.direct_sum(C2)
    S.exact_below = S.exact_above = True
    h, h1, h2 = homology(S), homology(C1), homology(C2)
    for k in S.degrees():
        assert h.free_rank[k] == h1.free_rank.get(k, 0) + h2.free_rank.get(k, 0)
        assert elementary_divisors(h.torsion[k]) == sorted(
            elementary_divisors(h1.torsion.get(k, [])) + elementary_divisors(h2.torsion.get(k, [])))


def test_resource_limit(monkeypatch):
    monkeypatch.setenv("MIXEDCX_LIMIT_NONZEROS", "0")
    M = SparseMatrix.from_dense([[X, X + Poly.const(1)], [X * X, X]])
    with pytest.raises(ResourceLimitError):
        invariant_factors(M)


def test_homology_over_q_by_evaluation():
    C, free, _ = random_complex(random.Random(5), QQ)
    assert homology(C).free_rank == {k: free[k] for k in C.degrees()}
