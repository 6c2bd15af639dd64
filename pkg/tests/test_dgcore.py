from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mixedcx.dgcore import (COMM, FREE, AlgebraMorphism, BasisNotFinite, DgPresentation,
                            Generator, PresentationError, algebra_Cn, curved_truncated,
                            is_chain_algebra_map, koszul_Bn, monomial_basis, parse_expression,
                            resolved_curved, truncated_poly, validate_presentation)
from mixedcx.exactalg import QQ, QX, Poly

FREE_ALG = algebra_Cn(3)
COMM_ALG = DgPresentation(QX, COMM, [Generator("a", 1), Generator("b", 1), Generator("c", 2),
                                     Generator("e", 3)], {"e": "a*b*c"}, name="graded comm")
CURVED = resolved_curved(2)

coeffs = st.fractions(min_value=-4, max_value=4, max_denominator=3)


def words(P, max_len=4):
    return st.lists(st.integers(0, len(P.gens) - 1), min_size=0, max_size=max_len)


def monomial_element(P, word, c):
    out = P.scalar(c)
    for i in word:
        out = out * P.gen(P.gens[i].name)
    return out


def elements(P):
    return st.lists(st.tuples(words(P), coeffs), min_size=1, max_size=3).map(
        lambda ts: sum((monomial_element(P, w, c) for w, c in ts), P.zero()))


@pytest.mark.parametrize("P", [FREE_ALG, COMM_ALG, CURVED], ids=["free", "comm", "curved"])
def test_associativity(P):
    @given(elements(P), elements(P), elements(P))
    def check(a, b, c):
        assert (a * b) * c == a * (b * c)

    check()


@pytest.mark.parametrize("P", [FREE_ALG, COMM_ALG, CURVED, koszul_Bn(2)],
                         ids=["free", "comm", "curved", "B2"])
def test_graded_leibniz(P):
    @given(words(P), words(P), coeffs, coeffs)
    def check(wa, wb, ca, cb):
        a, b = monomial_element(P, wa, ca), monomial_element(P, wb, cb)
        if a.is_zero() or b.is_zero():
            return
        sign = -1 if a.degree() % 2 else 1
        assert (a * b).d() == a.d() * b + a * b.d() * sign

    check()


@given(st.permutations(range(4)))
def test_koszul_sign_of_permutation(perm):
    P = COMM_ALG
    gens = [P.gen(g.name) for g in P.gens]
    degs = [g.degree for g in P.gens]
    sign = 1
    for i in range(4):
        for j in range(i + 1, 4):
            if perm[i] > perm[j] and degs[perm[i]] % 2 and degs[perm[j]] % 2:
                sign = -sign
    ordered = gens[0] * gens[1] * gens[2] * gens[3]
    permuted = P.one()
    for i in perm:
        permuted = permuted * gens[i]
    assert permuted == ordered * sign


def test_odd_generator_squares_to_zero():
    B = koszul_Bn(3)
    xi = B.gen("xi")
    assert (xi * xi).is_zero()
    assert B.differential(xi) == parse_expression(B, "x^3")


@pytest.mark.parametrize("P", [resolved_curved(1), resolved_curved(2), resolved_curved(3),
                               curved_truncated(2)], ids=lambda P: P.name)
def test_presentations_validate_with_weights(P):
    assert validate_presentation(P, check_weights=True).ok


def test_cn_differential():
    C2 = algebra_Cn(2)
    assert C2.gen("y2").d() == C2.gen("y1") * C2.gen("y1")
    assert C2.gen("y1").d() == C2.scalar(Poly([0, 1]))
    assert (C2.gen("y2").d()).d().is_zero()


def test_curved_square_is_commutator():
    A = resolved_curved(1)
    h = A.curvature
    for g in A.gens:
        a = A.gen(g.name)
        assert a.d().d() == h * a - a * h


def test_invalid_differential_detected():
    bad = DgPresentation(QX, FREE, [Generator("y1", 1), Generator("y2", 3)], {"y1": "x", "y2": "y1"})
    rep = validate_presentation(bad)
    assert not rep.ok and rep.failing == "y2"


def test_nonzero_curvature_differential_detected():
    P = DgPresentation(QX, COMM, [Generator("t", -2), Generator("z", -1), Generator("w", -1)],
                       {"z": "t"}, curvature="z*w")
    assert not validate_presentation(P).ok


def test_monomial_basis_counts():
    assert {k: len(v) for k, v in monomial_basis(algebra_Cn(1), (0, 4)).items()} == \
        {0: 1, 1: 1, 2: 1, 3: 1, 4: 1}
    assert sum(len(v) for v in monomial_basis(truncated_poly(3), (0, 0)).values()) == 3
    assert {k: len(v) for k, v in monomial_basis(curved_truncated(2), (-4, 0)).items()} == \
        {-4: 1, -3: 0, -2: 1, -1: 0, 0: 1}


def test_monomial_basis_refuses_infinite():
    P = DgPresentation(QQ, COMM, [Generator("x", 0)])
    with pytest.raises(BasisNotFinite):
        monomial_basis(P, (0, 2))
    mixed = DgPresentation(QX, COMM, [Generator("a", 1), Generator("t", -2)])
    with pytest.raises(BasisNotFinite):
        monomial_basis(mixed, (0, 2))


def test_parse_expression_errors():
    with pytest.raises(PresentationError):
        parse_expression(algebra_Cn(1), "y1 + z")
    with pytest.raises(PresentationError):
        parse_expression(truncated_poly(2), "x*(x")
    with pytest.raises(PresentationError):
        parse_expression(truncated_poly(2), "x +")


def test_parse_expression_values():
    C2 = algebra_Cn(2)
    e = parse_expression(C2, "3/2*y1*y1 + x*y2")
    assert e == C2.gen("y1") * C2.gen("y1") * Poly([Fraction(3, 2)]) + C2.gen("y2") * Poly([0, 1])
    assert parse_expression(C2, "(y1 + y2)^2") == (C2.gen("y1") + C2.gen("y2")) ** 2


def test_transition_maps_are_chain_maps():
    for n in (1, 2):
        P, Q = algebra_Cn(n), algebra_Cn(n + 1)
        f = AlgebraMorphism(P, Q, {g.name: Q.gen(g.name) for g in P.gens})
        assert is_chain_algebra_map(f).ok


def test_morphism_degree_checked():
    P, Q = algebra_Cn(1), algebra_Cn(2)
    with pytest.raises(PresentationError):
        AlgebraMorphism(P, Q, {"y1": Q.gen("y2")})
