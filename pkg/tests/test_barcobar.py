import random

import pytest
from hypothesis import given, strategies as st

from mixedcx import barcobar as bc
from mixedcx.dgcore import algebra_Cn, truncated_poly
from mixedcx.exactalg import ComplexError


@pytest.mark.parametrize("A", [truncated_poly(2), truncated_poly(3), bc.cobar(bc.truncated_dual(3))],
                         ids=["A2", "A3", "Cobar dual A3"])
def test_bar_is_a_dg_coalgebra(A):
    B = bc.bar(A, 5)
    assert B.coalgebra.check() == []
    for C in B.complexes.values():
        C.validate()


def test_bar_of_truncated_polynomial_is_koszul():
    # Bar(Q[s]/s^2) has homology Q in each weight, on the diagonal
    dims = bc.bar(truncated_poly(2), 5).homology_dims()
    assert dims == {(w, w): 1 for w in range(6)}


def test_bar_requires_positive_weights_and_q():
    with pytest.raises(Exception):
        bc.bar(algebra_Cn(1), 3)


def test_truncated_dual_coalgebra():
    C = bc.truncated_dual(3)
    assert C.dims() == {(0, 0): 1, (0, 1): 1, (0, 2): 1}
    assert C.reduced_delta("s^2") == {("s^1", "s^1"): 1}


def test_coalgebra_validation_catches_broken_counit():
    C = bc.truncated_dual(2)
    C.delta["s^1"] = {("s^0", "s^1"): 1}
    with pytest.raises(ComplexError):
        C.validate()


def test_cobar_of_truncated_dual():
    A = bc.cobar(bc.truncated_dual(3))
    c1, c2 = A.gen("c1"), A.gen("c2")
    assert [g.degree for g in A.gens] == [-1, -1]
    assert c2.d() == c1 * c1
    assert c1.d().is_zero()


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_bar_cobar_roundtrip(n):
    assert bc.bar_cobar_roundtrip(bc.truncated_dual(n), 4)["ok"]


@pytest.mark.parametrize("A", [truncated_poly(2), truncated_poly(3), bc.cobar(bc.truncated_dual(2))],
                         ids=["A2", "A3", "Cobar dual A2"])
def test_cobar_bar_roundtrip(A):
    r = bc.cobar_bar_roundtrip(A, 4)
    assert r["ok"], (r["algebra"], r["cobar_bar"])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_koszul_dual_endomorphisms(n):
    rep = bc.koszul_dual_endomorphisms(bc.cobar(bc.truncated_dual(n)), 5)
    assert rep.total_dimension == n
    if n >= 2:
        assert rep.generator_nilpotency == n


def test_amitsur_trivial_and_rank_two():
    assert bc.amitsur_homotopy([1], [[1]], 5).ok
    assert bc.amitsur_homotopy([1, 0], [[1, 0], [1, 0], [0, 1], [0, 1]], 5).ok


@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_amitsur_random_section_data(seed, r):
    eps, D = bc.random_section_data(r, random.Random(seed))
    rep = bc.amitsur_homotopy(eps, D, 4 if r == 3 else 5)
    assert rep.ok and rep.failure_level is None


def test_amitsur_rejects_section_law_failure():
    with pytest.raises(ComplexError):
        bc.amitsur_homotopy([1, 0], [[1, 0], [0, 0], [0, 0], [0, 0]], 3)


RANK1 = bc.GradedModule([1], {}, {0: 1})
RANK2 = bc.GradedModule([1, 0], {}, {0: 1})
RANK3 = bc.GradedModule([1, 0, 1], {(1, 2): 1}, {0: 1})


@pytest.mark.parametrize("V", [RANK1, RANK2, RANK3], ids=["rank1", "rank2", "rank3"])
def test_deformed_tensor_associated_graded(V):
    r = bc.check_associated_graded(V, 5, (0, 5))
    assert r["ok"] and r["colimit_matches"]


def test_deformed_tensor_rank1_is_contractible():
    # d(v^k) = v^(k-1) for k odd and 0 for k even, so d(v) = 1 kills the unit
    T = bc.deformed_tensor_algebra(RANK1, 5, (0, 5))
    assert all(v == 0 for v in bc._homology_dims_q(T.complex).values())
    plain = bc.deformed_tensor_algebra(RANK1, 5, (0, 5), deformed=False)
    assert all(v == 1 for v in bc._homology_dims_q(plain.complex).values())


def test_graded_module_validation():
    with pytest.raises(ComplexError):
        bc.GradedModule([0], {}, {0: 1}).validate()
    with pytest.raises(ComplexError):
        bc.GradedModule([1, 0], {(0, 1): 1}, {}).validate()
