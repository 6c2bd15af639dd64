import pytest

from mixedcx.dgcore import (COMM, AlgebraMorphism, DgPresentation, Generator, algebra_Cn,
                            curved_truncated, koszul_Bn, resolved_curved, truncated_poly)
from mixedcx.exactalg import QQ, homology
from mixedcx.hochschild import (TruncationPolicy, comparison_map, dualize_mixed, hochschild_mixed,
                                hochschild_second_kind, induced_map, match_up_to_signs,
                                naive_hochschild, negative_cyclic, stable_ranks)


def constructed_complexes():
    T = TruncationPolicy((0, 6))
    yield "HH(A2)", hochschild_mixed(truncated_poly(2), T)
    yield "HH~(A3)", hochschild_mixed(truncated_poly(3), T, reduced_unit=True)
    yield "HH(C1)", hochschild_mixed(algebra_Cn(1), T)
    yield "HH(C2)", hochschild_mixed(algebra_Cn(2), T)
    yield "HH(B2)", hochschild_mixed(koszul_Bn(2), TruncationPolicy((0, 5)))
    yield "naive(C2)", naive_hochschild(algebra_Cn(2), T)
    yield "dual naive(C1)", dualize_mixed(naive_hochschild(algebra_Cn(1), T))
    yield "II(A,-xt) n=1", hochschild_second_kind(curved_truncated(1), TruncationPolicy((-6, 0)))
    yield "II(A,-xt) n=2", hochschild_second_kind(curved_truncated(2), TruncationPolicy((-6, 0)))
    yield "II(A~1)", hochschild_second_kind(resolved_curved(1), TruncationPolicy((-6, 0)))


@pytest.mark.parametrize("name,M", list(constructed_complexes()), ids=lambda v: v if isinstance(v, str) else "")
def test_mixed_identities(name, M):
    assert M.check_identities() == []


def test_reduced_hh_of_truncated_polynomials():
    for n in (2, 3):
        M = hochschild_mixed(truncated_poly(n), TruncationPolicy((0, 6)), reduced_unit=True)
        h = homology(M.complex)
        assert {h.free_rank[k] for k in h.trusted_degrees()} == {n - 1}


def test_hh_of_koszul_b1_is_q():
    # Q[x, xi] with d xi = x resolves Q = Q[x]/x; HH over Q[x] is a divided
    # power algebra on a degree-2 class: Q[x]/x in each even degree
    M = hochschild_mixed(koszul_Bn(1), TruncationPolicy((0, 5)))
    h = homology(M.complex)
    for k in h.trusted_degrees():
        assert h.free_rank[k] == 0
        assert [str(f) for f in h.torsion[k]] == (["x"] if k % 2 == 0 else [])


@pytest.mark.parametrize("n", [2, 3])
def test_negative_cyclic_stabilizes_in_u_order(n):
    M = hochschild_mixed(truncated_poly(n), TruncationPolicy((0, 11)), reduced_unit=True)
    r1 = stable_ranks(M, TruncationPolicy((-4, 3), u_order=3, margin=1))
    r2 = stable_ranks(M, TruncationPolicy((-4, 3), u_order=5, margin=1))
    common = set(r1) & set(r2)
    assert len(common) >= 6
    assert all(r1[k] == r2[k] for k in common)
    assert all(r1[k] == (n - 1 if k % 2 and k >= 1 else 0) for k in r1)


def test_negative_cyclic_trust_window():
    M = hochschild_mixed(truncated_poly(2), TruncationPolicy((0, 8)), reduced_unit=True)
    CC = negative_cyclic(M, TruncationPolicy((-4, 4), u_order=3))
    assert CC.trusted_range[0] >= -4 and CC.trusted_range[1] <= 4
    assert CC.complex.dmax <= 8 - 2 * 2


@pytest.mark.parametrize("n", [1, 2, 3])
def test_compact_map_vanishes(n):
    P, Q = truncated_poly(n + 1), truncated_poly(n)
    f = AlgebraMorphism(P, Q, {"x": Q.gen("x")})
    T = TruncationPolicy((0, 7))
    F = induced_map(f, hochschild_mixed(P, T, reduced_unit=True),
                    hochschild_mixed(Q, T, reduced_unit=True))
    assert F.check() == []
    for l in range(max(n - 1, 0), 4):
        assert F.is_zero_on_homology(2 * l)


def test_compact_map_nonzero_below_threshold():
    # n = 3: on HH_0 the map x -> x is the surjection xQ[x]/x^4 -> xQ[x]/x^3
    P, Q = truncated_poly(4), truncated_poly(3)
    f = AlgebraMorphism(P, Q, {"x": Q.gen("x")})
    T = TruncationPolicy((0, 5))
    F = induced_map(f, hochschild_mixed(P, T, reduced_unit=True),
                    hochschild_mixed(Q, T, reduced_unit=True))
    assert not F.is_zero_on_homology(0)


@pytest.mark.parametrize("n", [1, 2])
def test_functoriality_cn_to_cn1(n):
    P, Q = algebra_Cn(n), algebra_Cn(n + 1)
    f = AlgebraMorphism(P, Q, {g.name: Q.gen(g.name) for g in P.gens})
    T = TruncationPolicy((0, 6))
    F = induced_map(f, hochschild_mixed(P, T), hochschild_mixed(Q, T))
    assert F.check() == []


@pytest.mark.parametrize("n", [1, 2])
def test_naive_complex_compares_to_hochschild(n):
    P = algebra_Cn(n)
    T = TruncationPolicy((0, 7))
    F, rep = comparison_map(hochschild_mixed(P, T), naive_hochschild(P, T))
    assert F.check() == []
    assert rep["homology"]["agree"]


def _second_kind_label(lab):
    lab = lab[1]

    def tm(i):
        return (0,) * (i + 1)

    w = tuple(tm(i) for i in lab[1])
    return ((),) + w if lab[0] == "A" else (tm(lab[2]),) + w


@pytest.mark.parametrize("n", [1, 2])
def test_second_kind_is_dual_of_naive(n):
    D = dualize_mixed(naive_hochschild(algebra_Cn(n), TruncationPolicy((0, 6))))
    H = hochschild_second_kind(curved_truncated(n), TruncationPolicy((-6, 0)))
    assert match_up_to_signs(D, H, _second_kind_label).ok


def test_affine_line_weight_pieces():
    P = DgPresentation(QQ, COMM, [Generator("x", 0, weight=1)])
    M = hochschild_mixed(P, TruncationPolicy((0, 10), weight_bound=4))
    ranks = stable_ranks(M, TruncationPolicy((-6, 3), 4, 2, 4))
    assert ranks[0] == 1 and ranks[-2] == 1 and ranks[1] == 4
    assert all(v == 0 for k, v in ranks.items() if k not in (-2, 0, 1))
