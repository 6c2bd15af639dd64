import pytest
from gmpy2 import mpq

from mixedcx import hkr
from mixedcx.dgcore import PresentationError, koszul_Bn, resolved_curved, truncated_poly
from mixedcx.exactalg import homology
from mixedcx.hochschild import TruncationPolicy, hochschild_mixed, hochschild_second_kind


def _forms_identities(R):
    errs = R.check_identities()
    return errs


@pytest.mark.parametrize("P,twist", [(koszul_Bn(1), None), (koszul_Bn(2), None),
                                     (resolved_curved(1), "curvature"),
                                     (resolved_curved(2), "curvature"),
                                     (resolved_curved(1), None)],
                         ids=["B1", "B2", "A1 twisted", "A2 twisted", "A1 untwisted"])
def test_de_rham_mixed_identities(P, twist):
    D = hkr.kaehler(P)
    window = (0, 5) if P.gens[0].degree > 0 else (-6, 0)
    for sign in (1, -1):
        R = hkr.de_rham_mixed(D, twist, window=window, B_sign=sign)
        assert _forms_identities(R) == []


def test_d_and_d_dR_anticommute_on_generators():
    D = hkr.kaehler(resolved_curved(2))
    F = D.forms
    for g in F.gens:
        a = F.gen(g.name)
        assert (F.differential(D.d_dR(a)) + D.d_dR(F.differential(a))).is_zero()
        assert D.d_dR(D.d_dR(a)).is_zero()


def test_kaehler_refuses_relations_and_free_algebras():
    with pytest.raises(PresentationError):
        hkr.kaehler(truncated_poly(2))


def test_twist_must_be_closed_one_form():
    D = hkr.kaehler(resolved_curved(1))
    with pytest.raises(PresentationError):
        hkr.de_rham_mixed(D, "t", window=(-4, 0))


@pytest.mark.parametrize("n", [1, 2])
def test_hkr_is_chain_map_and_quasi_iso_for_koszul(n):
    M = hochschild_mixed(koszul_Bn(n), TruncationPolicy((0, 5)))
    F, rep = hkr.hkr_map(M)
    assert rep["chain_map_errors"] == []
    q = hkr.hkr_quasi_iso(F)
    assert q["ok"] and q["degrees"]


@pytest.mark.parametrize("n", [1, 2])
def test_curved_hkr_is_chain_map_and_quasi_iso(n):
    M = hochschild_second_kind(resolved_curved(n), TruncationPolicy((-6, 0)))
    F, rep = hkr.hkr_map(M)
    assert rep["chain_map_errors"] == []
    assert hkr.hkr_quasi_iso(F)["ok"]


def test_hkr_with_wrong_b_sign_fails():
    M = hochschild_mixed(koszul_Bn(1), TruncationPolicy((0, 4)))
    D = hkr.kaehler(M.presentation)
    R = hkr.de_rham_mixed(D, None, window=M.window, B_sign=1)
    _, rep = hkr.hkr_map(M, R)
    assert rep["chain_map_errors"]


@pytest.mark.parametrize("n", [1, 2])
def test_k_dual_matches_monomial_model(n):
    E = hkr.instantiate_explicit("K_dual", n, TruncationPolicy((-2, 10), 4, 2))
    H = hkr.explicit_homology(E)
    cmp = hkr.compare(H, hkr.monomial_model(n, n + 1, n), H.degrees())
    assert cmp["ok"], cmp["first_mismatch"]
    assert sum(1 for r in cmp["rows"] if "u_action" in r) >= 3
    assert hkr.verify_K_dual_map(E)["ok"]


def test_k_dual_rejects_wrong_model():
    E = hkr.instantiate_explicit("K_dual", 2, TruncationPolicy((-2, 10), 4, 2))
    H = hkr.explicit_homology(E)
    assert not hkr.compare(H, hkr.monomial_model(1, 1, 1), H.degrees())["ok"]


@pytest.mark.parametrize("n", [1, 2])
def test_laurent_dual(n):
    E = hkr.instantiate_explicit("laurent_dual", n, TruncationPolicy((-10, 2), 5))
    H = hkr.explicit_homology(E)
    model = hkr.monomial_model(1, n, n, laurent=True, polynomial_u=True)
    assert all(model.u_exponent(j) == n for j in range(5))
    assert hkr.compare(H, model, H.degrees())["ok"]


def test_monomial_model_basics():
    m = hkr.monomial_model(1, 2, 1)
    assert m.i_min(0) == 0 and m.i_min(-1) == 1 and m.i_min(-3) == 5
    assert m.contains(1, -1) and not m.contains(0, -1)
    with pytest.raises(ValueError):
        hkr.monomial_model(0, 1, 1)


@pytest.mark.parametrize("n", [1, 2])
def test_phi_is_chain_map_and_quasi_iso(n):
    r = hkr.verify_phi(n, TruncationPolicy((-8, 0), 4, 2))
    assert r["chain_map_failures"] == [] and r["cone_acyclic"] and r["degrees"]


@pytest.mark.parametrize("n", [1, 2])
def test_spectral_sequence_consistency(n):
    _, F = hkr.twisted_forms_filtered(n, (-10, 0))
    SS = hkr.spectral_sequence(F, 4)
    assert all(SS.total(4, k) == SS.homology_dims[k] for k in SS.degrees)
    assert SS.concentrated_in_odd_degrees(3)
    assert SS.degenerates_at() <= 3
    assert any(SS.d_rank[2].values())


def test_filtration_validation_catches_bad_levels():
    R, F = hkr.twisted_forms_filtered(1, (-6, 0))
    bad = hkr.FiltrationData(F.complex, {k: [-v for v in lv] for k, lv in F.level.items()}, F.weight)
    with pytest.raises(Exception):
        bad.validate()


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("l", [0, 1, 2, 3])
def test_d2_coefficient(n, l):
    r = hkr.d2_representative(n, l)
    assert r["coefficient"] == mpq(-1, (n + 1) * (l + 1)) == r["expected"]
    assert r["coefficient_left_shift"] == -r["coefficient"]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_hp_stage_compatibility(n):
    r = hkr.hp_stage_compatibility(n)
    assert r["ok"] and len(r["rows"]) == 17


def test_hkr_target_homology_of_b1():
    M = hochschild_mixed(koszul_Bn(1), TruncationPolicy((0, 5)))
    R = hkr.hkr_target(M)
    h = homology(R.complex)
    assert [str(f) for f in h.torsion[0]] == ["x"]
