"""Acceptance criteria, each checked exactly and timed.

Every test prints a single line "criterion N: PASS|FAIL (...)" even under
pytest's output capture; run ``python3 tests/test_acceptance.py`` for the
lines alone.
"""
import random
import subprocess
import sys
import time
from contextlib import contextmanager

import pytest
from gmpy2 import mpq

from mixedcx import barcobar as bc
from mixedcx import hkr
from mixedcx import witt as W
from mixedcx.cli import emit
from mixedcx.dgcore import AlgebraMorphism, algebra_Cn, curved_truncated, koszul_Bn, resolved_curved, truncated_poly
from mixedcx.exactalg import QQ, QX, homology
from mixedcx.hochschild import (TruncationPolicy, dualize_mixed, hochschild_mixed, hochschild_second_kind,
                                induced_map, match_up_to_signs, naive_hochschild)
from mixedcx.scenarios import _bijection_second_kind, run_scenario
from oracles import elementary_divisors, oracle_ranks_over_q, random_complex

_capsys_holder = {}


@pytest.fixture(autouse=True)
def _hold_capsys(capsys):
    _capsys_holder["c"] = capsys
    yield


def _report(line):
    c = _capsys_holder.get("c")
    if c is None:
        print(line)
        return
    with c.disabled():
        print("\n" + line)


@contextmanager
def criterion(num, title, limit):
    state = {"failures": []}
    t0 = time.perf_counter()
    try:
        yield state["failures"]
    except Exception as e:  # report, then re-raise
        state["failures"].append(f"{type(e).__name__}: {e}")
        raise
    finally:
        dt = time.perf_counter() - t0
        if dt >= limit:
            state["failures"].append(f"runtime {dt:.2f}s >= {limit}s")
        ok = not state["failures"]
        detail = "; ".join(state["failures"][:3])
        _report(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}  [{dt:.2f}s / {limit}s]"
                + (f"  {detail}" if detail else ""))
    assert not state["failures"], state["failures"]


def test_criterion_01_reduced_hh_truncated():
    with criterion(1, "reduced HH of Q[x]/x^n: dim n-1 in trusted degrees, n = 2, 3, 4", 15) as fail:
        for n in (2, 3, 4):
            t0 = time.perf_counter()
            M = hochschild_mixed(truncated_poly(n), TruncationPolicy((0, 7)), reduced_unit=True)
            h = homology(M.complex)
            degs = h.trusted_degrees()
            if len(degs) < 6:
                fail.append(f"n={n}: only {len(degs)} trusted degrees")
            bad = [k for k in degs if h.free_rank[k] != n - 1]
            if bad:
                fail.append(f"n={n}: mismatch at {bad}")
            if time.perf_counter() - t0 >= 5:
                fail.append(f"n={n}: over 5s")


def test_criterion_02_compact_map():
    with criterion(2, "H_2l(HH(A_{n+1})) -> H_2l(HH(A_n)) is zero for l >= n-1", 10) as fail:
        T = TruncationPolicy((0, 7))
        for n in (1, 2, 3):
            P, Q = truncated_poly(n + 1), truncated_poly(n)
            f = AlgebraMorphism(P, Q, {"x": Q.gen("x")})
            F = induced_map(f, hochschild_mixed(P, T, reduced_unit=True),
                            hochschild_mixed(Q, T, reduced_unit=True))
            if F.check():
                fail.append(f"n={n}: not a chain map")
            for l in range(max(n - 1, 0), 4):
                if not F.is_zero_on_homology(2 * l):
                    fail.append(f"n={n}: nonzero on H_{2 * l}")


def test_criterion_03_laurent_dual():
    with criterion(3, "Laurent dual: rank 1 even, 0 odd, u acts by x^n", 10) as fail:
        for n in (1, 2):
            E = hkr.instantiate_explicit("laurent_dual", n, TruncationPolicy((-10, 2), 5))
            H = hkr.explicit_homology(E)
            model = hkr.monomial_model(1, n, n, laurent=True, polynomial_u=True)
            cmp = hkr.compare(H, model, H.degrees())
            steps = [r for r in cmp["rows"] if "u_action" in r]
            if not cmp["ok"]:
                fail.append(f"n={n}: mismatch at degree {cmp['first_mismatch']}")
            if len(steps) < 3 or any(r["u_exponent_expected"] != n for r in steps):
                fail.append(f"n={n}: u-action pattern not checked on enough degrees")


def test_criterion_04_hc_minus_pipeline():
    with criterion(4, "HC^- lemma pipeline (a)-(e), n = 1, 2", 60) as fail:
        for n in (1, 2):
            D = dualize_mixed(naive_hochschild(algebra_Cn(n), TruncationPolicy((0, 6))))
            H2 = hochschild_second_kind(curved_truncated(n), TruncationPolicy((-6, 0)))
            if not match_up_to_signs(D, H2, _bijection_second_kind).ok:
                fail.append(f"(a) n={n}")
            M = hochschild_second_kind(resolved_curved(n), TruncationPolicy((-8, 0)))
            F, rep = hkr.hkr_map(M)
            if rep["chain_map_errors"] or not hkr.hkr_quasi_iso(F)["ok"]:
                fail.append(f"(b) n={n}")
            for l in range(4):
                d2 = hkr.d2_representative(n, l)
                if d2["coefficient"] != mpq(-1, (n + 1) * (l + 1)):
                    fail.append(f"(c) d_2 n={n} l={l}: {d2['coefficient']}")
            _, Fil = hkr.twisted_forms_filtered(n, (-10, 0))
            SS = hkr.spectral_sequence(Fil, 4)
            if not SS.concentrated_in_odd_degrees(3):
                fail.append(f"(c) E_3 n={n}")
            ph = hkr.verify_phi(n, TruncationPolicy((-8, 0), 4, 2))
            if ph["chain_map_failures"] or not ph["cone_acyclic"]:
                fail.append(f"(d) n={n}")
            E = hkr.instantiate_explicit("K_dual", n, TruncationPolicy((-2, 10), 4, 2))
            Hk = hkr.explicit_homology(E)
            if not hkr.compare(Hk, hkr.monomial_model(n, n + 1, n), Hk.degrees())["ok"]:
                fail.append(f"(e) n={n}")


def test_criterion_05_hp_stages():
    with criterion(5, "HP stage-n models embed in stage n+1", 2) as fail:
        for n in (1, 2):
            r = hkr.hp_stage_compatibility(n)
            if not r["ok"]:
                fail.append(f"n={n}: {[row['j'] for row in r['rows'] if not row['ok']]}")


def test_criterion_06_koszul_duality():
    with criterion(6, "Koszul dual of A_n: dim n, nilpotency n; bar-cobar round trip", 20) as fail:
        for n in (2, 3):
            rep = bc.koszul_dual_endomorphisms(bc.cobar(bc.truncated_dual(n)), 6)
            if rep.total_dimension != n or rep.generator_nilpotency != n:
                fail.append(f"n={n}: dim {rep.total_dimension}, nilpotency {rep.generator_nilpotency}")
            if not bc.bar_cobar_roundtrip(bc.truncated_dual(n), 4)["ok"]:
                fail.append(f"n={n}: round trip")


def test_criterion_07_amitsur():
    with criterion(7, "Amitsur dh + hd = id on levels <= 5", 5) as fail:
        if not bc.amitsur_homotopy([1], [[1]], 5).ok:
            fail.append("trivial")
        if not bc.amitsur_homotopy([1, 0], [[1, 0], [1, 0], [0, 1], [0, 1]], 5).ok:
            fail.append("rank 2")
        rng = random.Random(2024)
        for i in range(20):
            eps, D = bc.random_section_data(2, rng)
            if not bc.amitsur_homotopy(eps, D, 5).ok:
                fail.append(f"random {i}")


def test_criterion_08_deformed_tensor():
    with criterion(8, "gr of deformed tensor algebra = plain tensor algebra", 2) as fail:
        for name, V in (("rank 1", bc.GradedModule([1], {}, {0: 1})),
                        ("rank 2", bc.GradedModule([1, 0], {}, {0: 1}))):
            if not bc.check_associated_graded(V, 5, (0, 5))["ok"]:
                fail.append(name)


def test_criterion_09_witt():
    with criterion(9, "Witt generator identity, ghost homomorphism, rationality certificate", 2) as fail:
        rng = random.Random(9)

        def rq():
            return mpq(rng.randint(-9, 9), rng.randint(1, 9))

        for _ in range(10):
            a, b = rq(), rq()
            if W.teichmuller(a, 6) * W.teichmuller(b, 6) != W.teichmuller(a * b, 6):
                fail.append("teichmuller product")
        for _ in range(50):
            x = W.WittVector(W.RATIONALS, tuple(rq() for _ in range(6)))
            y = W.WittVector(W.RATIONALS, tuple(rq() for _ in range(6)))
            gx, gy = W.ghost(x), W.ghost(y)
            if W.ghost(x + y) != [p + q for p, q in zip(gx, gy)] or \
                    W.ghost(x * y) != [p * q for p, q in zip(gx, gy)]:
                fail.append("ghost")
        w = W.series_of_ratio([1, -1], [1, -2], 10)
        rep = W.is_rational(w, 1)
        if not (rep.rational and rep.numerator == [1, -1] and rep.denominator == [1, -2]
                and W.verify_certificate(w, rep)):
            fail.append("certificate")


def _all_mixed_complexes():
    T = TruncationPolicy((0, 6))
    yield hochschild_mixed(truncated_poly(3), T, reduced_unit=True)
    yield hochschild_mixed(algebra_Cn(2), T)
    yield hochschild_mixed(koszul_Bn(2), TruncationPolicy((0, 5)))
    yield naive_hochschild(algebra_Cn(2), T)
    yield dualize_mixed(naive_hochschild(algebra_Cn(1), T))
    yield hochschild_second_kind(curved_truncated(2), TruncationPolicy((-6, 0)))
    yield hochschild_second_kind(resolved_curved(2), TruncationPolicy((-6, 0)))
    yield hkr.de_rham_mixed(hkr.kaehler(resolved_curved(2)), "curvature", window=(-6, 0))
    yield hkr.de_rham_mixed(hkr.kaehler(koszul_Bn(2)), None, window=(0, 5), B_sign=-1)


def test_criterion_10_infrastructure():
    with criterion(10, "dense oracle on 100 complexes, mixed identities, determinism", 60) as fail:
        for seed in range(100):
            C, free, tors = random_complex(random.Random(seed), QX if seed % 2 else QQ, 60)
            total = sum(C.rank(k) for k in C.degrees())
            h = homology(C)
            oracle = oracle_ranks_over_q(C)
            if total > 60:
                fail.append(f"seed {seed}: total rank {total}")
            for k in C.degrees():
                if not (h.free_rank[k] == free[k] == oracle[k]) or \
                        elementary_divisors(h.torsion[k]) != tors[k]:
                    fail.append(f"seed {seed} degree {k}")
        for M in _all_mixed_complexes():
            errs = M.check_identities()
            if errs:
                fail.append(f"{M.provenance}: {errs[0]}")
        for name, params in (("hh-truncated", {"n": 3}), ("cn-lemma", {"n": 1}),
                             ("amitsur", {}), ("witt-ring", {})):
            outs = {emit(run_scenario(name, params), fmt) for fmt in ("json",) for _ in range(2)}
            if len(outs) != 1:
                fail.append(f"{name} not deterministic")
        cmd = [sys.executable, "-m", "mixedcx", "verify", "laurent-dual", "--n", "2", "--format", "csv"]
        runs = [subprocess.run(cmd, capture_output=True).stdout for _ in range(2)]
        if runs[0] != runs[1] or not runs[0]:
            fail.append("CLI output differs between runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
