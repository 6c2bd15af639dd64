"""Named end-to-end pipelines.  Each returns a ResultTable with per-degree
rows and a list of named checks; the table passes when every check does."""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from gmpy2 import mpq

from . import barcobar as bc
from . import hkr
from . import witt as W
from .conventions import conventions_hash
from .dgcore import (AlgebraMorphism, DgPresentation, Generator, COMM, algebra_Cn,
                     curved_truncated, resolved_curved, truncated_poly)
from .exactalg import QQ, HomologyReport, homology
from .hochschild import (TruncationPolicy, dualize_mixed, hochschild_mixed,
                         hochschild_second_kind, induced_map, match_up_to_signs,
                         naive_hochschild, stable_ranks)

SAFE = {"n": (1, 3), "window_width": 14, "u_order": (1, 5), "weight_bound": (0, 6)}


class UnsafeParameters(ValueError):
    pass


class UnknownScenario(KeyError):
    pass


@dataclass
class Row:
    degree: int
    rank: int
    invariant_factors: List[str] = field(default_factory=list)
    u_action: str = ""
    trusted: bool = True


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class ScenarioSpec:
    name: str
    params: Dict
    expected: str


@dataclass
class ResultTable:
    scenario: str
    params: Dict
    expected: str
    rows: List[Row] = field(default_factory=list)
    checks: List[Check] = field(default_factory=list)
    trust_window: Optional[Tuple[int, int]] = None
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.ok for c in self.checks)

    @property
    def conventions(self) -> str:
        return conventions_hash()

    def check(self, name: str, ok: bool, detail: str = ""):
        self.checks.append(Check(name, bool(ok), detail))
        return ok

    def sort(self):
        self.rows.sort(key=lambda r: r.degree)
        return self


def _rows_from_report(rep: HomologyReport, action: bool = True) -> List[Row]:
    rows = []
    for k in rep.degrees():
        u = ""
        if action and k in rep.action and rep.trusted.get(k) and rep.trusted.get(k - 2):
            A = rep.action[k]
            u = "[" + "; ".join(", ".join(str(A.get(i, j)) for j in range(A.ncols))
                                for i in range(A.nrows)) + "]" if A.nrows and A.ncols else ""
        rows.append(Row(k, rep.free_rank[k], [str(f) for f in rep.torsion[k]], u,
                        bool(rep.trusted.get(k))))
    return rows


def _trust(rep: HomologyReport):
    t = rep.trusted_degrees()
    return (min(t), max(t)) if t else None


# ------------------------------------------------------------- scenarios


def hh_truncated(n: int = 2, window: Tuple[int, int] = (0, 7), **_) -> ResultTable:
    """Reduced HH of Q[x]/x^n over Q: dimension n-1 in every degree."""
    R = ResultTable("hh-truncated", {"n": n, "window": list(window)},
                    "dim_Q HH_k = n-1 in every trusted degree")
    M = hochschild_mixed(truncated_poly(n), TruncationPolicy(window), reduced_unit=True)
    rep = homology(M.complex)
    R.rows = _rows_from_report(rep)
    R.trust_window = _trust(rep)
    bad = [k for k in rep.trusted_degrees() if rep.free_rank[k] != n - 1]
    R.check("dimension n-1", not bad and rep.trusted_degrees(), f"mismatch at {bad}" if bad else "")
    R.check("identities", not M.check_identities())
    return R


def compact_map(n: int = 1, window: Tuple[int, int] = (0, 7), **_) -> ResultTable:
    """HH_{2l}(A_{n+1}) -> HH_{2l}(A_n) induced by x -> x is zero for l >= n-1."""
    R = ResultTable("b-operator-freeness", {"n": n, "window": list(window)},
                    "induced map zero on H_{2l} for l >= n-1")
    P, Q = truncated_poly(n + 1), truncated_poly(n)
    f = AlgebraMorphism(P, Q, {"x": Q.gen("x")})
    T = TruncationPolicy(window)
    M1 = hochschild_mixed(P, T, reduced_unit=True)
    M2 = hochschild_mixed(Q, T, reduced_unit=True)
    F = induced_map(f, M1, M2)
    R.check("chain map", not F.check())
    rep = homology(M1.complex)
    R.trust_window = _trust(rep)
    for k in rep.trusted_degrees():
        zero = F.is_zero_on_homology(k) if k % 2 == 0 else None
        R.rows.append(Row(k, rep.free_rank[k], [], "" if zero is None else
                          ("zero" if zero else "nonzero"), True))
        if k % 2 == 0 and k // 2 >= n - 1 and k < window[1]:
            R.check(f"zero on H_{k}", zero)
    return R


def affine_line(window: Tuple[int, int] = (-6, 1), u_order: int = 4, weight_bound: int = 4,
                trust_margin: int = 2, **_) -> ResultTable:
    """HC^- of Q[x] over Q: Q[[u]] (weight 0) plus one Q[1] per weight >= 1.

    Reported as the image of H(CC/u^N) in H(CC/u^{N-m}), which is the image
    of the model: Q[u]/u^{N-m} in even degrees <= 0 and one class per
    weight in degree 1."""
    lo, hi = window
    N, m = u_order, trust_margin
    R = ResultTable("affine-line", {"window": list(window), "u_order": N,
                                    "weight_bound": weight_bound, "trust_margin": m},
                    "Q[[u]] + sum_{w>=1} Q[1], seen mod u^{N-m}")
    P = DgPresentation(QQ, COMM, [Generator("x", 0, weight=1)], name="Q[x]")
    M = hochschild_mixed(P, TruncationPolicy((0, max(hi, 0) + 2 * N + 1),
                                             weight_bound=weight_bound))
    ranks = stable_ranks(M, TruncationPolicy(window, N, m))
    for k, r in sorted(ranks.items()):
        if k % 2 == 0 and -2 * (N - m - 1) <= k <= 0:
            want = 1
        elif k == 1:
            want = weight_bound
        else:
            want = 0
        R.rows.append(Row(k, r, [], "", True))
        R.check(f"degree {k}", r == want, f"rank {r}, expected {want}")
    if ranks:
        R.trust_window = (min(ranks), max(ranks))
    return R


def laurent_dual(n: int = 1, window: Tuple[int, int] = (-2, 10), u_order: int = 5,
                 **_) -> ResultTable:
    """Dual complex d(f_k) = -u e_{k-1} - x^n e_k against x^{-n} Q[x, u/x^n].

    The window is read cohomologically and instantiated on homological
    degrees [-b, -a]."""
    R = ResultTable("laurent-dual", {"n": n, "window": list(window), "u_order": u_order},
                    "free rank 1 in even degrees, 0 in odd, u acts by x^n")
    a, b = window
    E = hkr.instantiate_explicit("laurent_dual", n, TruncationPolicy((-b, -a), u_order))
    rep = hkr.explicit_homology(E)
    R.rows = _rows_from_report(rep)
    R.trust_window = _trust(rep)
    model = hkr.monomial_model(1, n, n, laurent=True, polynomial_u=True)
    cmp = hkr.compare(rep, model, rep.degrees())
    R.check("monomial model", cmp["ok"] and rep.trusted_degrees(),
            f"first mismatch {cmp['first_mismatch']}")
    return R


def _bijection_second_kind(lab):
    """Naive label of C_n (dualized) -> second-kind label of (Q[x,t]/t^{n+1}, -xt)."""
    lab = lab[1]

    def tm(i):
        return (0,) * (i + 1)

    w = tuple(tm(i) for i in lab[1])
    if lab[0] == "A":
        return ((),) + w
    return (tm(lab[2]),) + w


def cn_lemma(n: int = 1, window: Tuple[int, int] = (-8, 0), u_order: int = 4,
             trust_margin: int = 2, **_) -> ResultTable:
    """HC^- of C_n: duality with the curved algebra, curved HKR, spectral
    sequence pages, phi: K -> twisted de Rham, K^vee against the model."""
    lo, hi = window
    R = ResultTable("cn-lemma", {"n": n, "window": list(window), "u_order": u_order,
                                 "trust_margin": trust_margin},
                    "H(K^vee) = Q{x^i u^j : ni+(n+1)j+n >= 0}")
    # (a) chain-level duality
    width = min(-lo, 6)
    D = dualize_mixed(naive_hochschild(algebra_Cn(n), TruncationPolicy((0, width))))
    H2 = hochschild_second_kind(curved_truncated(n), TruncationPolicy((-width, 0)))
    iso = match_up_to_signs(D, H2, _bijection_second_kind)
    R.check("second kind = dual of naive", iso.ok, iso.message)
    # (b) curved HKR
    T = TruncationPolicy((lo, hi), u_order, trust_margin)
    M = hochschild_second_kind(resolved_curved(n), T)
    F, rep = hkr.hkr_map(M)
    R.check("curved HKR chain map", not rep["chain_map_errors"], "; ".join(rep["chain_map_errors"]))
    q = hkr.hkr_quasi_iso(F)
    R.check("curved HKR quasi-isomorphism", q["ok"], f"degrees {q['degrees']}")
    # (c) d_2 and E_3
    for l in range(4):
        d2 = hkr.d2_representative(n, l)
        R.check(f"d_2 on t^n (d xi)^{l}", d2["coefficient"] == d2["expected"],
                f"{d2['coefficient']} vs {d2['expected']}")
    _, Fil = hkr.twisted_forms_filtered(n, (lo - 2, 0))
    SS = hkr.spectral_sequence(Fil, 4)
    R.check("E_3 concentrated in odd degrees", SS.concentrated_in_odd_degrees(3))
    R.check("degenerates at E_3", SS.degenerates_at() is not None and SS.degenerates_at() <= 3)
    R.check("E_inf = homology", all(SS.total(4, k) == SS.homology_dims[k] for k in SS.degrees))
    # (d) phi
    ph = hkr.verify_phi(n, T)
    R.check("phi chain map", not ph["chain_map_failures"])
    R.check("phi quasi-isomorphism", ph["cone_acyclic"])
    # (e) K^vee
    E = hkr.instantiate_explicit("K_dual", n, TruncationPolicy((-2, -lo + 2), u_order, trust_margin))
    hrep = hkr.explicit_homology(E)
    model = hkr.monomial_model(n, n + 1, n)
    cmp = hkr.compare(hrep, model, hrep.degrees())
    R.rows = _rows_from_report(hrep)
    R.trust_window = _trust(hrep)
    R.check("K^vee = monomial model", cmp["ok"], f"first mismatch {cmp['first_mismatch']}")
    mp = hkr.verify_K_dual_map(E)
    R.check("K^vee -> model map", mp["ok"])
    return R


def hp_point(n: int = 1, window: Tuple[int, int] = (-16, 16), **_) -> ResultTable:
    """Stage n of x^{n+1}/u^n embeds in stage n+1."""
    R = ResultTable("hp-point", {"n": n, "window": list(window)},
                    "region(n) in region(n+1), i_min nonincreasing")
    a, b = window
    rep = hkr.hp_stage_compatibility(n, (-(b // 2), -(a // 2)))
    for r in rep["rows"]:
        R.rows.append(Row(r["degree"], 1, [f"x^{r['i_min_n']}"], f"x^{r['i_min_n+1']}", True))
    R.check("stage compatibility", rep["ok"])
    R.trust_window = window
    return R.sort()


def bar_cobar(n: int = 2, weight_bound: int = 4, **_) -> ResultTable:
    R = ResultTable("bar-cobar", {"n": n, "weight_bound": weight_bound},
                    "H(Bar(Cobar(C))) = C weightwise, C = (Q[s]/s^n)^*")
    rep = bc.bar_cobar_roundtrip(bc.truncated_dual(n), weight_bound)
    for (k, w), v in sorted(rep["bar_cobar"].items()):
        R.rows.append(Row(k, v, [], f"weight {w}", True))
    R.check("roundtrip", rep["ok"], str(rep["coalgebra"]))
    return R


def koszul_end(n: int = 2, weight_bound: int = 5, **_) -> ResultTable:
    R = ResultTable("koszul-end", {"n": n, "weight_bound": weight_bound},
                    "End = Q[s]/s^n: total dimension n, generator nilpotent of order n")
    A = bc.cobar(bc.truncated_dual(n))
    rep = bc.koszul_dual_endomorphisms(A, weight_bound)
    for (k, w), v in sorted(rep.dims.items()):
        R.rows.append(Row(k, v, [], f"weight {w}", True))
    R.check("total dimension n", rep.total_dimension == n, str(rep.total_dimension))
    if n >= 2:
        R.check("nilpotency order n", rep.generator_nilpotency == n, str(rep.generator_nilpotency))
    return R


def amitsur(length: int = 5, seed: int = 0, samples: int = 20, **_) -> ResultTable:
    R = ResultTable("amitsur", {"length": length, "seed": seed, "samples": samples},
                    "d h + h d = id on every tensor level")
    R.check("trivial coalgebra", bc.amitsur_homotopy([1], [[1]], length).ok)
    # C = Q^2, eps = first projection, Delta(v) = v (x) (1, 1)
    delta2 = [[1, 0], [1, 0], [0, 1], [0, 1]]
    R.check("rank 2", bc.amitsur_homotopy([1, 0], delta2, length).ok)
    rng = random.Random(seed)
    fails = 0
    for _ in range(samples):
        eps, D = bc.random_section_data(2, rng)
        fails += not bc.amitsur_homotopy(eps, D, length).ok
    R.check(f"{samples} random section data", fails == 0, f"{fails} failures")
    for k in range(length + 1):
        R.rows.append(Row(k, 2 ** (k + 1), [], "", True))
    return R


def deformed_tensor(length: int = 5, **_) -> ResultTable:
    R = ResultTable("deformed-tensor", {"length": length},
                    "gr of the word-length filtration = plain tensor algebra")
    rank1 = bc.GradedModule([1], {}, {0: 1})
    rank2 = bc.GradedModule([1, 0], {}, {0: 1})
    rank3 = bc.GradedModule([1, 0, 1], {(1, 2): 1}, {0: 1})
    for name, V in (("rank 1", rank1), ("rank 2", rank2), ("rank 3 with d", rank3)):
        rep = bc.check_associated_graded(V, length, (0, length))
        R.check(name, rep["ok"])
    T = bc.deformed_tensor_algebra(rank1, length, (0, length))
    for k in range(length + 1):
        R.rows.append(Row(k, T.complex.rank(k), [], "", True))
    return R


def witt_ring(L: int = 6, seed: int = 0, samples: int = 50, **_) -> ResultTable:
    R = ResultTable("witt-ring", {"L": L, "seed": seed, "samples": samples},
                    "ring axioms, ghost homomorphism, rational certificate")
    rng = random.Random(seed)

    def rq():
        return mpq(rng.randint(-9, 9), rng.randint(1, 9))

    a, b = rq(), rq()
    R.check("(1-at)(1-bt) = 1-abt", W.teichmuller(a, L) * W.teichmuller(b, L) ==
            W.teichmuller(a * b, L))
    bad = 0
    for _ in range(samples):
        x = W.WittVector(W.RATIONALS, tuple(rq() for _ in range(L)))
        y = W.WittVector(W.RATIONALS, tuple(rq() for _ in range(L)))
        gx, gy = W.ghost(x), W.ghost(y)
        bad += W.ghost(x + y) != [p + q for p, q in zip(gx, gy)]
        bad += W.ghost(x * y) != [p * q for p, q in zip(gx, gy)]
    R.check("ghost ring homomorphism", bad == 0, f"{bad} failures")
    w = W.series_of_ratio([1, -1], [1, -2], 10)
    rep = W.is_rational(w, 1)
    R.check("(1-t)/(1-2t) certificate", rep.rational and rep.numerator == [1, -1]
            and rep.denominator == [1, -2] and W.verify_certificate(w, rep))
    for k, g in enumerate(W.ghost(w), 1):
        R.rows.append(Row(k, 1, [str(g)], "", True))
    return R


CATALOG: Dict[str, Tuple[Callable, str]] = {
    "hh-truncated": (hh_truncated, "n, window"),
    "b-operator-freeness": (compact_map, "n, window"),
    "affine-line": (affine_line, "window, u-order, weight-bound, trust-margin"),
    "laurent-dual": (laurent_dual, "n, window, u-order"),
    "cn-lemma": (cn_lemma, "n, window, u-order, trust-margin"),
    "hp-point": (hp_point, "n, window"),
    "bar-cobar": (bar_cobar, "n, weight-bound"),
    "koszul-end": (koszul_end, "n, weight-bound"),
    "amitsur": (amitsur, "length, seed"),
    "deformed-tensor": (deformed_tensor, "length"),
    "witt-ring": (witt_ring, "seed"),
}


def check_safe(params: Dict):
    problems = []
    n = params.get("n")
    if n is not None and not SAFE["n"][0] <= n <= SAFE["n"][1]:
        problems.append(f"n = {n} outside {SAFE['n']}")
    w = params.get("window")
    if w is not None and w[1] - w[0] > SAFE["window_width"]:
        problems.append(f"window width {w[1] - w[0]} > {SAFE['window_width']}")
    N = params.get("u_order")
    if N is not None and not SAFE["u_order"][0] <= N <= SAFE["u_order"][1]:
        problems.append(f"u-order {N} outside {SAFE['u_order']}")
    wb = params.get("weight_bound")
    if wb is not None and not SAFE["weight_bound"][0] <= wb <= SAFE["weight_bound"][1]:
        problems.append(f"weight bound {wb} outside {SAFE['weight_bound']}")
    return problems


def run_scenario(name: str, params: Optional[Dict] = None, allow_unsafe: bool = False) -> ResultTable:
    if name not in CATALOG:
        raise UnknownScenario(name)
    params = {k: v for k, v in (params or {}).items() if v is not None}
    problems = check_safe(params)
    if problems and not allow_unsafe:
        raise UnsafeParameters("; ".join(problems))
    fn = CATALOG[name][0]
    t0 = time.perf_counter()
    if "window" in params:
        params["window"] = tuple(params["window"])
    table = fn(**params)
    table.seconds = time.perf_counter() - t0
    return table.sort()
