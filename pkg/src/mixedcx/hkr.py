"""Kaehler forms, de Rham mixed complexes, HKR maps, explicit models and
spectral sequences.

Forms live in Sym(Omega^1[1]), modelled as the graded-commutative algebra
on the generators g of A together with symbols dg of degree |g| + 1.  The
internal differential satisfies d(dg) = -d_dR(d g) (the shift anticommutes
with d), so d and d_dR anticommute.  A twist one-form w acts by left
multiplication.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import flint
from gmpy2 import mpq

from .dgcore import COMM, DgPresentation, Element, Generator, Monomial, PresentationError, \
    monomial_basis, resolved_curved
from .qlinalg import Space as _Space, kernel as _kernel, quotient_coords as _quotient_coords
from .exactalg import (QQ, QX, X, ZERO, ComplexError, FreeComplex, HomologyReport, Poly,
                       SparseMatrix, homology, homology_coords)
from .hochschild import (ChainMap, _weight_graded, CyclicComplex, MixedComplex, TruncationPolicy, _acc,
                         _assemble, chain_map_from_labels, negative_cyclic)


# ------------------------------------------------------------------ forms


@dataclass
class DeRhamData:
    source: DgPresentation
    forms: DgPresentation
    nsrc: int

    def dgen(self, i: int) -> int:
        return self.nsrc + i

    def include(self, a: Element) -> Element:
        return Element(self.forms, dict(a.terms))

    def d_dR_monomial(self, m: Monomial) -> Dict[Monomial, Poly]:
        F = self.forms
        out: Dict[Monomial, Poly] = {}
        pre_deg = 0
        for i, g in enumerate(m):
            if g < self.nsrc:
                r = F.mono_mul(m[:i], (self.dgen(g),))
                if r is not None:
                    r2 = F.mono_mul(r[1], m[i + 1:])
                    if r2 is not None:
                        s = r[0] * r2[0] * (-1 if pre_deg % 2 else 1)
                        _acc(out, r2[1], Poly.const(s))
            pre_deg += F.gens[g].degree
        return out

    def d_dR(self, a: Element) -> Element:
        out: Dict[Monomial, Poly] = {}
        for m, c in a.terms.items():
            for mm, cc in self.d_dR_monomial(m).items():
                _acc(out, mm, cc * c)
        return Element(self.forms, out)

    def one_form(self, name: str) -> Element:
        return self.forms.gen("d" + name)


def kaehler(P: DgPresentation) -> DeRhamData:
    """Sym(Omega^1_{A/base}[1]) for a graded-commutative semi-free A."""
    if P.kind != COMM:
        raise PresentationError("Kaehler forms need a graded-commutative presentation")
    if not P.is_semi_free():
        raise PresentationError("Kaehler forms need a semi-free presentation (no relations)")
    gens = list(P.gens) + [Generator("d" + g.name, g.degree + 1, g.weight) for g in P.gens]
    diff = {g.name: dict(P.d_gen(i).terms) for i, g in enumerate(P.gens)}
    F = DgPresentation(P.base, COMM, gens, diff, name=f"Sym(Omega^1[1]) of {P.name}")
    D = DeRhamData(P, F, len(P.gens))
    for i, g in enumerate(P.gens):
        dd = D.d_dR(D.include(P.d_gen(i)))
        F._d[D.dgen(i)] = Element(F, {m: -c for m, c in dd.terms.items()})
    return D


def _twist_element(D: DeRhamData, twist) -> Element:
    if twist is None:
        return D.forms.zero()
    if isinstance(twist, Element):
        return D.forms.element(twist)
    if isinstance(twist, str):
        if twist == "curvature":
            h = D.source.curvature
            return Element(D.forms, {m: -c for m, c in D.d_dR(D.include(h)).terms.items()})
        return D.forms.element(twist)
    raise PresentationError(f"unknown twist {twist!r}")


def de_rham_mixed(D: DeRhamData, twist=None, T: Optional[TruncationPolicy] = None,
                  window=None, B_sign: int = 1) -> MixedComplex:
    """(Sym(Omega^1[1]), d + w., B_sign * d_dR) on a degree window.

    ``twist`` is None, a one-form (Element or expression in the form
    generators, e.g. "x*dt"), or "curvature" for -d_dR h.
    """
    F = D.forms
    window = window or T.window
    w = _twist_element(D, twist)
    if w.terms:
        if w.degrees() != {-1}:
            raise PresentationError(f"twist must be a one-form of degree -1, got {w.degrees()}")
        if D.d_dR(w).terms or F.differential(w).terms:
            raise PresentationError("twist form is not closed")
    lo, hi = window
    degs = [g.degree for g in F.gens]
    if all(d < 0 for d in degs):
        basis = monomial_basis(F, (lo - 1, 0))
        exact_above, exact_below = hi >= 0, False
    elif all(d > 0 for d in degs):
        basis = monomial_basis(F, (0, hi + 1))
        exact_above, exact_below = False, lo <= 0
    else:
        raise PresentationError("forms of mixed-sign degree: product over Sym^m is infinite")
    labels = {k: sorted(basis.get(k, []), key=lambda m: (F.mono_weight(m), len(m), m))
              for k in range(lo, hi + 1)}

    def b_of(m):
        out = dict(F.d_monomial(m))
        for wm, wc in w.terms.items():
            r = F.mono_mul(wm, m)
            if r is not None:
                _acc(out, r[1], wc * r[0])
        return out

    weight_of = None if w.terms or not _weight_graded(F, False) else (lambda m: F.mono_weight(m))
    if B_sign not in (1, -1):
        raise ValueError("B_sign must be +1 or -1")

    def B_of(m):
        out = D.d_dR_monomial(m)
        return out if B_sign == 1 else {k: -v for k, v in out.items()}

    C, Bm = _assemble(labels, b_of, B_of, F.base, (lo, hi), exact_below, exact_above, weight_of)
    M = MixedComplex(C, Bm, "de-Rham", F, lambda m: F.mono_str(m))
    M.forms = D
    M.twist = w
    M.B_sign = B_sign
    return M.validate()


# -------------------------------------------------------------------- HKR


def hkr_target(M: MixedComplex, D: Optional[DeRhamData] = None) -> MixedComplex:
    """The forms complex HKR maps into: twist -d_dR h for curved input, and
    B = -d_dR, which is what the Hochschild B of this package corresponds to."""
    P = M.presentation
    D = D or kaehler(P)
    curved = bool(P.curvature.terms)
    return de_rham_mixed(D, "curvature" if curved else None, window=M.window, B_sign=-1)


def hkr_map(M: MixedComplex, R: Optional[MixedComplex] = None, check: bool = True):
    """(a0, ..., ak) -> 1/k! a0 da1 ... dak from Hochschild chains to forms.

    Returns the chain map and a report with the failing identities (empty
    when f b = (d + w) f and f B = B f hold exactly) and, on request, the
    degreewise homology comparison.
    """
    R = R if R is not None else hkr_target(M)
    D: DeRhamData = R.forms
    P = M.presentation
    F = D.forms
    if P is not D.source:
        raise ComplexError("HKR needs the forms of the same presentation")

    def fn(lab):
        cur = {lab[0]: Poly.const(mpq(1, factorial(len(lab) - 1)))}
        for a in lab[1:]:
            da = D.d_dR_monomial(a)
            nxt: Dict[Monomial, Poly] = {}
            for m, c in cur.items():
                for mm, cc in da.items():
                    r = F.mono_mul(m, mm)
                    if r is not None:
                        _acc(nxt, r[1], c * cc * r[0])
            cur = nxt
        return cur

    Fm = chain_map_from_labels(M, R, fn)
    report = {"target": R}
    if check:
        report["chain_map_errors"] = Fm.check()
    return Fm, report


def hkr_quasi_iso(Fm: ChainMap) -> dict:
    """Cone of the HKR map is acyclic on the degrees both windows determine."""
    S, Tg = Fm.source.complex, Fm.target.complex
    lo = max(S.dmin, Tg.dmin) + 1
    hi = min(S.dmax, Tg.dmax) - 1
    degs = [k for k in range(lo, hi + 1) if S.trusted(k) and Tg.trusted(k)]
    H = cone_homology(Fm, [k + 1 for k in degs] + degs)
    bad = [k for k in H.degrees() if k in degs and (H.free_rank[k] or H.torsion[k])]
    return {"ok": not bad, "degrees": degs, "first_failure": bad[0] if bad else None}


def cone_homology(f: ChainMap, degrees: Iterable[int], margin: int = 1) -> HomologyReport:
    """Homology of Cone(f) = S[1] + T with d(s, t) = (-d s, f s + d t)."""
    S, Tg = f.source.complex, f.target.complex
    lo = max(S.dmin + 1, Tg.dmin)
    hi = min(S.dmax + 1, Tg.dmax)
    bases = {k: [("s", l) for l in S.bases.get(k - 1, [])] + [("t", l) for l in Tg.bases.get(k, [])]
             for k in range(lo, hi + 1)}
    d = {}
    for k in range(lo + 1, hi + 1):
        ns1, ns0 = S.rank(k - 1), S.rank(k - 2) if k - 2 >= S.dmin else 0
        nt1, nt0 = Tg.rank(k), Tg.rank(k - 1)
        ent = {}
        if k - 1 > S.dmin:
            for (i, j), v in S.diff(k - 1).entries.items():
                ent[(i, j)] = -v
        for (i, j), v in f.f[k - 1].entries.items():
            ent[(ns0 + i, j)] = v
        for (i, j), v in Tg.diff(k).entries.items():
            ent[(ns0 + i, ns1 + j)] = v
        d[k] = SparseMatrix(ns0 + nt0, ns1 + nt1, ent, Tg.ring)
    C = FreeComplex(lo, hi, bases, d, Tg.ring)
    degs = [k for k in degrees if lo < k < hi]
    return homology(C, degrees=degs)


# --------------------------------------------------------- explicit models


@dataclass
class ExplicitComplex:
    """An instantiated explicit complex over Q[x] with u carried in the labels.

    Labels are (j, name) meaning u^j * name.  ``u_closed`` says that
    multiplication by u maps the basis into itself (so the u-action on
    homology is defined without truncation effects).
    """

    name: str
    n: int
    complex: FreeComplex
    degree_of: Callable
    u_closed: bool = True
    notes: str = ""


def _assemble_u(name, n, gens, dgen, lo, hi, ring=QX, u_closed=True, keep=None,
                trusted=None, exact_below=False, exact_above=False) -> ExplicitComplex:
    """Build a complex from generators with degrees and a differential rule.

    gens: list of (gen name, degree); dgen(name) -> list of (coef Poly, u power, gen name).
    Basis of degree k: u^j g with deg g - 2j = k, j >= 0, filtered by keep(j, g).
    """
    deg = dict(gens)
    bases = {}
    for k in range(lo, hi + 1):
        bl = []
        for g, dg in gens:
            if (dg - k) >= 0 and (dg - k) % 2 == 0:
                j = (dg - k) // 2
                if keep is None or keep(j, g):
                    bl.append((j, g))
        bases[k] = sorted(bl)
    pos = {k: {lab: i for i, lab in enumerate(bases[k])} for k in bases}
    d = {}
    for k in range(lo + 1, hi + 1):
        ent = {}
        for col, (j, g) in enumerate(bases[k]):
            for c, up, h in dgen(g):
                tgt = (j + up, h)
                i = pos[k - 1].get(tgt)
                if i is None:
                    if keep is None or keep(*tgt):
                        raise ComplexError(f"{name}: d(u^{j} {g}) hits {tgt} outside the basis")
                    raise ComplexError(f"{name}: truncation is not a subcomplex at {tgt}")
                ent[(i, col)] = ent.get((i, col), ZERO) + c
        d[k] = SparseMatrix(len(bases[k - 1]), len(bases[k]), ent, ring)
    C = FreeComplex(lo, hi, bases, d, ring, exact_below, exact_above, None, trusted)
    C.validate()
    return ExplicitComplex(name, n, C, lambda g: deg[g], u_closed)


def K_generators(n: int, lmax: int):
    gens = []
    for l in range(lmax + 1):
        for i in range(n):
            gens.append((("e", l, i), -2 * n * l - 2 * i - 1))
            gens.append((("f", l, i), -2 * n * l - 2 * i))
    return gens


def K_differential(n: int):
    """d(f_{l,i}) on the K model; e's are cycles."""

    def dgen(g):
        kind, l, i = g
        if kind == "e":
            return []
        if i >= 1:
            return [(X, 0, ("e", l, i)), (Poly.const(l * n + l + i), 1, ("e", l, i - 1))]
        if l >= 1:
            c = (l * n + l) * (l * n + l - 1)
            return [(X * X, 0, ("e", l, 0)), (Poly.const(c), 1, ("e", l - 1, n - 1))]
        return [(X, 0, ("e", 0, 0))]

    return dgen


def K_dual_differential(n: int):
    """Transpose of K: d(e*_{l,i}) collects every f_{l',i'} whose d hits e_{l,i}."""
    dK = K_differential(n)

    def dgen(g):
        kind, l, i = g
        if kind == "f":
            return []
        out = []
        # f_{l,i} contributes its u^0 term, f_{next} its u^1 term
        for c, up, h in dK(("f", l, i)):
            if h == ("e", l, i) and up == 0:
                out.append((c, 0, ("f", l, i)))
        nxt = ("f", l, i + 1) if i + 1 < n else ("f", l + 1, 0)
        for c, up, h in dK(nxt):
            if h == ("e", l, i) and up == 1:
                out.append((c, 1, nxt))
        return out

    return dgen


def instantiate_explicit(name: str, n: int, T: TruncationPolicy) -> ExplicitComplex:
    """Instantiate K, K_dual or laurent_dual for parameter n on T.window.

    K and laurent_dual are degreewise finite on any window (no truncation).
    K_dual is not (u^j f*_p sits in degree 2p - 2j for every j); it is cut
    to the subcomplex spanned by f*_p (p <= P+1) and e*_p (p <= P), p =
    l n + i, which is closed under d.  Degrees <= 2P are exact.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = T.window
    if name == "K":
        lmax = max(0, (-lo) // (2 * n) + 1)
        gens = [g for g in K_generators(n, lmax) if g[1] >= lo - 1]
        E = _assemble_u("K", n, gens, K_differential(n), lo, hi, exact_above=True)
        E.complex.exact_below = False
        return E
    if name == "K_dual":
        P = max(hi // 2 + T.margin, 1)
        gens = []
        for p in range(P + 2):
            l, i = divmod(p, n)
            gens.append((("f*", l, i), 2 * p))
            if p <= P:
                gens.append((("e*", l, i), 2 * p + 1))
        dKv = K_dual_differential(n)

        def dgen(g):
            kind, l, i = g
            if kind == "f*":
                return []
            return [(c, up, ("f*",) + h[1:]) for c, up, h in dKv(("e", l, i))]

        tr = (lo + 1, min(hi - 1, 2 * P))
        E = _assemble_u("K_dual", n, gens, dgen, lo, hi, trusted=tr)
        E.notes = f"f-type cut at p <= {P + 1}"
        return E
    if name == "laurent_dual":
        kmax = max(0, -lo // 2 + 2)
        gens = []
        for k in range(kmax + 1):
            gens.append((("e", k), -2 * k))
            if k >= 1:
                gens.append((("f", k), 1 - 2 * k))
        xn = Poly.monomial(n)

        def dgen(g):
            if g[0] == "e":
                return []
            k = g[1]
            return [(Poly.const(-1), 1, ("e", k - 1)), (-xn, 0, ("e", k))]

        E = _assemble_u("laurent_dual", n, gens, dgen, lo, hi, exact_above=True)
        return E
    raise ValueError(f"unknown explicit complex {name!r}")


def u_action(C: FreeComplex, rep: HomologyReport, k: int) -> Optional[SparseMatrix]:
    """Matrix of u: H_k -> H_{k-2} for complexes with (j, label) bases."""
    if k - 2 not in rep.generators or k not in rep.generators:
        return None
    tpos = {lab: i for i, lab in enumerate(C.bases[k - 2])}
    cols = []
    for z in rep.generators[k] + rep.torsion_generators[k]:
        img = [ZERO] * C.rank(k - 2)
        for i, v in enumerate(z):
            if v.c:
                j, lab = C.bases[k][i]
                t = tpos.get((j + 1, lab))
                if t is None:
                    return None  # u leaves the truncated basis
                img[t] = v
        free, tors = homology_coords(rep, k - 2, img)
        cols.append(free + tors)
    nrow = len(rep.generators[k - 2]) + len(rep.torsion_generators[k - 2])
    ent = {(i, j): v for j, col in enumerate(cols) for i, v in enumerate(col) if v.c}
    return SparseMatrix(nrow, len(cols), ent, C.ring)


def explicit_homology(E: ExplicitComplex, degrees=None) -> HomologyReport:
    C = E.complex
    degs = [k for k in (degrees if degrees is not None else C.degrees())]
    rep = homology(C, generators=True, degrees=[k for k in degs if C.dmin <= k <= C.dmax])
    for k in rep.degrees():
        a = u_action(C, rep, k)
        if a is not None:
            rep.action[k] = a
    return rep


# -------------------------------------------------------- monomial models


@dataclass(frozen=True)
class MonomialModel:
    """span{x^i u^j : alpha i + beta j + gamma >= 0}, degree(x^i u^j) = -2j.

    With ``laurent`` the x-exponent may be negative (bounded only by the
    constraint); otherwise i >= 0.  Per degree the model is x^{i_min} Q[x].
    With ``polynomial_u`` only j >= 0 occurs (degrees <= 0).
    """

    alpha: int
    beta: int
    gamma: int
    laurent: bool = False
    polynomial_u: bool = False

    def has_degree(self, k: int) -> bool:
        return k % 2 == 0 and (not self.polynomial_u or k <= 0)

    def i_min(self, j: int) -> int:
        v = -(self.beta * j + self.gamma)
        m = -((-v) // self.alpha)  # ceil(v / alpha)
        return m if self.laurent else max(0, m)

    def contains(self, i: int, j: int) -> bool:
        if self.polynomial_u and j < 0:
            return False
        return (self.laurent or i >= 0) and self.alpha * i + self.beta * j + self.gamma >= 0

    def u_exponent(self, j: int) -> int:
        """u * (generator at u^j) = x^e * (generator at u^{j+1})."""
        return self.i_min(j) - self.i_min(j + 1)


def monomial_model(alpha, beta, gamma, laurent=False, polynomial_u=False) -> MonomialModel:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return MonomialModel(alpha, beta, gamma, laurent, polynomial_u)


def compare(H: HomologyReport, model: MonomialModel, degrees: Iterable[int],
            even_only_free: bool = True) -> dict:
    """Check free rank 1 / no torsion in even degrees, zero in odd degrees, and
    the u-action exponents against the model."""
    rows = []
    ok = True
    first = None
    for k in degrees:
        fr, tors = H.free_rank.get(k), H.torsion.get(k)
        if fr is None or not H.trusted.get(k):
            continue
        want = 1 if model.has_degree(k) else 0
        row = {"degree": k, "free_rank": fr, "torsion": [str(t) for t in tors], "expected_rank": want}
        good = fr == want and not tors
        if want and H.trusted.get(k - 2) and k in H.action:
            j = -k // 2
            e = model.u_exponent(j)
            A = H.action[k]
            got = A.get(0, 0) if A.shape == (1, 1) else None
            row["u_exponent_expected"] = e
            row["u_action"] = str(got)
            if got is None or got.is_zero() or got.valuation() != e or got.deg != e:
                good = False
        row["ok"] = good
        if not good and first is None:
            first = k
        ok = ok and good
        rows.append(row)
    return {"ok": ok, "first_mismatch": first, "rows": rows}


def K_dual_to_model(n: int):
    """Coefficient and x-exponent of the image of f*_{l,i} in the monomial model."""

    def img(l, i):
        p = l * n + i
        if l == 0 and i == 0:
            return mpq(1), 0, 0
        if i >= 1:
            m = l * n + l + i
            return mpq((-1) ** p, factorial(m)), m, -p
        m = l * n + l
        return mpq((-1) ** p, factorial(m)), m - 1, -p

    return img


def verify_K_dual_map(E: ExplicitComplex) -> dict:
    """The map f* -> monomials kills every d(e*) and sends each homology
    generator to a nonzero multiple of the model's generator."""
    n = E.n
    img = K_dual_to_model(n)
    model = monomial_model(n, n + 1, n)
    C = E.complex
    bad = []
    for k in range(C.dmin + 1, C.dmax + 1):
        dk = C.diff(k)
        cols: Dict[int, Dict] = {}
        for (i, j), v in dk.entries.items():
            cols.setdefault(j, {})[i] = v
        for j, col in cols.items():
            total: Dict[Tuple[int, int], Poly] = {}
            for i, v in col.items():
                uj, (kind, l, ii) = C.bases[k - 1][i]
                c, xe, ue = img(l, ii)
                key = (ue + uj,)
                total[key] = total.get(key, ZERO) + v * Poly.monomial(xe, c)
            if any(p.c for p in total.values()):
                bad.append((k, C.bases[k][j]))
    rep = homology(C, generators=True, degrees=[k for k in range(C.dmin, C.dmax + 1)
                                                if C.trusted(k)])
    vals, monomial = {}, {}
    for k in rep.degrees():
        if k % 2 or rep.free_rank[k] != 1:
            continue
        z = rep.generators[k][0]
        acc = ZERO
        for i, v in enumerate(z):
            if v.c:
                uj, (kind, l, ii) = C.bases[k][i]
                c, xe, ue = img(l, ii)
                acc = acc + v * Poly.monomial(xe, c)
        j = -k // 2
        vals[k] = (acc.valuation() if acc.c else None, model.i_min(j), str(acc))
        monomial[k] = bool(acc.c) and acc.valuation() == acc.deg
    ok = not bad and all(v[0] == v[1] and monomial[k] for k, v in vals.items())
    return {"ok": ok, "non_chain": bad, "valuations": vals}


# ---------------------------------------------------------------- phi


def phi_images(D: DeRhamData, n: int):
    """phi on K basis elements, as forms of the resolved curved algebra."""
    F = D.forms
    t, xi, dt, dxi = (F.gen(s) for s in ("t", "xi", "dt", "dxi"))
    x = F.scalar(X)

    def pw(a, k):
        return F.one() if k == 0 else a ** k

    def img(g):
        kind, l, i = g
        if kind == "e":
            return pw(t, i) * dt * pw(dxi, l)
        if l == 0:
            return pw(t, i)
        if i >= 1:
            return pw(t, i) * pw(dxi, l) + pw(t, i - 1) * xi * dt * pw(dxi, l - 1) * (l * (n + 1))
        if l == 1:
            return x * dxi + pw(t, n) * (n + 1)
        return (x * pw(dxi, l) + pw(t, n) * pw(dxi, l - 1) * (l * (n + 1))
                + pw(t, n - 1) * xi * dt * pw(dxi, l - 2) * (l * (l - 1) * (n + 1) ** 2))

    return img


def twisted_de_rham_u(n: int, T: TruncationPolicy):
    """(Sym(Omega^1[1])[[u]], d + x dt + u d_dR) for the resolved curved algebra."""
    P = resolved_curved(n)
    D = kaehler(P)
    lo, hi = T.window
    R = de_rham_mixed(D, "curvature", window=(lo - 1, 0))
    N = (-(lo - 1)) // 2 + 2
    CC = negative_cyclic(R, TruncationPolicy((lo, hi), N, T.margin))
    return D, R, CC


def verify_phi(n: int, T: TruncationPolicy) -> dict:
    """phi: K -> twisted de Rham is a chain map (exactly) and its cone is acyclic
    on the trusted window."""
    lo, hi = T.window
    D, R, CC = twisted_de_rham_u(n, TruncationPolicy((lo - T.margin, hi), T.u_order, T.margin))
    K = instantiate_explicit("K", n, TruncationPolicy((CC.complex.dmin, CC.complex.dmax), T.u_order,
                                                      T.margin))
    img = phi_images(D, n)
    KC, TC = K.complex, CC.complex
    f = {}
    for k in range(KC.dmin, KC.dmax + 1):
        tpos = {lab: i for i, lab in enumerate(TC.bases[k])}
        ent = {}
        for c, (j, g) in enumerate(KC.bases[k]):
            for m, v in img(g).terms.items():
                ent[(tpos[(j, m)], c)] = v
        f[k] = SparseMatrix(TC.rank(k), KC.rank(k), ent, QX)
    errs = []
    for k in range(KC.dmin + 1, KC.dmax + 1):
        if f[k - 1] @ KC.diff(k) != TC.diff(k) @ f[k]:
            errs.append(k)
    src = MixedComplex(KC, {}, "explicit")
    tgt = MixedComplex(TC, {}, "de-Rham")
    cm = ChainMap(src, tgt, f)
    degs = [k for k in range(lo, hi + 1) if TC.trusted(k) and KC.dmin < k < KC.dmax]
    cone = cone_homology(cm, degs)
    acyclic = all(cone.free_rank[k] == 0 and not cone.torsion[k] for k in cone.degrees())
    return {"ok": not errs and acyclic, "chain_map_failures": errs, "cone_acyclic": acyclic,
            "degrees": cone.degrees()}


# ------------------------------------------------------- spectral sequences


class UnboundedFiltration(ComplexError):
    pass


@dataclass
class FiltrationData:
    """Decreasing filtration on a complex: basis element -> level.

    F^p is spanned by basis elements of level >= p.  For complexes over
    Q[x] the labels also carry a weight (x has weight -1) so that the
    Q-expansion splits into finite (degree, weight) blocks.
    """

    complex: FreeComplex
    level: Dict[int, List[int]]
    weight: Optional[Dict[int, List[int]]] = None

    def validate(self):
        C = self.complex
        for k in range(C.dmin + 1, C.dmax + 1):
            for (i, j), v in C.diff(k).entries.items():
                if self.level[k - 1][i] < self.level[k][j]:
                    raise ComplexError(f"differential lowers filtration level at degree {k}")
        return self


def sym_filtration(R: MixedComplex) -> FiltrationData:
    """G^m = forms of symmetric degree >= m, with generator weights."""
    D: DeRhamData = R.forms
    C = R.complex
    lev = {k: [sum(1 for g in m if g >= D.nsrc) for m in C.bases[k]] for k in C.degrees()}
    wt = {k: [D.forms.mono_weight(m) for m in C.bases[k]] for k in C.degrees()}
    return FiltrationData(C, lev, wt).validate()


def u_filtration(CC: CyclicComplex) -> FiltrationData:
    C = CC.complex
    return FiltrationData(C, {k: [j for j, _ in C.bases[k]] for k in C.degrees()},
                          C.weights).validate()


class _QBlock:
    """Q-complex of one weight block (or of a complex over Q)."""

    def __init__(self, dmin, dmax, levels, mats):
        self.dmin, self.dmax = dmin, dmax
        self.levels = levels  # k -> list of levels
        self.mats = mats  # k -> flint matrix d_k

    def dim(self, k):
        return len(self.levels.get(k, []))

    def apply(self, k, v):
        m = self.mats.get(k)
        if m is None or not v:
            return [0] * self.dim(k - 1)
        col = flint.fmpq_mat(len(v), 1, v)
        out = m * col
        return [out[i, 0] for i in range(out.nrows())]

    def F(self, k, p):
        n = self.dim(k)
        return [[flint.fmpq(1 if i == j else 0) for i in range(n)]
                for j in range(n) if self.levels[k][j] >= p]

    def Z(self, k, p, r):
        """{v in F^p_k : d v in F^{p+r}_{k-1}}; r = -1 means F^p."""
        if r < 0:
            return self.F(k, p)
        n = self.dim(k)
        cols = [j for j in range(n) if self.levels[k][j] >= p]
        m = self.mats.get(k)
        if m is None or k - 1 < self.dmin:
            return self.F(k, p)
        rows = [i for i in range(self.dim(k - 1)) if self.levels[k - 1][i] < p + r]
        A = flint.fmpq_mat(len(rows), len(cols))
        for a, i in enumerate(rows):
            for b, j in enumerate(cols):
                A[a, b] = m[i, j]
        out = []
        for w in _kernel(A, len(cols)):
            v = [flint.fmpq(0)] * n
            for b, j in enumerate(cols):
                v[j] = w[b]
            out.append(v)
        return out

    def dZ(self, k, p, r):
        """d(Z^{p}_{r}) inside degree k (from degree k+1)."""
        if k + 1 > self.dmax:
            return []
        return [self.apply(k + 1, v) for v in self.Z(k + 1, p, r)]


@dataclass
class SpectralSequence:
    """Pages E_r^{p} in each degree k, with d_r matrices (over Q).

    ``dims[r][(k, p)]`` is dim E_r; ``d[r][(k, p)]`` is the matrix of
    d_r: E_r^{p,k} -> E_r^{p+r,k-1} in the chosen bases, summed as a
    block-diagonal over weight blocks (blocks listed in ``blocks``).
    """

    r_max: int
    degrees: List[int]
    dims: Dict[int, Dict[Tuple[int, int], int]]
    d_rank: Dict[int, Dict[Tuple[int, int], int]]
    d: Dict[int, Dict[Tuple[int, int], list]]
    homology_dims: Dict[int, int]
    blocks: List
    levels: List[int]

    def degenerates_at(self) -> Optional[int]:
        """Smallest r with d_s = 0 for all r <= s <= r_max."""
        best = None
        for r in range(self.r_max, -1, -1):
            if any(self.d_rank[r].values()):
                break
            best = r
        return best

    def total(self, r: int, k: int) -> int:
        return sum(v for (kk, p), v in self.dims[r].items() if kk == k)

    def concentrated_in_odd_degrees(self, r: int) -> bool:
        return all(self.total(r, k) == 0 for k in self.degrees if k % 2 == 0)


def _expand_blocks(F: FiltrationData, weight_range) -> List[Tuple[object, _QBlock]]:
    C = F.complex
    if C.ring == QQ:
        mats = {}
        for k in range(C.dmin + 1, C.dmax + 1):
            M = flint.fmpq_mat(C.rank(k - 1), C.rank(k))
            for (i, j), v in C.diff(k).entries.items():
                c = v.c[0]
                M[i, j] = flint.fmpq(int(c.numerator), int(c.denominator))
            mats[k] = M
        return [(None, _QBlock(C.dmin, C.dmax, {k: list(F.level[k]) for k in C.degrees()}, mats))]
    if F.weight is None:
        raise UnboundedFiltration("a complex over Q[x] needs label weights to split into "
                                  "finite Q-blocks")
    if weight_range is None:
        ws = [w for k in C.degrees() for w in F.weight[k]]
        weight_range = (min(ws) - (C.dmax - C.dmin), max(ws)) if ws else (0, -1)
    out = []
    for W in range(weight_range[0], weight_range[1] + 1):
        basis = {k: [(F.weight[k][b] - W, b) for b in range(C.rank(k)) if F.weight[k][b] >= W]
                 for k in C.degrees()}
        pos = {k: {lab: i for i, lab in enumerate(basis[k])} for k in basis}
        mats = {}
        for k in range(C.dmin + 1, C.dmax + 1):
            M = flint.fmpq_mat(len(basis[k - 1]), len(basis[k]))
            for (i, j), v in C.diff(k).entries.items():
                if F.weight[k][j] < W:
                    continue
                m = F.weight[k][j] - W
                for e, c in enumerate(v.c):
                    if not c:
                        continue
                    tgt = (m + e, i)
                    if F.weight[k - 1][i] - (m + e) != W:
                        raise ComplexError("differential is not weight-homogeneous "
                                           "(x has weight -1)")
                    M[pos[k - 1][tgt], pos[k][(m, j)]] = flint.fmpq(int(c.numerator),
                                                                     int(c.denominator))
            mats[k] = M
        levels = {k: [F.level[k][b] for _, b in basis[k]] for k in basis}
        out.append((W, _QBlock(C.dmin, C.dmax, levels, mats)))
    return out


def spectral_sequence(F: FiltrationData, r_max: int, T: Optional[TruncationPolicy] = None,
                      weight_range: Optional[Tuple[int, int]] = None) -> SpectralSequence:
    """Pages of the spectral sequence of a filtered complex, exactly over Q.

    E_r^p = Z_r^p / (Z_{r-1}^{p+1} + d Z_{r-1}^{p-r+1}) with
    Z_r^p = {z in F^p : dz in F^{p+r}}.  Complexes over Q[x] are expanded
    over Q one weight block at a time (x has weight -1, so each block is
    finite); ``weight_range`` selects the blocks.  Degrees are those of
    T.window (default: the interior of the complex window).
    """
    C = F.complex
    all_lev = sorted({l for k in C.degrees() for l in F.level[k]})
    if not all_lev:
        raise UnboundedFiltration("empty filtration")
    pmin, pmax = all_lev[0], all_lev[-1]
    if T is not None:
        degs = [k for k in range(T.window[0], T.window[1] + 1) if C.dmin < k < C.dmax]
    else:
        degs = list(range(C.dmin + 1, C.dmax))
    blocks = _expand_blocks(F, weight_range)
    dims = {r: {} for r in range(r_max + 2)}
    d_rank = {r: {} for r in range(r_max + 1)}
    dmats = {r: {} for r in range(r_max + 1)}
    hom = {k: 0 for k in degs}
    for W, Bq in blocks:
        for k in degs:
            ker = _Space(Bq.dim(k), _kernel(Bq.mats[k], Bq.dim(k)) if k in Bq.mats
                         else Bq.F(k, pmin))
            im = _Space(Bq.dim(k), Bq.dZ(k, pmin, -1))
            hom[k] += ker.dim - im.dim
        cache = {}

        def page(r, k, p):
            key = (r, k, p)
            if key not in cache:
                n = Bq.dim(k)
                Zs = _Space(n, Bq.Z(k, p, r))
                den = _Space(n, Bq.Z(k, p + 1, r - 1) + Bq.dZ(k, p - r + 1, r - 1))
                reps = []
                cur = den
                for v in Zs.basis:
                    nxt = cur + _Space(n, [v])
                    if nxt.dim > cur.dim:
                        reps.append(v)
                        cur = nxt
                cache[key] = (den, reps)
            return cache[key]

        for r in range(r_max + 2):
            for k in degs:
                for p in range(pmin, pmax + 1):
                    den, reps = page(r, k, p)
                    dims[r][(k, p)] = dims[r].get((k, p), 0) + len(reps)
        for r in range(r_max + 1):
            for k in degs:
                if k - 1 not in degs:
                    continue
                for p in range(pmin, pmax + 1):
                    den, reps = page(r, k, p)
                    tden, treps = page(r, k - 1, p + r)
                    cols = [_quotient_coords(tden, treps, Bq.apply(k, v)) for v in reps]
                    rk = _Space(len(treps), cols).dim if treps else 0
                    d_rank[r][(k, p)] = d_rank[r].get((k, p), 0) + rk
                    if reps and treps:
                        dmats[r].setdefault((k, p), []).append((W, cols))
    return SpectralSequence(r_max, degs, dims, d_rank, dmats, hom, [W for W, _ in blocks],
                            list(range(pmin, pmax + 1)))


def twisted_forms_filtered(n: int, window: Tuple[int, int]) -> Tuple[MixedComplex, FiltrationData]:
    """(Sym(Omega^1[1]), d + x dt) for the resolved curved algebra, filtered by G."""
    D = kaehler(resolved_curved(n))
    R = de_rham_mixed(D, "curvature", window=window)
    return R, sym_filtration(R)


def omega_symbol(D: DeRhamData, name: str) -> Element:
    """Image in Sym(Omega^1[1]) of the Kaehler form d_dR g of Omega^1, with the
    shift written on the right: (-1)^|g| times the generator dg."""
    g = D.source.gens[D.source.index[name]]
    e = D.one_form(name)
    return -e if g.degree % 2 else e


def d2_representative(n: int, l: int) -> dict:
    """Exact d_2 on the class of t^n (d_dR xi)^l in (Sym, d + x d_dR t), over Q[x].

    Forms are written in Kaehler symbols of Omega^1 (see omega_symbol), so
    d(d_dR xi) = (n+1) t^n d_dR t.  The d-cycle lifting t^n (d_dR xi)^l is
    z = t^n (d_dR xi)^l + a t^{n-1} xi d_dR t (d_dR xi)^{l-1}; the twist maps
    it to a d-boundary d(-y), y = c x (d_dR xi)^{l+1}, and d_2[z] = [twist(y)].
    Returns the coefficient of x^2 d_dR t (d_dR xi)^{l+1}, plus the same
    coefficient for the left-shift generators dt, dxi.
    """
    D = kaehler(resolved_curved(n))
    F = D.forms
    t, xi = F.gen("t"), F.gen("xi")
    et, exi = omega_symbol(D, "t"), omega_symbol(D, "xi")
    one = F.one()

    def pw(a, k):
        return one if k == 0 else a ** k

    def ratio(a: Element, b: Element):
        """a = r b for a scalar r in Q (b a nonzero single-term multiple)."""
        (mb, cb), = b.terms.items()
        ca = a.terms.get(mb, ZERO)
        if set(a.terms) - {mb}:
            raise ComplexError(f"{a} is not a multiple of {b}")
        return ca.c[-1] / cb.c[-1] if ca.c else mpq(0)

    w = _twist_element(D, "curvature")
    z = pw(t, n) * pw(exi, l)
    if l >= 1:
        corr = pw(t, n - 1) * xi * et * pw(exi, l - 1)
        a = -ratio(F.differential(z), F.differential(corr))
        z = z + corr * F.scalar(Poly.const(a))
    if F.differential(z).terms:
        raise ComplexError("representative is not a d-cycle")
    tz = w * z
    base = F.scalar(X) * pw(exi, l + 1)
    c = -ratio(tz, F.differential(base))
    y = base * F.scalar(Poly.const(c))
    if (F.differential(y) + tz).terms:
        raise ComplexError("correction does not cancel the twist")
    d2 = w * y
    coef = ratio(d2, F.scalar(X * X) * et * pw(exi, l + 1))
    # source picks up (-1)^l, target (-1)^(l+1) when xi is odd
    left = -coef if F.gens[F.index["xi"]].degree % 2 else coef
    return {"n": n, "l": l, "coefficient": coef, "coefficient_left_shift": left,
            "image": str(d2), "expected": mpq(-1, (n + 1) * (l + 1))}


# ---------------------------------------------------------------- HP stages


def hp_stage_model(n: int) -> MonomialModel:
    """Stage n of the refined HP answer: {x^i u^j : i >= 0, n i + (n+1) j + n >= 0}."""
    return monomial_model(n, n + 1, n)


def _subring_min(n: int, j: int) -> int:
    """Least x-exponent at u^j in Q[x, u, x^{n+1}/u^n]: ceil(-j/n) copies of x^{n+1}/u^n."""
    return (n + 1) * max(0, -(j // n))


def hp_stage_compatibility(n: int, jrange: Tuple[int, int] = (-8, 8), imax: int = 40) -> dict:
    """Stage n embeds in stage n+1: region inclusion on lattice points, generator
    valuations i_min nonincreasing in n degreewise, and the subring
    Q[x, u, x^{n+1}/u^n] sits in the stage-n region with cokernel killed by u^n."""
    A, B = hp_stage_model(n), hp_stage_model(n + 1)
    rows = []
    ok = True
    for j in range(jrange[0], jrange[1] + 1):
        incl = all(B.contains(i, j) for i in range(imax + 1) if A.contains(i, j))
        val = A.i_min(j) >= B.i_min(j)
        sub = _subring_min(n, j) >= A.i_min(j)
        killed = A.i_min(j) >= _subring_min(n, j + n)
        good = incl and val and sub and killed
        ok = ok and good
        rows.append({"j": j, "degree": -2 * j, "i_min_n": A.i_min(j), "i_min_n+1": B.i_min(j),
                     "region_inclusion": incl, "valuation_nonincreasing": val,
                     "subring_inside": sub, "cokernel_killed_by_u^n": killed, "ok": good})
    return {"n": n, "ok": ok, "rows": rows}
