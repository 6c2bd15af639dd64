"""Reduced Hochschild mixed complexes, naive Hochschild complexes, CC^- and duals.

Sign convention (checked by the construction-time identities, not taken on
trust): a chain ``(a0, a1, ..., ak)`` is computed as the word
``s a0 (x) s a1 (x) ... (x) s ak`` of suspended elements, ``|s a| = |a| + 1``,
with

    b1(s a)       = -s(da)
    b2(s a, s b)  = (-1)^|a| s(ab)
    b0()          = -s h

applied with the Koszul rule to every (cyclically) consecutive block that
leaves ``a0`` in front.  Connes' B inserts ``s 1`` in front of every cyclic
rotation (Koszul sign of the rotation).  The exported operators are
``b = -b_shift`` and ``B = -B_shift``, which makes ``b(a0) = d a0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from .dgcore import DgPresentation, Element, Monomial, PresentationError, \
    monomial_basis
from .exactalg import (ONE, QQ, ZERO, ComplexError, FreeComplex, HomologyReport, Poly,
                       SparseMatrix, homology, homology_coords,
                       block_matrix, rank, solve_factor)

Label = Tuple


class UnboundedTensorLength(PresentationError):
    pass


@dataclass(frozen=True)
class TruncationPolicy:
    window: Tuple[int, int]
    u_order: int = 4
    margin: int = 2
    weight_bound: Optional[int] = None

    def __post_init__(self):
        lo, hi = self.window
        if lo > hi:
            raise ValueError(f"empty window {self.window}")
        if self.u_order < 1 or self.margin < 1:
            raise ValueError("u_order and margin must be >= 1")


# --------------------------------------------------------------- mixed complex


@dataclass
class MixedComplex:
    """(C, b, B) on a degree window.  ``B[k]`` maps degree k to degree k+1."""

    complex: FreeComplex
    B: Dict[int, SparseMatrix]
    provenance: str = "explicit"
    presentation: Optional[DgPresentation] = None
    label_fmt: Optional[Callable] = None
    weights: Optional[Dict[int, List[int]]] = None

    @property
    def ring(self):
        return self.complex.ring

    @property
    def window(self):
        return self.complex.dmin, self.complex.dmax

    def basis(self, k):
        return self.complex.bases.get(k, [])

    def Bmat(self, k) -> SparseMatrix:
        m = self.B.get(k)
        if m is None:
            return SparseMatrix.zero(self.complex.rank(k + 1), self.complex.rank(k), self.ring)
        return m

    def check_identities(self) -> List[str]:
        """b^2 = 0, B^2 = 0, bB + Bb = 0 on every degree the window determines."""
        C = self.complex
        errs = []
        lo, hi = C.dmin, C.dmax
        for k in range(lo + 2, hi + 1):
            if not (C.diff(k - 1) @ C.diff(k)).is_zero():
                errs.append(f"b^2 != 0 at degree {k}")
        for k in range(lo, hi - 1):
            if not (self.Bmat(k + 1) @ self.Bmat(k)).is_zero():
                errs.append(f"B^2 != 0 at degree {k}")
        for k in range(lo + 1, hi):
            m = C.diff(k + 1) @ self.Bmat(k) + self.Bmat(k - 1) @ C.diff(k)
            if not m.is_zero():
                errs.append(f"bB + Bb != 0 at degree {k}")
        return errs

    def validate(self):
        errs = self.check_identities()
        if errs:
            raise ComplexError("; ".join(errs))
        return self


def _assemble(labels: Dict[int, List[Label]], b_of: Callable, B_of: Callable, ring: str,
              window, exact_below=False, exact_above=False, weight_of=None) -> Tuple[FreeComplex, Dict]:
    lo, hi = window
    index = {k: {lab: i for i, lab in enumerate(labels[k])} for k in labels}
    d = {}
    Bm = {}
    for k in range(lo, hi + 1):
        if k - 1 >= lo:
            ent = {}
            for j, lab in enumerate(labels[k]):
                for tgt, c in b_of(lab).items():
                    i = index[k - 1].get(tgt)
                    if i is None:
                        raise ComplexError(f"b({lab}) has a term {tgt} outside the basis")
                    ent[(i, j)] = ent.get((i, j), ZERO) + c
            d[k] = SparseMatrix(len(labels[k - 1]), len(labels[k]), ent, ring)
        if k + 1 <= hi and B_of is not None:
            ent = {}
            for j, lab in enumerate(labels[k]):
                for tgt, c in B_of(lab).items():
                    i = index[k + 1].get(tgt)
                    if i is None:
                        raise ComplexError(f"B({lab}) has a term {tgt} outside the basis")
                    ent[(i, j)] = ent.get((i, j), ZERO) + c
            Bm[k] = SparseMatrix(len(labels[k + 1]), len(labels[k]), ent, ring)
    weights = None
    if weight_of is not None:
        weights = {k: [weight_of(l) for l in labels[k]] for k in labels}
    C = FreeComplex(lo, hi, {k: list(v) for k, v in labels.items()}, d, ring,
                    exact_below, exact_above, weights)
    return C, Bm


def _acc(dct, key, val):
    nv = dct.get(key, ZERO) + val
    if nv.c:
        dct[key] = nv
    elif key in dct:
        del dct[key]


# ------------------------------------------------------ Hochschild (shifted)


class _HochOps:
    """b and B on labels (m0, m1, ..., mk) of normal-form monomials."""

    def __init__(self, P: DgPresentation, curved: bool):
        self.P = P
        self.h = P.curvature if curved else P.zero()
        self._prod = {}

    def deg(self, m):
        return self.P.mono_degree(m)

    def mul(self, a, b):
        key = (a, b)
        r = self._prod.get(key, 0)
        if r == 0:
            r = self.P.mono_mul(a, b)
            self._prod[key] = r
        return r

    def b_shift(self, lab) -> Dict[Label, Poly]:
        P = self.P
        out: Dict[Label, Poly] = {}
        k = len(lab) - 1
        sig = [self.deg(m) + 1 for m in lab]
        S = [0]
        for s in sig:
            S.append(S[-1] + s)
        # b1: -s(d a_i), Koszul sign (-1)^{S_i}
        for i, m in enumerate(lab):
            for dm, dc in P.d_monomial(m).items():
                if i > 0 and dm == ():
                    continue
                sgn = -1 if S[i] % 2 == 0 else 1
                _acc(out, lab[:i] + (dm,) + lab[i + 1:], dc * sgn)
        # b2 on consecutive pairs
        for i in range(k):
            r = self.mul(lab[i], lab[i + 1])
            if r is None or (i > 0 and r[1] == ()):
                continue
            sgn = r[0] * (-1 if (S[i] + self.deg(lab[i])) % 2 else 1)
            _acc(out, lab[:i] + (r[1],) + lab[i + 2:], Poly.const(sgn))
        # cyclic term: move s a_k to the front, then b2(s a_k, s a_0)
        if k >= 1:
            r = self.mul(lab[k], lab[0])
            if r is not None:
                e = sig[k] * S[k] + self.deg(lab[k])
                sgn = r[0] * (-1 if e % 2 else 1)
                _acc(out, (r[1],) + lab[1:k], Poly.const(sgn))
        # b0: insert -s h after position i
        if self.h.terms:
            for i in range(k + 1):
                sgn = 1 if S[i + 1] % 2 else -1
                for hm, hc in self.h.terms.items():
                    if hm == ():
                        continue
                    _acc(out, lab[:i + 1] + (hm,) + lab[i + 1:], hc * sgn)
        return out

    def B_shift(self, lab) -> Dict[Label, Poly]:
        out: Dict[Label, Poly] = {}
        if lab[0] == ():
            return out  # a0 scalar: s1 in the bar is degenerate
        sig = [self.deg(m) + 1 for m in lab]
        tot = sum(sig)
        pre = 0
        for i in range(len(lab)):
            e = (tot - pre) * pre
            rot = lab[i:] + lab[:i]
            _acc(out, ((),) + rot, Poly.const(-1 if e % 2 else 1))
            pre += sig[i]
        return out

    def b(self, lab):
        return {k: -v for k, v in self.b_shift(lab).items()}

    def B(self, lab):
        return {k: -v for k, v in self.B_shift(lab).items()}


def _bar_degree_sign(P: DgPresentation, window) -> int:
    """+1 if reduced monomials have shifted degree >= 1, -1 if <= -1."""
    degs = [g.degree for g in P.gens]
    if all(d >= 0 for d in degs):
        return 1
    if all(d <= -2 for d in degs):
        return -1
    bad = [g.name for g in P.gens if g.degree == -1 or (g.degree < 0 and any(e >= 0 for e in degs))]
    bad = bad or [g.name for g in P.gens]
    raise UnboundedTensorLength(
        f"unbounded tensor length in window: generators {bad} give reduced elements "
        "of mixed-sign (or zero) shifted degree")


def hochschild_labels(P: DgPresentation, window, weight_bound=None) -> Dict[int, List[Label]]:
    lo, hi = window
    sgn = _bar_degree_sign(P, window)
    if sgn > 0:
        abasis = monomial_basis(P, (0, max(hi, 0)), weight_bound)
    else:
        abasis = monomial_basis(P, (min(lo - 1, 0), 0), weight_bound)
    amons = [(k, m) for k in sorted(abasis) for m in abasis[k]]
    bar = [(k + 1, m) for k, m in amons if m != ()]
    labels: Dict[int, List[Label]] = {k: [] for k in range(lo, hi + 1)}

    # with a weight bound only chains of total weight <= bound are kept, so
    # every weight block that survives is complete (b and B preserve weight)
    wb = weight_bound

    def rec(prefix, deg, wt):
        if lo <= deg <= hi:
            labels[deg].append(prefix)
        for s, m in bar:
            nd = deg + s
            nw = wt + P.mono_weight(m)
            if (sgn > 0 and nd > hi) or (sgn < 0 and nd < lo) or (wb is not None and nw > wb):
                continue
            rec(prefix + (m,), nd, nw)

    for k, m in amons:
        if (sgn > 0 and k > hi) or (sgn < 0 and k < lo):
            continue
        rec((m,), k, P.mono_weight(m))

    def key(lab):
        return (len(lab), tuple(P.mono_weight(m) for m in lab), lab)

    for k in labels:
        labels[k].sort(key=key)
    return labels


def _hochschild(P, T: TruncationPolicy, curved: bool, provenance: str, reduced_unit: bool):
    lo, hi = T.window
    labels = hochschild_labels(P, (lo, hi), T.weight_bound)
    if reduced_unit:
        for k in labels:
            labels[k] = [l for l in labels[k] if l != ((),)]
    ops = _HochOps(P, curved)
    sgn = _bar_degree_sign(P, (lo, hi))
    exact_below = sgn > 0 and lo <= 0
    exact_above = sgn < 0 and hi >= 0
    weighted = _weight_graded(P, curved)
    wfun = (lambda lab: sum(P.mono_weight(m) for m in lab)) if weighted else None
    b_of = ops.b
    B_of = ops.B
    if reduced_unit:
        b_of = lambda lab: {k: v for k, v in ops.b(lab).items() if k != ((),)}
        B_of = lambda lab: {k: v for k, v in ops.B(lab).items() if k != ((),)}
    C, Bm = _assemble(labels, b_of, B_of, P.base, (lo, hi), exact_below, exact_above, wfun)
    M = MixedComplex(C, Bm, provenance, P, lambda lab: "(" + ", ".join(P.mono_str(m) for m in lab) + ")")
    M.ops = ops
    M.validate()
    return M


def _weight_graded(P: DgPresentation, curved: bool) -> bool:
    """True when d (and curvature) preserve the declared generator weights."""
    if not any(g.weight for g in P.gens):
        return False
    for i, g in enumerate(P.gens):
        for m in P.d_gen(i).terms:
            if P.mono_weight(m) != g.weight:
                return False
    if curved and P.curvature.terms:
        return False
    return True


def hochschild_mixed(P: DgPresentation, T: TruncationPolicy, reduced_unit: bool = False) -> MixedComplex:
    """Reduced (normalized) Hochschild mixed complex A (x) (Abar[1])^{(x)k}.

    ``reduced_unit=True`` additionally quotients by the copy of the base
    ring spanned by the chain (1), i.e. computes reduced HH of an augmented
    algebra.
    """
    if P.curvature.terms:
        raise PresentationError("curved presentation: use hochschild_second_kind")
    return _hochschild(P, T, False, "first-kind", reduced_unit)


def hochschild_second_kind(P: DgPresentation, T: TruncationPolicy) -> MixedComplex:
    """Second-kind complex: b = b_m2 + b_m1 + b_m0 (curvature insertions)."""
    return _hochschild(P, T, True, "second-kind", False)


def b_operator(M: MixedComplex, chain: Dict[Label, Poly]) -> Dict[Label, Poly]:
    out: Dict[Label, Poly] = {}
    for lab, c in chain.items():
        for t, v in M.ops.b(lab).items():
            _acc(out, t, v * c)
    return out


def B_operator(M: MixedComplex, chain: Dict[Label, Poly]) -> Dict[Label, Poly]:
    out: Dict[Label, Poly] = {}
    for lab, c in chain.items():
        for t, v in M.ops.B(lab).items():
            _acc(out, t, v * c)
    return out


# ---------------------------------------------------------- naive complex


class _NaiveOps:
    """Cone(Omega# --mu--> A) with B = d_dR, for a semi-free presentation.

    Labels: ("A", w) for a monomial w, ("O", w, g) for w . dg in Omega#.
    """

    def __init__(self, P: DgPresentation):
        self.P = P

    def deg(self, m):
        return self.P.mono_degree(m)

    def _rot(self, L, g, R, coef, out):
        """Accumulate L dg R == (-1)^{|R|(|L|+|g|)} (R L) dg."""
        P = self.P
        r = P.mono_mul(R, L)
        if r is None:
            return
        e = self.deg(R) * (self.deg(L) + P.gens[g].degree)
        s = r[0] * (-1 if e % 2 else 1)
        _acc(out, ("O", r[1], g), coef * s)

    def ddr(self, w: Monomial, coef: Poly, out):
        for i, g in enumerate(w):
            self._rot(w[:i], g, w[i + 1:], coef, out)

    def d_omega(self, w, g, out, coef=ONE):
        P = self.P
        for dm, dc in P.d_monomial(w).items():
            _acc(out, ("O", dm, g), dc * coef)
        s = -1 if self.deg(w) % 2 else 1
        for dm, dc in P.d_gen(g).terms.items():
            # w . ( sum_i L dg_i R ) with L, R from Leibniz on dm
            for i, gi in enumerate(dm):
                L, R = dm[:i], dm[i + 1:]
                r = P.mono_mul(w, L)
                if r is None:
                    continue
                self._rot(r[1], gi, R, coef * dc * (s * r[0]), out)

    def mu(self, w, g) -> Dict[Label, Poly]:
        P = self.P
        out: Dict[Label, Poly] = {}
        r1 = P.mono_mul(w, (g,))
        if r1 is not None:
            _acc(out, ("A", r1[1]), Poly.const(r1[0]))
        r2 = P.mono_mul((g,), w)
        if r2 is not None:
            e = self.deg(w) * P.gens[g].degree
            _acc(out, ("A", r2[1]), Poly.const(-r2[0] * (-1 if e % 2 else 1)))
        return out

    def b(self, lab):
        out: Dict[Label, Poly] = {}
        if lab[0] == "A":
            for dm, dc in self.P.d_monomial(lab[1]).items():
                _acc(out, ("A", dm), dc)
            return out
        _, w, g = lab
        tmp: Dict[Label, Poly] = {}
        self.d_omega(w, g, tmp)
        for k, v in tmp.items():
            _acc(out, k, -v)
        for k, v in self.mu(w, g).items():
            _acc(out, k, v)
        return out

    def B(self, lab):
        out: Dict[Label, Poly] = {}
        if lab[0] == "A":
            self.ddr(lab[1], ONE, out)
        return out


def naive_labels(P: DgPresentation, window) -> Dict[int, List[Label]]:
    lo, hi = window
    degs = [g.degree for g in P.gens]
    mb = monomial_basis(P, (min(lo, lo - max(degs) - 1), max(hi, hi - min(degs) - 1)))
    labels: Dict[int, List[Label]] = {k: [] for k in range(lo, hi + 1)}
    for k in range(lo, hi + 1):
        labels[k].extend(("A", w) for w in mb.get(k, []))
        for gi, g in enumerate(P.gens):
            labels[k].extend(("O", w, gi) for w in mb.get(k - g.degree - 1, []))
    return labels


def naive_hochschild(P: DgPresentation, T: TruncationPolicy) -> MixedComplex:
    if not P.is_semi_free():
        raise PresentationError("naive Hochschild complex needs a semi-free presentation")
    if P.curvature.terms:
        raise PresentationError("naive Hochschild complex of a curved algebra is not defined")
    lo, hi = T.window
    labels = naive_labels(P, (lo, hi))
    ops = _NaiveOps(P)
    pos = all(g.degree > 0 for g in P.gens)
    C, Bm = _assemble(labels, ops.b, ops.B, P.base, (lo, hi), exact_below=pos and lo <= 0)

    def fmt(lab):
        if lab[0] == "A":
            return P.mono_str(lab[1])
        return f"{P.mono_str(lab[1])}.d{P.gens[lab[2]].name}"

    M = MixedComplex(C, Bm, "naive", P, fmt)
    M.ops = ops
    M.validate()
    return M


# ------------------------------------------------------------ chain maps


@dataclass
class ChainMap:
    source: MixedComplex
    target: MixedComplex
    f: Dict[int, SparseMatrix]

    def check(self, with_B: bool = True) -> List[str]:
        errs = []
        S, Tg = self.source.complex, self.target.complex
        lo = max(S.dmin, Tg.dmin)
        hi = min(S.dmax, Tg.dmax)
        for k in range(lo + 1, hi + 1):
            lhs = self.f[k - 1] @ S.diff(k)
            rhs = Tg.diff(k) @ self.f[k]
            if lhs != rhs:
                errs.append(f"f b != b f at degree {k}")
        if with_B:
            for k in range(lo, hi):
                lhs = self.f[k + 1] @ self.source.Bmat(k)
                rhs = self.target.Bmat(k) @ self.f[k]
                if lhs != rhs:
                    errs.append(f"f B != B f at degree {k}")
        return errs

    def is_zero_on_homology(self, k: int) -> bool:
        """Every cycle in degree k maps to a boundary.

        Works blockwise when both complexes carry a weight grading that the
        map preserves.
        """
        S, Tg = self.source.complex, self.target.complex
        for sub_s, sub_t, f in _weight_blocks(S, Tg, self.f[k], k):
            if S.ring == QQ:
                # rank [[f, d'], [d, 0]] = rank d + dim(f(ker d) + im d')
                d = sub_s.diff(k)
                dt = sub_t.diff(k + 1)
                big = block_matrix({(0, 0): f, (0, 1): dt, (1, 0): d},
                                   [f.nrows, d.nrows], [f.ncols, dt.ncols], QQ)
                if rank(big) != rank(d) + rank(dt):
                    return False
                continue
            rep = homology(sub_s, generators=True, degrees=[k])
            dT = sub_t.diff(k + 1)
            for z in rep.generators[k] + rep.torsion_generators[k]:
                if solve_factor(dT, f.apply(z)) is None:
                    return False
        return True


def _weight_blocks(S: FreeComplex, Tg: FreeComplex, f: SparseMatrix, k: int):
    """Split (S, Tg, f) around degree k into weight-homogeneous pieces."""
    if S.weights is None or Tg.weights is None:
        yield _local(S, k, None), _local(Tg, k, None), f
        return
    sw, tw = S.weights.get(k, []), Tg.weights.get(k, [])
    for (i, j) in f.entries:
        if tw[i] != sw[j]:
            raise ComplexError("chain map does not preserve weights")
    for w in sorted(set(sw), key=repr):
        ls, lt = _local(S, k, w), _local(Tg, k, w)
        rows = [i for i, x in enumerate(tw) if x == w]
        cols = [j for j, x in enumerate(sw) if x == w]
        yield ls, lt, f.submatrix(rows, cols)


def _local(C: FreeComplex, k: int, w) -> FreeComplex:
    """Degrees k-1..k+1 of C (restricted to weight w when given)."""
    degs = [j for j in (k - 1, k, k + 1) if C.dmin <= j <= C.dmax]
    idx = {j: [i for i in range(C.rank(j)) if w is None or C.weights[j][i] == w] for j in degs}
    bases = {j: [C.bases[j][i] for i in idx[j]] for j in degs}
    d = {j: C.diff(j).submatrix(idx[j - 1], idx[j]) for j in degs if j - 1 in idx}
    return FreeComplex(min(degs), max(degs), bases, d, C.ring)


def _map_matrix(src_labels, tgt_labels, fn, ring):
    index = {lab: i for i, lab in enumerate(tgt_labels)}
    ent = {}
    for j, lab in enumerate(src_labels):
        for t, c in fn(lab).items():
            i = index.get(t)
            if i is None:
                raise ComplexError(f"map sends {lab} to {t}, outside the target basis")
            ent[(i, j)] = ent.get((i, j), ZERO) + c
    return SparseMatrix(len(tgt_labels), len(src_labels), ent, ring)


def chain_map_from_labels(S: MixedComplex, Tg: MixedComplex, fn) -> ChainMap:
    lo = max(S.complex.dmin, Tg.complex.dmin)
    hi = min(S.complex.dmax, Tg.complex.dmax)
    f = {k: _map_matrix(S.basis(k), Tg.basis(k), fn, S.ring) for k in range(lo, hi + 1)}
    return ChainMap(S, Tg, f)


def comparison_map(M: MixedComplex, Nv: MixedComplex) -> Tuple[ChainMap, dict]:
    """Hoch(A) -> Hoch^naive(A): (a0) -> a0, (a0,a1) -> -(-1)^|a0| a0 d_dR a1, longer -> 0."""
    P = M.presentation
    if Nv.presentation is not P:
        raise ComplexError("comparison needs complexes of the same presentation")
    nops: _NaiveOps = Nv.ops

    def fn(lab):
        out: Dict[Label, Poly] = {}
        if len(lab) == 1:
            out[("A", lab[0])] = ONE
        elif len(lab) == 2:
            a0, a1 = lab
            s = 1 if P.mono_degree(a0) % 2 else -1
            for i, g in enumerate(a1):
                r = P.mono_mul(a0, a1[:i])
                if r is None:
                    continue
                nops._rot(r[1], g, a1[i + 1:], Poly.const(s * r[0]), out)
        return out

    F = chain_map_from_labels(M, Nv, fn)
    report = {"chain_map_errors": F.check(), "homology": compare_homology(M.complex, Nv.complex)}
    return F, report


def compare_homology(C1: FreeComplex, C2: FreeComplex, margin: int = 1) -> dict:
    lo = max(C1.dmin, C2.dmin)
    hi = min(C1.dmax, C2.dmax)
    degs = [k for k in range(lo, hi + 1) if C1.trusted(k, margin) and C2.trusted(k, margin)]
    h1 = homology(C1, degrees=degs)
    h2 = homology(C2, degrees=degs)
    rows = {}
    first_bad = None
    for k in degs:
        a = h1.summary(k)
        b = h2.summary(k)
        rows[k] = (a, b)
        if a != b and first_bad is None:
            first_bad = k
    return {"degrees": degs, "rows": rows, "agree": first_bad is None, "first_mismatch": first_bad}


def induced_map(f, M1: MixedComplex, M2: MixedComplex) -> ChainMap:
    """Chain map of Hochschild complexes induced by an algebra map (slotwise)."""
    P1 = M1.presentation
    cache = {}

    def fn(lab):
        parts = []
        for i, m in enumerate(lab):
            if m not in cache:
                cache[m] = f.apply(Element(P1, {m: ONE})).terms
            terms = cache[m]
            if i > 0:
                terms = {mm: c for mm, c in terms.items() if mm != ()}
            parts.append(terms)
        res: Dict[Label, Poly] = {(): ONE}
        for terms in parts:
            nxt: Dict[Label, Poly] = {}
            for pre, c in res.items():
                for mm, cc in terms.items():
                    _acc(nxt, pre + (mm,), c * cc)
            res = nxt
        return res

    return chain_map_from_labels(M1, M2, fn)


# ------------------------------------------------------------- duals


def dualize(C: FreeComplex) -> FreeComplex:
    """Degreewise dual over the base ring: (C^v)_{-k} = Hom(C_k, R).

    A map f of C dualizes to phi -> (-1)^{|phi|} phi o f, so the differential
    (C^v)_{-k+1} -> (C^v)_{-k} is (-1)^{k-1} d_k^T.
    """
    lo, hi = -C.dmax, -C.dmin
    bases = {-k: [("dual", lab) for lab in C.bases.get(k, [])] for k in C.degrees()}
    d = {}
    for k in range(C.dmin + 1, C.dmax + 1):
        m = C.diff(k).transpose()
        d[-k + 1] = m if k % 2 else m.scale(-1)
    return FreeComplex(lo, hi, bases, d, C.ring, C.exact_above, C.exact_below)


def dualize_mixed(M: MixedComplex) -> MixedComplex:
    D = dualize(M.complex)
    Bd = {}
    for k in range(M.complex.dmin, M.complex.dmax):
        # B_k : C_k -> C_{k+1};  transpose: (C^v)_{-k-1} -> (C^v)_{-k}
        m = M.Bmat(k).transpose()
        Bd[-k - 1] = m if k % 2 else m.scale(-1)
    return MixedComplex(D, Bd, "dual-" + M.provenance, M.presentation).validate()


def undual_label(lab):
    return lab[1] if isinstance(lab, tuple) and lab and lab[0] == "dual" else lab


@dataclass
class IsoReport:
    ok: bool
    message: str
    B_sign: int = 1
    signs: Optional[Dict] = None


def match_up_to_signs(M1: MixedComplex, M2: MixedComplex, bijection: Callable) -> IsoReport:
    """Decide whether ``bijection`` (label of M1 -> label of M2) is an isomorphism
    of mixed complexes after rescaling basis vectors by +-1 (and possibly B -> -B).
    """
    C1, C2 = M1.complex, M2.complex
    if (C1.dmin, C1.dmax) != (C2.dmin, C2.dmax):
        return IsoReport(False, "windows differ")
    pos2 = {}
    for k in C2.degrees():
        for i, lab in enumerate(C2.bases.get(k, [])):
            pos2[lab] = (k, i)
    perm = {}
    for k in C1.degrees():
        if C1.rank(k) != C2.rank(k):
            return IsoReport(False, f"rank mismatch in degree {k}: {C1.rank(k)} vs {C2.rank(k)}")
        seen = set()
        for i, lab in enumerate(C1.bases.get(k, [])):
            t = bijection(lab)
            if t not in pos2 or pos2[t][0] != k:
                return IsoReport(False, f"label {lab} -> {t} not in degree {k} of target")
            if t in seen:
                return IsoReport(False, f"bijection not injective at {t}")
            seen.add(t)
            perm[(k, i)] = pos2[t][1]
    for Bsign in (1, -1):
        edges = []
        ok = True
        msg = ""
        for kind in ("b", "B"):
            for k in C1.degrees():
                if kind == "b":
                    if k - 1 < C1.dmin:
                        continue
                    m1, m2, kt, sg = C1.diff(k), C2.diff(k), k - 1, 1
                else:
                    if k + 1 > C1.dmax:
                        continue
                    m1, m2, kt, sg = M1.Bmat(k), M2.Bmat(k), k + 1, Bsign
                mapped = {(perm[(kt, i)], perm[(k, j)]): v for (i, j), v in m1.entries.items()}
                if set(mapped) != set(m2.entries):
                    ok, msg = False, f"{kind} support differs in degree {k}"
                    break
                for key, v in mapped.items():
                    w = m2.entries[key]
                    if w == v * sg:
                        par = 0
                    elif w == -(v * sg):
                        par = 1
                    else:
                        ok, msg = False, f"{kind} entry {v} vs {w} in degree {k}"
                        break
                    edges.append(((kt, key[0]), (k, key[1]), par))
                if not ok:
                    break
            if not ok:
                break
        if not ok:
            continue
        signs = _solve_parity(edges)
        if signs is not None:
            return IsoReport(True, "isomorphic up to basis signs", Bsign, signs)
        msg = "sign system inconsistent"
    return IsoReport(False, msg)


def _solve_parity(edges):
    parent = {}
    par = {}

    def find(v):
        if v not in parent:
            parent[v] = v
            par[v] = 0
            return v, 0
        p = 0
        r = v
        path = []
        while parent[r] != r:
            path.append(r)
            p ^= par[r]
            r = parent[r]
        return r, p

    for a, b, w in edges:
        ra, pa = find(a)
        rb, pb = find(b)
        if ra == rb:
            if pa ^ pb != w:
                return None
        else:
            parent[ra] = rb
            par[ra] = pa ^ pb ^ w
    return {v: find(v)[1] for v in list(parent)}


# ----------------------------------------------------- negative cyclic


@dataclass
class CyclicComplex:
    """CC^-(M) / u^N: basis (j, label) with u-power j in [0, N)."""

    complex: FreeComplex
    source: MixedComplex
    u_order: int
    trusted_range: Tuple[int, int]


def negative_cyclic(M: MixedComplex, T: TruncationPolicy) -> CyclicComplex:
    """(C[[u]], b + uB) modulo u^N; u has degree -2.

    Degree k of the result is  sum_{0<=j<N} u^j C_{k+2j}.  Only degrees
    whose pieces all lie inside M's window (or where M is known to vanish)
    are built, so the requested window is clipped to that range.  A degree
    is trusted when it and both neighbours are built and are not the clipped
    edge of a nonzero complex.
    """
    N = T.u_order
    C = M.complex
    lo, hi = T.window
    if not C.exact_below:
        lo = max(lo, C.dmin)
    if not C.exact_above:
        hi = min(hi, C.dmax - 2 * (N - 1))
    if lo > hi:
        raise ComplexError(f"window {T.window} leaves no complete degree for u-order {N} "
                           f"over a mixed complex on [{C.dmin}, {C.dmax}]")

    def piece(k):
        return C.bases.get(k, []) if C.dmin <= k <= C.dmax else []

    bases = {k: [(j, lab) for j in range(N) for lab in piece(k + 2 * j)]
             for k in range(lo, hi + 1)}
    pos = {k: {lab: i for i, lab in enumerate(bases[k])} for k in bases}
    mpos = {k: {lab: i for i, lab in enumerate(C.bases.get(k, []))} for k in C.degrees()}
    bcols = {k: _columns(C.diff(k)) for k in range(C.dmin + 1, C.dmax + 1)}
    Bcols = {k: _columns(M.Bmat(k)) for k in range(C.dmin, C.dmax)}
    d = {}
    for k in range(lo + 1, hi + 1):
        ent = {}
        for col, (j, lab) in enumerate(bases[k]):
            ck = k + 2 * j
            ci = mpos[ck][lab]
            for r, v in bcols.get(ck, {}).get(ci, ()):
                ent[(pos[k - 1][(j, C.bases[ck - 1][r])], col)] = v
            if j + 1 < N:
                for r, v in Bcols.get(ck, {}).get(ci, ()):
                    key = (pos[k - 1][(j + 1, C.bases[ck + 1][r])], col)
                    ent[key] = ent.get(key, ZERO) + v
        d[k] = SparseMatrix(len(bases[k - 1]), len(bases[k]), ent, C.ring)
    # CC vanishes below lo iff every piece C_{k+2j} (k < lo, j < N) does
    exact_below = C.exact_below and lo - 1 + 2 * (N - 1) < C.dmin
    exact_above = C.exact_above and hi + 1 > C.dmax
    trusted = [k for k in range(lo, hi + 1)
               if (exact_below or k > lo) and (exact_above or k < hi)]
    tr = (min(trusted), max(trusted)) if trusted else (hi + 1, lo - 1)
    weights = None
    if C.weights is not None:
        weights = {k: [C.weights[k + 2 * j][mpos[k + 2 * j][lab]] for j, lab in bases[k]]
                   for k in bases}
    FC = FreeComplex(lo, hi, bases, d, C.ring, exact_below, exact_above, weights, tr)
    FC.validate()
    return CyclicComplex(FC, M, N, tr)


def _columns(m: SparseMatrix) -> Dict[int, List]:
    cols: Dict[int, List] = {}
    for (i, j), v in m.entries.items():
        cols.setdefault(j, []).append((i, v))
    return cols


def homology_with_u_action(CC: CyclicComplex, degrees: Optional[Iterable[int]] = None) -> HomologyReport:
    """Homology of CC^-/u^N plus the matrices of u: H_k -> H_{k-2}.

    The action matrix for degree k has one column per generator of H_k
    (free generators first, then torsion generators) and rows in the same
    order for H_{k-2}; entries are the coordinates of u * generator.
    """
    C = CC.complex
    degs = list(C.degrees()) if degrees is None else list(degrees)
    rep = homology(C, generators=True, degrees=degs)
    for k in degs:
        if k - 2 not in rep.generators:
            continue
        gens = rep.generators[k] + rep.torsion_generators[k]
        cols = []
        src = C.bases[k]
        tpos = {lab: i for i, lab in enumerate(C.bases[k - 2])}
        for z in gens:
            img = [ZERO] * len(C.bases[k - 2])
            for i, v in enumerate(z):
                if v.c:
                    j, lab = src[i]
                    if j + 1 < CC.u_order:
                        img[tpos[(j + 1, lab)]] = v
            free, tors = homology_coords(rep, k - 2, img)
            cols.append(free + tors)
        nrow = len(rep.generators[k - 2]) + len(rep.torsion_generators[k - 2])
        ent = {(i, j): v for j, col in enumerate(cols) for i, v in enumerate(col) if v.c}
        rep.action[k] = SparseMatrix(nrow, len(gens), ent, C.ring)
    return rep


def stable_ranks(M: MixedComplex, T: TruncationPolicy) -> Dict[int, int]:
    """Dimensions of Im(H_k(CC/u^N) -> H_k(CC/u^{N-m})) over Q, m = margin.

    Reducing modulo a lower power of u discards the classes created by the
    cut at u^N (they live in the top u-powers); what survives is the image
    of HC^- whenever the u-torsion of HC^- is killed by u^m.  Only degrees
    trusted in both truncations are reported.
    """
    if M.ring != QQ:
        raise ComplexError("stable ranks are computed over Q only")
    N, m = T.u_order, T.margin
    if N - m < 1:
        raise ComplexError(f"u-order {N} leaves nothing after discarding margin {m}")
    big = negative_cyclic(M, T)
    small = negative_cyclic(M, TruncationPolicy(T.window, N - m, T.margin, T.weight_bound))
    A, S = big.complex, small.complex
    out = {}
    for k in range(A.dmin, A.dmax + 1):
        if not (A.trusted(k) and S.trusted(k)) or k + 1 > S.dmax:
            continue
        spos = {lab: i for i, lab in enumerate(S.bases[k])}
        ent = {(spos[lab], c): ONE for c, lab in enumerate(A.bases[k]) if lab in spos}
        pi = SparseMatrix(S.rank(k), A.rank(k), ent, QQ)
        d = A.diff(k) if k > A.dmin else SparseMatrix.zero(0, A.rank(k), QQ)
        dt = S.diff(k + 1)
        blk = block_matrix({(0, 0): pi, (0, 1): dt, (1, 0): d},
                           [pi.nrows, d.nrows], [pi.ncols, dt.ncols], QQ)
        out[k] = rank(blk) - rank(d) - rank(dt)
    return out
