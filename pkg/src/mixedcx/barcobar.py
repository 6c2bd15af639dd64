"""Bar and cobar constructions over Q with a weight grading, Koszul-dual
endomorphism algebras, the Amitsur contracting homotopy and the deformed
tensor algebra.

Sign conventions (Koszul, homological grading, s of degree +1):
  bar:   d[a1|...|am] = sum_i (-1)^{e_{i-1}+1} [..|d a_i|..]
                        + sum_i (-1)^{e_i} [..|a_i a_{i+1}|..],   e_i = sum_{j<=i} (|a_j| + 1)
  cobar: d(s^-1 c) = -s^-1(d c) + sum (-1)^{|c'|} (s^-1 c')(s^-1 c'')  over the reduced coproduct.
Both are checked (d^2 = 0) on every construction.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import flint
from gmpy2 import mpq

from . import qlinalg as ql
from .dgcore import FREE, DgPresentation, Generator, Monomial, PresentationError
from .exactalg import QQ, ComplexError, FreeComplex, SparseMatrix, Poly

DEFAULT_WEIGHT_BOUND = 6
DEFAULT_WINDOW_WIDTH = 12

Word = Tuple[Monomial, ...]


# ------------------------------------------------------------- coalgebras


@dataclass
class CoalgebraData:
    """Counital coaugmented dg coalgebra over Q with a basis graded by
    (degree, weight).  ``unit`` is the coaugmentation label; ``delta[c]``
    maps (c', c'') to a coefficient; ``d[c]`` maps labels to coefficients.
    """

    basis: List
    degree: Dict
    weight: Dict
    delta: Dict
    unit: object
    d: Dict = field(default_factory=dict)
    name: str = ""

    @property
    def reduced(self) -> List:
        return [c for c in self.basis if c != self.unit]

    def counit(self, c) -> int:
        return 1 if c == self.unit else 0

    def reduced_delta(self, c) -> Dict:
        return {(a, b): v for (a, b), v in self.delta.get(c, {}).items()
                if a != self.unit and b != self.unit}

    def dims(self) -> Dict[Tuple[int, int], int]:
        out: Dict[Tuple[int, int], int] = {}
        for c in self.basis:
            key = (self.degree[c], self.weight[c])
            out[key] = out.get(key, 0) + 1
        return out

    def check(self) -> List[str]:
        errs = []
        for c in self.basis:
            dl = self.delta.get(c, {})
            # counit laws
            left = {b: v for (a, b), v in dl.items() if a == self.unit}
            right = {a: v for (a, b), v in dl.items() if b == self.unit}
            if left != {c: 1} or right != {c: 1}:
                errs.append(f"counit law fails on {c!r}")
            # coassociativity
            lhs: Dict = {}
            rhs: Dict = {}
            for (a, b), v in dl.items():
                for (a1, a2), w in self.delta.get(a, {}).items():
                    lhs[(a1, a2, b)] = lhs.get((a1, a2, b), 0) + v * w
                for (b1, b2), w in self.delta.get(b, {}).items():
                    rhs[(a, b1, b2)] = rhs.get((a, b1, b2), 0) + v * w
            if {k: v for k, v in lhs.items() if v} != {k: v for k, v in rhs.items() if v}:
                errs.append(f"coassociativity fails on {c!r}")
            # weights: additive, reduced part of positive weight (conilpotency)
            for (a, b), v in dl.items():
                if self.weight[a] + self.weight[b] != self.weight[c] or \
                        self.degree[a] + self.degree[b] != self.degree[c]:
                    errs.append(f"coproduct of {c!r} is not homogeneous")
            if c != self.unit and self.weight[c] <= 0:
                errs.append(f"reduced element {c!r} of weight <= 0: conilpotency not certified")
        for c in self.basis:
            dd: Dict = {}
            for a, v in self.d.get(c, {}).items():
                for b, w in self.d.get(a, {}).items():
                    dd[b] = dd.get(b, 0) + v * w
            if any(dd.values()):
                errs.append(f"d^2 != 0 on {c!r}")
        return errs

    def validate(self) -> "CoalgebraData":
        if self.unit not in self.basis or self.weight[self.unit] != 0 or self.degree[self.unit] != 0:
            raise ComplexError("coaugmentation must be a basis element of degree 0, weight 0")
        errs = self.check()
        if errs:
            raise ComplexError("; ".join(errs[:5]))
        return self


def truncated_dual(n: int, degree: int = 0) -> CoalgebraData:
    """(Q[s]/s^n)^*: basis s^k (0 <= k < n), weight k, Delta(s^k) = sum s^a (x) s^b."""
    if n < 1:
        raise ValueError("n must be >= 1")
    basis = [f"s^{k}" for k in range(n)]
    delta = {f"s^{k}": {(f"s^{a}", f"s^{k - a}"): 1 for a in range(k + 1)} for k in range(n)}
    return CoalgebraData(basis, {b: degree * k for k, b in enumerate(basis)},
                         {b: k for k, b in enumerate(basis)}, delta, "s^0",
                         name=f"(Q[s]/s^{n})^*").validate()


def unit_coalgebra() -> CoalgebraData:
    return truncated_dual(1)


# ------------------------------------------------------------ presentations


def _augmented_monomials(A: DgPresentation, W: int) -> List[Monomial]:
    """Normal-form monomials of positive length and weight <= W."""
    if any(g.weight <= 0 for g in A.gens):
        raise PresentationError("bar needs every generator to have positive weight "
                                "(otherwise a weight piece is infinite)")
    found = {}
    frontier = [()]
    while frontier:
        nxt = []
        for m in frontier:
            for i, g in enumerate(A.gens):
                if A.mono_weight(m) + g.weight > W:
                    continue
                r = A.mono_mul(m, (i,))
                if r is None or r[1] in found:
                    continue
                found[r[1]] = True
                nxt.append(r[1])
        frontier = nxt
    return sorted(found, key=lambda m: (A.mono_weight(m), len(m), m))


def _words(monos: List[Monomial], A: DgPresentation, W: int) -> List[Word]:
    out = [()]
    frontier = [((), 0)]
    while frontier:
        nxt = []
        for w, wt in frontier:
            for m in monos:
                mw = A.mono_weight(m)
                if wt + mw <= W:
                    nw = w + (m,)
                    out.append(nw)
                    nxt.append((nw, wt + mw))
        frontier = nxt
    return out


@dataclass
class BarData:
    """Bar(A) up to a weight bound: a coalgebra with differential and its
    per-weight chain complexes over Q."""

    algebra: DgPresentation
    weight_bound: int
    coalgebra: CoalgebraData
    complexes: Dict[int, FreeComplex]

    def homology_dims(self) -> Dict[Tuple[int, int], int]:
        out = {}
        for w, C in self.complexes.items():
            for k, v in _homology_dims_q(C).items():
                if v:
                    out[(k, w)] = v
        return out


def _word_degree(A, w: Word) -> int:
    return sum(A.mono_degree(m) + 1 for m in w)


def bar(A: DgPresentation, weight_bound: int = DEFAULT_WEIGHT_BOUND) -> BarData:
    """Tensor coalgebra on A-bar[1] (augmentation ideal = positive-length
    monomials) up to total weight ``weight_bound``, with the bar differential."""
    if A.base != QQ:
        raise PresentationError("bar is implemented over Q")
    if A.curvature.terms:
        raise PresentationError("bar of a curved algebra is not supported")
    W = weight_bound
    monos = _augmented_monomials(A, W)
    words = _words(monos, A, W)

    def reduced(elem_terms):
        for m in elem_terms:
            if len(m) == 0:
                raise PresentationError("A is not augmented: a constant appears in d or a product")

    d: Dict[Word, Dict[Word, mpq]] = {}
    for w in words:
        out: Dict[Word, mpq] = {}
        e = 0
        for i, a in enumerate(w):
            da = A.d_monomial(a)
            reduced(da)
            s = -1 if (e + 1) % 2 else 1
            for m, c in da.items():
                key = w[:i] + (m,) + w[i + 1:]
                out[key] = out.get(key, 0) + s * c.c[0]
            e += A.mono_degree(a) + 1
            if i + 1 < len(w):
                r = A.mono_mul(a, w[i + 1])
                if r is not None:
                    key = w[:i] + (r[1],) + w[i + 2:]
                    out[key] = out.get(key, 0) + (-1 if e % 2 else 1) * r[0]
        d[w] = {k: mpq(v) for k, v in out.items() if v}
    delta = {w: {(w[:p], w[p:]): 1 for p in range(len(w) + 1)} for w in words}
    C = CoalgebraData(words, {w: _word_degree(A, w) for w in words},
                      {w: sum(A.mono_weight(m) for m in w) for w in words}, delta, (), d,
                      name=f"Bar({A.name})")
    errs = C.check()
    if errs:
        raise ComplexError("bar construction: " + "; ".join(errs[:3]))
    return BarData(A, W, C, _weight_complexes(C))


def _weight_complexes(C: CoalgebraData) -> Dict[int, FreeComplex]:
    out = {}
    for w in sorted(set(C.weight.values())):
        labels = [c for c in C.basis if C.weight[c] == w]
        degs = [C.degree[c] for c in labels]
        lo, hi = min(degs), max(degs)
        bases = {k: [c for c in labels if C.degree[c] == k] for k in range(lo, hi + 1)}
        pos = {k: {c: i for i, c in enumerate(bases[k])} for k in bases}
        dm = {}
        for k in range(lo + 1, hi + 1):
            ent = {}
            for j, c in enumerate(bases[k]):
                for t, v in C.d.get(c, {}).items():
                    ent[(pos[k - 1][t], j)] = Poly.const(v)
            dm[k] = SparseMatrix(len(bases[k - 1]), len(bases[k]), ent, QQ)
        F = FreeComplex(lo, hi, bases, dm, QQ, True, True)
        F.validate()
        out[w] = F
    return out


def _flint(M: SparseMatrix):
    return ql.matrix(M.nrows, M.ncols, {k: v.c[0] for k, v in M.entries.items()})


def _homology_dims_q(C: FreeComplex) -> Dict[int, int]:
    ranks = {k: ql.rank(_flint(C.diff(k))) for k in range(C.dmin, C.dmax + 2)}
    return {k: C.rank(k) - ranks[k] - ranks[k + 1] for k in C.degrees()}


def cobar(C: CoalgebraData) -> DgPresentation:
    """Free graded algebra on s^-1 of the reduced basis, differential from
    d_C and the reduced coproduct."""
    C.validate()
    red = C.reduced
    name = {c: f"c{i + 1}" for i, c in enumerate(red)}
    gens = [Generator(name[c], C.degree[c] - 1, C.weight[c]) for c in red]
    idx = {c: i for i, c in enumerate(red)}
    diff = {}
    for c in red:
        terms: Dict[Monomial, mpq] = {}
        for t, v in C.d.get(c, {}).items():
            if t == C.unit:
                raise ComplexError("d_C hits the coaugmentation")
            terms[(idx[t],)] = terms.get((idx[t],), 0) - v
        for (a, b), v in C.reduced_delta(c).items():
            s = -1 if C.degree[a] % 2 else 1
            key = (idx[a], idx[b])
            terms[key] = terms.get(key, 0) + s * v
        terms = {k: v for k, v in terms.items() if v}
        if terms:
            diff[name[c]] = terms
    P = DgPresentation(QQ, FREE, gens, diff, name=f"Cobar({C.name})")
    for i in range(len(gens)):
        if P.differential(P.d_gen(i)).terms:
            raise ComplexError(f"cobar: d^2 != 0 on {gens[i].name}")
    return P


def bar_cobar_roundtrip(C: CoalgebraData, weight_bound: int = 4) -> dict:
    """Weightwise homology of Bar(Cobar(C)) against the homology of C."""
    A = cobar(C)
    B = bar(A, weight_bound)
    got = B.homology_dims()
    want: Dict[Tuple[int, int], int] = {}
    for w, Cw in _weight_complexes(C).items():
        if w > weight_bound:
            continue
        for k, v in _homology_dims_q(Cw).items():
            if v:
                want[(k, w)] = v
    return {"ok": got == want, "bar_cobar": got, "coalgebra": want,
            "weight_bound": weight_bound}


def algebra_weight_homology(A: DgPresentation, weight_bound: int) -> Dict[Tuple[int, int], int]:
    """Nonzero homology dimensions of A over Q, per (degree, weight <= bound),
    including the unit in (0, 0)."""
    monos = [()] + _augmented_monomials(A, weight_bound)
    out: Dict[Tuple[int, int], int] = {}
    for w in sorted({A.mono_weight(m) for m in monos}):
        labels = [m for m in monos if A.mono_weight(m) == w]
        degs = [A.mono_degree(m) for m in labels]
        lo, hi = min(degs), max(degs)
        bases = {k: [m for m in labels if A.mono_degree(m) == k] for k in range(lo, hi + 1)}
        pos = {k: {m: i for i, m in enumerate(b)} for k, b in bases.items()}
        dm = {}
        for k in range(lo + 1, hi + 1):
            ent = {}
            for j, m in enumerate(bases[k]):
                for t, v in A.d_monomial(m).items():
                    ent[(pos[k - 1][t], j)] = v
            dm[k] = SparseMatrix(len(bases[k - 1]), len(bases[k]), ent, QQ)
        F = FreeComplex(lo, hi, bases, dm, QQ, True, True)
        F.validate()
        for k, v in _homology_dims_q(F).items():
            if v:
                out[(k, w)] = v
    return out


def cobar_bar_roundtrip(A: DgPresentation, weight_bound: int = 4) -> dict:
    """Weightwise homology of Cobar(Bar(A)) against that of A.

    Both sides are exact up to the bound: a weight-w piece only involves
    bar words of weight <= w."""
    B = bar(A, weight_bound)
    got = algebra_weight_homology(cobar(B.coalgebra), weight_bound)
    want = algebra_weight_homology(A, weight_bound)
    return {"ok": got == want, "cobar_bar": got, "algebra": want, "weight_bound": weight_bound}


# ----------------------------------------------------- Koszul dual algebras


@dataclass
class KoszulDualReport:
    dims: Dict[Tuple[int, int], int]
    total_dimension: int
    generator_nilpotency: Optional[int]
    weight_bound: int

    @property
    def ok_bounds(self) -> bool:
        """Nilpotency was detected strictly inside the weight bound."""
        return self.generator_nilpotency is not None


def koszul_dual_endomorphisms(A: DgPresentation,
                              weight_bound: int = DEFAULT_WEIGHT_BOUND) -> KoszulDualReport:
    """Cohomology of the weightwise dual of Bar(A) with the convolution
    product (dual to deconcatenation, i.e. concatenation of dual words).

    Reports the graded dimensions, their total and the nilpotency order of
    the weight-one class (when that weight piece is one-dimensional).
    """
    B = bar(A, weight_bound)
    dims: Dict[Tuple[int, int], int] = {}
    data = {}
    for w, Cw in B.complexes.items():
        for k in Cw.degrees():
            # cochains in degree k: functionals on Cw_k; coboundary is d_{k+1}^T
            n = Cw.rank(k)
            dk1 = _flint(Cw.diff(k + 1)) if k + 1 <= Cw.dmax else ql.matrix(n, 0)
            dk = _flint(Cw.diff(k)) if k > Cw.dmin else ql.matrix(0, n)
            cocyc = ql.Space(n, ql.kernel(dk1.transpose(), n) if dk1.ncols() else ql.kernel(
                ql.matrix(0, n), n))
            cobound = ql.Space(n, [ql.column(dk.transpose(), j) for j in range(dk.nrows())])
            h = cocyc.dim - cobound.dim
            if h:
                dims[(k, w)] = h
            data[(k, w)] = (cocyc, cobound)
    nil = None
    one = [(k, w) for (k, w) in dims if w == 1]
    if len(one) == 1 and dims[one[0]] == 1:
        k1 = one[0][0]
        cocyc, cobound = data[(k1, 1)]
        rep = None
        for v in cocyc.basis:
            if (cobound + ql.Space(cobound.n, [v])).dim > cobound.dim:
                rep = v
                break
        words1 = B.complexes[1].bases[k1]
        phi = {words1[i]: rep[i] for i in range(len(words1)) if rep[i] != 0}
        power = dict(phi)
        for m in range(2, weight_bound + 1):
            power = _convolve(B, power, phi, k1)
            km = k1 * m
            if km not in B.complexes[m].bases:
                nil = m
                break
            basis_m = B.complexes[m].bases[km]
            vec = [power.get(wd, flint.fmpq(0)) for wd in basis_m]
            cob = data[(km, m)][1]
            if (cob + ql.Space(cob.n, [vec])).dim == cob.dim:
                nil = m
                break
    return KoszulDualReport(dims, sum(dims.values()), nil, weight_bound)


def _convolve(B: BarData, phi: Dict, psi: Dict, deg_psi: int) -> Dict:
    """(phi * psi)(u v) = (-1)^{|psi||u|} phi(u) psi(v) over all splittings."""
    out: Dict = {}
    A = B.algebra
    for u, a in phi.items():
        s = -1 if (deg_psi * _word_degree(A, u)) % 2 else 1
        for v, b in psi.items():
            w = u + v
            out[w] = out.get(w, 0) + s * a * b
    return {k: v for k, v in out.items() if v != 0}


# ---------------------------------------------------------------- Amitsur


@dataclass
class AmitsurReport:
    ok: bool
    levels_checked: int
    failure_level: Optional[int] = None
    witness: Optional[int] = None


def amitsur_homotopy(eps: Sequence, delta: Sequence[Sequence], length: int = 5) -> AmitsurReport:
    """Check d h + h d = id on K_n = C^{(x)(n+1)}, n <= length.

    ``eps`` is the counit row (length r); ``delta`` is the r^2 x r matrix of
    Delta in the basis e_i (x) e_j (index i*r + j).  Requires the section law
    (id (x) eps) Delta = id; otherwise raises with a witness basis vector.
    """
    r = len(eps)
    E = ql.matrix(1, r, {(0, j): v for j, v in enumerate(eps)})
    D = ql.matrix(r * r, r, {(i, j): delta[i][j] for i in range(r * r) for j in range(r)
                             if delta[i][j] != 0})
    I = ql.identity(r)
    sec = ql.kron(I, E) * D
    if sec != I:
        for j in range(r):
            if ql.column(sec, j) != ql.column(I, j):
                raise ComplexError(f"section law (id x eps) Delta = id fails on basis vector e_{j}")

    def idk(k):
        return ql.identity(r ** k)

    def d(n):  # K_n -> K_{n-1}
        M = ql.matrix(r ** n, r ** (n + 1))
        for i in range(1, n + 1):
            term = ql.kron(ql.kron(idk(i), E), idk(n - i))
            M = M + term if (i - 1) % 2 == 0 else M - term
        return M

    def h(n):  # K_n -> K_{n+1}
        return ql.kron(D, idk(n))

    for n in range(0, length + 1):
        lhs = d(n + 1) * h(n)
        if n >= 1:
            lhs = lhs + h(n - 1) * d(n)
        target = idk(n + 1)
        if lhs != target:
            bad = next(j for j in range(r ** (n + 1)) if ql.column(lhs, j) != ql.column(target, j))
            return AmitsurReport(False, n, n, bad)
    return AmitsurReport(True, length)


def random_section_data(r: int, rng: random.Random, bound: int = 5):
    """Random (eps, Delta) over Q satisfying (id (x) eps) Delta = id."""
    eps = [mpq(rng.randint(-bound, bound), rng.randint(1, bound)) for _ in range(r)]
    if all(e == 0 for e in eps):
        eps[0] = mpq(1)
    p = next(i for i, e in enumerate(eps) if e != 0)
    D = [[mpq(rng.randint(-bound, bound), rng.randint(1, bound)) for _ in range(r)]
         for _ in range(r * r)]
    # correct: Delta += (id - (id x eps) Delta) (x) u with eps(u) = 1, u = e_p / eps_p
    for j in range(r):
        for i in range(r):
            s = sum(D[i * r + k][j] * eps[k] for k in range(r))
            corr = (1 if i == j else 0) - s
            D[i * r + p][j] += corr / eps[p]
    return eps, D


# ------------------------------------------------- deformed tensor algebra


@dataclass
class WeightedComplex:
    """A complex over Q whose basis carries a weight preserved or lowered by d
    (here: word length, a filtration)."""

    complex: FreeComplex
    weight: Dict[int, List[int]]

    def filtration_piece(self, k: int) -> FreeComplex:
        C = self.complex
        idx = {j: [i for i, w in enumerate(self.weight[j]) if w <= k] for j in C.degrees()}
        bases = {j: [C.bases[j][i] for i in idx[j]] for j in C.degrees()}
        d = {j: C.diff(j).submatrix(idx[j - 1], idx[j]) for j in range(C.dmin + 1, C.dmax + 1)}
        return FreeComplex(C.dmin, C.dmax, bases, d, C.ring)

    def graded_piece(self, k: int) -> FreeComplex:
        C = self.complex
        idx = {j: [i for i, w in enumerate(self.weight[j]) if w == k] for j in C.degrees()}
        bases = {j: [C.bases[j][i] for i in idx[j]] for j in C.degrees()}
        d = {j: C.diff(j).submatrix(idx[j - 1], idx[j]) for j in range(C.dmin + 1, C.dmax + 1)}
        return FreeComplex(C.dmin, C.dmax, bases, d, C.ring)


@dataclass
class GradedModule:
    """Finite graded Q-module with differential and a degree -1 map v: V -> Q
    (equivalently a degree-0 map V -> Q[1])."""

    degrees: List[int]
    d: Dict[Tuple[int, int], object] = field(default_factory=dict)  # (target, source) -> coef
    v: Dict[int, object] = field(default_factory=dict)  # source index -> coef

    def validate(self):
        n = len(self.degrees)
        for (i, j), c in self.d.items():
            if self.degrees[i] != self.degrees[j] - 1:
                raise ComplexError("d_V must have degree -1")
        for j, c in self.v.items():
            if c and self.degrees[j] != 1:
                raise ComplexError("v: V -> Q[1] can only be nonzero in degree 1")
        for j in range(n):
            # d^2 = 0 and v d = 0
            dd: Dict[int, object] = {}
            vd = 0
            for (i, jj), c in self.d.items():
                if jj != j:
                    continue
                vd += c * self.v.get(i, 0)
                for (k, ii), c2 in self.d.items():
                    if ii == i:
                        dd[k] = dd.get(k, 0) + c * c2
            if any(dd.values()) or vd:
                raise ComplexError("(V, d_V, v) is not a complex over Q[1]")
        return self


def deformed_tensor_algebra(V: GradedModule, max_length: int, window: Tuple[int, int],
                            deformed: bool = True) -> WeightedComplex:
    """T(V) on words of length <= max_length in the degree window, with
    d(v1...vk) = sum (-1)^{|v1..v_{i-1}|} (v1..d v_i..vk + v(v_i) v1..^v_i..vk).

    The contraction term (dropped when ``deformed`` is False) lowers word
    length by one, so word length is a filtration whose associated graded is
    the plain tensor algebra."""
    V.validate()
    lo, hi = window
    n = len(V.degrees)
    words = [()]
    frontier = [()]
    for _ in range(max_length):
        frontier = [w + (i,) for w in frontier for i in range(n)]
        words += frontier

    def deg(w):
        return sum(V.degrees[i] for i in w)

    bases = {k: [w for w in words if deg(w) == k] for k in range(lo, hi + 1)}
    pos = {k: {w: i for i, w in enumerate(bases[k])} for k in bases}
    dm = {}
    for k in range(lo + 1, hi + 1):
        ent: Dict[Tuple[int, int], Poly] = {}
        for j, w in enumerate(bases[k]):
            pre = 0
            for i, a in enumerate(w):
                s = -1 if pre % 2 else 1
                for (t, src), c in V.d.items():
                    if src == a:
                        key = (pos[k - 1][w[:i] + (t,) + w[i + 1:]], j)
                        ent[key] = ent.get(key, Poly()) + Poly.const(s * mpq(c))
                if deformed and V.v.get(a, 0):
                    key = (pos[k - 1][w[:i] + w[i + 1:]], j)
                    ent[key] = ent.get(key, Poly()) + Poly.const(s * mpq(V.v[a]))
                pre += V.degrees[a]
        dm[k] = SparseMatrix(len(bases[k - 1]), len(bases[k]),
                             {kk: vv for kk, vv in ent.items() if vv.c}, QQ)
    C = FreeComplex(lo, hi, bases, dm, QQ)
    C.validate()
    return WeightedComplex(C, {k: [len(w) for w in bases[k]] for k in bases})


def check_associated_graded(V: GradedModule, max_length: int, window: Tuple[int, int]) -> dict:
    """gr_k of the word-length filtration equals the plain tensor power V^{(x)k}
    (same basis and identical differential), and the top filtration piece is
    the whole model."""
    Td = deformed_tensor_algebra(V, max_length, window, True)
    Tp = deformed_tensor_algebra(V, max_length, window, False)
    rows = []
    ok = True
    for k in range(max_length + 1):
        g = Td.graded_piece(k)
        p = Tp.graded_piece(k)
        same = all(g.bases[j] == p.bases[j] for j in g.degrees()) and \
            all(g.diff(j) == p.diff(j) for j in range(g.dmin + 1, g.dmax + 1))
        ranks = _homology_dims_q(g) == _homology_dims_q(p)
        rows.append({"length": k, "same_complex": same, "same_homology": ranks})
        ok = ok and same and ranks
    top = Td.filtration_piece(max_length)
    colim = all(top.bases[j] == Td.complex.bases[j] for j in top.degrees()) and \
        _homology_dims_q(top) == _homology_dims_q(Td.complex)
    return {"ok": ok and colim, "rows": rows, "colimit_matches": colim}
