"""Sign and grading conventions, as a table printed by the CLI and hashed
into every result."""
import hashlib

CONVENTIONS = (
    ("grading", "homological; d has degree -1, B and d_dR degree +1, u degree -2"),
    ("koszul", "a b = (-1)^{|a||b|} b a for graded-commutative presentations"),
    ("hochschild chains", "a0 (x) s a1 (x) ... (x) s ak, |s a| = |a| + 1; exported b = -b_shift, B = -B_shift"),
    ("b_shift internal", "-s(d a_i) with sign (-1)^{S_i}, S_i = |a0| + sum_{j<i} |s a_j|"),
    ("b_shift product", "(-1)^{S_i + |a_i|} a_i a_{i+1}; cyclic term (-1)^{sigma_k S_k + |a_k|} a_k a0"),
    ("b_shift curvature", "-s h inserted after slot i with sign (-1)^{S_{i+1}}"),
    ("B_shift", "s1 inserted before each rotation with Koszul sign (-1)^{(tot-pre) pre}; zero if a0 is a scalar"),
    ("naive complex", "Cone(Omega# -> A); b(w dg) = -d_Omega + mu, mu = w g - (-1)^{|w||g|} g w; B = d_dR"),
    ("forms", "Sym(Omega^1[1]) on symbols dg of degree |g|+1; d(dg) = -d_dR(d g); d_dR a Koszul derivation"),
    ("HKR", "(a0..ak) -> 1/k! a0 da1..dak onto (Sym, d - d_dR h, -d_dR)"),
    ("dual", "C^vee_{-k} = Hom(C_k, R); d^T and B^T both carry (-1)^{|phi|}"),
    ("negative cyclic", "C[[u]] with b + uB, truncated mod u^N"),
    ("bar", "d[..] = sum (-1)^{e_{i-1}+1}[..|d a_i|..] + sum (-1)^{e_i}[..|a_i a_{i+1}|..]"),
    ("cobar", "d(s^-1 c) = -s^-1 dc + sum (-1)^{|c'|} s^-1 c' s^-1 c''"),
    ("witt", "W = 1 + tR[[t]], t <-> x^{-1}; ghost = coefficients of -t d/dt log"),
)


def conventions_text() -> str:
    return "\n".join(f"{k}: {v}" for k, v in CONVENTIONS) + "\n"


def conventions_hash() -> str:
    return hashlib.sha256(conventions_text().encode()).hexdigest()[:16]
