"""Eigenstructure of integer toral maps.

Which eigenvalues lie on the unit circle is decided exactly (irreducible
factors, the reciprocal substitution and Sturm counts); the subspaces
themselves are computed numerically from an ordered real Schur form.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import mpmath
import numpy as np
import scipy.linalg

from .errors import (CertificationError, ClassificationError, ConstructionError,
                     RejectedInput, UnsupportedStructure)
from .polynomials import (IntPolynomial, char_poly, cyclotomic_factors, exact_rank,
                          factor_integer, int_matmul, matrix_poly, unit_circle_pairs)
from .torus import IntMatrix, as_matrix

DEFAULT_TOL = 1e-10

HYPERBOLIC = "hyperbolic"
CENTRAL_SPIN = "quasihyperbolic_central_spin"
JORDAN = "quasihyperbolic_jordan"
NONERGODIC = "nonergodic"


class HypothesisWarning(UserWarning):
    """A theorem hypothesis (nontrivial contracting space) is not met."""


def is_ergodic(M) -> bool:
    """True iff no eigenvalue of M is a root of unity."""
    M = as_matrix(M)
    return not cyclotomic_factors(char_poly(M))


@dataclass(frozen=True)
class FactorInfo:
    """Root bookkeeping for one irreducible factor of the characteristic polynomial."""

    poly: IntPolynomial
    multiplicity: int
    roots: tuple[complex, ...]
    unit_pairs: int          # exact, from the Sturm count
    inside: int              # roots of modulus < 1, per copy of the factor
    outside: int
    semisimple: bool         # rank p(M) == rank p(M)^2
    eigen_copies: int        # dim ker p(M) / deg p

    @property
    def unit_roots(self) -> list[complex]:
        return [z for z in self.roots if abs(abs(z) - 1) < 1e-6 and z.imag > 0]


@dataclass(frozen=True)
class Splitting:
    """R^d = stable + central + unstable, with the semisimple central part."""

    matrix: IntMatrix
    stable: np.ndarray
    central: np.ndarray
    unstable: np.ndarray
    central_semisimple: np.ndarray
    classification: str
    rotation_blocks: tuple[float, ...]
    tolerance: float
    factors: tuple[FactorInfo, ...] = field(repr=False)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.stable.shape[1], self.central.shape[1], self.unstable.shape[1]

    @property
    def contracting_plus_rotation(self) -> np.ndarray:
        """Basis of s_- + s_0' (columns)."""
        return np.hstack([self.stable, self.central_semisimple])


def _factor_report(M: IntMatrix, poly: IntPolynomial, mult: int, tol: float) -> FactorInfo:
    roots = tuple(complex(z) for z in np.roots(poly.descending()))
    pairs = unit_circle_pairs(poly)
    mods = sorted(roots, key=lambda z: abs(abs(z) - 1))
    unit, rest = mods[:2 * pairs], mods[2 * pairs:]
    for z in unit:
        if abs(abs(z) - 1) > 1e-8:
            raise CertificationError(
                f"Sturm count certifies {pairs} unit pairs for {poly}, numeric root {z} has modulus {abs(z)}")
    for z in rest:
        if abs(abs(z) - 1) < tol:
            raise CertificationError(
                f"root {z} of {poly} has modulus within {tol} of 1 but is not certified on the circle")
    inside = sum(1 for z in rest if abs(z) < 1)
    outside = len(rest) - inside
    pM = matrix_poly(poly, M)
    r1 = exact_rank(pM)
    semisimple = True
    if pairs:
        semisimple = exact_rank(int_matmul(pM, pM)) == r1
    copies = (M.dim - r1) // poly.degree
    return FactorInfo(poly, mult, roots, pairs, inside, outside, semisimple, copies)


def _orthonormal(B: np.ndarray) -> np.ndarray:
    if B.shape[1] == 0:
        return B
    q, _ = np.linalg.qr(B)
    return q[:, :B.shape[1]]


def _schur_block(A: np.ndarray, select, count: int) -> np.ndarray:
    d = A.shape[0]
    if count == 0:
        return np.zeros((d, 0))
    _, Z, sdim = scipy.linalg.schur(A, output="real", sort=lambda re, im: select(abs(complex(re, im))))
    if sdim != count:
        raise CertificationError(f"ordered Schur form found {sdim} eigenvalues, exact count is {count}")
    return Z[:, :count]


def analyze_factors(M, tol: float = DEFAULT_TOL) -> list[FactorInfo]:
    M = as_matrix(M)
    return [_factor_report(M, p, e, tol) for p, e in factor_integer(char_poly(M))]


def splitting(M, tol: float = DEFAULT_TOL) -> Splitting:
    M = as_matrix(M)
    if not is_ergodic(M):
        raise ClassificationError("matrix has a root-of-unity eigenvalue; it is not ergodic")
    factors = analyze_factors(M, tol)
    n_minus = sum(f.inside * f.multiplicity for f in factors)
    n_zero = sum(2 * f.unit_pairs * f.multiplicity for f in factors)
    n_plus = sum(f.outside * f.multiplicity for f in factors)
    assert n_minus + n_zero + n_plus == M.dim

    A = M.to_numpy()
    mods = sorted(abs(z) for f in factors for z in f.roots)
    lo = (max([m for m in mods if m < 1 - tol], default=0.0) + 1) / 2
    hi = (min([m for m in mods if m > 1 + tol], default=2.0) + 1) / 2
    stable = _schur_block(A, lambda r: r < lo, n_minus)
    unstable = _schur_block(A, lambda r: r > hi, n_plus)
    central = _schur_block(A, lambda r: lo <= r <= hi, n_zero)

    semis = np.zeros((M.dim, 0))
    blocks: list[float] = []
    if n_zero:
        Ac = central.T @ A @ central
        g = np.eye(n_zero)
        expected = 0
        for f in factors:
            for z in f.unit_roots:
                g = g @ (Ac @ Ac - 2 * z.real * Ac + np.eye(n_zero))
                blocks.extend([math.atan2(z.imag, z.real) / (2 * math.pi)] * f.eigen_copies)
            expected += 2 * f.unit_pairs * f.eigen_copies
        _, s, vt = np.linalg.svd(g)
        kernel = vt[n_zero - expected:].T if expected else np.zeros((n_zero, 0))
        if expected and s[n_zero - expected] > max(math.sqrt(tol), 1e-6) * max(1.0, s[0]):
            raise CertificationError("semisimple central part has unexpected numeric rank")
        semis = _orthonormal(central @ kernel)

    if n_zero == 0:
        cls = HYPERBOLIC
    elif semis.shape[1] == n_zero:
        cls = CENTRAL_SPIN
    else:
        cls = JORDAN
    return Splitting(M, stable, central, unstable, semis, cls, tuple(sorted(blocks)), tol, tuple(factors))


def classify(M, tol: float = DEFAULT_TOL) -> str:
    M = as_matrix(M)
    if not is_ergodic(M):
        return NONERGODIC
    return splitting(M, tol).classification


class SpanResult(NamedTuple):
    holds: bool
    rank: int


def numeric_rank(B: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    if B.size == 0:
        return 0
    s = np.linalg.svd(B, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def span_condition(sp_S: Splitting, sp_T: Splitting, tol: float | None = None) -> SpanResult:
    """Do s_- + s_0' and t_- + t_0' together span R^d?"""
    if sp_S.matrix.dim != sp_T.matrix.dim:
        raise RejectedInput("splittings of different dimensions")
    tol = sp_S.tolerance if tol is None else tol
    for name, sp in (("S", sp_S), ("T", sp_T)):
        if sp.stable.shape[1] == 0:
            warnings.warn(f"contracting subspace of {name} is trivial", HypothesisWarning, stacklevel=2)
    B = np.hstack([sp_S.contracting_plus_rotation, sp_T.contracting_plus_rotation])
    r = numeric_rank(B, tol)
    return SpanResult(r == sp_S.matrix.dim, r)


@dataclass(frozen=True)
class ComplementPair:
    """Complementary subspaces s (inside s_- + s_0') and t (inside t_- + t_0')."""

    s_basis: np.ndarray
    t_basis: np.ndarray
    proj_s: np.ndarray
    proj_t: np.ndarray
    condition_number: float
    t_choice: tuple[int, ...] = ()


def _min_sv(B: np.ndarray) -> float:
    return float(np.linalg.svd(B, compute_uv=False)[-1])


def choose_complements(sp_S: Splitting, sp_T: Splitting, tol: float | None = None) -> ComplementPair:
    """Seed with all of s_- + s_0', extend greedily from t_- + t_0'.

    Each step takes the candidate that maximizes the smallest singular value
    of the partial basis (max-volume pivoting).
    """
    tol = sp_S.tolerance if tol is None else tol
    if not span_condition(sp_S, sp_T, tol).holds:
        raise ConstructionError("span condition fails: no complementary pair exists")
    d = sp_S.matrix.dim
    S = _orthonormal(sp_S.contracting_plus_rotation)
    cands = _orthonormal(sp_T.contracting_plus_rotation)
    chosen: list[int] = []
    basis = S
    while basis.shape[1] < d:
        best, best_val = None, -1.0
        for j in range(cands.shape[1]):
            if j in chosen:
                continue
            val = _min_sv(np.hstack([basis, cands[:, [j]]]))
            if val > best_val:
                best, best_val = j, val
        if best is None or best_val < tol:
            raise ConstructionError("no candidate extends the basis: subspaces are degenerate")
        chosen.append(best)
        basis = np.hstack([basis, cands[:, [best]]])
    k = S.shape[1]
    T = basis[:, k:]
    inv = np.linalg.inv(basis)
    proj_s = basis[:, :k] @ inv[:k]
    proj_t = np.eye(d) - proj_s
    return ComplementPair(S, T, proj_s, proj_t, float(np.linalg.cond(basis)), tuple(chosen))


def rotation_vector(sp: Splitting) -> tuple[float, ...]:
    """Rotation angles (in turns) of the unit-circle eigenvalue pairs."""
    if sp.classification == JORDAN:
        raise UnsupportedStructure("central Jordan blocks shear; rotation data is not defined")
    return sp.rotation_blocks


# High-precision bases.  The leaf constructions need vectors that lie in an
# invariant subspace to thousands of bits, far beyond double precision.

def _refine_root(poly: IntPolynomial, z0: complex, bits: int):
    coeffs = poly.descending()
    dcoeffs = [c * (len(coeffs) - 1 - i) for i, c in enumerate(coeffs[:-1])]
    z = mpmath.mpc(z0)
    prec = 50
    while True:
        prec = min(2 * prec, bits + 32)
        with mpmath.workprec(prec + 32):
            for _ in range(3):
                z = z - mpmath.polyval(coeffs, z) / mpmath.polyval(dcoeffs, z)
        if prec >= bits + 32:
            break
    return z


def _mp_kernel(A, rank: int, bits: int):
    """Kernel basis of a square mp matrix whose rank is known, by full pivoting."""
    n = A.rows
    with mpmath.workprec(bits):
        a = A.copy()
        cols = list(range(n))
        for k in range(rank):
            pi, pj, best = k, k, mpmath.mpf(0)
            for i in range(k, n):
                for j in range(k, n):
                    v = abs(a[i, cols[j]])
                    if v > best:
                        pi, pj, best = i, j, v
            for j in range(n):
                a[k, j], a[pi, j] = a[pi, j], a[k, j]
            cols[k], cols[pj] = cols[pj], cols[k]
            piv = a[k, cols[k]]
            for i in range(n):
                if i != k and a[i, cols[k]] != 0:
                    f = a[i, cols[k]] / piv
                    for j in range(n):
                        a[i, j] -= f * a[k, j]
        basis = []
        for free in cols[rank:]:
            v = [mpmath.mpf(0)] * n
            v[free] = mpmath.mpf(1)
            for k in range(rank):
                v[cols[k]] = -a[k, free] / a[k, cols[k]]
            basis.append(v)
    return basis


def precise_invariant_basis(sp: Splitting, bits: int, part: str = "contracting_rotation"):
    """High-precision basis of s_- + s_0' (or of s_- alone with part='stable').

    Computed as ker g(M) where g collects the stable roots with their full
    multiplicity and the distinct unit-circle roots once.
    """
    M = sp.matrix
    d = M.dim
    work = bits + 64
    with mpmath.workprec(work):
        g = [mpmath.mpc(1)]
        dim = 0
        for f in sp.factors:
            for z in f.roots:
                take = 0
                if abs(z) < 1 - 1e-6:
                    take = f.multiplicity
                elif part != "stable" and abs(abs(z) - 1) < 1e-6:
                    take = 1
                if not take:
                    continue
                zr = _refine_root(f.poly, z, work)
                for _ in range(take):
                    g = [a - zr * b for a, b in zip(g + [0], [0] + g)]
            if part == "stable":
                dim += f.inside * f.multiplicity
            else:
                dim += f.inside * f.multiplicity + 2 * f.unit_pairs * f.eigen_copies
        g = [mpmath.re(c) for c in g]  # descending coefficients, real up to rounding
        A = mpmath.matrix(M.to_lists())
        G = mpmath.zeros(d, d)
        for c in g:
            G = G * A + c * mpmath.eye(d)
        kernel = _mp_kernel(G, d - dim, work)
    return kernel


def to_dyadic(v, bits: int) -> tuple[Fraction, ...]:
    """Round an mp vector to nearest multiples of 2^-bits."""
    scale = mpmath.mpf(2) ** bits
    with mpmath.workprec(bits + 64):
        return tuple(Fraction(int(mpmath.nint(x * scale)), 1 << bits) for x in v)


def refine_into(vectors: np.ndarray, basis, bits: int) -> list[tuple[Fraction, ...]]:
    """Replace float vectors by high-precision vectors of span(basis).

    Each column is matched by least squares in double precision, then the
    combination is formed at full precision, so membership holds to ~2^-bits.
    """
    B = np.array([[float(x) for x in b] for b in basis]).T
    out = []
    for j in range(vectors.shape[1]):
        c, *_ = np.linalg.lstsq(B, vectors[:, j], rcond=None)
        with mpmath.workprec(bits + 64):
            v = [sum(mpmath.mpf(float(ci)) * b[i] for ci, b in zip(c, basis)) for i in range(B.shape[0])]
        out.append(to_dyadic(v, bits))
    return out


def stable_eigenvector(M, bits: int = 256) -> tuple[Fraction, ...]:
    """Dyadic vector spanning a stable direction, max-norm 1 up to 2^-bits."""
    sp = splitting(M)
    if sp.stable.shape[1] == 0:
        raise RejectedInput("matrix has no contracting direction")
    basis = precise_invariant_basis(sp, bits, part="stable")
    v = basis[0]
    with mpmath.workprec(bits + 64):
        m = max(abs(x) for x in v)
        v = [x / m for x in v]
    return to_dyadic(v, bits)


def entropy_roots(M) -> list[complex]:
    """All eigenvalues with multiplicity (double precision)."""
    out = []
    for f in analyze_factors(M):
        out.extend(list(f.roots) * f.multiplicity)
    return out


def eigen_angle(z: complex) -> float:
    return (cmath.phase(z) / (2 * math.pi)) % 1.0
