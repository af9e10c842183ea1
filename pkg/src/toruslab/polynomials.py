"""Exact integer polynomial tools: characteristic polynomials, cyclotomic
trial division, the reciprocal substitution x^m q(x + 1/x), and Sturm counts."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .errors import RejectedInput
from .torus import as_matrix


@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients in ascending order of degree."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        c = list(int(v) for v in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not c:
            c = [0]
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def from_descending(cls, coeffs: Sequence[int]) -> "IntPolynomial":
        return cls(tuple(reversed(list(coeffs))))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.coeffs != (0,) else -1

    @property
    def leading(self) -> int:
        return self.coeffs[-1]

    def descending(self) -> list[int]:
        return list(reversed(self.coeffs))

    def is_reciprocal(self) -> bool:
        return self.coeffs == tuple(reversed(self.coeffs))

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return IntPolynomial(tuple(out))

    def __str__(self):
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mag = abs(c)
            body = ("" if mag == 1 and k else str(mag)) + ("x" if k else "") + (f"^{k}" if k > 1 else "")
            terms.append(("-" if c < 0 else "+") + body)
        if not terms:
            return "0"
        s = " ".join(terms)
        return s[1:] if s[0] == "+" else "-" + s[1:]


def divmod_poly(a: Sequence, b: Sequence) -> tuple[list[Fraction], list[Fraction]]:
    """Division over Q; ascending coefficient lists."""
    a = [Fraction(v) for v in a]
    b = [Fraction(v) for v in b]
    while len(b) > 1 and b[-1] == 0:
        b.pop()
    if b == [0]:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    r = a[:]
    while len(r) >= len(b) and any(r):
        shift = len(r) - len(b)
        f = r[-1] / b[-1]
        q[shift] = f
        for i, v in enumerate(b):
            r[i + shift] -= f * v
        r.pop()
    while len(r) > 1 and r[-1] == 0:
        r.pop()
    return q, r or [Fraction(0)]


def divides(d: IntPolynomial, p: IntPolynomial) -> bool:
    _, r = divmod_poly(p.coeffs, d.coeffs)
    return all(v == 0 for v in r)


def char_poly(M) -> IntPolynomial:
    """det(xI - M) by the Faddeev-LeVerrier recursion in exact integers."""
    M = as_matrix(M)
    n = M.dim
    A = [list(r) for r in M.rows]
    coeffs = [0] * (n + 1)
    coeffs[n] = 1
    Mk = [[int(i == j) for j in range(n)] for i in range(n)]  # M_1 = I
    for k in range(1, n + 1):
        AM = [[sum(A[i][t] * Mk[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        tr = sum(AM[i][i] for i in range(n))
        c = -tr // k
        assert c * k == -tr
        coeffs[n - k] = c
        Mk = [[AM[i][j] + (c if i == j else 0) for j in range(n)] for i in range(n)]
    return IntPolynomial(tuple(coeffs))


def euler_phi(k: int) -> int:
    result, n, p = k, k, 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            result -= result // p
        p += 1
    if n > 1:
        result -= result // n
    return result


@lru_cache(maxsize=None)
def cyclotomic(k: int) -> IntPolynomial:
    """Phi_k by exact division of x^k - 1 by Phi_j for proper divisors j."""
    if k < 1:
        raise RejectedInput("cyclotomic index must be positive")
    num = [-1] + [0] * (k - 1) + [1]
    for j in range(1, k):
        if k % j == 0:
            num, r = divmod_poly(num, cyclotomic(j).coeffs)
            assert not any(r)
    return IntPolynomial(tuple(int(v) for v in num))


def cyclotomic_indices(d: int) -> list[int]:
    """All k with phi(k) <= d.  phi(k) >= sqrt(k/2) bounds the search."""
    return [k for k in range(1, 2 * d * d + 3) if euler_phi(k) <= d]


def cyclotomic_factors(p: IntPolynomial) -> list[int]:
    """Indices k such that Phi_k divides p, by trial division."""
    return [k for k in cyclotomic_indices(max(p.degree, 1)) if divides(cyclotomic(k), p)]


def reciprocal_reduce(p: IntPolynomial) -> IntPolynomial:
    """The q with p(x) = x^m q(x + 1/x), for reciprocal p of degree 2m."""
    if not p.is_reciprocal() or p.degree % 2:
        raise RejectedInput(f"{p} is not reciprocal of even degree")
    m = p.degree // 2
    r = list(p.coeffs)
    q = [0] * (m + 1)
    for k in range(m, -1, -1):
        c = r[m + k]
        q[k] = c
        # subtract c * x^(m-k) * (x^2 + 1)^k
        binom = 1
        for i in range(k + 1):
            r[m - k + 2 * i] -= c * binom
            binom = binom * (k - i) // (i + 1)
    assert not any(r)
    return IntPolynomial(tuple(q))


def sturm_sequence(p: Sequence) -> list[list[Fraction]]:
    """Sturm chain p, p', -rem(p, p'), ... over Q."""
    p0 = [Fraction(v) for v in p]
    p1 = [Fraction(i * v) for i, v in enumerate(p0)][1:] or [Fraction(0)]
    seq = [p0, p1]
    while len(seq[-1]) > 1 or seq[-1][0] != 0:
        _, r = divmod_poly(seq[-2], seq[-1])
        r = [-v for v in r]
        if not any(r):
            break
        seq.append(r)
    return seq


def _eval(c, x):
    acc = Fraction(0)
    for v in reversed(c):
        acc = acc * x + v
    return acc


def _sign_changes(seq, x) -> int:
    signs = [v for v in (_eval(c, x) for c in seq) if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def sturm_count(p: Sequence, a, b) -> int:
    """Distinct real roots of p in the half-open interval (a, b]."""
    seq = sturm_sequence(p)
    return _sign_changes(seq, Fraction(a)) - _sign_changes(seq, Fraction(b))


def unit_circle_pairs(p: IntPolynomial) -> int:
    """Number of conjugate pairs of roots on the unit circle, other than +-1.

    Only reciprocal factors can have such roots.  Each root t of q in (-2, 2)
    with p(x) = x^m q(x + 1/x) gives the pair e^{+-i theta}, 2 cos theta = t.
    """
    if p.degree < 2 or p.degree % 2 or not p.is_reciprocal():
        return 0
    q = reciprocal_reduce(p)
    n = sturm_count(q.coeffs, -2, 2)
    if q(2) == 0:
        n -= 1
    return n


def factor_integer(p: IntPolynomial) -> list[tuple[IntPolynomial, int]]:
    """Irreducible factorization over Z (content dropped), via sympy."""
    import sympy

    x = sympy.Symbol("x")
    expr = sum(c * x**k for k, c in enumerate(p.coeffs))
    _, factors = sympy.factor_list(expr, x)
    out = []
    for f, e in factors:
        poly = sympy.Poly(f, x)
        coeffs = [int(c) for c in reversed(poly.all_coeffs())]
        if coeffs[-1] < 0:
            coeffs = [-c for c in coeffs]
        out.append((IntPolynomial(tuple(coeffs)), int(e)))
    out.sort(key=lambda t: (t[0].degree, t[0].coeffs))
    return out


def matrix_poly(p: IntPolynomial, M) -> list[list[int]]:
    """p(M) as an integer list-of-lists (may be singular)."""
    M = as_matrix(M)
    n = M.dim
    acc = [[0] * n for _ in range(n)]
    for c in reversed(p.coeffs):
        acc = [[sum(acc[i][t] * M.rows[t][j] for t in range(n)) + (c if i == j else 0)
                for j in range(n)] for i in range(n)]
    return acc


def int_matmul(A, B):
    n, m = len(A), len(B[0])
    return [[sum(A[i][t] * B[t][j] for t in range(len(B))) for j in range(m)] for i in range(n)]


def exact_rank(A) -> int:
    """Rank over Q by fraction-free elimination."""
    rows = [list(map(int, r)) for r in A]
    if not rows:
        return 0
    rank, ncols = 0, len(rows[0])
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(rank + 1, len(rows)):
            f, g = rows[i][col], rows[rank][col]
            if f:
                rows[i] = [g * a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank
