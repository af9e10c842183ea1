"""Arithmetic on the torus R^d / Z^d.

Points are stored in fixed point: coordinate ``i`` of a point at precision ``p``
is ``num[i] / 2**p`` with ``0 <= num[i] < 2**p``.  Integer matrices act on these
numerators exactly, so the only uncertainty a point carries is its
``error_bound``: the max-norm distance to the real point it stands for.  Each
application of ``M`` multiplies that bound by ``||M||_inf``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BudgetError, RejectedInput

GUARD_BITS = 64
# Downstream operations refuse points whose certified error is not below this.
MAX_ACCEPTED_ERROR = Fraction(1, 2**32)


def _bareiss_det(rows):
    a = [list(r) for r in rows]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


@dataclass(frozen=True)
class IntMatrix:
    """A nonsingular square integer matrix acting on R^d and on the torus."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        if not rows:
            raise RejectedInput("matrix must have at least one row")
        d = len(rows)
        for i, r in enumerate(rows):
            if len(r) != d:
                raise RejectedInput(f"row {i} has {len(r)} entries, expected {d}")
            for v in r:
                if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                    raise RejectedInput(f"non-integer entry {v!r} in row {i}")
        rows = tuple(tuple(int(v) for v in r) for r in rows)
        object.__setattr__(self, "rows", rows)
        if _bareiss_det(rows) == 0:
            raise RejectedInput("matrix is singular")

    @classmethod
    def identity(cls, d: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)))

    @classmethod
    def block_diag(cls, *blocks: "IntMatrix") -> "IntMatrix":
        d = sum(b.dim for b in blocks)
        rows = [[0] * d for _ in range(d)]
        off = 0
        for b in blocks:
            for i, r in enumerate(b.rows):
                rows[off + i][off:off + b.dim] = r
            off += b.dim
        return cls(tuple(map(tuple, rows)))

    @classmethod
    def companion(cls, coeffs: Sequence[int]) -> "IntMatrix":
        """Companion matrix of the monic polynomial with ascending ``coeffs``.

        ``coeffs`` lists c_0 .. c_{d-1} of x^d + c_{d-1} x^{d-1} + ... + c_0.
        """
        d = len(coeffs)
        rows = [[0] * d for _ in range(d)]
        for i in range(1, d):
            rows[i][i - 1] = 1
        for i in range(d):
            rows[i][d - 1] = -int(coeffs[i])
        return cls(tuple(map(tuple, rows)))

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def det(self) -> int:
        return _bareiss_det(self.rows)

    @property
    def norm(self) -> int:
        """Operator norm for the max norm: the largest absolute row sum."""
        return max(sum(abs(v) for v in r) for r in self.rows)

    def transpose(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.rows)))

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        cols = list(zip(*other.rows))
        return IntMatrix(tuple(
            tuple(sum(a * b for a, b in zip(r, c)) for c in cols) for r in self.rows))

    def power(self, k: int) -> "IntMatrix":
        if k < 0:
            raise RejectedInput("negative powers are not integer matrices in general")
        result, base = IntMatrix.identity(self.dim), self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def matvec(self, v):
        return [sum(a * b for a, b in zip(r, v)) for r in self.rows]

    def to_numpy(self) -> np.ndarray:
        return np.array(self.rows, dtype=float)

    def to_lists(self) -> list[list[int]]:
        return [list(r) for r in self.rows]


def as_matrix(m) -> IntMatrix:
    return m if isinstance(m, IntMatrix) else IntMatrix(tuple(tuple(r) for r in m))


def to_fraction(v) -> Fraction:
    """Exact rational value of an int, float, Fraction, decimal string or mpf."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise RejectedInput(f"boolean is not a coordinate: {v!r}")
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise RejectedInput(f"non-finite coordinate {v!r}")
        return Fraction(float(v))
    if isinstance(v, str):
        s = v.strip()
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError):
            raise RejectedInput(f"cannot parse coordinate {v!r}") from None
    man_exp = getattr(v, "man_exp", None)
    if man_exp is not None:
        import mpmath

        if not mpmath.isfinite(v):
            raise RejectedInput(f"non-finite coordinate {v!r}")
        man, exp = man_exp
        return Fraction(int(man)) * (Fraction(2) ** int(exp))
    raise RejectedInput(f"unsupported coordinate type {type(v).__name__}")


def exact_decimal(q: Fraction) -> str:
    """Finite decimal expansion of a dyadic (or 2^a 5^b) rational."""
    num, den = q.numerator, q.denominator
    twos = (den & -den).bit_length() - 1
    rest = den >> twos
    fives = 0
    while rest % 5 == 0:
        rest //= 5
        fives += 1
    if rest != 1:
        raise RejectedInput(f"{q} has no finite decimal expansion")
    k = max(twos, fives)
    scaled = num * (10**k // den)
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(k + 1, "0")
    if k == 0:
        return sign + digits
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


@dataclass(frozen=True)
class TorusPoint:
    """A point of the torus stored at ``precision`` bits."""

    num: tuple[int, ...]
    precision: int
    error_bound: Fraction = field(default=Fraction(0))

    def __post_init__(self):
        if self.precision < 1:
            raise RejectedInput("precision must be positive")
        top = 1 << self.precision
        num = tuple(int(v) for v in self.num)
        for v in num:
            if not 0 <= v < top:
                raise RejectedInput("fixed-point coordinate out of [0, 2^p)")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "error_bound", Fraction(self.error_bound))
        if self.error_bound < 0:
            raise RejectedInput("error bound must be nonnegative")

    @property
    def dim(self) -> int:
        return len(self.num)

    @property
    def exact(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(v, 1 << self.precision) for v in self.num)

    @property
    def coords(self) -> tuple[float, ...]:
        return tuple(_to_float(v, self.precision) for v in self.num)

    def to_decimal_strings(self) -> list[str]:
        return [exact_decimal(q) for q in self.exact]

    def with_precision(self, p: int) -> "TorusPoint":
        """Re-express at ``p`` bits; widening is exact, narrowing rounds."""
        if p >= self.precision:
            s = p - self.precision
            return TorusPoint(tuple(v << s for v in self.num), p, self.error_bound)
        return reduce_mod1(self.exact, p, self.error_bound)

    def lift(self) -> tuple[Fraction, ...]:
        return self.exact


def _to_float(v: int, p: int) -> float:
    if p <= 53:
        return v / (1 << p)
    return (v >> (p - 53)) / 9007199254740992.0


def reduce_mod1(values, precision: int, error_bound=0) -> TorusPoint:
    """Reduce a real vector modulo Z^d and store it at ``precision`` bits.

    Inputs that are exactly representable keep ``error_bound``; otherwise each
    coordinate is rounded to nearest and half a unit in the last place is added.
    """
    fracs = [to_fraction(v) for v in values]
    if not fracs:
        raise RejectedInput("empty vector")
    top = 1 << precision
    num, inexact = [], False
    for q in fracs:
        r = (q - math.floor(q)) * top
        if r.denominator == 1:
            n = int(r)
        else:
            inexact = True
            n = math.floor(r + Fraction(1, 2))
        num.append(n % top)
    err = Fraction(error_bound)
    if inexact:
        err += Fraction(1, 2 * top)
    return TorusPoint(tuple(num), precision, err)


def point(*coords, precision: int = 64) -> TorusPoint:
    return reduce_mod1(coords, precision)


def random_point(d: int, bits: int, rng: random.Random, precision: int | None = None) -> TorusPoint:
    """Uniform dyadic point with ``bits`` random bits, padded with zeros to ``precision``."""
    p = bits if precision is None else max(bits, precision)
    return TorusPoint(tuple(rng.getrandbits(bits) << (p - bits) for _ in range(d)), p)


def _common(x: TorusPoint, y: TorusPoint):
    if x.dim != y.dim:
        raise RejectedInput(f"dimension mismatch: {x.dim} vs {y.dim}")
    p = max(x.precision, y.precision)
    return x.with_precision(p).num, y.with_precision(p).num, p


def torus_distance(x: TorusPoint, y: TorusPoint) -> Fraction:
    """Max-norm distance on the torus: max_i min(|dx_i|, 1 - |dx_i|)."""
    a, b, p = _common(x, y)
    top = 1 << p
    best = 0
    for u, v in zip(a, b):
        diff = (u - v) % top
        best = max(best, min(diff, top - diff))
    return Fraction(best, top)


def wrap_distance(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    """Torus max-norm distance between exact lifted coordinate vectors."""
    if len(a) != len(b):
        raise RejectedInput("dimension mismatch")
    best = Fraction(0)
    for u, v in zip(a, b):
        diff = u - v
        diff -= math.floor(diff)
        best = max(best, min(diff, 1 - diff))
    return best


def apply(M, x: TorusPoint) -> TorusPoint:
    M = as_matrix(M)
    if M.dim != x.dim:
        raise RejectedInput(f"matrix of size {M.dim} applied to point of dimension {x.dim}")
    mask = (1 << x.precision) - 1
    num = tuple(v & mask for v in M.matvec(x.num))
    return TorusPoint(num, x.precision, M.norm * x.error_bound)


def minimal_precision(M, steps: int) -> int:
    """Smallest p with p >= steps * log2 ||M||_inf + 64."""
    n = as_matrix(M).norm
    if steps <= 0 or n <= 1:
        return GUARD_BITS
    return GUARD_BITS + (n**steps - 1).bit_length()


def check_budget(M, x: TorusPoint, steps: int) -> None:
    M = as_matrix(M)
    need = minimal_precision(M, steps)
    if x.precision < need:
        raise BudgetError(
            f"{steps} steps of a map with norm {M.norm} need {need} bits, point has {x.precision}",
            minimal_precision=need)
    final = x.error_bound * Fraction(M.norm) ** steps
    if final >= MAX_ACCEPTED_ERROR:
        raise BudgetError(
            f"certified error after {steps} steps would be {float(final):.3g} >= 2^-32",
            minimal_precision=need)


@dataclass(frozen=True)
class OrbitSegment:
    base: TorusPoint
    matrix: IntMatrix
    points: tuple[TorusPoint, ...]
    per_step_error: tuple[Fraction, ...]

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array([p.coords for p in self.points])


def orbit(M, x: TorusPoint, steps: int) -> OrbitSegment:
    """The points x, Mx, ..., M^steps x with their certified error bounds."""
    M = as_matrix(M)
    if steps < 0:
        raise RejectedInput("steps must be nonnegative")
    if M.dim != x.dim:
        raise RejectedInput("dimension mismatch")
    check_budget(M, x, steps)
    pts, errs = [x], [x.error_bound]
    cur = x
    for _ in range(steps):
        cur = apply(M, cur)
        pts.append(cur)
        errs.append(cur.error_bound)
    return OrbitSegment(x, M, tuple(pts), tuple(errs))


def orbit_array(M, x: TorusPoint, steps: int) -> np.ndarray:
    """Float64 coordinates of x, ..., M^(steps-1) x, shape (steps, d).

    Same budget rules as :func:`orbit`; iterates on the exact numerators but
    skips building intermediate point objects.
    """
    M = as_matrix(M)
    if M.dim != x.dim:
        raise RejectedInput("dimension mismatch")
    check_budget(M, x, steps)
    p = x.precision
    mask = (1 << p) - 1
    rows = M.rows
    num = list(x.num)
    out = np.empty((steps, x.dim))
    for n in range(steps):
        out[n] = [_to_float(v, p) for v in num]
        num = [sum(a * b for a, b in zip(r, num)) & mask for r in rows]
    return out


def orbit_numerators(M, x: TorusPoint, steps: int):
    """Yield the exact numerators of x, Mx, ..., M^steps x (budget-checked)."""
    M = as_matrix(M)
    check_budget(M, x, steps)
    mask = (1 << x.precision) - 1
    rows = M.rows
    num = list(x.num)
    yield tuple(num)
    for _ in range(steps):
        num = [sum(a * b for a, b in zip(r, num)) & mask for r in rows]
        yield tuple(num)


# Rational fast path, used by test oracles.

def rational_step(M, q: Sequence[Fraction]) -> tuple[Fraction, ...]:
    out = []
    for v in as_matrix(M).matvec(q):
        out.append(v - math.floor(v))
    return tuple(out)


def rational_orbit(M, q: Sequence, steps: int) -> list[tuple[Fraction, ...]]:
    cur = tuple(Fraction(v) - math.floor(Fraction(v)) for v in q)
    out = [cur]
    for _ in range(steps):
        cur = rational_step(M, cur)
        out.append(cur)
    return out


def eventual_period(M, q: Sequence) -> tuple[int, int]:
    """(preperiod, period) of the orbit of a rational point."""
    seen = {}
    cur = tuple(Fraction(v) - math.floor(Fraction(v)) for v in q)
    n = 0
    while cur not in seen:
        seen[cur] = n
        cur = rational_step(M, cur)
        n += 1
    return seen[cur], n - seen[cur]
