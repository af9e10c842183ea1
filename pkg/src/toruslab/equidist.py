"""Equidistribution diagnostics along orbits: Weyl sums over a box of characters."""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import RejectedInput
from .torus import (IntMatrix, TorusPoint, as_matrix, minimal_precision, orbit_array,
                    rational_step, wrap_distance)

DEFAULT_BOX = 3


def character_box(d: int, J: int, include_zero: bool = False) -> np.ndarray:
    """All integer vectors with 0 < ||j||_inf <= J, as rows."""
    js = [j for j in itertools.product(range(-J, J + 1), repeat=d) if include_zero or any(j)]
    return np.array(js, dtype=np.int64).reshape(-1, d)


def _scores(X: np.ndarray, js: np.ndarray, chunk: int = 512) -> np.ndarray:
    out = np.empty(len(js))
    for s in range(0, len(js), chunk):
        ph = X @ js[s:s + chunk].T.astype(float)
        out[s:s + chunk] = np.abs(np.exp(2j * np.pi * ph).mean(axis=0))
    return np.clip(out, 0.0, 1.0)


def _prepared(x: TorusPoint, M: IntMatrix, N: int) -> TorusPoint:
    """Pad an exact point to the budget precision; inexact points must already meet it."""
    need = minimal_precision(M, N)
    if x.precision < need and x.error_bound == 0:
        return x.with_precision(need)
    return x


def weyl_sum(x: TorusPoint, M, N: int, j: Sequence[int]) -> float:
    """|(1/N) sum_{n<N} exp(2 pi i j . M^n x)|."""
    M = as_matrix(M)
    if N < 1:
        raise RejectedInput("N must be positive")
    j = np.asarray(j, dtype=np.int64).reshape(1, -1)
    if j.shape[1] != M.dim:
        raise RejectedInput("character index has the wrong dimension")
    if not j.any():
        return 1.0
    X = orbit_array(M, _prepared(x, M, N), N)
    return float(_scores(X, j)[0])


@dataclass(frozen=True)
class EquidistributionReport:
    matrix: IntMatrix
    point: TorusPoint = field(repr=False)
    N: int
    J: int
    scores: dict
    max_score: float
    precision_ok: bool

    def argmax(self) -> tuple[int, ...]:
        return max(self.scores, key=self.scores.get)

    def threshold(self, factor: float = 5.0) -> float:
        return factor / math.sqrt(self.N)


def equidistribution_score(x: TorusPoint, M, N: int, J: int = DEFAULT_BOX) -> EquidistributionReport:
    M = as_matrix(M)
    if N < 1 or J < 1:
        raise RejectedInput("N and J must be positive")
    xp = _prepared(x, M, N)
    X = orbit_array(M, xp, N)
    js = character_box(M.dim, J)
    sc = _scores(X, js)
    scores = {tuple(int(v) for v in j): float(s) for j, s in zip(js, sc)}
    return EquidistributionReport(M, x, N, J, scores, float(sc.max()), True)


def spectral_fourier_exact(M, j: Sequence[int], n: int) -> int:
    """Fourier coefficient <U^n f_j, f_j> of the character's spectral measure.

    The integral of exp(2 pi i j.(M^n - I)x) over the torus is 1 when the
    integer vector (M^T)^n j - j vanishes and 0 otherwise.
    """
    M = as_matrix(M)
    if n < 0:
        raise RejectedInput("only n >= 0 is supported")
    j = [int(v) for v in j]
    if len(j) != M.dim:
        raise RejectedInput("character index has the wrong dimension")
    v = j
    Mt = M.transpose()
    for _ in range(n):
        v = Mt.matvec(v)
    return int(v == j)


def spectral_fourier_table(M, J: int, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact coefficients for every 0 < ||j||_inf <= J and 0 <= n <= n_max.

    Returns (characters, table) with table[i, n] the coefficient for
    characters[i].  Rows are iterated together as j -> j M, in int64 when the
    entries provably fit and in Python integers otherwise.
    """
    M = as_matrix(M)
    if n_max < 0:
        raise RejectedInput("only n >= 0 is supported")
    js = character_box(M.dim, J)
    safe = J * M.dim * M.norm ** n_max < 2**62
    A = np.array(M.rows, dtype=np.int64 if safe else object)
    V = js.astype(np.int64 if safe else object)
    table = np.zeros((len(js), n_max + 1), dtype=np.int64)
    table[:, 0] = 1
    for n in range(1, n_max + 1):
        V = V @ A
        table[:, n] = np.all(V == js, axis=1)
    return js, table


def spectral_fourier_mc(M, j: Sequence[int], n: int, samples: int = 10_000, seed: int = 0) -> complex:
    """Monte Carlo estimate of the same integral, for cross-checking."""
    M = as_matrix(M)
    rng = np.random.default_rng(seed)
    X = rng.random((samples, M.dim))
    Mn = np.array(M.power(n).rows, dtype=float)
    jv = np.asarray(j, dtype=float)
    w = (Mn.T @ jv) - jv
    return complex(np.exp(2j * np.pi * (X @ w)).mean())


def rotation_spectral(alpha: Sequence[float], j: Sequence[int], n: int) -> complex:
    """Eigenvalue exp(2 pi i n j.alpha) of the rotation acting on the character j."""
    if len(alpha) != len(j):
        raise RejectedInput("angle vector and character disagree in length")
    phase = sum(int(a) * float(b) for a, b in zip(j, alpha))
    return cmath.exp(2j * math.pi * ((n * phase) % 1.0))


@dataclass(frozen=True)
class ProductReport:
    N: int
    J: int
    scores: dict
    max_score: float


def rotation_orbit(y: Sequence[float], alpha: Sequence[float], N: int) -> np.ndarray:
    n = np.arange(N, dtype=float)[:, None]
    a = np.asarray(alpha, dtype=float)[None, :]
    return np.mod(np.asarray(y, dtype=float)[None, :] + np.mod(n * a, 1.0), 1.0)


def product_equidistribution_score(x: TorusPoint, M, y: Sequence[float], alpha: Sequence[float],
                                   N: int, J: int = 2) -> ProductReport:
    """Weyl sums of exp(2 pi i (j.M^n x + k.R^n y)) over 0 < ||(j,k)|| <= J."""
    M = as_matrix(M)
    if len(y) != len(alpha):
        raise RejectedInput("rotation point and angles disagree in length")
    X = orbit_array(M, _prepared(x, M, N), N)
    Y = rotation_orbit(y, alpha, N)
    Z = np.hstack([X, Y])
    js = character_box(Z.shape[1], J)
    sc = _scores(Z, js)
    scores = {tuple(int(v) for v in j): float(s) for j, s in zip(js, sc)}
    return ProductReport(N, J, scores, float(sc.max()))


def product_character_score(x: TorusPoint, M, y, alpha, N: int, j, k) -> float:
    """Single product character; (0, 0) is the trivial character with score 1."""
    M = as_matrix(M)
    jk = np.concatenate([np.asarray(j, dtype=np.int64), np.asarray(k, dtype=np.int64)]).reshape(1, -1)
    if not jk.any():
        return 1.0
    X = orbit_array(M, _prepared(x, M, N), N)
    Y = rotation_orbit(y, alpha, N)
    return float(_scores(np.hstack([X, Y]), jk)[0])


def shadowing_gap(x: TorusPoint, y: Sequence, M, N: int, splitting=None, tol: float = 1e-8) -> list[Fraction]:
    """g_n = torus_distance(M^n x, M^n (x + y)) for n = 0..N.

    ``y`` is a vector of R^d (not reduced mod 1) that must have no expanding
    component; the gaps equal the torus norm of M^n y, computed exactly.
    """
    from .spectral import splitting as compute_splitting
    from .torus import to_fraction

    M = as_matrix(M)
    yv = [to_fraction(v) for v in y]
    if len(yv) != M.dim:
        raise RejectedInput("offset has the wrong dimension")
    norm_y = max(abs(v) for v in yv)
    if norm_y:
        sp = splitting if splitting is not None else compute_splitting(M)
        allowed = sp.contracting_plus_rotation
        yf = np.array([float(v) for v in yv])
        if allowed.shape[1]:
            coef, *_ = np.linalg.lstsq(allowed, yf, rcond=None)
            resid = yf - allowed @ coef
        else:
            resid = yf
        if np.max(np.abs(resid)) > tol * float(norm_y):
            raise RejectedInput("offset has an expanding component; gaps would diverge")
    if x.dim != M.dim:
        raise RejectedInput("point has the wrong dimension")
    a = x.exact
    b = tuple(u + v for u, v in zip(a, yv))
    gaps = []
    for _ in range(N + 1):
        gaps.append(wrap_distance(a, b))
        a, b = rational_step(M, a), rational_step(M, b)
    return gaps
