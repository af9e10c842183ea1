"""Topological entropy: the eigenvalue formula and a spanning-set estimator on orbit samples."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from .errors import EstimationError, RejectedInput
from .polynomials import char_poly, factor_integer
from .torus import TorusPoint, as_matrix, minimal_precision, orbit_array

EIGENVALUE_FORMULA = "eigenvalue_formula"
SPANNING_SET = "spanning_set"

DEFAULT_SCALES = (1 / 4, 1 / 8, 1 / 16)
DEFAULT_WINDOWS = tuple(range(2, 13))
SATURATION = 1 / 20


class ScaleDropped(UserWarning):
    """A resolution was discarded because the sample could not resolve it."""


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    method: str
    scales: tuple[float, ...] = ()
    fit_quality: float | None = None
    counts: dict | None = None
    error: float = 0.0

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("entropy cannot be negative")
        if self.method == EIGENVALUE_FORMULA and self.scales:
            raise ValueError("the eigenvalue formula carries no scales")


def entropy_spectrum(M, dps: int = 50) -> EntropyEstimate:
    """Sum of log|lambda| over eigenvalues outside the unit circle, with multiplicity.

    Each irreducible factor has simple roots, so mpmath's polyroots converges
    and reports an error bound, kept in ``error``.  Roots within that bound of
    the unit circle contribute at most its logarithm, which is negligible.
    """
    M = as_matrix(M)
    total = mpmath.mpf(0)
    worst = mpmath.mpf(0)
    with mpmath.workdps(dps):
        for f, mult in factor_integer(char_poly(M)):
            if f.degree < 1:
                continue
            roots, err = mpmath.polyroots(f.descending(), maxsteps=200, extraprec=4 * dps, error=True)
            worst = max(worst, err)
            for z in roots:
                r = abs(z)
                if r > 1 + 10 * err:
                    total += mult * mpmath.log(r)
    return EntropyEstimate(float(total), EIGENVALUE_FORMULA, error=float(worst))


def _windows(X: np.ndarray, n: int) -> np.ndarray:
    L = X.shape[0] - n + 1
    return np.stack([X[i:i + L] for i in range(n)], axis=1).reshape(L, -1)


def spanning_count(X: np.ndarray, n: int, eps: float, cap: int | None = None) -> int:
    """Greedy (n, eps)-cover of the orbit windows in the Bowen max metric.

    Returns ``cap + 1`` as soon as the count exceeds ``cap``.
    """
    W = _windows(X, n)
    uncovered = np.ones(len(W), dtype=bool)
    count = 0
    while True:
        rem = np.flatnonzero(uncovered)
        if rem.size == 0:
            return count
        count += 1
        if cap is not None and count > cap:
            return count
        D = np.abs(W[rem] - W[rem[0]])
        D = np.minimum(D, 1.0 - D).max(axis=1)
        uncovered[rem[D < eps]] = False


def _fit(ns, counts) -> tuple[float, float]:
    x = np.asarray(ns, dtype=float)
    y = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss if ss > 0 else 1.0
    return float(slope), r2


def orbit_closure_entropy(x: TorusPoint, M, N: int, eps_list: Sequence[float] = DEFAULT_SCALES,
                          windows: Sequence[int] = DEFAULT_WINDOWS,
                          saturation: float = SATURATION) -> EntropyEstimate:
    """Spanning-set estimate of the entropy of M on the closure of the orbit of x.

    For each scale, window lengths whose greedy cover uses more than
    ``saturation * N`` centers are discarded (the sample no longer resolves
    them).  A scale needs three surviving windows.  The value is the slope of
    log(count) against n at the finest surviving scale.
    """
    M = as_matrix(M)
    eps_list = [float(e) for e in eps_list]
    if any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise RejectedInput("eps_list must be strictly decreasing")
    if N < 2 * max(windows):
        raise RejectedInput("orbit too short for the requested windows")
    if x.precision < minimal_precision(M, N) and x.error_bound == 0:
        x = x.with_precision(minimal_precision(M, N))
    X = orbit_array(M, x, N)
    floor = 2 * float(x.error_bound * M.norm ** N)
    if eps_list[-1] < floor:
        raise RejectedInput("smallest scale is below twice the orbit error bound")
    cap = int(saturation * N)
    counts: dict = {}
    kept = []
    for eps in eps_list:
        row = {}
        for n in sorted(windows):
            c = spanning_count(X, n, eps, cap)
            if c > cap:
                break
            row[n] = c
        if len(row) < 3:
            warnings.warn(f"scale {eps} dropped: only {len(row)} unsaturated windows", ScaleDropped)
            continue
        counts[eps] = row
        kept.append(eps)
    if not kept:
        raise EstimationError("every scale saturated; the orbit sample is too short")
    finest = counts[kept[-1]]
    slope, r2 = _fit(list(finest), list(finest.values()))
    return EntropyEstimate(max(slope, 0.0), SPANNING_SET, tuple(kept), r2, counts)


def strictness_gap(sub: EntropyEstimate, full: EntropyEstimate) -> float:
    """h(M) minus the estimate on an orbit closure; positive gaps mark nondense closures."""
    return full.value - sub.value

