"""Box-counting dimension of point samples and the slicing lower bound for fibered sets.

Box counting stands in for Hausdorff dimension throughout; every estimate
carries that caveat in its ``note`` field.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EstimationError, RejectedInput

NOTE = "box-counting estimate on a finite sample; a proxy for Hausdorff dimension"
MIN_SAMPLES = 1000
OCCUPANCY = 8
FIT_SCALES = 4


class ScaleDropped(UserWarning):
    """A dyadic scale was too fine for the sample size."""


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    scales: tuple[float, ...]
    counts: tuple[int, ...]
    fit_quality: float
    ambient: int
    note: str = NOTE


def box_counts(samples: np.ndarray, levels: Sequence[int]) -> list[int]:
    """Occupied boxes of the dyadic grid of side 2^-k anchored at 0, for each k."""
    P = np.asarray(samples, dtype=float)
    out = []
    for k in levels:
        cells = np.floor(P * (1 << k)).astype(np.int64)
        if k * P.shape[1] <= 62:
            # pack the cell index into one integer; 1-d unique is much faster
            key = np.zeros(len(cells), dtype=np.int64)
            for col in cells.T:
                key = (key << k) | col
            out.append(int(len(np.unique(key))))
        else:
            out.append(int(len(np.unique(cells, axis=0))))
    return out


def _fit(x, y) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(y) == 0:
        return 0.0, 1.0
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), 1.0 - float((resid ** 2).sum()) / float(((y - y.mean()) ** 2).sum())


def box_dimension(samples, scales: Sequence[float] | None = None) -> DimensionEstimate:
    """Slope of log(occupied boxes) against log(1/eps) over the finest reliable scales.

    A scale is reliable when the sample holds at least eight points per
    occupied box; coarser scales are always kept.  The fit uses the four finest
    reliable scales.
    """
    P = np.asarray(samples, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    n, d = P.shape
    if n < MIN_SAMPLES:
        raise RejectedInput(f"need at least {MIN_SAMPLES} samples, got {n}")
    if not np.all(np.isfinite(P)) or P.min() < 0 or P.max() >= 1:
        raise RejectedInput("samples must lie in [0,1)^d")
    if scales is None:
        scales = [2.0 ** -k for k in range(3, 25)]
    levels = []
    for eps in scales:
        k = -np.log2(float(eps))
        if abs(k - round(k)) > 1e-12 or round(k) < 3:
            raise RejectedInput(f"scale {eps} is not dyadic or is coarser than 1/8")
        levels.append(int(round(k)))
    levels = sorted(set(levels))
    counts = box_counts(P, levels)
    kept_k, kept_c = [], []
    for k, c in zip(levels, counts):
        if n < OCCUPANCY * c:
            warnings.warn(f"scale 2^-{k} dropped: {c} boxes for {n} samples", ScaleDropped)
            break
        kept_k.append(k)
        kept_c.append(c)
    if len(kept_k) < 2:
        raise EstimationError("fewer than two reliable scales")
    ks, cs = kept_k[-FIT_SCALES:], kept_c[-FIT_SCALES:]
    slope, r2 = _fit(np.asarray(ks) * np.log(2), np.log(cs))
    value = min(max(slope, 0.0), float(d))
    return DimensionEstimate(value, tuple(2.0 ** -k for k in ks), tuple(cs), r2, d)


def slicing_bound(dim_base: float, dim_fiber_inf: float) -> float:
    """Lower bound dim(base) + inf dim(fiber) for a fibered set."""
    if dim_base < 0 or dim_fiber_inf < 0:
        raise RejectedInput("dimensions must be nonnegative")
    return float(dim_base) + float(dim_fiber_inf)


@dataclass(frozen=True)
class SlicingCheck:
    product: DimensionEstimate
    base: DimensionEstimate
    fiber: DimensionEstimate
    bound: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.product.value >= self.bound - self.slack


def check_slicing(base, fiber, slack: float = 0.1) -> SlicingCheck:
    """Estimate dim of the paired sample (base_i, fiber_i) against the slicing bound."""
    A = np.asarray(base, dtype=float).reshape(len(base), -1)
    C = np.asarray(fiber, dtype=float).reshape(len(fiber), -1)
    if len(A) != len(C):
        raise RejectedInput("base and fiber samples must pair up")
    ea, ec = box_dimension(A), box_dimension(C)
    ep = box_dimension(np.hstack([A, C]))
    return SlicingCheck(ep, ea, ec, slicing_bound(ea.value, ec.value), slack)


def cantor_sample(n: int, depth: int = 34, seed: int = 0) -> np.ndarray:
    """n points of the middle-thirds Cantor set with ``depth`` random ternary digits in {0, 2}."""
    rng = np.random.default_rng(seed)
    digits = 2 * rng.integers(0, 2, size=(n, depth))
    weights = 3.0 ** -np.arange(1, depth + 1)
    return digits @ weights
