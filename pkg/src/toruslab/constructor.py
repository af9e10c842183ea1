"""Finite-horizon construction of points that equidistribute under S and avoid targets under T.

The point is x = a + b.  The base a = C_T c lies on the leaf t through the
origin, with random coefficients c; the offset b = C_S u lies on the leaf s,
with u the limit of an avoidance game played on s over the fiber basepoint c.
C_S and C_T are dyadic bases accurate to the working precision, so x is an
exact dyadic point and every check below is exact or float-summed over exact
orbit data.

All statements are at finite horizon: equidistribution means a Weyl score
below 5/sqrt(N_S) over the box J, nondensity means the T-orbit stays outside
B(y, delta_out) for N_T steps.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .equidist import EquidistributionReport, equidistribution_score
from .errors import (BudgetError, ConfigurationError, ConstructionError, IntegrityError,
                     RejectedCertificate, RejectedInput)
from .games import (CenterKeeping, Chart, GameTranscript, RandomBob, avoid_strategy, avoidance_margin,
                    limit_point, make_params, play, project_strategy, round_robin_strategy,
                    transcript_lines)
from .spectral import (HYPERBOLIC, HypothesisWarning, ComplementPair, choose_complements,
                       precise_invariant_basis, refine_into, splitting, to_dyadic)
from .torus import IntMatrix, TorusPoint, as_matrix, minimal_precision, reduce_mod1, to_fraction

SCORE_FACTOR = 5.0
BOBS = ("stationary", "random")


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else to_fraction(v)


@dataclass(frozen=True)
class ConstructionConfig:
    S: IntMatrix
    T: IntMatrix
    targets: tuple[tuple[Fraction, ...], ...]
    rounds: int = 40
    N_S: int = 10_000
    N_T: int = 200
    J: int = 3
    alpha: Fraction = Fraction(1, 2)
    beta: Fraction = Fraction(1, 2)
    rho: Fraction = Fraction(1, 4)
    seed: int = 0
    bob: str = "stationary"
    retries: int = 3
    precision: int | None = None
    zero_offset: bool = False

    def __post_init__(self):
        S, T = as_matrix(self.S), as_matrix(self.T)
        if S.dim != T.dim:
            raise ConfigurationError(f"S is {S.dim}x{S.dim} but T is {T.dim}x{T.dim}")
        targets = self.targets
        if targets and not isinstance(targets[0], (tuple, list)):
            targets = (targets,)
        targets = tuple(tuple(_frac(v) for v in y) for y in targets)
        if not targets:
            raise ConfigurationError("at least one target is needed")
        for y in targets:
            if len(y) != S.dim:
                raise ConfigurationError(f"target {y} does not have dimension {S.dim}")
        alpha, beta, rho = _frac(self.alpha), _frac(self.beta), _frac(self.rho)
        if alpha != Fraction(1, 2):
            raise ConfigurationError("the avoidance strategy needs alpha = 1/2")
        if not 0 < beta < 1 or not 0 < rho <= Fraction(1, 4):
            raise ConfigurationError("need 0 < beta < 1 and 0 < rho <= 1/4")
        if self.rounds < 1 or self.N_S < 1 or self.N_T < 0 or self.J < 1 or self.retries < 0:
            raise ConfigurationError("rounds, N_S, J must be positive and N_T, retries nonnegative")
        if self.bob not in BOBS:
            raise ConfigurationError(f"bob must be one of {BOBS} on a flat leaf, got {self.bob!r}")
        if self.precision is not None and self.precision < self.budget_bits():
            raise BudgetError(f"precision {self.precision} is below the budget {self.budget_bits()}",
                              minimal_precision=self.budget_bits())
        for name, v in (("S", S), ("T", T), ("targets", targets), ("alpha", alpha), ("beta", beta),
                        ("rho", rho)):
            object.__setattr__(self, name, v)

    def budget_bits(self) -> int:
        return max(minimal_precision(as_matrix(self.S), self.N_S), minimal_precision(as_matrix(self.T), self.N_T))

    @property
    def bits(self) -> int:
        return self.precision if self.precision is not None else self.budget_bits()

    @property
    def delta_out(self) -> Fraction:
        return self.rho * (self.alpha * self.beta) ** self.rounds / 8

    @property
    def score_threshold(self) -> float:
        return SCORE_FACTOR / math.sqrt(self.N_S)

    def to_dict(self) -> dict:
        return {"S": self.S.to_lists(), "T": self.T.to_lists(),
                "targets": [[str(v) for v in y] for y in self.targets],
                "rounds": self.rounds, "N_S": self.N_S, "N_T": self.N_T, "J": self.J,
                "alpha": str(self.alpha), "beta": str(self.beta), "rho": str(self.rho),
                "seed": self.seed, "bob": self.bob, "retries": self.retries,
                "precision": self.precision, "zero_offset": self.zero_offset}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstructionConfig":
        d = dict(d)
        d["S"], d["T"] = as_matrix(d["S"]), as_matrix(d["T"])
        d["targets"] = tuple(tuple(Fraction(v) for v in y) for y in d["targets"])
        return cls(**d)


@dataclass(frozen=True)
class Leaves:
    """Complementary leaves s and t with dyadic bases accurate to ``bits``."""

    pair: ComplementPair
    s_cols: tuple[tuple[Fraction, ...], ...]
    t_cols: tuple[tuple[Fraction, ...], ...]
    bits: int
    classes: tuple[str, str]

    @property
    def chart(self) -> Chart:
        cols = self.s_cols + self.t_cols
        d = len(cols[0])
        return Chart(tuple(tuple(c[i] for c in cols) for i in range(d)), (Fraction(0),) * d)


@lru_cache(maxsize=16)
def prepare_leaves(S: IntMatrix, T: IntMatrix, bits: int) -> Leaves:
    sp_S, sp_T = splitting(S), splitting(T)
    pair = choose_complements(sp_S, sp_T)
    s_cols = refine_into(pair.s_basis, precise_invariant_basis(sp_S, bits), bits)
    t_cols = refine_into(pair.t_basis, precise_invariant_basis(sp_T, bits), bits)
    return Leaves(pair, tuple(s_cols), tuple(t_cols), bits, (sp_S.classification, sp_T.classification))


def _combine(cols, coeffs) -> tuple[Fraction, ...]:
    d = len(cols[0])
    return tuple(sum((c[i] * k for c, k in zip(cols, coeffs)), Fraction(0)) for i in range(d))


def dyadic_point(v: Sequence[Fraction]) -> TorusPoint:
    """v mod 1 as an exact torus point (v must be dyadic)."""
    den = max(Fraction(q).denominator for q in v)
    if den & (den - 1):
        raise RejectedInput("vector is not dyadic")
    return reduce_mod1(v, max(den.bit_length() - 1, 1))


def base_coefficients(k: int, seed, precision: int) -> tuple[Fraction, ...]:
    rng = random.Random(f"base:{seed}")
    return tuple(Fraction(rng.getrandbits(precision), 1 << precision) for _ in range(k))


def _columns(basis, bits: int) -> tuple[tuple[Fraction, ...], ...]:
    if isinstance(basis, np.ndarray):
        return tuple(to_dyadic(list(basis[:, j]), bits) for j in range(basis.shape[1]))
    return tuple(tuple(_frac(v) for v in col) for col in basis)


def sample_base(t_basis, seed, precision: int) -> TorusPoint:
    """a = sum c_i t_i mod 1 with c_i uniform dyadics of ``precision`` bits."""
    cols = _columns(t_basis, precision)
    return dyadic_point(_combine(cols, base_coefficients(len(cols), seed, precision)))


@dataclass(frozen=True)
class Offset:
    coefficients: tuple[Fraction, ...]
    vector: tuple[Fraction, ...]
    transcript: GameTranscript
    strategy: str


def nondense_offset(T, y, s_basis, R: int, bob: str = "stationary", seed: int = 0, *,
                    t_basis=None, fiber=None, rho=Fraction(1, 4), beta=Fraction(1, 2),
                    bits: int = 256) -> Offset:
    """Play the projected avoidance game on the leaf s and return its limit b.

    ``y`` is one target or a list of targets; several targets are handled by
    a round robin of avoidance strategies.  The game lives in s coordinates;
    the t coordinates are pinned at ``fiber`` (default 0).
    """
    T = as_matrix(T)
    s_cols = _columns(s_basis, bits)
    t_cols = _columns(t_basis, bits) if t_basis is not None else ()
    fiber = tuple(_frac(v) for v in fiber) if fiber is not None else (Fraction(0),) * len(t_cols)
    if len(fiber) != len(t_cols):
        raise RejectedInput("fiber basepoint does not match the t basis")
    cols = s_cols + t_cols
    d = T.dim
    if any(len(c) != d for c in cols):
        raise RejectedInput("basis vectors do not match the matrix dimension")
    chart = Chart(tuple(tuple(c[i] for c in cols) for i in range(d)), (Fraction(0),) * d)
    targets = [y] if not isinstance(y[0], (tuple, list)) else list(y)
    inner = [avoid_strategy(T, yi, chart=chart, label=f"avoid[{i}]") for i, yi in enumerate(targets)]
    alice = project_strategy(inner[0] if len(inner) == 1 else round_robin_strategy(inner), fiber)
    if bob == "stationary":
        bob_s = CenterKeeping()
    elif bob == "random":
        bob_s = RandomBob(seed)
    else:
        raise ConfigurationError(f"bob {bob!r} cannot play on a flat leaf")
    params = make_params((0,) * len(s_cols), rho=rho, beta=beta, torus=False)
    t = play(alice, bob_s, params, R)
    if not t.valid:
        raise ConstructionError(f"game invalid at round {t.failure.round} ({t.failure.actor})", transcript=t)
    u = limit_point(t).center
    return Offset(tuple(u), _combine(s_cols, u), t, alice.name)


@dataclass(frozen=True)
class Certificate:
    config: ConstructionConfig
    x: TorusPoint
    a: TorusPoint
    base_coefficients: tuple[Fraction, ...]
    b: tuple[Fraction, ...]
    offset_coefficients: tuple[Fraction, ...]
    equi_report: EquidistributionReport
    avoid_margins: tuple[Fraction, ...]
    avoid_times: tuple[int, ...]
    transcript: tuple[str, ...] = field(repr=False)
    transcript_hash: str
    precision: int
    basis_bits: int
    required_precision: int
    error_bound: Fraction
    attempt: int
    attempts: tuple[dict, ...]
    flags: tuple[str, ...]

    @property
    def avoid_margin(self) -> Fraction:
        return min(self.avoid_margins)

    @property
    def delta_out(self) -> Fraction:
        return self.config.delta_out

    @property
    def equi_ok(self) -> bool:
        return self.equi_report.max_score <= self.config.score_threshold

    @property
    def avoid_ok(self) -> bool:
        return self.avoid_margin >= self.delta_out

    @property
    def accepted(self) -> bool:
        return self.equi_ok and self.avoid_ok


def _flags(cfg: ConstructionConfig, leaves: Leaves) -> tuple[str, ...]:
    flags = [
        f"finite horizon: equidistribution under S evidenced for N_S={cfg.N_S}, J={cfg.J}; "
        f"avoidance under T evidenced for N_T={cfg.N_T} at radius delta_out",
        "equidistribution of a transfers to x = a + b because b lies in s inside s_- + s_0'",
        "avoidance of b transfers to x because a lies in t inside t_- + t_0'",
    ]
    cs, ct = leaves.classes
    if abs(cfg.T.det) != 1 and (cs != HYPERBOLIC or ct != HYPERBOLIC):
        msg = "outside hypotheses: quasihyperbolic case with a non-invertible T"
        warnings.warn(msg, HypothesisWarning, stacklevel=3)
        flags.append(msg)
    return tuple(flags)


def _attempt(cfg: ConstructionConfig, leaves: Leaves, attempt: int):
    bits = cfg.bits
    c = base_coefficients(len(leaves.t_cols), f"{cfg.seed}:{attempt}", bits)
    a_lift = _combine(leaves.t_cols, c)
    if cfg.zero_offset:
        u = (Fraction(0),) * len(leaves.s_cols)
        t = play(CenterKeeping(), CenterKeeping(), make_params(u, cfg.rho, cfg.alpha, cfg.beta, False), 1)
    else:
        off = nondense_offset(cfg.T, cfg.targets, leaves.s_cols, cfg.rounds, cfg.bob, cfg.seed,
                              t_basis=leaves.t_cols, fiber=c, rho=cfg.rho, beta=cfg.beta, bits=bits)
        u, t = off.coefficients, off.transcript
    b = _combine(leaves.s_cols, u)
    x = dyadic_point(tuple(p + q for p, q in zip(a_lift, b)))
    a = dyadic_point(a_lift)
    equi = equidistribution_score(x, cfg.S, cfg.N_S, cfg.J)
    margins, times = [], []
    for y in cfg.targets:
        m, n = avoidance_margin(cfg.T, x, y, cfg.N_T)
        margins.append(m)
        times.append(n)
    return x, a, c, b, u, equi, tuple(margins), tuple(times), t


def construct_point(cfg: ConstructionConfig) -> Certificate:
    """Build and certify x = a + b; raise RejectedCertificate if no attempt passes."""
    leaves = prepare_leaves(cfg.S, cfg.T, cfg.bits)
    flags = _flags(cfg, leaves)
    log = []
    cert = None
    for attempt in range(cfg.retries + 1):
        x, a, c, b, u, equi, margins, times, t = _attempt(cfg, leaves, attempt)
        lines = tuple(transcript_lines(t))
        digest = hashlib.sha256(("\n".join(lines) + "\n").encode()).hexdigest()
        cert = Certificate(cfg, x, a, c, b, u, equi, margins, times, lines, digest, x.precision, leaves.bits,
                           cfg.budget_bits(), x.error_bound, attempt, tuple(log), flags)
        log.append({"attempt": attempt, "max_score": equi.max_score,
                    "avoid_margin": float(min(margins)), "accepted": cert.accepted})
        cert = replace(cert, attempts=tuple(log))
        if cert.accepted:
            return cert
    reasons = []
    if not cert.equi_ok:
        reasons.append(f"max Weyl score {cert.equi_report.max_score:.4f} > {cfg.score_threshold:.4f}")
    if not cert.avoid_ok:
        reasons.append(f"avoidance margin {float(cert.avoid_margin):.3g} < {float(cfg.delta_out):.3g}")
    raise RejectedCertificate("; ".join(reasons), certificate=cert)


@dataclass(frozen=True)
class VerificationReport:
    checks: dict
    max_score: float
    avoid_margins: tuple[Fraction, ...]
    precision: int

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


SCORE_AGREEMENT = 1e-9


def verify_certificate(c: Certificate, cfg: ConstructionConfig | None = None,
                       precision: int | None = None) -> VerificationReport:
    """Recompute every check from the certificate's data at ``precision`` bits or more.

    Failed checks (including a point that no longer equals a + b) are
    reported; a recomputation that disagrees with recorded values although
    the data is consistent raises IntegrityError.
    """
    cfg = cfg or c.config
    prec = max(precision or c.precision, c.precision)
    leaves = prepare_leaves(cfg.S, cfg.T, c.basis_bits)
    checks = {}
    a_lift = _combine(leaves.t_cols, c.base_coefficients)
    b = _combine(leaves.s_cols, c.offset_coefficients)
    checks["offset_in_s"] = tuple(b) == tuple(c.b)
    checks["base_in_t"] = dyadic_point(a_lift).exact == c.a.exact
    x_expected = dyadic_point(tuple(p + q for p, q in zip(a_lift, b)))
    checks["x_equals_a_plus_b"] = x_expected.exact == c.x.exact
    x = c.x.with_precision(prec)
    equi = equidistribution_score(x, cfg.S, cfg.N_S, cfg.J)
    margins = tuple(avoidance_margin(cfg.T, x, y, cfg.N_T)[0] for y in cfg.targets)
    checks["equidistribution"] = equi.max_score <= cfg.score_threshold
    checks["avoidance"] = min(margins) >= cfg.delta_out
    consistent = checks["offset_in_s"] and checks["base_in_t"] and checks["x_equals_a_plus_b"]
    if consistent and c.config == cfg:
        err = float(c.error_bound) * float(cfg.T.norm) ** cfg.N_T
        if abs(equi.max_score - c.equi_report.max_score) > SCORE_AGREEMENT:
            raise IntegrityError(f"Weyl score recomputed as {equi.max_score}, recorded {c.equi_report.max_score}")
        for m, r in zip(margins, c.avoid_margins):
            if abs(float(m - r)) > 2 * err:
                raise IntegrityError(f"avoidance margin recomputed as {float(m)}, recorded {float(r)}")
    return VerificationReport(checks, equi.max_score, margins, prec)


# Ensembles

def _construct_or_reject(cfg: ConstructionConfig):
    try:
        return construct_point(cfg)
    except RejectedCertificate as e:
        return e


@dataclass(frozen=True)
class Ensemble:
    accepted: tuple[Certificate, ...]
    rejected: tuple[RejectedCertificate, ...]

    def points(self) -> np.ndarray:
        """Accepted points as floats, ready for box counting."""
        return np.array([c.x.coords for c in self.accepted])


def construct_ensemble(cfg: ConstructionConfig, seeds: Sequence[int], parallel: int = 1) -> Ensemble:
    cfgs = [replace(cfg, seed=s) for s in seeds]
    if parallel > 1:
        with ProcessPoolExecutor(parallel) as ex:
            results = list(ex.map(_construct_or_reject, cfgs))
    else:
        results = [_construct_or_reject(c) for c in cfgs]
    acc = tuple(r for r in results if isinstance(r, Certificate))
    rej = tuple(r for r in results if not isinstance(r, Certificate))
    return Ensemble(acc, rej)


# Serialization.  Dyadic rationals are written as "0x<hex>p-<k>" (num / 2^k).

def encode_number(q: Fraction) -> str:
    q = Fraction(q)
    den = q.denominator
    if den & (den - 1):
        return f"{q.numerator}/{den}"
    sign = "-" if q < 0 else ""
    return f"{sign}{abs(q.numerator):#x}p-{den.bit_length() - 1}"


def decode_number(s: str) -> Fraction:
    s = s.strip()
    if "p-" in s:
        body, k = s.split("p-")
        sign = -1 if body.startswith("-") else 1
        return Fraction(sign * int(body.lstrip("-"), 16), 1 << int(k))
    return Fraction(s)


def encode_point(x: TorusPoint) -> dict:
    return {"precision": x.precision, "num": [f"{v:#x}" for v in x.num], "error": encode_number(x.error_bound)}


def decode_point(d: dict) -> TorusPoint:
    return TorusPoint(tuple(int(v, 16) for v in d["num"]), int(d["precision"]), decode_number(d["error"]))


def certificate_records(c: Certificate) -> list[str]:
    """Line-delimited records; the transcript is referenced by its sha256."""
    rec = {
        "type": "certificate",
        "config": c.config.to_dict(),
        "accepted": c.accepted,
        "attempt": c.attempt,
        "x": encode_point(c.x),
        "a": encode_point(c.a),
        "base_coefficients": [encode_number(v) for v in c.base_coefficients],
        "b": [encode_number(v) for v in c.b],
        "offset_coefficients": [encode_number(v) for v in c.offset_coefficients],
        "max_score": c.equi_report.max_score,
        "argmax": list(c.equi_report.argmax()),
        "score_threshold": c.config.score_threshold,
        "avoid_margins": [encode_number(v) for v in c.avoid_margins],
        "avoid_times": list(c.avoid_times),
        "delta_out": encode_number(c.delta_out),
        "transcript_sha256": c.transcript_hash,
        "precision": c.precision,
        "basis_bits": c.basis_bits,
        "required_precision": c.required_precision,
        "error_bound": encode_number(c.error_bound),
        "flags": list(c.flags),
    }
    lines = [json.dumps(rec, sort_keys=True)]
    lines += [json.dumps({"type": "attempt", **a}, sort_keys=True) for a in c.attempts]
    return lines


def load_certificate(lines: Sequence[str], transcript: Sequence[str]) -> Certificate:
    """Rebuild a certificate; the transcript must match the recorded hash."""
    recs = [json.loads(s) for s in lines if s.strip()]
    rec = next(r for r in recs if r["type"] == "certificate")
    transcript = tuple(s for s in transcript if s.strip())
    digest = hashlib.sha256(("\n".join(transcript) + "\n").encode()).hexdigest()
    if digest != rec["transcript_sha256"]:
        raise IntegrityError("transcript does not match the certificate's hash")
    cfg = ConstructionConfig.from_dict(rec["config"])
    x = decode_point(rec["x"])
    scores = {tuple(rec["argmax"]): rec["max_score"]}
    equi = EquidistributionReport(cfg.S, x, cfg.N_S, cfg.J, scores, rec["max_score"], True)
    attempts = tuple({k: v for k, v in r.items() if k != "type"} for r in recs if r["type"] == "attempt")
    return Certificate(cfg, x, decode_point(rec["a"]),
                       tuple(decode_number(v) for v in rec["base_coefficients"]),
                       tuple(decode_number(v) for v in rec["b"]),
                       tuple(decode_number(v) for v in rec["offset_coefficients"]),
                       equi, tuple(decode_number(v) for v in rec["avoid_margins"]), tuple(rec["avoid_times"]),
                       transcript, digest, rec["precision"], rec["basis_bits"], rec["required_precision"],
                       decode_number(rec["error_bound"]), rec["attempt"], attempts, tuple(rec["flags"]))
