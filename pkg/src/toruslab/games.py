"""Schmidt's (alpha, beta)-game with exact rational balls.

All centers and radii are Fractions, so containment checks are exact.  Two
spaces are supported: the torus (centers reduced mod 1, wrap-around max
distance) and a flat coordinate space R^k with the max norm, used for games
played on leaves and on products of leaves.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ConfigurationError, RejectedInput
from .spectral import is_ergodic
from .torus import (IntMatrix, TorusPoint, as_matrix, exact_decimal, orbit_numerators,
                    minimal_precision, reduce_mod1, to_fraction, wrap_distance)

Center = tuple[Fraction, ...]


@dataclass(frozen=True)
class Space:
    dim: int
    torus: bool = True

    def normalize(self, c) -> Center:
        c = tuple(to_fraction(v) for v in c)
        if len(c) != self.dim:
            raise RejectedInput(f"center of dimension {len(c)} in a {self.dim}-dimensional space")
        if self.torus:
            return tuple(v - math.floor(v) for v in c)
        return c

    def distance(self, a: Center, b: Center) -> Fraction:
        if self.torus:
            return wrap_distance(a, b)
        return max(abs(u - v) for u, v in zip(a, b))

    def displacement(self, a: Center, b: Center) -> Center:
        """Shortest vector from a to b (wrapped on the torus)."""
        out = []
        for u, v in zip(a, b):
            diff = v - u
            if self.torus:
                diff -= math.floor(diff + Fraction(1, 2))
            out.append(diff)
        return tuple(out)


def torus_space(d: int) -> Space:
    return Space(d, True)


def flat_space(d: int) -> Space:
    return Space(d, False)


@dataclass(frozen=True)
class Ball:
    center: Center
    radius: Fraction

    def contains_ball(self, other: "Ball", space: Space) -> bool:
        return space.distance(self.center, other.center) <= self.radius - other.radius


@dataclass(frozen=True)
class GameParams:
    alpha: Fraction
    beta: Fraction
    initial_ball: Ball
    space: Space

    def __post_init__(self):
        a, b = Fraction(self.alpha), Fraction(self.beta)
        if not (0 < a < 1 and 0 < b < 1):
            raise ConfigurationError("alpha and beta must lie in (0, 1)")
        r = Fraction(self.initial_ball.radius)
        if not 0 < r <= Fraction(1, 4):
            raise ConfigurationError("initial radius must lie in (0, 1/4]")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "initial_ball",
                           Ball(self.space.normalize(self.initial_ball.center), r))

    @property
    def rho(self) -> Fraction:
        return self.initial_ball.radius

    def alice_radius(self, n: int) -> Fraction:
        return self.rho * self.alpha * (self.alpha * self.beta) ** (n - 1)

    def bob_radius(self, n: int) -> Fraction:
        return self.rho * (self.alpha * self.beta) ** n


def make_params(center, rho=Fraction(1, 4), alpha=Fraction(1, 2), beta=Fraction(1, 2), torus=True) -> GameParams:
    space = Space(len(center), torus)
    return GameParams(to_fraction(alpha), to_fraction(beta), Ball(space.normalize(center), to_fraction(rho)), space)


@dataclass(frozen=True)
class Move:
    round: int
    role: str
    actor: str
    ball: Ball
    valid: bool
    violation: Fraction = Fraction(0)


@dataclass(frozen=True)
class GameTranscript:
    params: GameParams
    rounds: int
    moves: tuple[Move, ...]
    valid: bool
    failure: Move | None = None

    @property
    def alice_balls(self) -> tuple[Ball, ...]:
        return tuple(m.ball for m in self.moves if m.role == "alice")

    @property
    def bob_balls(self) -> tuple[Ball, ...]:
        return (self.params.initial_ball,) + tuple(m.ball for m in self.moves if m.role == "bob")

    @property
    def forfeit(self) -> str | None:
        return self.failure.role if self.failure else None

    @property
    def limit_estimate(self) -> Center | None:
        return self.bob_balls[-1].center if self.valid else None

    @property
    def limit_error(self) -> Fraction:
        return self.bob_balls[-1].radius


class Strategy:
    """A player.  ``move`` returns the next center and the updated state.

    Strategies hold only immutable configuration; anything that changes during
    a game lives in the state value threaded through ``play``.
    """

    alpha: Fraction | None = None
    name = "strategy"

    def start(self, params: GameParams, rounds: int):
        return None

    def move(self, state, n: int, ball: Ball, radius: Fraction, params: GameParams):
        raise NotImplementedError

    def actor(self, n: int) -> str:
        return self.name


class CenterKeeping(Strategy):
    """Always reuse the opponent's center."""

    name = "center_keeping"

    def move(self, state, n, ball, radius, params):
        return ball.center, state


class RandomBob(Strategy):
    """Seeded uniform admissible centers on a dyadic grid of ``bits`` bits."""

    name = "random"

    def __init__(self, seed: int, bits: int = 32):
        self.seed, self.bits = seed, bits

    def move(self, state, n, ball, radius, params):
        rng = random.Random(f"{self.seed}:{n}")
        allowed = ball.radius - radius
        top = 1 << self.bits
        c = tuple(v + allowed * Fraction(2 * rng.randrange(top + 1) - top, top) for v in ball.center)
        return params.space.normalize(c), state


class GreedyBob(Strategy):
    """Moves as far as allowed toward the nearest known preimage of ``y``.

    Preimages are M^-k (y + m) for k <= depth and integer m in a small box,
    which enumerates all of them when |det M| = 1.
    """

    name = "greedy"

    def __init__(self, M, y, depth: int = 8, box: int = 1):
        self.M = as_matrix(M)
        self.y = tuple(to_fraction(v) for v in y)
        self.depth, self.box = depth, box
        self._targets = self._preimages()

    def _preimages(self) -> list[Center]:
        import sympy

        inv = sympy.Matrix(self.M.rows).inv()
        d = self.M.dim
        out, P = set(), sympy.eye(d)
        shifts = list(itertools.product(range(-self.box, self.box + 1), repeat=d))
        for _ in range(self.depth + 1):
            for m in shifts if abs(self.M.det) > 1 else [(0,) * d]:
                v = P * sympy.Matrix([self.y[i] + m[i] for i in range(d)])
                q = tuple(Fraction(int(sympy.fraction(e)[0]), int(sympy.fraction(e)[1])) for e in v)
                out.add(tuple(t - math.floor(t) for t in q))
            P = inv * P
        return sorted(out)

    def start(self, params, rounds):
        if not params.space.torus:
            raise ConfigurationError("greedy Bob needs torus coordinates to locate preimages")
        return None

    def move(self, state, n, ball, radius, params):
        space = params.space
        target = min(self._targets, key=lambda t: space.distance(t, ball.center))
        allowed = ball.radius - radius
        step = space.displacement(ball.center, target)
        c = tuple(v + max(-allowed, min(allowed, s)) for v, s in zip(ball.center, step))
        return space.normalize(c), state


@dataclass(frozen=True)
class Chart:
    """Affine map z -> offset + matrix @ z from game coordinates into R^d."""

    matrix: tuple[tuple[Fraction, ...], ...]
    offset: tuple[Fraction, ...]

    @classmethod
    def identity(cls, d: int) -> "Chart":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)),
                   (Fraction(0),) * d)

    @property
    def ambient(self) -> int:
        return len(self.matrix)

    @property
    def dim(self) -> int:
        return len(self.matrix[0])

    def __call__(self, z) -> tuple[Fraction, ...]:
        return tuple(o + sum(a * b for a, b in zip(row, z)) for row, o in zip(self.matrix, self.offset))


class AvoidStrategy(Strategy):
    """Alice keeps the M-orbit of the limit point away from ``y``.

    Time k becomes active once the image of Bob's ball under M^k has extent
    at most ``c2`` (in the max norm).  Alice then picks, from a grid of
    admissible centers, the one maximizing the smallest margin

        dist(M^k x(c), y) - extent(M^k A) - delta

    over active times.  A time is retired once its margin is positive, after
    which every later ball keeps the whole image outside B(y, delta).
    """

    name = "avoid"

    def __init__(self, M, y, *, delta=None, c1=Fraction(1, 8), c2=Fraction(1, 2), grid: int = 5,
                 chart: Chart | None = None, max_time: int = 2000, label: str | None = None):
        self.M = as_matrix(M)
        if not is_ergodic(self.M):
            raise ConfigurationError("avoidance strategy needs an ergodic matrix")
        self.c1, self.c2 = Fraction(c1), Fraction(c2)
        if self.c1 >= self.c2:
            raise ConfigurationError(f"scale window is empty: c1={self.c1} >= c2={self.c2}")
        if grid < 2:
            raise ConfigurationError("grid needs at least two points per axis")
        self.y = tuple(to_fraction(v) - math.floor(to_fraction(v)) for v in y)
        if len(self.y) != self.M.dim:
            raise ConfigurationError("target dimension does not match the matrix")
        self.delta = None if delta is None else Fraction(delta)
        self.grid = grid
        self.chart = chart or Chart.identity(self.M.dim)
        if self.chart.ambient != self.M.dim:
            raise ConfigurationError("chart does not land in the matrix's space")
        self.max_time = max_time
        self.alpha = Fraction(1, 2)
        if label:
            self.name = label
        self._images: list[tuple] = []   # (M^k chart matrix, M^k offset, extent factor)
        self._scaled: list[tuple] = []
        self._ydenom = math.lcm(*(v.denominator for v in self.y))

    def _image(self, k: int):
        while len(self._images) <= k:
            if not self._images:
                mat, off = self.chart.matrix, self.chart.offset
            else:
                pm, po, _ = self._images[-1]
                mat = tuple(tuple(sum(a * pm[t][j] for t, a in enumerate(row)) for j in range(self.chart.dim))
                            for row in self.M.rows)
                off = tuple(sum(a * b for a, b in zip(row, po)) for row in self.M.rows)
            ext = max(sum(abs(v) for v in row) for row in mat)
            self._images.append((mat, off, ext))
        return self._images[k]

    def start(self, params, rounds):
        if params.alpha != Fraction(1, 2):
            raise ConfigurationError("avoidance strategy is built for alpha = 1/2")
        if params.space.dim != self.chart.dim:
            raise ConfigurationError("game space does not match the chart")
        delta = self.delta if self.delta is not None else params.bob_radius(rounds) / 4
        return (0, (), delta)

    def _scaled_image(self, k: int):
        # integer form of the k-th image: mat = A / D, off = O / D, extent = E / D
        while len(self._scaled) <= k:
            mat, off, _ = self._image(len(self._scaled))
            D = math.lcm(*(v.denominator for row in mat for v in row), *(v.denominator for v in off))
            A = tuple(tuple(_scale(v, D) for v in row) for row in mat)
            E = max(sum(abs(v) for v in row) for row in A)
            self._scaled.append((A, tuple(_scale(v, D) for v in off), D, E))
        return self._scaled[k]

    def _margin_parts(self, k: int, c: Center, radius: Fraction, delta: Fraction) -> tuple[int, int]:
        A, O, Dm, E = self._scaled_image(k)
        Dc = math.lcm(*(v.denominator for v in c))
        C = [_scale(v, Dc) for v in c]
        Dy = self._ydenom
        D = Dm * Dc * Dy
        best = 0
        for row, o, yv in zip(A, O, self.y):
            r = ((sum(a * b for a, b in zip(row, C)) + o * Dc) * Dy - _scale(yv, Dy) * Dm * Dc) % D
            best = max(best, min(r, D - r))
        rn, rd = radius.numerator, radius.denominator
        dn, dd = delta.numerator, delta.denominator
        return best * rd * dd - rn * E * Dc * Dy * dd - dn * D * rd, D * rd * dd

    def margin(self, k: int, c: Center, radius: Fraction, delta: Fraction) -> Fraction:
        """dist(M^k x(c), y) - radius * extent_k - delta, computed in integers."""
        return Fraction(*self._margin_parts(k, c, radius, delta))

    def candidates(self, ball: Ball, radius: Fraction, space: Space) -> list[Center]:
        allowed = ball.radius - radius
        half = self.grid - 1
        steps = [allowed * Fraction(2 * i - half, half) for i in range(self.grid)]
        steps.sort(key=abs)
        return [space.normalize(tuple(c + s for c, s in zip(ball.center, off)))
                for off in itertools.product(steps, repeat=space.dim)]

    def move(self, state, n, ball, radius, params):
        next_k, pending, delta = state
        pending = list(pending)
        while next_k <= self.max_time and self._image(next_k)[2] * ball.radius <= self.c2:
            pending.append(next_k)
            next_k += 1
        if not pending:
            return ball.center, (next_k, (), delta)
        best, best_score, best_margins = None, None, None
        for c in self.candidates(ball, radius, params.space):
            margins = [self._margin_parts(k, c, radius, delta) for k in pending]
            score = min(margins, key=_RatioKey)
            if best_score is None or _RatioKey(score) > _RatioKey(best_score):
                best, best_score, best_margins = c, score, margins
        still = tuple(k for k, (num, _) in zip(pending, best_margins) if num <= 0)
        return best, (next_k, still, delta)


def _scale(q: Fraction, D: int) -> int:
    """q * D for a denominator dividing D, without normalizing a Fraction."""
    return q.numerator * (D // q.denominator)


class _RatioKey:
    """Orders (num, den) pairs with den > 0 by cross multiplication."""

    __slots__ = ("n", "d")

    def __init__(self, parts):
        self.n, self.d = parts

    def __lt__(self, other):
        return self.n * other.d < other.n * self.d

    def __gt__(self, other):
        return self.n * other.d > other.n * self.d


def avoid_strategy(M, y, **cfg) -> AvoidStrategy:
    return AvoidStrategy(M, y, **cfg)


class ProjectedStrategy(Strategy):
    """Play a strategy for the product V x W on V alone.

    Bob's ball in V is lifted over a fixed fiber basepoint in W; the inner
    strategy's answer is projected back by dropping the W coordinates.  With
    the max metric the projection preserves radii and containment.
    """

    name = "projected"

    def __init__(self, inner: Strategy, fiber_basepoint: Sequence):
        self.inner = inner
        self.fiber = tuple(to_fraction(v) for v in fiber_basepoint)
        self.alpha = inner.alpha
        self.name = f"projected[{inner.name}]"

    def _lift_params(self, params: GameParams) -> GameParams:
        space = Space(params.space.dim + len(self.fiber), False)
        ball = Ball(params.initial_ball.center + self.fiber, params.initial_ball.radius)
        return GameParams(params.alpha, params.beta, ball, space)

    def start(self, params, rounds):
        if params.space.torus:
            raise ConfigurationError("projection acts on flat leaf coordinates")
        lifted = self._lift_params(params)
        return (lifted, self.inner.start(lifted, rounds))

    def move(self, state, n, ball, radius, params):
        lifted, inner_state = state
        k = params.space.dim
        c, inner_state = self.inner.move(inner_state, n, Ball(ball.center + self.fiber, ball.radius), radius, lifted)
        return tuple(c[:k]), (lifted, inner_state)

    def actor(self, n):
        return f"projected[{self.inner.actor(n)}]"


def project_strategy(s: Strategy, fiber_basepoint) -> ProjectedStrategy:
    return ProjectedStrategy(s, fiber_basepoint)


class RoundRobin(Strategy):
    """Round n is played by delegate n mod k with that delegate's own state."""

    name = "round_robin"

    def __init__(self, strategies: Sequence[Strategy]):
        if not strategies:
            raise ConfigurationError("round robin needs at least one strategy")
        alphas = {s.alpha for s in strategies if s.alpha is not None}
        if len(alphas) > 1:
            raise ConfigurationError(f"delegates disagree on alpha: {sorted(alphas)}")
        self.delegates = tuple(strategies)
        self.alpha = alphas.pop() if alphas else None

    def start(self, params, rounds):
        return tuple(s.start(params, rounds) for s in self.delegates)

    def move(self, state, n, ball, radius, params):
        i = n % len(self.delegates)
        c, sub = self.delegates[i].move(state[i], n, ball, radius, params)
        return c, state[:i] + (sub,) + state[i + 1:]

    def actor(self, n):
        i = n % len(self.delegates)
        return f"{i}:{self.delegates[i].actor(n)}"


def round_robin_strategy(strategies) -> RoundRobin:
    return RoundRobin(strategies)


def play(alice: Strategy, bob: Strategy, params: GameParams, rounds: int) -> GameTranscript:
    """Alternate Alice and Bob for ``rounds`` rounds, validating each ball."""
    if rounds < 1:
        raise RejectedInput("a game needs at least one round")
    space = params.space
    sa, sb = alice.start(params, rounds), bob.start(params, rounds)
    current = params.initial_ball
    moves: list[Move] = []
    for n in range(1, rounds + 1):
        for role, player in (("alice", alice), ("bob", bob)):
            radius = params.alice_radius(n) if role == "alice" else params.bob_radius(n)
            if role == "alice":
                c, sa = player.move(sa, n, current, radius, params)
            else:
                c, sb = player.move(sb, n, current, radius, params)
            ball = Ball(space.normalize(c), radius)
            gap = space.distance(current.center, ball.center) - (current.radius - radius)
            ok = gap <= 0
            mv = Move(n, role, player.actor(n), ball, ok, max(gap, Fraction(0)))
            moves.append(mv)
            if not ok:
                return GameTranscript(params, rounds, tuple(moves), False, mv)
            current = ball
    return GameTranscript(params, rounds, tuple(moves), True, None)


@dataclass(frozen=True)
class LimitPoint:
    center: Center
    error: Fraction

    def as_point(self, precision: int = 256) -> TorusPoint:
        """The center as a torus point; exact (error 0) when it is dyadic."""
        den = max(v.denominator for v in self.center)
        if den & (den - 1) == 0:
            precision = max(precision, den.bit_length() - 1, 1)
        return reduce_mod1(self.center, precision)


def limit_point(t: GameTranscript) -> LimitPoint:
    if not t.valid:
        raise RejectedInput("transcript is invalid; no limit point")
    last = t.bob_balls[-1]
    return LimitPoint(last.center, last.radius)


def avoidance_margin(M, x, y, steps: int) -> tuple[Fraction, int]:
    """min over 0 <= n <= steps of torus_distance(M^n x, y), with the minimizing n.

    ``x`` is a TorusPoint or an exact rational center; a center is iterated
    exactly over the common denominator of x and y.
    """
    M = as_matrix(M)
    if not isinstance(x, TorusPoint):
        return _rational_margin(M, tuple(to_fraction(v) for v in x), y, steps)
    p = max(x.precision, minimal_precision(M, steps))
    x = x.with_precision(p)
    yp = y if isinstance(y, TorusPoint) else reduce_mod1(y, p)
    yp = yp.with_precision(p)
    top = 1 << p
    best, arg = None, 0
    for n, num in enumerate(orbit_numerators(M, x, steps)):
        d = 0
        for u, v in zip(num, yp.num):
            diff = (u - v) % top
            d = max(d, min(diff, top - diff))
        if best is None or d < best:
            best, arg = d, n
    return Fraction(best, top), arg


def _rational_margin(M: IntMatrix, x: Center, y, steps: int) -> tuple[Fraction, int]:
    yq = tuple(to_fraction(v) for v in (y.exact if isinstance(y, TorusPoint) else y))
    if len(x) != M.dim or len(yq) != M.dim:
        raise RejectedInput("point and target dimensions must match the matrix")
    D = math.lcm(*(v.denominator for v in x + yq))
    cur = [_scale(v - math.floor(v), D) for v in x]
    ys = [_scale(v, D) % D for v in yq]
    best, arg = None, 0
    for n in range(steps + 1):
        d = 0
        for u, v in zip(cur, ys):
            diff = (u - v) % D
            d = max(d, min(diff, D - diff))
        if best is None or d < best:
            best, arg = d, n
        cur = [v % D for v in M.matvec(cur)]
    return Fraction(best, D), arg


# Serialization: one JSON object per line.

def _num(q: Fraction) -> str:
    try:
        return exact_decimal(q)
    except RejectedInput:
        return f"{q.numerator}/{q.denominator}"


def transcript_lines(t: GameTranscript) -> list[str]:
    p = t.params
    head = {"type": "params", "alpha": _num(p.alpha), "beta": _num(p.beta), "rounds": t.rounds,
            "torus": p.space.torus, "center": [_num(v) for v in p.initial_ball.center],
            "radius": _num(p.initial_ball.radius)}
    lines = [json.dumps(head, sort_keys=True)]
    for m in t.moves:
        lines.append(json.dumps({"type": "move", "round": m.round, "role": m.role, "actor": m.actor,
                                 "center": [_num(v) for v in m.ball.center], "radius": _num(m.ball.radius),
                                 "valid": m.valid, "violation": _num(m.violation)}, sort_keys=True))
    return lines


class _Replay(Strategy):
    def __init__(self, centers, actors):
        self.centers, self.actors = centers, actors

    def move(self, state, n, ball, radius, params):
        return self.centers[n], state

    def actor(self, n):
        return self.actors.get(n, "replay")


def replay(lines: Sequence[str]) -> GameTranscript:
    """Rebuild and re-validate a transcript from its serialized lines."""
    recs = [json.loads(s) for s in lines if s.strip()]
    head = recs[0]
    params = make_params(head["center"], head["radius"], head["alpha"], head["beta"], head["torus"])
    alice, bob = {}, {}
    names = {"alice": {}, "bob": {}}
    for r in recs[1:]:
        (alice if r["role"] == "alice" else bob)[r["round"]] = tuple(Fraction(v) for v in r["center"])
        names[r["role"]][r["round"]] = r["actor"]
    rounds = head["rounds"]
    last = max([0] + list(alice) + list(bob))
    # a truncated (invalid) transcript replays up to its failing move
    t = play(_Replay(alice, names["alice"]), _Replay(bob, names["bob"]), params, last) if last else None
    if t is None:
        raise RejectedInput("transcript has no moves")
    return GameTranscript(params, rounds, t.moves, t.valid and last == rounds, t.failure)
