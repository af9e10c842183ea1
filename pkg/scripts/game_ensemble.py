"""Play many avoidance games against each Bob and summarize the margins.

    python scripts/game_ensemble.py --games 300 --rounds 40
"""

import argparse
import math
import random
import statistics
from fractions import Fraction

from toruslab.games import (CenterKeeping, GreedyBob, RandomBob, avoid_strategy, avoidance_margin,
                            limit_point, make_params, play)
from toruslab.torus import IntMatrix

CAT = IntMatrix(((2, 1), (1, 1)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--games", type=int, default=150)
    ap.add_argument("--rounds", type=int, default=40)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    y = (Fraction(0), Fraction(0))
    bobs = {"stationary": lambda g: CenterKeeping(), "random": RandomBob, "greedy": lambda g: GreedyBob(CAT, y)}
    print(f"{'bob':<11} {'games':>5} {'valid':>5} {'avoided':>7} {'median log2(margin/delta)':>26}")
    for name, make in bobs.items():
        valid = avoided = 0
        ratios = []
        for g in range(args.games // len(bobs)):
            rng = random.Random(f"{args.seed}:{name}:{g}")
            p = make_params(tuple(Fraction(rng.getrandbits(32), 1 << 32) for _ in range(2)))
            t = play(avoid_strategy(CAT, y), make(g), p, args.rounds)
            if not t.valid:
                continue
            valid += 1
            delta = p.bob_radius(args.rounds) / 8
            m, _ = avoidance_margin(CAT, limit_point(t).center, y, args.steps)
            avoided += m >= delta
            ratios.append(math.log2(m / delta))
        n = args.games // len(bobs)
        med = statistics.median(ratios) if ratios else float("nan")
        print(f"{name:<11} {n:>5} {valid:>5} {avoided:>7} {med:>26.1f}")


if __name__ == "__main__":
    main()
