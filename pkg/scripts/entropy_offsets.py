"""Entropy of T on orbit closures of a certified point and its two parts.

For an accepted certificate x = a + b, estimate the spanning-set entropy of
T along the orbits of a, b (the game offset) and x.  Here a lies on the
stable line of T through 0, so its orbit converges to 0 and the estimate for
a should be 0.  The eigenvalue formula h(T) is printed for comparison.  This
is a report, not a test: a nondense closure should come out below h(T), but
finite samples only show a tendency.

    python scripts/entropy_offsets.py --seeds 0 1 2
"""

import argparse
import warnings

from toruslab.constructor import ConstructionConfig, construct_point, dyadic_point
from toruslab.entropy import entropy_spectrum, orbit_closure_entropy
from toruslab.errors import EstimationError
from toruslab.torus import IntMatrix


def estimate(x, T, N):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            e = orbit_closure_entropy(x, T, N)
        except EstimationError as err:
            return f"n/a ({err})"
    return f"{e.value:.3f} at eps={e.scales[-1]:g}"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--N", type=int, default=10_000, help="orbit length for the estimates")
    args = ap.parse_args()

    S, T = IntMatrix(((2, 1), (1, 1))), IntMatrix(((1, 1), (1, 2)))
    print(f"h(T) = {entropy_spectrum(T).value:.6f}")
    for seed in args.seeds:
        c = construct_point(ConstructionConfig(S, T, ((0, 0),), seed=seed, N_T=args.N))
        b = dyadic_point(c.b)
        print(f"seed {seed}: a {estimate(c.a, T, args.N)}; b {estimate(b, T, args.N)}; "
              f"x {estimate(c.x, T, args.N)}")


if __name__ == "__main__":
    main()
