"""Box-counting dimension of an ensemble of certified points.

Each seed yields one point x = a + b for the pair S = [[2,1],[1,1]],
T = [[1,1],[1,2]].  The estimate is a box-counting proxy on a finite sample,
so it says nothing rigorous about Hausdorff dimension.  With alpha = 1/2
the offsets b come from a game whose limit set is thin, so expect a value
between 1 and 2 that creeps up with the sample size.

    python scripts/dimension_ensemble.py --seeds 2000 --N-S 500 --parallel 8
"""

import argparse
import time
import warnings

from toruslab.constructor import ConstructionConfig, construct_ensemble
from toruslab.dimension import box_dimension
from toruslab.torus import IntMatrix


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=1200)
    ap.add_argument("--N-S", type=int, default=500, dest="N_S")
    ap.add_argument("--N-T", type=int, default=100, dest="N_T")
    ap.add_argument("--bob", default="random", choices=["stationary", "random"])
    ap.add_argument("--parallel", type=int, default=1)
    args = ap.parse_args()

    cfg = ConstructionConfig(IntMatrix(((2, 1), (1, 1))), IntMatrix(((1, 1), (1, 2))), ((0, 0),),
                             N_S=args.N_S, N_T=args.N_T, bob=args.bob)
    t0 = time.perf_counter()
    ens = construct_ensemble(cfg, range(args.seeds), args.parallel)
    print(f"{len(ens.accepted)} accepted, {len(ens.rejected)} rejected in {time.perf_counter() - t0:.1f} s")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est = box_dimension(ens.points())
    for w in caught:
        print(f"  note: {w.message}")
    print(f"box dimension {est.value:.3f} (R^2 {est.fit_quality:.4f}) over scales {est.scales}")
    print(f"  counts {est.counts}")
    print(f"  {est.note}")


if __name__ == "__main__":
    main()
