"""Certified construction on the 4-torus with a quasihyperbolic S.

S is the companion matrix of the Salem polynomial x^4 - x^3 - x^2 - x + 1
(one contracting direction, one rotation plane) and T is the cat map on both
factors of T^2 x T^2.  The leaf s then has dimension 3 and t dimension 1.

    python scripts/construct_t4.py --seeds 0 1 --N-S 10000
"""

import argparse
import time

from toruslab.constructor import ConstructionConfig, construct_point, verify_certificate
from toruslab.errors import RejectedCertificate
from toruslab.spectral import classify
from toruslab.torus import IntMatrix


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--N-S", type=int, default=10_000, dest="N_S")
    ap.add_argument("--N-T", type=int, default=200, dest="N_T")
    ap.add_argument("--verify", action="store_true", help="re-verify at doubled precision")
    args = ap.parse_args()

    S = IntMatrix.companion([1, -1, -1, -1])
    cat = IntMatrix(((2, 1), (1, 1)))
    T = IntMatrix.block_diag(cat, cat)
    print(f"S: {classify(S)}, T: {classify(T)}")
    for seed in args.seeds:
        cfg = ConstructionConfig(S, T, ((0, 0, 0, 0),), N_S=args.N_S, N_T=args.N_T, seed=seed)
        t0 = time.perf_counter()
        try:
            c = construct_point(cfg)
        except RejectedCertificate as e:
            print(f"seed {seed}: rejected ({e})")
            continue
        line = (f"seed {seed}: accepted after {c.attempt + 1} attempt(s), max score "
                f"{c.equi_report.max_score:.4f} <= {cfg.score_threshold:.4f}, margin "
                f"{float(c.avoid_margin):.3g} >= {float(c.delta_out):.3g}, {time.perf_counter() - t0:.1f} s")
        if args.verify:
            line += f", verify {'ok' if verify_certificate(c, precision=2 * c.precision).ok else 'FAILED'}"
        print(line)


if __name__ == "__main__":
    main()
