"""Search the (D*, eps) simplex for distributions where DID equals the ATT.

Also prints the closed-form reason the search comes back empty: the
condition reduces to p11 * P(D=1) + P(D=0) * p01 = 0.

    python scripts/fixed_point_scan.py --step 0.001
"""

import argparse
import time

from misdid.identification import fixed_point_check, fixed_point_scan


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--step", type=float, default=0.001)
    ap.add_argument("--tol", type=float, default=1e-6)
    args = ap.parse_args(argv)

    start = time.perf_counter()
    scan = fixed_point_scan(args.step, args.tol)
    print(f"step={scan.step} evaluated={scan.evaluated} hits={scan.hits} "
          f"({time.perf_counter() - start:.1f}s)")
    j = scan.best
    fp = fixed_point_check(j)
    p_d1 = j.p10 + j.p01
    print(f"closest: {j}")
    print(f"  lhs={fp.lhs:.6f} rhs={fp.rhs:.6f} residual={scan.best_residual:.3e}")
    print(f"  p11*P(D=1) + P(D=0)*p01 = {j.p11 * p_d1 + (1 - p_d1) * j.p01:.6f} (must be 0 for a fixed point)")


if __name__ == "__main__":
    main()
