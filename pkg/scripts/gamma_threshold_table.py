"""Threshold w*(t) and its validity for the Gamma(2, 0.05) law at r = 0.02."""

import argparse
import sys

from bequest.actuarial import ProblemSpec, safe_level
from bequest.errors import NoCrossingError
from bequest.mortality import ConstantForce, GammaTwo
from bequest.optimal import compute_tr, find_crossing, find_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, default=0.05)
    ap.add_argument("-r", type=float, default=0.02)
    ap.add_argument("--times", type=float, nargs="*", default=[5, 10, 13.4, 25, 40, 75, 150, 200])
    args = ap.parse_args()
    spec = ProblemSpec(GammaTwo(args.mu), args.r)
    limit = find_crossing(ProblemSpec(ConstantForce(args.mu), args.r), 0.0)
    print(f"# t_r = {compute_tr(spec):.4f}; constant-force threshold {limit:.4f}", file=sys.stderr)
    print("t,safe_level,wstar,valid")
    for t in args.times:
        try:
            p = find_threshold(spec, t)
            print(f"{t:g},{safe_level(spec, t):.6f},{p.wstar:.6f},{str(p.valid).lower()}")
        except NoCrossingError:
            print(f"{t:g},{safe_level(spec, t):.6f},nan,false")


if __name__ == "__main__":
    main()
