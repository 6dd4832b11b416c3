"""Three-period discrete example: recursion, policy path and brute-force oracle."""

import argparse

from bequest.discrete import DiscreteMortality, DiscreteSpec, benefit, dp_policy_path, dp_value, enumerate_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, nargs="+", default=[0.3, 0.4, 1.0])
    ap.add_argument("-i", type=float, default=1.0)
    ap.add_argument("--theta", type=float, default=0.0)
    ap.add_argument("--w0", type=float, default=0.3)
    args = ap.parse_args()
    spec = DiscreteSpec(DiscreteMortality(tuple(args.q)), args.i, args.theta)

    print(f"value phi({args.w0}, 0) = {dp_value(spec, args.w0):.9g}")
    for row in dp_policy_path(spec, args.w0).rows:
        extra = ""
        if row.action == "buy" and spec.q_loaded(row.k) < 1:
            extra = f"  benefit {benefit(spec, row.wealth, row.k):.6f}"
        tie = " (tie)" if row.tie else ""
        print(f"k={row.k}  wealth {row.wealth:.6f}  {row.action}{tie}  value {row.value:.6f}{extra}")
    oracle = enumerate_oracle(spec, args.w0)
    print(f"oracle best {oracle.value:.9g}")
    for seq in oracle.argmax:
        print("  optimal sequence:", "-".join(seq))


if __name__ == "__main__":
    main()
