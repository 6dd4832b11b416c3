"""Monte Carlo estimates against analytic values on the Gamma law."""

import argparse
import time

from bequest.actuarial import ProblemSpec
from bequest.mortality import GammaTwo
from bequest.montecarlo import Deferred, FullUntilRuin, WaitUntilSafe, simulate
from bequest.strategies import eval_deferred, eval_full, eval_wait


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--delay", type=float, default=10.0, help="deferral for the deferred policy")
    args = ap.parse_args()
    spec = ProblemSpec(GammaTwo(0.05), 0.02)
    start = time.perf_counter()
    print("policy,w,t,analytic,estimate,stderr,z")
    for w, t in [(0.3, 0.0), (0.5, 20.0)]:
        tp = t + args.delay
        for policy, value in [
            (FullUntilRuin(), eval_full(spec, w, t).phi),
            (WaitUntilSafe(), eval_wait(spec, w, t).phi),
            (Deferred(tp), eval_deferred(spec, w, t, tp)),
        ]:
            res = simulate(spec, policy, w, t, args.n, args.seed)
            z = (res.estimate - value) / res.std_error
            print(f"{policy.name},{w},{t},{value:.6f},{res.estimate:.6f},{res.std_error:.6f},{z:+.2f}")
    print(f"# {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
