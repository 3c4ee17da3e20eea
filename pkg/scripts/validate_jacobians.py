"""Finite-difference check of every analytic Jacobian, swept over sample spreads and seeds."""
import argparse
import time

from modalshape.jacobians import oracle_suite, oracle_thresholds
from modalshape.kinematics import QuadratureSpec, SegmentGeometry

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--trials", type=int, default=100)
p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
p.add_argument("--spreads", type=float, nargs="+", default=[0.25, 0.5, 0.75])
args = p.parse_args()

g, q = SegmentGeometry(), QuadratureSpec()
limits = oracle_thresholds()
print(f"{'spread':>6} {'seed':>4} " + " ".join(f"{k:>9}" for k in limits) + "   sec")
for spread in args.spreads:
    for seed in args.seeds:
        t0 = time.perf_counter()
        worst = oracle_suite(args.trials, g, q, seed=seed, spread=spread)
        flag = "" if all(worst[k] <= limits[k] for k in worst) else "  over limit"
        print(f"{spread:>6.2f} {seed:>4} " + " ".join(f"{worst[k]:>9.2e}" for k in limits)
              + f" {time.perf_counter() - t0:5.2f}{flag}")
