"""Per-sample time against photon number with m = n^2 for both sampler modes."""

import argparse
import json
from pathlib import Path

from gbsim.validation import bench_scaling


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[4, 6, 8, 10, 12])
    ap.add_argument("--modes", nargs="+", default=["exp-space", "poly-space"])
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for mode in args.modes:
        rep = bench_scaling(args.n, mode=mode, repetitions=args.reps, seed=args.seed)
        (out / f"bench_{mode}.json").write_text(rep.to_json())
        rows = [{"n": p.n, "m": p.m, "time_s": p.mean_wall_time, "ops": p.mean_ops} for p in rep.points]
        print(json.dumps({"mode": mode, "points": rows, "fitted_exponent": rep.fitted_exponent,
                          "fitted_ops_exponent": rep.fitted_ops_exponent, "bound_exponent": rep.bound_exponent}))


if __name__ == "__main__":
    main()
