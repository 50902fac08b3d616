"""Timing sweeps over l, a and c with log-log and per-user latency fits.

The default grids are scaled down from the full efficiency design so a
single-core host finishes in minutes; pass ``--full`` for the original
ranges (l 50..950, a 1000..20000, c 50..1000).
"""

import argparse
import json
from pathlib import Path

from dcalign.alignment import Method
from dcalign.bench import SweepSpec, incremental_latency, ols_loglog, run_sweep, write_sweep

SCALED = {
    "ell": dict(fixed={"a": 1000, "c": 50}, start=50, step=50, stop=400),
    "a": dict(fixed={"ell": 50, "c": 50}, start=1000, step=1000, stop=5000),
    "c": dict(fixed={"a": 1000, "ell": 50}, start=50, step=50, stop=300),
}
FULL = {
    "ell": dict(fixed={"a": 1000, "c": 50}, start=50, step=50, stop=950),
    "a": dict(fixed={"ell": 50, "c": 50}, start=1000, step=1000, stop=20000),
    "c": dict(fixed={"a": 1000, "ell": 50}, start=50, step=50, stop=1000),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", default="results/sweeps")
    ap.add_argument("--params", nargs="+", default=["ell", "a", "c"], choices=["ell", "a", "c"])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--full", action="store_true")
    args = ap.parse_args()

    grids = FULL if args.full else SCALED
    summary = {}
    for param in args.params:
        spec = SweepSpec(free_param=param, repeats=args.repeats, seed=args.seed, **grids[param])
        result = run_sweep(spec, threads=args.threads)
        write_sweep(result, Path(args.out) / param)
        fits = {}
        for method in Method:
            xs, ts = result.medians(method)
            if len(xs) < 3:
                continue
            fit = ols_loglog(xs, ts)
            fits[method.value] = {"alpha": fit.alpha, "kappa": fit.kappa, "r_squared": fit.r_squared}
            if param == "c":
                lin = incremental_latency(xs, ts)
                fits[method.value]["seconds_per_user"] = lin.slope
            print(f"{param:>3} {method.value:<9} alpha={fit.alpha:6.3f} R2={fit.r_squared:.3f}")
        summary[param] = fits
    Path(args.out).mkdir(parents=True, exist_ok=True)
    (Path(args.out) / "fits.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
