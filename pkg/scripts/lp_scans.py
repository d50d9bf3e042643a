"""Log-log growth slopes of the L^p Bernstein ratios for the standard factor set.

    python3 scripts/lp_scans.py --p 2 inf --out lp_scans.json
    python3 scripts/lp_scans.py --p 2 --explore-r 2 3

p = 1 uses adaptive cubature and takes several minutes on one core.
"""

import argparse
import json
import math
import time

from ballbernstein.lpscan import ScanConfig, explore_dij_power, scan_many, standard_configs, SLOPE_MARGIN


def p_value(text):
    return math.inf if text in ("inf", "infinity") else float(text)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", nargs="+", default=["2", "inf"])
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--mu", type=float, default=0.0)
    ap.add_argument("--n-max", type=int, default=16)
    ap.add_argument("--explore-r", type=int, nargs="*", default=[],
                    help="also run the exploratory PhiIJ^r D_ij^r scan for these r")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    results = []
    for p in map(p_value, args.p):
        t0 = time.perf_counter()
        configs = [ScanConfig(**{**c.__dict__, "n_range": tuple(range(2, args.n_max + 1))})
                   for c in standard_configs(p, args.d, args.mu)]
        for rep in scan_many(configs):
            c = rep.config
            verdict = "ok" if rep.passed else "ABOVE THRESHOLD"
            print(f"p={p:g} {c.domain:7s} {c.factor.label():18s} r={c.r}  slope {rep.slope:6.3f}"
                  f"  (<= {c.r + SLOPE_MARGIN:.2f}) {verdict}")
            results.append(rep.to_json_obj())
        print(f"  p={p:g} done in {time.perf_counter() - t0:.1f} s")
        for r in args.explore_r:
            base = next(c for c in configs if c.factor.tag == "PhiIJ")
            rep = explore_dij_power(base, r)
            bad = [e["n"] for e in rep.per_n if not e["converged"]]
            print(f"p={p:g} explore PhiIJ^{r} D_ij^{r}: slope {rep.slope:.3f}, unconverged n {bad}")
            results.append(rep.to_json_obj())

    if args.out:
        with open(args.out, "w") as fh:
            json.dump(results, fh, indent=2, default=str)


if __name__ == "__main__":
    main()
