"""Sharp L2 Bernstein constants over the (kind, d, mu, n) grid.

Writes one CSV row per cell and prints the worst relative error per kind.

    python3 scripts/sharp_constants_grid.py --out sharp_grid.csv
"""

import argparse
import time
from collections import defaultdict

from ballbernstein.spectral import KINDS, grid_specs, problem_report, reports_to_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="2,3")
    ap.add_argument("--mus", default="0,0.5,1,2.5")
    ap.add_argument("--n-max", type=int, default=8)
    ap.add_argument("--out", default="sharp_grid.csv")
    args = ap.parse_args()
    dims = [int(v) for v in args.dims.split(",")]
    mus = [float(v) for v in args.mus.split(",")]

    t0 = time.perf_counter()
    reports = [problem_report(s, classify=False) for s in grid_specs(KINDS, dims, mus, range(1, args.n_max + 1))]
    with open(args.out, "w") as fh:
        fh.write(reports_to_csv(reports))

    worst = defaultdict(float)
    off = defaultdict(list)
    for r in reports:
        worst[r["kind"]] = max(worst[r["kind"]], r["rel_err"])
        if r["rel_err"] > 1e-8:
            off[r["kind"]].append((r["d"], r["mu"], r["n"], r["computed"], r["predicted"]))
    for kind in KINDS:
        print(f"{kind:14s} worst rel err {worst[kind]:.3e}  cells above 1e-8: {len(off[kind])}")
        for d, mu, n, got, want in off[kind][:4]:
            print(f"    d={d} mu={mu} n={n}: computed {got:.10g}, predicted {want:.10g}")
    print(f"{len(reports)} cells in {time.perf_counter() - t0:.1f} s -> {args.out}")


if __name__ == "__main__":
    main()
