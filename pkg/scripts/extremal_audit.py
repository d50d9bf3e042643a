"""Siciak extremal function checks and Baran audits on the ball and the simplex.

    python3 scripts/extremal_audit.py --degrees 3 6 10
"""

import argparse
import time

import numpy as np

from ballbernstein.extremal import (ExtremalDomain, baran_battery_audit, dini_closed_form, dini_numeric,
                                    interior_sample, log_siciak, reciprocity_residual)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--degrees", type=int, nargs="+", default=[3, 6])
    ap.add_argument("--count", type=int, default=30)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    for tag in ("ball", "simplex"):
        for d in args.dims:
            t0 = time.perf_counter()
            dom = ExtremalDomain(tag, d)
            X = interior_sample(dom, 10_000, rng, margin=1e-6)
            recip = max(reciprocity_residual(dom, i, X) for i in range(1, d + 1))
            real = float(np.max(np.abs(log_siciak(dom, X))))
            dini = 0.0
            for x in interior_sample(dom, 50, rng, margin=0.01):
                for i in range(1, d + 1):
                    exact = dini_closed_form(dom, i, x)
                    dini = max(dini, abs(dini_numeric(dom, i, x) - exact) / exact)
            print(f"{tag} d={d}: reciprocity {recip:.2e}, V on domain {real:.2e}, Dini numeric {dini:.2e}")
            for n in args.degrees:
                rep = baran_battery_audit(dom, n, args.count, args.samples, args.seed)
                print(f"    Baran n={n}: worst margin {rep['worst_margin']:.3e}, passed {rep['passed']}")
            print(f"    ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
