"""Command-line entry point ``bbl``.

Exit codes: 0 every check passed, 1 a numeric check failed or a solver
broke down, 2 bad arguments.  Reports are deterministic (sorted keys,
shortest round-trip floats); the run manifest written next to a report
holds the timestamp and the exact argument vector, and ``bbl rerun``
replays it.
"""

from __future__ import annotations

import os

_threads = os.environ.get("BBL_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import csv  # noqa: E402
import io  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402
from datetime import datetime, timezone  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

from . import __version__  # noqa: E402

EIGEN_TOL = 1e-9
SHARP_TOL = 1e-8
TRANSFER_TOL = 1e-10
RECIPROCITY_TOL = 1e-12
DINI_TOL = 1e-4

KIND_NAMES = {"full": "Full", "rot": "RotOnly", "new-radial": "NewRadialOnly", "new-full": "NewFull"}
BALL_FACTORS = {"phi-i": "PhiI", "phi-ij": "PhiIJ", "varphi": "VarphiBall"}
SIMPLEX_FACTORS = {"phi-i": "SimplexPhiI", "phi-ij": "SimplexPhiIJ"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# output


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render_json(report) -> str:
    return json.dumps(_to_jsonable(report), indent=2, sort_keys=True) + "\n"


def render_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])
    return buf.getvalue()


def _table(rows: list[dict], columns: list[str]) -> str:
    def fmt(v):
        return f"{v:.12g}" if isinstance(v, (float, np.floating)) else str(v)

    cells = [[fmt(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(x[k]) for x in cells)) if cells else len(c) for k, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(x.rjust(w) for x, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _emit(args, report: dict, rows: list[dict] | None = None, columns: list[str] | None = None):
    out = args.out
    as_csv = args.format == "csv" or (args.format is None and out is not None and out.endswith(".csv"))
    if as_csv and rows is None:
        raise UsageError(f"{args.command} has no tabular output; use JSON")
    text = render_csv(rows, columns) if as_csv else render_json(report)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        manifest = {
            "suite": args.command,
            "argv": args.argv,
            "params": {k: v for k, v in sorted(vars(args).items()) if k not in ("argv", "handler")},
            "seed": getattr(args, "seed", None),
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "outputs": [str(Path(out))],
        }
        Path(manifest_path(out)).write_text(render_json(manifest))
    if rows is not None and not args.quiet:
        sys.stderr.write(_table(rows, columns) + "\n")


def manifest_path(report_path: str) -> str:
    return str(report_path) + ".manifest.json"


# argument helpers


def _mu(value: str) -> float:
    mu = float(value)
    if not mu > -1:
        raise UsageError(f"mu must exceed -1, got {mu}")
    return mu


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _p_value(text: str) -> float:
    if text in ("inf", "infinity"):
        return math.inf
    p = float(text)
    if p not in (1.0, 2.0, 4.0):
        raise UsageError("p must be one of 1, 2, 4, inf")
    return p


def _check_dim(d: int, lo: int, hi: int):
    if not lo <= d <= hi:
        raise UsageError(f"d must be in {lo}..{hi}, got {d}")


# suites


def cmd_verify_eigen(args) -> int:
    from .operators import eigen_residual_sweep

    mu = _mu(args.mu)
    _check_dim(args.d, 1, 8)
    if args.n_max < 0:
        raise UsageError("n-max must be non-negative")
    if args.basis == "Q" and args.d not in (2, 3):
        raise UsageError("the Q basis needs d in {2, 3}")
    bases = ["P", "Q"] if args.basis == "both" and args.d in (2, 3) else \
        ["P"] if args.basis == "both" else [args.basis]
    sweeps = [eigen_residual_sweep(args.d, mu, args.n_max, b) for b in bases]
    passed = all(s["max_residual"] <= EIGEN_TOL for s in sweeps)
    _emit(args, {"suite": "verify-eigen", "tolerance": EIGEN_TOL, "sweeps": sweeps, "passed": passed})
    return 0 if passed else 1


def cmd_sharp_l2(args) -> int:
    from .spectral import AssemblyError, QuadraticFormSpec, problem_report

    mu = _mu(args.mu)
    _check_dim(args.d, 2, 4)
    if args.n_min < 1 or args.n_max < args.n_min:
        raise UsageError("need 1 <= n-min <= n-max")
    kind = KIND_NAMES[args.kind]
    rows = []
    try:
        for n in range(args.n_min, args.n_max + 1):
            rep = problem_report(QuadraticFormSpec(kind, args.d, mu, n), classify=args.classify)
            rep["passed"] = rep["rel_err"] <= SHARP_TOL
            rows.append(rep)
    except AssemblyError as exc:
        sys.stderr.write(f"sharp-l2: {exc}\n")
        return 1
    passed = all(r["passed"] for r in rows)
    report = {"suite": "sharp-l2", "kind": kind, "d": args.d, "mu": mu, "tolerance": SHARP_TOL,
              "rows": rows, "passed": passed}
    _emit(args, report, rows, ["kind", "d", "mu", "n", "predicted", "computed", "rel_err", "residual", "passed"])
    return 0 if passed else 1


def _scan_config(args):
    from .lpscan import FactorField, ScanConfig
    from .quadrature import BallClassical, SimplexJacobi

    d = args.d
    if args.domain == "ball":
        _check_dim(d, 2, 3)
        weight = BallClassical(d, _mu(args.mu))
        table = BALL_FACTORS
    else:
        _check_dim(d, 1, 3)
        kappa = _floats(args.kappa) if args.kappa else (-0.5,) * d + (0.0,)
        if len(kappa) != d + 1 or not all(k > -1 for k in kappa):
            raise UsageError("kappa needs d+1 entries, each > -1")
        weight = SimplexJacobi(d, kappa)
        table = SIMPLEX_FACTORS
    if args.factor not in table:
        raise UsageError(f"factor {args.factor!r} is not available on the {args.domain}")
    try:
        factor = FactorField(table[args.factor], d, args.i, args.j)
        return ScanConfig(d, weight, factor, p=_p_value(args.p), r=args.r,
                          n_range=tuple(range(args.n_min, args.n_max + 1)), seed=args.seed,
                          grid=args.grid, n_random=args.n_random)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_lp_scan(args) -> int:
    from .lpscan import NormConvergenceError, explore_dij_power, scan

    if args.n_min < 1 or args.n_max < args.n_min + 1:
        raise UsageError("need 1 <= n-min < n-max")
    config = _scan_config(args)
    exploratory = config.factor.tag == "PhiIJ" and config.r >= 2
    try:
        rep = explore_dij_power(config, config.r) if exploratory else scan(config)
    except NormConvergenceError as exc:
        sys.stderr.write(f"lp-scan: {exc}\n")
        return 1
    report = {"suite": "lp-scan", "exploratory": exploratory, **rep.to_json_obj()}
    _emit(args, report, rep.per_n, ["n", "max_ratio", "argmax_member"])
    if not args.quiet:
        sys.stderr.write(f"slope {rep.slope:.12g} (threshold {config.r + 0.15:.12g})\n")
    return 0 if exploratory or rep.passed else 1


def extremal_suite(domain: str, d: int, grid: int, seed: int, dini_points: int = 50,
                   baran_degrees=(3, 6), baran_count: int = 30, baran_samples: int = 1000) -> dict:
    from .extremal import (DiniConvergenceError, ExtremalDomain, baran_battery_audit, dini_closed_form,
                           dini_numeric, h_branch, interior_sample, log_siciak, reciprocity_residual)

    dom = ExtremalDomain(domain, d)
    rng = np.random.default_rng(seed)
    checks = {}
    X = interior_sample(dom, grid**d, rng)
    checks["reciprocity"] = {"max_residual": max(reciprocity_residual(dom, i, X) for i in range(1, d + 1)),
                             "tolerance": RECIPROCITY_TOL, "samples": len(X)}
    checks["real_domain_zero"] = {"max_residual": float(np.max(np.abs(log_siciak(dom, X)))),
                                  "tolerance": RECIPROCITY_TOL, "samples": len(X)}
    t = np.linspace(-4, 4, 4 * grid + 1)
    Z = (t[:, None] + 1j * t[None, :]).ravel()
    on_cut = np.linspace(-1, 1, grid + 1)
    checks["branch"] = {"min_modulus": float(np.min(np.abs(h_branch(Z)))),
                        "cut_deviation": float(np.max(np.abs(np.abs(h_branch(on_cut)) - 1))),
                        "tolerance": RECIPROCITY_TOL}
    Y = interior_sample(dom, dini_points, rng, margin=0.02)
    worst, worst_at = 0.0, None
    try:
        for x in Y:
            for i in range(1, d + 1):
                exact = dini_closed_form(dom, i, x)
                err = abs(dini_numeric(dom, i, x) / exact - 1)
                if err > worst:
                    worst, worst_at = err, {"axis": i, "point": x.tolist()}
        checks["dini_numeric"] = {"max_residual": worst, "argmax": worst_at, "tolerance": DINI_TOL}
    except DiniConvergenceError as exc:
        checks["dini_numeric"] = {"max_residual": math.inf, "error": str(exc), "tolerance": DINI_TOL}
    audits = [baran_battery_audit(dom, n, baran_count, baran_samples, seed) for n in baran_degrees]
    checks["baran"] = {"audits": audits, "passed": all(a["passed"] for a in audits)}
    passed = (checks["reciprocity"]["max_residual"] <= RECIPROCITY_TOL
              and checks["real_domain_zero"]["max_residual"] <= RECIPROCITY_TOL
              and checks["branch"]["min_modulus"] >= 1 - RECIPROCITY_TOL
              and checks["branch"]["cut_deviation"] <= RECIPROCITY_TOL
              and checks["dini_numeric"]["max_residual"] <= DINI_TOL
              and checks["baran"]["passed"])
    return {"suite": "extremal-check", "domain": dom.to_json_obj(), "seed": seed, "checks": checks,
            "passed": bool(passed)}


def cmd_extremal_check(args) -> int:
    _check_dim(args.d, 1, 3)
    if args.grid < 2:
        raise UsageError("grid must be at least 2")
    degrees = tuple(int(v) for v in _floats(args.baran_degrees)) if args.baran_degrees else ()
    report = extremal_suite(args.domain, args.d, args.grid, args.seed, baran_degrees=degrees,
                            baran_count=args.baran_count, baran_samples=args.baran_samples)
    _emit(args, report)
    return 0 if report["passed"] else 1


def transfer_suite(d: int, deg: int, mu: float, count: int, seed: int) -> dict:
    from .polycore import Poly, monomial_exponents
    from .quadrature import transfer_residual

    rng = np.random.default_rng([seed, d, deg])
    exps = monomial_exponents(d, deg)
    residuals = []
    for _ in range(count):
        f = Poly(d, {a: float(c) for a, c in zip(exps, rng.standard_normal(len(exps)))})
        residuals.append(transfer_residual(f, mu))
    worst = float(max(residuals))
    return {"suite": "transfer-check", "d": d, "deg": deg, "mu": mu, "count": count, "seed": seed,
            "max_residual": worst, "tolerance": TRANSFER_TOL, "passed": worst <= TRANSFER_TOL}


def cmd_transfer_check(args) -> int:
    _check_dim(args.d, 2, 4)
    if args.deg < 0:
        raise UsageError("deg must be non-negative")
    report = transfer_suite(args.d, args.deg, _mu(args.mu), args.count, args.seed)
    _emit(args, report)
    return 0 if report["passed"] else 1


def cmd_dump_rule(args) -> int:
    from .quadrature import (BallClassical, ExactnessError, MomentProblemError, SimplexJacobi, ball_rule,
                             simplex_rule, validate_moments)

    if args.degree < 0:
        raise UsageError("degree must be non-negative")
    if args.domain == "ball":
        _check_dim(args.d, 2, 4)
        weight = BallClassical(args.d, _mu(args.mu))
    else:
        _check_dim(args.d, 1, 4)
        kappa = _floats(args.kappa) if args.kappa else (0.0,) * (args.d + 1)
        if len(kappa) != args.d + 1 or not all(k > -1 for k in kappa):
            raise UsageError("kappa needs d+1 entries, each > -1")
        weight = SimplexJacobi(args.d, kappa)
    try:
        rule = ball_rule(args.d, weight, args.degree) if args.domain == "ball" \
            else simplex_rule(args.d, weight, args.degree)
        err = validate_moments(rule)
    except (ExactnessError, MomentProblemError) as exc:
        sys.stderr.write(f"dump-rule: {exc}\n")
        return 1
    report = {**rule.to_json_obj(), "max_moment_error": err}
    _emit(args, report)
    return 0 if err <= 1e-12 else 1


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    argv = list(manifest["argv"])
    original = manifest["outputs"][0]
    target = args.out or original
    if "--out" in argv:
        argv[argv.index("--out") + 1] = target
    before = Path(original).read_bytes() if Path(original).exists() else None
    code = main(argv)
    if code == 2:
        return 2
    same = before is not None and Path(target).read_bytes() == before
    sys.stderr.write(f"rerun: report {'identical' if same else 'DIFFERS'} ({target})\n")
    return code if same else 1


# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bbl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=True):
        p.add_argument("--out", default=None, help="report path (JSON, or CSV if it ends in .csv)")
        p.add_argument("--format", choices=["json", "csv"], default=None)
        p.add_argument("--quiet", action="store_true", help="no table on stderr")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("verify-eigen", help="eigen-equation residuals of the orthogonal bases")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--mu", default="0")
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--basis", choices=["P", "Q", "both"], default="both")
    common(p, seed=False)
    p.set_defaults(handler=cmd_verify_eigen)

    p = sub.add_parser("sharp-l2", help="sharp L2 Bernstein constants as generalized eigenvalues")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--mu", default="0")
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--kind", choices=sorted(KIND_NAMES), default="full")
    p.add_argument("--no-classify", dest="classify", action="store_false",
                   help="skip the extremizer classification")
    common(p, seed=False)
    p.set_defaults(handler=cmd_sharp_l2)

    p = sub.add_parser("lp-scan", help="empirical L^p Bernstein growth scan")
    p.add_argument("--domain", choices=["ball", "simplex"], default="ball")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--mu", default="0")
    p.add_argument("--kappa", default=None, help="comma-separated simplex exponents (d+1 of them)")
    p.add_argument("--p", default="2")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--factor", default="phi-i", choices=sorted(set(BALL_FACTORS) | set(SIMPLEX_FACTORS)))
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--j", type=int, default=2)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=16)
    p.add_argument("--grid", type=int, default=None, help="sup-norm grid points per axis")
    p.add_argument("--n-random", type=int, default=20)
    common(p)
    p.set_defaults(handler=cmd_lp_scan)

    p = sub.add_parser("extremal-check", help="Siciak extremal function and Baran inequality audits")
    p.add_argument("--domain", choices=["ball", "simplex"], default="ball")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--grid", type=int, default=100, help="grid**d samples for the pointwise checks")
    p.add_argument("--baran-degrees", default="3,6", help="comma-separated degrees; empty to skip")
    p.add_argument("--baran-count", type=int, default=30)
    p.add_argument("--baran-samples", type=int, default=1000)
    common(p)
    p.set_defaults(handler=cmd_extremal_check)

    p = sub.add_parser("transfer-check", help="ball/simplex transfer identity by quadrature")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--deg", type=int, default=6)
    p.add_argument("--mu", default="0")
    p.add_argument("--count", type=int, default=20)
    common(p)
    p.set_defaults(handler=cmd_transfer_check)

    p = sub.add_parser("dump-rule", help="write a validated quadrature rule as JSON")
    p.add_argument("--domain", choices=["ball", "simplex"], default="ball")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--mu", default="0")
    p.add_argument("--kappa", default=None)
    p.add_argument("--degree", type=int, default=8)
    common(p, seed=False)
    p.set_defaults(handler=cmd_dump_rule)

    p = sub.add_parser("rerun", help="replay a manifest and compare the report bytes")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="write the replayed report here instead")
    p.set_defaults(handler=cmd_rerun)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        args.argv = argv
        return args.handler(args)
    except UsageError as exc:
        sys.stderr.write(f"bbl: usage error: {exc}\n")
        return 2
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
