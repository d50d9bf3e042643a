"""Siciak extremal functions of the ball and the simplex, their Dini
derivatives, and pointwise Baran-inequality audits.

For both domains the argument fed to ``h`` is a real number ``1 + delta``
with ``delta >= 0``, and ``log h(1 + delta) = arccosh(1 + delta)``.  The
naive sum ``|z|^2 + |z.z - 1|`` cancels to ``1`` at real points, so
``delta`` is formed from the imaginary parts directly; this keeps
``V(x + i eps e_j) / eps`` accurate down to ``eps ~ 1e-6``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .lpscan import FactorField, factor_eval, polynomial_sup_norms
from .polycore import Poly


@dataclass(frozen=True)
class ExtremalDomain:
    tag: str  # "ball" or "simplex"
    d: int

    def __post_init__(self):
        if self.tag not in ("ball", "simplex"):
            raise ValueError(f"unknown domain {self.tag!r}")
        if self.d < 1:
            raise ValueError("d must be at least 1")

    def contains_interior(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if self.tag == "ball":
            return bool(np.sum(x * x) < 1)
        return bool(np.all(x > 0) and np.sum(x) < 1)

    def to_json_obj(self):
        return {"tag": self.tag, "d": self.d}


def h_branch(zeta):
    """``zeta + sqrt(zeta^2 - 1)`` with the root of larger modulus.

    On the cut [-1, 1] both roots have modulus one and either is returned.
    """
    zeta = np.asarray(zeta, dtype=complex)
    root = np.sqrt(zeta * zeta - 1)
    plus, minus = zeta + root, zeta - root
    return np.where(np.abs(plus) >= np.abs(minus), plus, minus)


def _ball_delta(z: np.ndarray) -> np.ndarray:
    x, y = z.real, z.imag
    A = np.sum(np.abs(z) ** 2, axis=-1) - 1
    B = np.abs(np.sum(z * z, axis=-1) - 1)
    # B^2 - A^2 has the closed form below, free of the cancellation in A + B
    xx = np.sum(x * x, axis=-1)
    num = 4 * np.sum(y * y, axis=-1) * (1 - xx) + 4 * np.sum(x * y, axis=-1) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        quot = num / (B - A)
    return np.where(A < 0, quot, A + B)


def _abs_minus(z, a):
    """``|z| - a`` where ``|a| = |Re z|``; for a >= 0 this is ``(Im z)^2 / (|z| + a)``."""
    mod = np.abs(z)
    den = mod + a
    with np.errstate(invalid="ignore", divide="ignore"):
        quiet = np.where(den > 0, z.imag**2 / np.where(den > 0, den, 1.0), 0.0)
    return np.where(a >= 0, quiet, mod - a)


def _simplex_delta(z: np.ndarray) -> np.ndarray:
    x = z.real
    total = np.sum(_abs_minus(z, x), axis=-1)
    s = np.sum(z, axis=-1) - 1
    return total + _abs_minus(s, -s.real)


def _delta(dom: ExtremalDomain, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != dom.d:
        raise ValueError(f"points must have {dom.d} coordinates")
    delta = _ball_delta(z) if dom.tag == "ball" else _simplex_delta(z)
    return np.maximum(delta, 0.0)


def log_siciak(dom: ExtremalDomain, z):
    """``V_E(z) = log Phi_E(z)``."""
    delta = _delta(dom, z)
    v = np.log1p(delta + np.sqrt(delta * (2 + delta)))
    return 0.5 * v if dom.tag == "ball" else v


def siciak_value(dom: ExtremalDomain, z):
    """Ball: ``h(|z|^2 + |z.z - 1|)^{1/2}``, z.z unconjugated.
    Simplex: ``h(sum |z_i| + |sum z_i - 1|)``."""
    return np.exp(log_siciak(dom, z))


def dini_closed_form(dom: ExtremalDomain, i: int, x) -> float:
    x = np.asarray(x, dtype=float)
    if not 1 <= i <= dom.d:
        raise ValueError("axis out of range")
    if not dom.contains_interior(x):
        raise ValueError("x must be an interior point")
    xi = x[i - 1]
    if dom.tag == "ball":
        gap = 1 - float(np.sum(x * x))
        return math.sqrt(xi * xi + gap) / math.sqrt(gap)
    gap = 1 - float(np.sum(x))
    return math.sqrt(xi + gap) / (math.sqrt(xi) * math.sqrt(gap))


class DiniConvergenceError(RuntimeError):
    pass


DEFAULT_EPS = tuple(2.0**-k for k in range(8, 21))


def dini_numeric(dom: ExtremalDomain, i: int, x, eps_sequence=DEFAULT_EPS, depth: int = 2,
                 spread_tol: float = 1e-3) -> float:
    """Limit of ``V(x + i eps e_i) / eps`` as eps -> 0+.

    The quotients are even in eps, so they are extrapolated to zero in the
    variable ``eps^2`` by Neville's scheme of order ``depth``.  The spread
    of the last three extrapolants is the convergence check.
    """
    x = np.asarray(x, dtype=float)
    if not dom.contains_interior(x):
        raise ValueError("x must be an interior point")
    eps = np.asarray(eps_sequence, dtype=float)
    if len(eps) < depth + 3 or np.any(np.diff(eps) >= 0) or eps[-1] <= 0:
        raise ValueError(f"need at least {depth + 3} strictly decreasing positive eps")
    Z = np.tile(x.astype(complex), (len(eps), 1))
    Z[:, i - 1] += 1j * eps
    q = log_siciak(dom, Z) / eps
    t = eps**2
    table = q.copy()
    for j in range(1, depth + 1):
        table = (t[:-j] * table[1:] - t[j:] * table[:-1]) / (t[:-j] - t[j:])
    tail = table[-3:]
    value = float(tail[-1])
    spread = float(np.max(np.abs(tail - value)) / max(abs(value), 1e-300))
    if not np.isfinite(value) or spread > spread_tol:
        raise DiniConvergenceError(f"Dini quotients spread {spread:.2e} after extrapolation")
    return value


def reciprocity_residual(dom: ExtremalDomain, i: int, X) -> float:
    """``max |D_i^+ V(x) * factor(x) - 1|`` over the rows of X."""
    tag = "PhiI" if dom.tag == "ball" else "SimplexPhiI"
    fac = factor_eval(FactorField(tag, dom.d, i), X)
    dini = np.array([dini_closed_form(dom, i, x) for x in X])
    return float(np.max(np.abs(dini * fac - 1)))


def interior_sample(dom: ExtremalDomain, count: int, rng, margin: float = 0.0) -> np.ndarray:
    """Uniform points of the domain shrunk by ``margin`` (distance to the boundary)."""
    d = dom.d
    if dom.tag == "ball":
        g = rng.standard_normal((count, d))
        g /= np.linalg.norm(g, axis=1)[:, None]
        r = rng.random(count) ** (1 / d) * (1 - margin)
        return g * r[:, None]
    e = rng.exponential(size=(count, d + 1))
    bary = e / e.sum(axis=1)[:, None]
    scale = 1 - (d + 1) * margin
    return margin + scale * bary[:, :d]


def baran_audit(dom: ExtremalDomain, f: Poly, n: int, sample, sup_norm: float | None = None,
                resolution: int | None = None) -> dict:
    """Check ``|d_j f(x)| <= n D_j^+ V(x) (||f||^2 - f(x)^2)^{1/2} + slack`` on every
    sample point and axis, with ``slack = 1e-9 (1 + n ||f||)``.

    ``||f||`` comes from the grid-and-polish sup-norm routine, which can only
    under-estimate; the slack absorbs that.
    """
    if f.dim != dom.d:
        raise ValueError("dimension mismatch")
    if int(max(f.degree, 0)) > n:
        raise ValueError(f"deg f = {f.degree} exceeds n = {n}")
    X = np.atleast_2d(np.asarray(sample, dtype=float))
    if sup_norm is None:
        sup_norm = float(polynomial_sup_norms([f], dom.tag, resolution)[0])
    fx = f.eval_many(X)
    sup_norm = max(sup_norm, float(np.max(np.abs(fx))))
    slack = 1e-9 * (1 + n * sup_norm)
    room = np.sqrt(np.maximum(sup_norm**2 - fx**2, 0.0))
    worst = math.inf
    worst_at = None
    for j in range(1, dom.d + 1):
        lhs = np.abs(f.partial(j).eval_many(X))
        dini = np.array([dini_closed_form(dom, j, x) for x in X])
        margin = n * dini * room + slack - lhs
        k = int(np.argmin(margin))
        if margin[k] < worst:
            worst, worst_at = float(margin[k]), {"axis": j, "point": X[k].tolist(),
                                                 "lhs": float(lhs[k]), "rhs": float(n * dini[k] * room[k])}
    return {"n": n, "sup_norm": sup_norm, "slack": slack, "worst_margin": worst,
            "worst": worst_at, "passed": bool(worst >= 0)}


def baran_battery(dom: ExtremalDomain, n: int, count: int = 30, seed: int = 0) -> list[Poly]:
    """Seeded random polynomials of degree n in the orthogonal basis of the domain."""
    from .ballbasis import p_basis_upto
    from .lpscan import _random_polys, simplex_basis_poly

    rng = np.random.default_rng([seed, n])
    d = dom.d
    if dom.tag == "ball":
        basis = [e.poly() for e in p_basis_upto(d, n, 0.0)]
    else:
        kappa = (0.0,) * (d + 1)
        basis = [simplex_basis_poly(a, kappa) for m in range(n + 1)
                 for a in _indices(d, m)]
    return _random_polys(d, n, count, rng, basis)


def _indices(d: int, m: int):
    return sorted((a for a in itertools.product(range(m + 1), repeat=d) if sum(a) == m), reverse=True)


def baran_battery_audit(dom: ExtremalDomain, n: int, count: int = 30, samples: int = 1000,
                        seed: int = 0, resolution: int | None = None) -> dict:
    rng = np.random.default_rng([seed, n, 1])
    X = interior_sample(dom, samples, rng, margin=1e-3)
    polys = baran_battery(dom, n, count, seed)
    sups = polynomial_sup_norms(polys, dom.tag, resolution)
    reports = [baran_audit(dom, f, n, X, sup_norm=float(s)) for f, s in zip(polys, sups)]
    worst = min(reports, key=lambda r: r["worst_margin"])
    return {"domain": dom.to_json_obj(), "n": n, "count": count, "samples": samples, "seed": seed,
            "worst_margin": worst["worst_margin"], "worst": worst["worst"],
            "passed": all(r["passed"] for r in reports)}
