"""The spectral operator D_mu on the ball and its decompositions.

Polynomial operators act on coefficients.  Quantities that carry negative
powers of ``r = |x|`` are evaluated along rays: with ``f(r xi) = sum_k r^k
f_k(xi)`` every quotient such as ``<x, grad f> / r`` becomes the polynomial
``sum_k k r^{k-1} f_k(xi)`` in ``r``, so nothing is ever divided by a small
number.
"""

from __future__ import annotations

import numpy as np

from .polycore import Poly, angular_derivative, euler
from .quadrature import ExactnessError


def apply_Dmu(f: Poly, mu: float, d: int | None = None) -> Poly:
    """``sum (1-x_i^2) d_i^2 f - 2 sum_{i<j} x_i x_j d_i d_j f - (d+2mu+1) <x, grad f>``."""
    d = f.dim if d is None else d
    if d != f.dim:
        raise ValueError("dimension mismatch")
    out = Poly.zero(d)
    first = [f.partial(i) for i in range(1, d + 1)]
    for i in range(1, d + 1):
        fii = first[i - 1].partial(i)
        out = out + fii - fii.mul_var(i, 2)
        for j in range(i + 1, d + 1):
            out = out - first[i - 1].partial(j).mul_var(i).mul_var(j) * 2
    return out - euler(f) * (d + 2 * mu + 1)


def apply_DS(f: Poly, d: int | None = None) -> Poly:
    """Spherical part ``sum_{i<j} D_{i,j}^2 f``."""
    d = f.dim if d is None else d
    out = Poly.zero(d)
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            out = out + angular_derivative(angular_derivative(f, i, j), i, j)
    return out


def apply_Drot(f: Poly, mu: float, d: int | None = None) -> Poly:
    """``W_mu^{-1} sum_i d_i (W_{mu+1} d_i f) = (1-|x|^2) Lap f - 2(mu+1) <x, grad f>``."""
    d = f.dim if d is None else d
    lap = f.laplacian()
    return lap - lap * Poly.norm_squared(d) - euler(f) * (2 * (mu + 1))


def dmu_eigenvalue(n: int, mu: float, d: int) -> float:
    return -n * (n + 2 * mu + d)


def drot_eigenvalue(n: int, m: int, mu: float, d: int) -> float:
    """Eigenvalue of D_mu^rot on Q_{l,m}^n."""
    k = n - 2 * m
    return -n * (n + 2 * mu + d) + k * (k + d - 2)


class RayEvaluator:
    """Evaluate ``r^shift * f(r xi)`` as ``sum_k r^{k+shift} f_k(xi)``.

    Homogeneous parts with ``k + shift < 0`` must vanish; they are rejected.
    """

    def __init__(self, f: Poly):
        self.f = f
        self.parts = f.homogeneous_parts()

    def __call__(self, radii, directions, shift: int = 0) -> np.ndarray:
        radii = np.asarray(radii, dtype=float)
        directions = np.atleast_2d(directions)
        out = np.zeros(len(radii))
        for k, fk in self.parts:
            if k + shift < 0:
                raise ValueError(f"homogeneous part of degree {k} is singular under r^{shift}")
            out += radii ** (k + shift) * fk.eval_many(directions)
        return out

    def at_point(self, x, shift: int = 0) -> float:
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        return float(self(np.array([r]), (x / r)[None, :], shift)[0])


def _polar(x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(x, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return r, x / r[:, None]


def eval_dec_rhs(f: Poly, mu: float, d: int, x) -> np.ndarray | float:
    """Right side of the radial/spherical decomposition of D_mu at ``x``.

    With ``g(r) = sum_k k r^k f_k(xi)`` (the Euler derivative along the ray),
    the radial term ``W_mu^{-1} r^{-d} r d/dr [r^{d-2} (1-r^2)^{mu+1} g]``
    expands to ``(1-r^2) sum_k (k^2 + (d-2) k) r^{k-2} f_k - 2(mu+1) sum_k k r^k f_k``;
    the spherical term is ``r^{-2} (D_S f)(x)``.
    """
    scalar = np.ndim(x) == 1
    r, xi = _polar(x)
    if np.any(r <= 0) or np.any(r >= 1):
        raise ValueError("x must satisfy 0 < |x| < 1")
    out = np.zeros(len(r))
    for k, fk in f.homogeneous_parts():
        if k == 0:
            continue
        ck = k * k + (d - 2) * k
        # the r^{k-2} pieces of both terms combine into ck f_k + D_S f_k, which
        # vanishes identically for k = 1, so no negative power is evaluated
        low = fk * ck + apply_DS(fk, d)
        if not low.is_zero():
            out += r ** (k - 2) * low.eval_many(xi)
        out -= (ck + 2 * (mu + 1) * k) * r**k * fk.eval_many(xi)
    return float(out[0]) if scalar else out


def ray_quotient(p: Poly, rule) -> np.ndarray:
    """``p(x) / |x|`` at the rule's nodes through the per-ray expansion."""
    return RayEvaluator(p)(rule.radii, rule.directions, shift=-1)


def bilinear_identity_residual(f: Poly, g: Poly, mu: float, d: int, rule) -> tuple[float, float]:
    """Residuals of the two integration-by-parts identities for ``-int D_mu f g W_mu``.

    The first pairs ``(1-|x|^2) d_i f d_i g`` with ``D_ij f D_ij g``; the second
    pairs ``(1-|x|^2) <x,grad f><x,grad g> / |x|^2`` with ``D_ij f D_ij g / |x|^2``.
    Each residual is ``|lhs - rhs| / (1 + |lhs|)``.
    """
    need = max(f.degree, 0) + max(g.degree, 0) + 2
    if rule.exact_degree is None or rule.exact_degree < need:
        raise ExactnessError(f"rule exact to {rule.exact_degree}, need {need}")
    X = rule.nodes
    one_minus = 1 - rule.radii**2
    lhs = -rule.integrate(apply_Dmu(f, mu, d).eval_many(X) * g.eval_many(X))

    rhs1 = 0.0
    for i in range(1, d + 1):
        rhs1 += rule.integrate(one_minus * f.partial(i).eval_many(X) * g.partial(i).eval_many(X))
    rhs2 = rule.integrate(one_minus * ray_quotient(euler(f), rule) * ray_quotient(euler(g), rule))
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            df = angular_derivative(f, i, j)
            dg = angular_derivative(g, i, j)
            rhs1 += rule.integrate(df.eval_many(X) * dg.eval_many(X))
            rhs2 += rule.integrate(ray_quotient(df, rule) * ray_quotient(dg, rule))
    scale = 1 + abs(lhs)
    return abs(lhs - rhs1) / scale, abs(lhs - rhs2) / scale


def dij_squared_expansion(f: Poly, i: int, j: int) -> Poly:
    """``x_i^2 d_j^2 f + x_j^2 d_i^2 f - 2 x_i x_j d_i d_j f - x_i d_i f - x_j d_j f``,
    the expanded square of the angular derivative."""
    fi, fj = f.partial(i), f.partial(j)
    return (fj.partial(j).mul_var(i, 2) + fi.partial(i).mul_var(j, 2)
            - fi.partial(j).mul_var(i).mul_var(j) * 2 - fi.mul_var(i) - fj.mul_var(j))


def residual_report(check: str, params: dict, residuals, points=None) -> dict:
    residuals = np.asarray(residuals, dtype=float)
    k = int(np.argmax(residuals)) if residuals.size else 0
    out = {"check": check, "params": params,
           "max_residual": float(residuals[k]) if residuals.size else 0.0, "argmax_point": None}
    if points is not None and residuals.size:
        pt = points[k]
        out["argmax_point"] = pt.tolist() if isinstance(pt, np.ndarray) else pt
    return out


def eigen_residual_sweep(d: int, mu: float, n_max: int, basis: str = "P") -> dict:
    """``||D_mu P + n(n+2mu+d) P|| / ||P||`` (coefficient norms) over a basis of V_n, n <= n_max."""
    from .ballbasis import p_basis, q_basis

    if basis == "Q" and d not in (2, 3):
        raise ValueError("the Q basis is available for d in {2, 3} only")
    res, labels = [], []
    for n in range(n_max + 1):
        elems = p_basis(d, n, mu) if basis == "P" else q_basis(d, n, mu)
        for e in elems:
            P = e.poly()
            r = apply_Dmu(P, mu, d) + P * (n * (n + 2 * mu + d))
            res.append(r.coeff_norm() / P.coeff_norm())
            labels.append(e.to_json_obj())
    return residual_report("eigen-equation", {"d": d, "mu": mu, "n_max": n_max, "basis": basis}, res, labels)


def decomposition_pointwise_sweep(f: Poly, mu: float, d: int, rng, count: int = 100,
                                  margin: float = 0.05) -> dict:
    """Relative gap between :func:`eval_dec_rhs` and ``D_mu f`` at random points
    with ``margin <= |x| <= 1 - margin``."""
    g = rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1)[:, None]
    X = g * rng.uniform(margin, 1 - margin, count)[:, None]
    lhs = apply_Dmu(f, mu, d).eval_many(X)
    rhs = eval_dec_rhs(f, mu, d, X)
    scale = 1 + np.max(np.abs(lhs))
    return residual_report("radial-spherical decomposition", {"d": d, "mu": mu, "deg": f.degree},
                           np.abs(lhs - rhs) / scale, X)
