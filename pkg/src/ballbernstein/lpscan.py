"""Empirical L^p Bernstein scans with the new factors on the ball and simplex.

For a factor F and derivative order r the scanned quantity is
``||F^r D^r f||_p / ||f||_p`` maximized over a fixed battery of degree-n
polynomials; the growth exponent in n is read off a log-log fit.  Finite p
uses product Gauss rules refined until the norms settle; p = inf uses a
tensor grid over a parametrization of the closed domain followed by
coordinate-wise golden-section polishing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betaincinv

from .ballbasis import p_basis, p_basis_upto
from .classical1d import gegenbauer, jacobi
from .polycore import (Poly, ParityClass, angular_derivative, coefficient_matrix, compose_psi,
                       edge_derivative, eval_columns, monomial_exponents, parity_decompose, vandermonde)
from .quadrature import (BallClassical, SimplexJacobi, SymmetricGeneral, ball_product_rule,
                         ball_rule, simplex_rule)

BALL_TAGS = ("PhiI", "PhiIJ", "VarphiBall")
SIMPLEX_TAGS = ("SimplexPhiI", "SimplexPhiIJ")
SLOPE_MARGIN = 0.15
GRID_RESOLUTION = {1: 2000, 2: 200, 3: 48}


class NormConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class FactorField:
    tag: str
    dim: int
    i: int = 1
    j: int = 2

    def __post_init__(self):
        if self.tag not in BALL_TAGS + SIMPLEX_TAGS:
            raise ValueError(f"unknown factor {self.tag!r}")
        if not 1 <= self.i <= self.dim:
            raise ValueError("axis i out of range")
        if self.pairwise and not (1 <= self.j <= self.dim and self.i < self.j):
            raise ValueError("pairwise factors need 1 <= i < j <= d")

    @property
    def pairwise(self) -> bool:
        return self.tag in ("PhiIJ", "SimplexPhiIJ")

    @property
    def domain(self) -> str:
        return "ball" if self.tag in BALL_TAGS else "simplex"

    def label(self) -> str:
        return f"{self.tag}({self.i},{self.j})" if self.pairwise else f"{self.tag}({self.i})"

    def to_json_obj(self):
        return {"tag": self.tag, "dim": self.dim, "i": self.i, "j": self.j}


def _pts(x):
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x, x.ndim == 1


def factor_eval(F: FactorField, x):
    """Pointwise factor on the closed domain.

    Conventions at points where the closed-form quotient is 0/0:
    ``PhiI`` takes its limsup 1 (it is identically 1 on the slice x_i = 0);
    the simplex factors take their limit 0.  ``PhiIJ`` is infinite where
    x_i = x_j = 0.
    """
    X, scalar = _pts(x)
    i = F.i - 1
    if F.tag == "PhiI":
        gap = np.maximum(1 - np.sum(X * X, axis=1), 0.0)
        den = X[:, i] ** 2 + gap
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(den > 0, np.sqrt(gap) / np.sqrt(den), 1.0)
    elif F.tag == "VarphiBall":
        out = np.sqrt(np.maximum(1 - np.sum(X * X, axis=1), 0.0))
    elif F.tag == "PhiIJ":
        with np.errstate(divide="ignore"):
            out = 1 / np.hypot(X[:, i], X[:, F.j - 1])
    else:
        a = np.maximum(X[:, i], 0.0)
        b = np.maximum(X[:, F.j - 1], 0.0) if F.tag == "SimplexPhiIJ" \
            else np.maximum(1 - np.sum(X, axis=1), 0.0)
        s = a + b
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(s > 0, np.sqrt(a) * np.sqrt(b) / np.sqrt(s), 0.0)
    return float(out[0]) if scalar else out


def derivative_poly(F: FactorField, f: Poly, r: int) -> Poly:
    """The derivative paired with F: d_i^r, D_ij^r (ball pairs) or (d_i - d_j)^r."""
    g = f
    for _ in range(r):
        if F.tag == "PhiIJ":
            g = angular_derivative(g, F.i, F.j)
        elif F.tag == "SimplexPhiIJ":
            g = edge_derivative(g, F.i, F.j)
        else:
            g = g.partial(F.i)
    return g


def _combine(F: FactorField, r: int, X: np.ndarray, dvals: np.ndarray, limit_vals=None):
    """``F^r * dvals`` column-wise, with the PhiIJ singular line filled in."""
    if F.tag != "PhiIJ":
        return factor_eval(F, X)[:, None] ** r * dvals
    rho = np.hypot(X[:, F.i - 1], X[:, F.j - 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        out = dvals / rho[:, None] ** r
    sing = rho == 0
    if np.any(sing):
        out[sing] = limit_vals[sing] if (r == 1 and limit_vals is not None) else np.nan
    return out


def combined_eval(F: FactorField, f: Poly, r: int, x):
    """``F(x)^r (D^r f)(x)``.

    For PhiIJ with r = 1 the value is ``(x_i d_j f - x_j d_i f)/sqrt(x_i^2+x_j^2)``;
    on the line x_i = x_j = 0 it is filled with ``d_j f(x)``, the limit when
    the line is approached along +e_i.
    """
    X, scalar = _pts(x)
    dvals = derivative_poly(F, f, r).eval_many(X)[:, None]
    lim = f.partial(F.j).eval_many(X)[:, None] if F.tag == "PhiIJ" else None
    out = _combine(F, r, X, dvals, lim)[:, 0]
    return float(out[0]) if scalar else out


# batteries


def simplex_basis_poly(alpha, kappa) -> Poly:
    """Collapsed-coordinate Jacobi orthogonal polynomial of index alpha for W_kappa.

    Factor j is ``(1-|x^{j-1}|)^{alpha_j} P_{alpha_j}^{(A_j, kappa_j)}(2x_j/(1-|x^{j-1}|) - 1)``
    with ``A_j = 2|alpha^{j+1}| + kappa_{j+1} + ... + kappa_{d+1} + d - j``.
    """
    d = len(alpha)
    out = Poly.const(d)
    head = Poly.zero(d)  # x_1 + ... + x_{j-1}
    for j in range(1, d + 1):
        a = alpha[j - 1]
        A = 2 * sum(alpha[j:]) + sum(kappa[j:]) + d - j
        P = jacobi(a, A, kappa[j - 1])
        rest = 1 - head
        u = Poly.var(d, j) * 2 - rest
        factor = Poly.zero(d)
        upow = Poly.const(d)
        upows = [upow]
        for _ in range(a):
            upows.append(upows[-1] * u)
        rpows = [Poly.const(d)]
        for _ in range(a):
            rpows.append(rpows[-1] * rest)
        for (k,), c in P.items():
            factor = factor + upows[k] * rpows[a - k] * c
        out = out * factor
        head = head + Poly.var(d, j)
    return out


def _random_polys(d, n, count, rng, basis):
    out = []
    for _ in range(count):
        coef = rng.standard_normal(len(basis))
        p = Poly.zero(d)
        for c, b in zip(coef, basis):
            p = p + b * float(c)
        out.append(p / max(p.coeff_norm(), 1e-300))
    return out


def _battery_seed(seed: int, n: int) -> np.random.Generator:
    return np.random.default_rng([seed, n])


def ball_battery(d: int, n: int, weight, seed: int = 0, n_random: int = 20,
                 with_extremizers: bool = True) -> list[tuple[str, Poly]]:
    """Versioned ball battery: all P_alpha of degree n, seeded random polynomials
    in the orthogonal basis of Pi_n, tensor Gegenbauer products and, for
    classical weights, the L^2 spectral extremizers."""
    mu = weight.mu if isinstance(weight, BallClassical) else 0.0
    out = [(f"P{e.alpha}", e.poly()) for e in p_basis(d, n, mu)]
    basis = [e.poly() for e in p_basis_upto(d, n, mu)]
    rng = _battery_seed(seed, n)
    out += [(f"random{k}", p) for k, p in enumerate(_random_polys(d, n, n_random, rng, basis))]
    lam = mu + 1
    splits = {(n,) + (0,) * (d - 1), (0,) * (d - 1) + (n,), (n - n // 2, n // 2) + (0,) * (d - 2)}
    for a in sorted(splits):
        p = Poly.const(d)
        for i, ai in enumerate(a):
            c = gegenbauer(ai, lam)
            p = p * Poly(d, {tuple(k if m == i else 0 for m in range(d)): v for (k,), v in c.items()})
        out.append((f"gegenbauer{a}", p))
    if with_extremizers and isinstance(weight, BallClassical) and n >= 1:
        from .spectral import QuadraticFormSpec, sharp_constant

        for kind in ("Full", "RotOnly"):
            res = sharp_constant(QuadraticFormSpec(kind, d, mu, n))
            out.append((f"extremizer-{kind}", res.extremizer()))
    return out


def simplex_battery(d: int, n: int, weight: SimplexJacobi, seed: int = 0,
                    n_random: int = 20) -> list[tuple[str, Poly]]:
    kappa = weight.kappa
    idx = sorted((a for a in itertools.product(range(n + 1), repeat=d) if sum(a) == n), reverse=True)
    out = [(f"K{a}", simplex_basis_poly(a, kappa)) for a in idx]
    basis = [simplex_basis_poly(a, kappa) for m in range(n + 1)
             for a in itertools.product(range(m + 1), repeat=d) if sum(a) == m]
    rng = _battery_seed(seed, n)
    out += [(f"random{k}", p) for k, p in enumerate(_random_polys(d, n, n_random, rng, basis))]
    return out


# norms


@dataclass(frozen=True)
class ScanConfig:
    d: int
    weight: object
    factor: FactorField
    p: float = 2.0
    r: int = 1
    n_range: tuple = tuple(range(2, 17))
    seed: int = 0
    grid: int | None = None
    n_random: int = 20
    with_extremizers: bool = True
    level: int | None = None

    def __post_init__(self):
        if self.p not in (1.0, 2.0, 4.0, math.inf):
            raise ValueError("p must be one of 1, 2, 4, inf")
        if self.r < 1:
            raise ValueError("r must be at least 1")
        if self.factor.dim != self.d:
            raise ValueError("factor dimension mismatch")
        dom = self.domain
        if dom == "ball" and not isinstance(self.weight, (BallClassical, SymmetricGeneral)):
            raise TypeError("ball factors need a ball weight")
        if dom == "simplex" and not isinstance(self.weight, SimplexJacobi):
            raise TypeError("simplex factors need a Jacobi simplex weight")

    @property
    def domain(self) -> str:
        return self.factor.domain

    def grid_resolution(self) -> int:
        if self.grid is not None:
            return self.grid
        return GRID_RESOLUTION.get(self.d, 20)

    def to_json_obj(self):
        return {"d": self.d, "domain": self.domain, "weight": self.weight.to_json_obj(),
                "factor": self.factor.to_json_obj(), "p": "inf" if self.p == math.inf else self.p,
                "r": self.r, "n_range": list(self.n_range), "seed": self.seed,
                "grid": self.grid_resolution(), "n_random": self.n_random,
                "with_extremizers": self.with_extremizers}


def integration_rule(domain: str, weight, level: int):
    if domain == "ball":
        d = weight.dim
        if isinstance(weight, BallClassical):
            return ball_rule(d, weight, 2 * level)
        return ball_product_rule(d, weight, level)
    return simplex_rule(weight.dim, weight, 2 * level)


def _weighted_norms(vals: np.ndarray, w: np.ndarray, p: float) -> np.ndarray:
    return (w @ np.abs(vals) ** p) ** (1 / p)


class _Evaluator:
    """Vectorized evaluation of a battery under several factor fields at once.

    Columns are laid out block by block: one block of ``len(polys)`` columns
    per ``(factor, r)`` pair, then a final block with the plain values.
    """

    def __init__(self, fields, polys: list[Poly]):
        self.fields = list(fields)
        self.polys = list(polys)
        d = self.dim = polys[0].dim
        self.nm = len(polys)
        deg = max(int(max(p.degree, 0)) for p in polys)
        self.exps = monomial_exponents(d, deg)
        self.C = coefficient_matrix(polys, self.exps)
        self.blocks = []
        for F, r in self.fields:
            Cd = coefficient_matrix([derivative_poly(F, p, r) for p in polys], self.exps)
            Cl = coefficient_matrix([p.partial(F.j) for p in polys], self.exps) if F.tag == "PhiIJ" else None
            self.blocks.append((F, r, Cd, Cl))
        stack = [c for _, _, Cd, Cl in self.blocks for c in (Cd, Cl) if c is not None]
        self.C_all = np.concatenate(stack + [self.C], axis=1)

    @property
    def width(self) -> int:
        return (len(self.blocks) + 1) * self.nm

    def values(self, X):
        return eval_columns(X, self.exps, self.C)

    def all(self, X):
        Y = eval_columns(X, self.exps, self.C_all)
        nm, at = self.nm, 0
        out = np.empty((len(X), self.width))
        for b, (F, r, Cd, Cl) in enumerate(self.blocks):
            dv = Y[:, at:at + nm]
            at += nm
            lim = None
            if Cl is not None:
                lim = Y[:, at:at + nm]
                at += nm
            out[:, b * nm:(b + 1) * nm] = _combine(F, r, X, dv, lim)
        out[:, -nm:] = Y[:, at:]
        return out

    def column_pointwise(self, X):
        """Row c of X is evaluated for column c only."""
        V = vandermonde(X, self.exps)
        nm = self.nm
        out = np.empty(len(X))
        for b, (F, r, Cd, Cl) in enumerate(self.blocks):
            rows = slice(b * nm, (b + 1) * nm)
            dv = np.einsum("mk,km->m", V[rows], Cd)[:, None]
            lim = np.einsum("mk,km->m", V[rows], Cl)[:, None] if Cl is not None else None
            out[rows] = _combine(F, r, X[rows], dv, lim)[:, 0]
        rows = slice(len(self.blocks) * nm, (len(self.blocks) + 1) * nm)
        out[rows] = np.einsum("mk,km->m", V[rows], self.C)
        return out

    def split(self, flat: np.ndarray):
        nm = self.nm
        k = len(self.blocks)
        return flat[: k * nm].reshape(k, nm), flat[k * nm:]


def finite_p_norms(ev: _Evaluator, domain: str, weight, p: float, level: int,
                   tol: float = 1e-3, max_doublings: int = 3):
    """Numerator norms (one row per field) and denominator norms.

    Even integer p integrates the smooth integrands with product rules,
    doubling the resolution until the relative change is at most ``tol``;
    other p go through :func:`adaptive_norms` so the kinks of ``|g|^p`` are
    resolved.
    """
    if not (float(p).is_integer() and int(p) % 2 == 0):
        return adaptive_norms(ev, domain, weight, p, tol=tol)
    prev = None
    change = math.inf
    for _ in range(max_doublings + 1):
        rule = integration_rule(domain, weight, level)
        flat = _weighted_norms(ev.all(rule.nodes), rule.weights, p)
        if prev is not None:
            floor = 1e-12 * np.max(flat[-ev.nm:])
            change = float(np.max(np.abs(flat - prev) / np.maximum(flat, floor)))
            if change <= tol:
                return ev.split(flat)
        prev = flat
        level *= 2
    raise NormConvergenceError(f"L^{p} norms moved by {change:.2e} > {tol:.0e} at level {level // 2}")


def _inv_beta(a: float, b: float, s: np.ndarray) -> np.ndarray:
    # cell nodes sit on a dyadic lattice per axis, so values repeat heavily
    u, back = np.unique(s, return_inverse=True)
    return betaincinv(a, b, u)[back]


def _measure_map(domain: str, weight, S: np.ndarray):
    """Map the unit cube onto the domain so that the reference measure becomes
    a constant multiple of ``ds``.

    Each coordinate is pushed through an inverse regularized incomplete beta
    function, which absorbs its Jacobi-type factor ``t^b (1-t)^a`` exactly:
    the squared radius and the sphere's polar angles for the ball, the
    collapsed coordinates for the simplex.  Returns ``(X, const, extra)``
    where ``extra`` is any weight left to multiply pointwise.
    """
    d = weight.dim
    S = np.clip(S, 0.0, 1.0)
    if domain == "simplex":
        kappa = weight.kappa
        X = np.empty_like(S)
        rem = np.ones(len(S))
        const = 1.0
        for k in range(d):
            b = sum(kappa[k + 1:]) + d - k - 1
            t = _inv_beta(kappa[k] + 1, b + 1, S[:, k])
            const *= beta_fn(kappa[k] + 1, b + 1)
            X[:, k] = rem * t
            rem = rem * (1 - t)
        return X, const, None
    mu = weight.mu if isinstance(weight, BallClassical) else 0.0
    u = _inv_beta(d / 2, mu + 1, S[:, 0])
    const = 0.5 * beta_fn(d / 2, mu + 1)
    radius = np.sqrt(u)
    dirs = np.ones((len(S), d))
    scale = np.ones(len(S))
    for k in range(d, 2, -1):
        h = (k - 1) / 2
        t = 2 * _inv_beta(h, h, S[:, d - k + 1]) - 1
        const *= 2 ** (k - 2) * beta_fn(h, h)
        col = d - k
        dirs[:, col] = scale * t
        scale = scale * np.sqrt(np.maximum(1 - t * t, 0.0))
    theta = 2 * np.pi * S[:, d - 1]
    const *= 2 * np.pi
    dirs[:, d - 2] = scale * np.cos(theta)
    dirs[:, d - 1] = scale * np.sin(theta)
    extra = None if isinstance(weight, BallClassical) else weight
    return radius[:, None] * dirs, const, extra


class _AdaptiveCells:
    """Batch-adaptive cubature on the unit cube for many integrands at once.

    Every cell carries a tensor Gauss-Legendre value and the sum over its
    2^d children; their difference is the cell's error estimate.  Each pass
    splits, in one vectorized batch, every cell whose normalized error
    exceeds its share of the budget.
    """

    def __init__(self, fun, d: int, q: int = 4, start: int = 4, chunk: int = 40000):
        self.fun, self.d, self.chunk = fun, d, chunk
        x, w = np.polynomial.legendre.leggauss(q)
        g = np.array(np.meshgrid(*[(x + 1) / 2] * d, indexing="ij")).reshape(d, -1).T
        self.ref_pts = g
        self.ref_w = np.prod(np.array(np.meshgrid(*[w / 2] * d, indexing="ij")).reshape(d, -1), axis=0)
        self.kids = np.array(list(itertools.product((0.0, 0.5), repeat=d)))
        ax = np.arange(start) / start
        self.lo = np.array(np.meshgrid(*[ax] * d, indexing="ij")).reshape(d, -1).T
        self.h = np.full(len(self.lo), 1.0 / start)
        self.coarse = self._rule(self.lo, self.h)
        self._finish()

    def _rule(self, lo, h):
        npts = len(self.ref_w)
        out = []
        step = max(1, self.chunk // npts)
        for k in range(0, len(lo), step):
            L, H = lo[k:k + step], h[k:k + step]
            pts = (L[:, None, :] + H[:, None, None] * self.ref_pts[None]).reshape(-1, self.d)
            vals = self.fun(pts).reshape(len(L), npts, -1)
            out.append(np.einsum("cpm,p->cm", vals, self.ref_w) * (H ** self.d)[:, None])
        return np.concatenate(out)

    def _finish(self):
        nk = len(self.kids)
        clo = (self.lo[:, None, :] + self.h[:, None, None] * self.kids[None]).reshape(-1, self.d)
        ch = np.repeat(self.h / 2, nk)
        self.child_vals = self._rule(clo, ch).reshape(len(self.lo), nk, -1)
        self.fine = self.child_vals.sum(axis=1)
        self.err = np.abs(self.fine - self.coarse)

    def totals(self):
        return self.fine.sum(axis=0), self.err.sum(axis=0)

    def refine_to(self, rtol: float, atol: float, max_cells: int = 400000, max_passes: int = 40):
        for _ in range(max_passes):
            total, err = self.totals()
            budget = rtol * np.abs(total) + atol
            if np.all(err <= budget):
                return True
            eta = np.max(self.err / budget[None, :], axis=1)
            split = eta > 1.0 / len(eta)
            if len(self.lo) + split.sum() * (len(self.kids) - 1) > max_cells:
                return False
            nk = len(self.kids)
            keep = ~split
            new_lo = (self.lo[split][:, None, :] + self.h[split][:, None, None] * self.kids[None]).reshape(-1, self.d)
            new_h = np.repeat(self.h[split] / 2, nk)
            new_coarse = self.child_vals[split].reshape(-1, self.child_vals.shape[2])
            self.lo = np.concatenate([self.lo[keep], new_lo])
            self.h = np.concatenate([self.h[keep], new_h])
            self.coarse = np.concatenate([self.coarse[keep], new_coarse])
            old_children = self.child_vals[keep]
            # only the newly created cells need their children evaluated
            m = len(new_lo)
            clo = (new_lo[:, None, :] + new_h[:, None, None] * self.kids[None]).reshape(-1, self.d)
            cv = self._rule(clo, np.repeat(new_h / 2, nk)).reshape(m, nk, -1)
            self.child_vals = np.concatenate([old_children, cv])
            self.fine = self.child_vals.sum(axis=1)
            self.err = np.abs(self.fine - self.coarse)
        return False


def adaptive_norms(ev: _Evaluator, domain: str, weight, p: float, tol: float = 1e-3):
    """Numerator and denominator L^p norms by batch-adaptive cubature.

    ``|g|^p`` has kinks along the zero set of g; cells straddling them are
    split until the estimated error is below ``2 tol``, then ``tol / 2``,
    then four times smaller at each further stage.  Refinement stops once
    two successive stages agree to ``tol`` (relative), which is the
    refinement check, and the finer stage is returned.  Running out of
    stages or cells raises NormConvergenceError.
    Each battery member is refined on its own cells, since the members'
    kink sets are unrelated and a shared mesh would resolve all of them for
    every member.
    """
    k = len(ev.blocks)
    num = np.empty((k, ev.nm))
    den = np.empty(ev.nm)
    for m, poly in enumerate(ev.polys):
        sub = _Evaluator(ev.fields, [poly])
        n_m, d_m = _adaptive_member(sub, domain, weight, p, tol)
        num[:, m] = n_m[:, 0]
        den[m] = d_m[0]
    return num, den


def _adaptive_member(ev: _Evaluator, domain: str, weight, p: float, tol: float, max_stages: int = 4):
    def integrand(S):
        X, const, extra = _measure_map(domain, weight, S)
        vals = ev.all(X)
        vals[np.isnan(vals)] = 0.0
        vals = np.abs(vals) ** p * const
        if extra is not None:
            vals = vals * extra(X)[:, None]
        return vals

    cells = _AdaptiveCells(integrand, ev.dim)
    scale = float(np.max(np.abs(cells.totals()[0])))
    atol = 1e-13 * max(scale, 1e-300)
    prev, change = None, math.inf
    for rt in tol * 2.0 ** np.arange(1, -2 * max_stages, -2):
        if not cells.refine_to(rt, atol):
            break
        cur = np.maximum(cells.totals()[0], 0.0) ** (1 / p)
        if prev is not None:
            floor = 1e-12 * np.max(cur[-ev.nm:])
            change = float(np.max(np.abs(prev - cur) / np.maximum(cur, floor)))
            if change <= tol:
                return ev.split(cur)
        prev = cur
    raise NormConvergenceError(f"L^{p} norms moved by {change:.2e} > {tol:.0e} under refinement "
                               f"(last target {rt:.0e})")


def domain_map(domain: str, d: int, T: np.ndarray) -> np.ndarray:
    """Map ``[0,1]^d`` onto the closed domain: polar coordinates for the ball,
    collapsed (Duffy) coordinates for the simplex."""
    T = np.atleast_2d(T)
    if domain == "simplex":
        X = np.empty_like(T)
        rem = np.ones(len(T))
        for k in range(d):
            X[:, k] = rem * T[:, k]
            rem = rem * (1 - T[:, k])
        return X
    r = T[:, 0]
    X = np.empty_like(T)
    s = r.copy()
    for k in range(d - 1):
        ang = np.pi * T[:, k + 1] * (2 if k == d - 2 else 1)
        if k == d - 2:
            X[:, k] = s * np.cos(ang)
            X[:, k + 1] = s * np.sin(ang)
        else:
            X[:, k] = s * np.cos(ang)
            s = s * np.sin(ang)
    if d == 1:
        X[:, 0] = 2 * r - 1
    return X


def _golden_polish(fun, T0: np.ndarray, h: float, sweeps: int = 2, tol: float = 1e-4):
    """Maximize ``fun`` (one value per row) by cyclic golden-section per coordinate."""
    g = (math.sqrt(5) - 1) / 2
    T = T0.copy()
    best = fun(T)
    iters = max(1, int(math.ceil(math.log(tol / 2) / math.log(g))))
    for _ in range(sweeps):
        for k in range(T.shape[1]):
            a = np.clip(T[:, k] - h, 0, 1)
            b = np.clip(T[:, k] + h, 0, 1)
            c, e = b - g * (b - a), a + g * (b - a)

            def at(v):
                U = T.copy()
                U[:, k] = v
                return fun(U)

            fc, fe = at(c), at(e)
            for _ in range(iters):
                left = fc > fe
                b = np.where(left, e, b)
                a = np.where(left, a, c)
                c_new = b - g * (b - a)
                e_new = a + g * (b - a)
                c, e = c_new, e_new
                fc, fe = at(c), at(e)
            for cand in (c, e, a, b):
                val = at(cand)
                better = val > best
                T[better, k] = cand[better]
                best = np.where(better, val, best)
    return best


def sup_norms(ev: _Evaluator, domain: str, d: int, resolution: int):
    """Grid maximum of every column of ``ev.all`` followed by golden-section
    polishing around each column's grid argmax.  Never exceeds the true sup."""
    axes = [np.linspace(0, 1, resolution)] * d
    T = np.array(np.meshgrid(*axes, indexing="ij")).reshape(d, -1).T
    best = np.full(ev.width, -np.inf)
    arg = np.zeros(ev.width, dtype=int)
    step = max(1, 2_000_000 // max(ev.width, 1))
    for k in range(0, len(T), step):
        vals = np.abs(ev.all(domain_map(domain, d, T[k:k + step])))
        vals = np.where(np.isnan(vals), -np.inf, vals)
        loc = np.argmax(vals, axis=0)
        v = vals[loc, np.arange(vals.shape[1])]
        better = v > best
        best[better] = v[better]
        arg[better] = loc[better] + k

    def fun(U):
        out = np.abs(ev.column_pointwise(domain_map(domain, d, U)))
        return np.where(np.isnan(out), -np.inf, out)

    polished = _golden_polish(fun, T[arg], h=1.0 / (resolution - 1))
    return ev.split(np.maximum(best, polished))


def polynomial_sup_norms(polys: list[Poly], domain: str, resolution: int | None = None) -> np.ndarray:
    """``max |f|`` over the closed domain for each polynomial, by grid and polish."""
    d = polys[0].dim
    resolution = resolution or GRID_RESOLUTION.get(d, 20)
    return sup_norms(_Evaluator([], polys), domain, d, resolution)[1]


def battery(config: ScanConfig, n: int):
    if config.domain == "ball":
        return ball_battery(config.d, n, config.weight, config.seed, config.n_random,
                            config.with_extremizers)
    return simplex_battery(config.d, n, config.weight, config.seed, config.n_random)


def _group_key(c: ScanConfig):
    return (c.domain, c.d, repr(c.weight), c.p, c.seed, c.n_random, c.with_extremizers,
            c.grid_resolution(), c.level)


def battery_ratios_many(configs: list[ScanConfig], n: int, members=None):
    """Per-config ratios over one shared battery; configs must share a group key."""
    keys = {_group_key(c) for c in configs}
    if len(keys) != 1:
        raise ValueError("configs do not share domain, weight, p and battery settings")
    c0 = configs[0]
    if members is None:
        members = battery(c0, n)
    names = [m[0] for m in members]
    polys = [m[1] for m in members]
    ev = _Evaluator([(c.factor, c.r) for c in configs], polys)
    if c0.p == math.inf:
        num, den = sup_norms(ev, c0.domain, c0.d, c0.grid_resolution())
    else:
        num, den = finite_p_norms(ev, c0.domain, c0.weight, c0.p, c0.level or (n + 4))
    return names, [num[k] / den for k in range(len(configs))]


def battery_ratios(config: ScanConfig, n: int, members=None):
    names, ratios = battery_ratios_many([config], n, members)
    return names, ratios[0]


def lp_ratio(config: ScanConfig, f: Poly) -> float:
    """``||F^r D^r f||_p / ||f||_p`` for a single polynomial."""
    n = int(max(f.degree, 0))
    _, ratios = battery_ratios(config, n, [("f", f)])
    return float(ratios[0])


@dataclass
class ScanReport:
    config: ScanConfig
    per_n: list = field(default_factory=list)
    slope: float = math.nan
    passed: bool | None = None

    def to_json_obj(self):
        return {"config": self.config.to_json_obj(), "per_n": self.per_n, "slope": self.slope,
                "threshold": self.config.r + SLOPE_MARGIN, "passed": self.passed}


def fit_slope(ns, values) -> float:
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)), 1)[0])


def scan_many(configs: list[ScanConfig], assess: bool = True) -> list[ScanReport]:
    """Run several scans, sharing batteries and integration across configs
    that differ only in factor and derivative order."""
    groups: dict = {}
    for k, c in enumerate(configs):
        groups.setdefault((_group_key(c), tuple(c.n_range)), []).append(k)
    reports = [ScanReport(c) for c in configs]
    for (_, n_range), idx in sorted(groups.items(), key=lambda kv: kv[1][0]):
        group = [configs[k] for k in idx]
        for n in n_range:
            names, ratios = battery_ratios_many(group, n)
            for k, rat in zip(idx, ratios):
                j = int(np.nanargmax(rat))
                reports[k].per_n.append({"n": int(n), "max_ratio": float(rat[j]), "argmax_member": names[j]})
    for rep in reports:
        rep.slope = fit_slope([e["n"] for e in rep.per_n], [e["max_ratio"] for e in rep.per_n])
        if assess:
            rep.passed = bool(rep.slope <= rep.config.r + SLOPE_MARGIN)
    return reports


def scan(config: ScanConfig, assess: bool = True) -> ScanReport:
    return scan_many([config], assess)[0]


def explore_dij_power(config: ScanConfig, r: int) -> ScanReport:
    """Scan of ``Phi_ij^r D_ij^r f``; exploratory, no pass/fail verdict.

    Near the plane x_i = x_j = 0 the field behaves like ``rho^{1-r}``, so
    its L^p norm is infinite once ``p (r - 1) >= 2`` and the cubature is
    slow below that.  Degrees whose norms fail to converge are recorded with
    ``max_ratio = inf`` and ``converged = False``; the slope is fitted to the
    finite entries only.
    """
    if r < 2:
        raise ValueError("explore_dij_power is for r >= 2")
    if config.factor.tag != "PhiIJ":
        raise ValueError("explore_dij_power needs a PhiIJ factor")
    cfg = ScanConfig(**{**config.__dict__, "r": r})
    rep = ScanReport(cfg)
    for n in cfg.n_range:
        try:
            names, rat = battery_ratios(cfg, n)
        except NormConvergenceError:
            rep.per_n.append({"n": int(n), "max_ratio": math.inf, "argmax_member": None, "converged": False})
            continue
        j = int(np.nanargmax(rat))
        rep.per_n.append({"n": int(n), "max_ratio": float(rat[j]), "argmax_member": names[j],
                          "converged": True})
    finite = [e for e in rep.per_n if math.isfinite(e["max_ratio"]) and e["max_ratio"] > 0]
    if len(finite) >= 2:
        rep.slope = fit_slope([e["n"] for e in finite], [e["max_ratio"] for e in finite])
    return rep


def standard_configs(p: float, d: int = 2, mu: float = 0.0) -> list[ScanConfig]:
    """The fixed verification set: on the ball PhiI with r = 1, 2 and PhiIJ
    with r = 1 under W_mu; on the simplex SimplexPhiI with r = 1, 2 and
    SimplexPhiIJ with r = 1 under kappa = (-1/2, ..., -1/2, 0)."""
    ball_w = BallClassical(d, mu)
    simp_w = SimplexJacobi(d, (-0.5,) * d + (0.0,))
    return [ScanConfig(d, ball_w, FactorField("PhiI", d, 1), p=p, r=1),
            ScanConfig(d, ball_w, FactorField("PhiI", d, 1), p=p, r=2),
            ScanConfig(d, ball_w, FactorField("PhiIJ", d, 1, 2), p=p, r=1),
            ScanConfig(d, simp_w, FactorField("SimplexPhiI", d, 1), p=p, r=1),
            ScanConfig(d, simp_w, FactorField("SimplexPhiI", d, 1), p=p, r=2),
            ScanConfig(d, simp_w, FactorField("SimplexPhiIJ", d, 1, 2), p=p, r=1)]


# structural checks


def rotation_derivative_complex_step(h, x, i: int, j: int, step: float = 1e-20) -> float:
    """``d/dt h(gamma(t))`` at t = 0 for the rotation in the (x_i, x_j) plane,
    by the complex step; ``h`` must accept complex points."""
    x = np.asarray(x, dtype=float)
    z = x.astype(complex)
    c, s = np.cosh(step), 1j * np.sinh(step)
    z[i - 1] = x[i - 1] * c - x[j - 1] * s
    z[j - 1] = x[i - 1] * s + x[j - 1] * c
    return float(np.imag(h(z)) / step)


def squared_field_identity_residual(f: Poly, i: int, j: int, x) -> float:
    """``|(Phi_ij D_ij)^2 f - Phi_ij^2 D_ij^2 f|`` at x, relative to ``1 + |rhs|``.

    The left side differentiates the non-polynomial field ``Phi_ij D_ij f``
    along the rotation curve by the complex step; the right side is
    coefficient-level.
    """
    dij = angular_derivative(f, i, j)

    def field_(z):
        return dij.eval_many(z[None, :])[0] / np.sqrt(z[i - 1] ** 2 + z[j - 1] ** 2)

    x = np.asarray(x, dtype=float)
    phi = 1 / math.hypot(x[i - 1], x[j - 1])
    lhs = phi * rotation_derivative_complex_step(field_, x, i, j)
    rhs = phi**2 * angular_derivative(dij, i, j).eval(x)
    return abs(lhs - rhs) / (1 + abs(rhs))


def transfer_ratio_pair(g: Poly, i: int, mu: float, p: float, level: int = 12):
    """Ball ratio of ``f = g(x_1^2, ..., x_d^2)`` for PhiI(i) next to the
    simplex ratio of ``g`` for SimplexPhiI(i) under the adapted weight, both
    with r = 1.  Since ``d_i f = 2 x_i (d_i g)(x^2)`` and
    ``phi_i(x^2) = x_i Phi_i(x)``, the first is exactly twice the second."""
    d = g.dim
    f = compose_psi(g)
    ball_w = BallClassical(d, mu)
    simp_w = SimplexJacobi(d, (-0.5,) * d + (mu,))
    br = ball_rule(d, ball_w, 4 * level)
    sr = simplex_rule(d, simp_w, 2 * level, method="pushforward")
    Fb = FactorField("PhiI", d, i)
    Fs = FactorField("SimplexPhiI", d, i)

    def ratio(F, h, rule):
        num = _weighted_norms(combined_eval(F, h, 1, rule.nodes)[:, None], rule.weights, p)
        den = _weighted_norms(h.eval_many(rule.nodes)[:, None], rule.weights, p)
        return float(num[0] / den[0])

    return ratio(Fb, f, br), ratio(Fs, g, sr)


def symmetrization_check(f: Poly, weight, p: float, level: int | None = None) -> list[dict]:
    """``||f_eps||_{L^p(W, B_+)}`` against ``||f||_{L^p(W, B)}`` for every parity class.

    ``|f_eps|`` is even in each variable and the rule is symmetric under the
    coordinate reflections, so the positive-orthant norm is the full-ball
    norm scaled by ``2^{-d/p}``.
    """
    d = f.dim
    level = level or int(max(f.degree, 0)) + 4
    rule = integration_rule("ball", weight, level)
    full = float(_weighted_norms(f.eval_many(rule.nodes)[:, None], rule.weights, p)[0])
    out = []
    for eps, fe in sorted(parity_decompose(f).items(), key=lambda kv: kv[0].epsilon):
        vals = fe.eval_many(rule.nodes)[:, None]
        part = float(_weighted_norms(vals, rule.weights, p)[0]) * 2 ** (-d / p)
        out.append({"epsilon": list(eps.epsilon), "orthant_norm": part, "full_norm": full,
                    "holds": part <= full * (1 + 1e-12)})
    return out


def parity_classes(d: int) -> list[ParityClass]:
    return ParityClass.all(d)
