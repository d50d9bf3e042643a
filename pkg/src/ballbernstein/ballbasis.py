"""Explicit orthogonal bases of V_n(W_mu, B^d) and the projection onto V_n.

Two families are built as genuine polynomials in ``x``:

* :func:`p_alpha_poly` -- products of Gegenbauer polynomials in the
  successive coordinates, valid for every d;
* :func:`q_poly` -- a Jacobi polynomial in ``2|x|^2 - 1`` times a solid
  harmonic, for d in {2, 3}.

Solid harmonics are orthonormal for the normalized surface measure on
S^{d-1}.  For d = 3 the polar axis is ``x_3`` and the index ``ell`` runs
``m = 0``, then ``(1, cos), (1, sin), (2, cos), ...``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .classical1d import gegenbauer, jacobi
from .polycore import Poly, grlex_key
from .quadrature import ExactnessError


def harmonic_dim(d: int, k: int) -> int:
    if k < 0:
        return 0
    return math.comb(k + d - 1, k) - (math.comb(k + d - 3, k - 2) if k >= 2 else 0)


def vn_dim(d: int, n: int) -> int:
    return math.comb(n + d - 1, n)


@dataclass(frozen=True)
class PAlphaElement:
    alpha: tuple[int, ...]
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))
        if any(a < 0 for a in self.alpha):
            raise ValueError("alpha must be non-negative")
        if not self.mu > -1:
            raise ValueError("mu must exceed -1")

    @property
    def d(self) -> int:
        return len(self.alpha)

    @property
    def n(self) -> int:
        return sum(self.alpha)

    def lambdas(self) -> list[float]:
        d = self.d
        return [self.mu + sum(self.alpha[j:]) + (d - j + 1) / 2 for j in range(1, d + 1)]

    def poly(self) -> Poly:
        return p_alpha_poly(self)

    def to_json_obj(self):
        return {"type": "P", "alpha": list(self.alpha), "mu": self.mu}


@dataclass(frozen=True)
class QElement:
    n: int
    m: int
    ell: int
    d: int
    mu: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("the Q basis is available for d in {2, 3} only")
        if not 0 <= 2 * self.m <= self.n:
            raise ValueError("need 0 <= m <= n/2")
        if not 1 <= self.ell <= harmonic_dim(self.d, self.n - 2 * self.m):
            raise ValueError(f"ell out of range for harmonic degree {self.n - 2 * self.m}")
        if not self.mu > -1:
            raise ValueError("mu must exceed -1")

    def poly(self) -> Poly:
        return q_poly(self)

    def to_json_obj(self):
        return {"type": "Q", "n": self.n, "m": self.m, "ell": self.ell, "d": self.d, "mu": self.mu}


def element_from_json(obj):
    if obj["type"] == "P":
        return PAlphaElement(tuple(obj["alpha"]), obj["mu"])
    if obj["type"] == "Q":
        return QElement(obj["n"], obj["m"], obj["ell"], obj["d"], obj["mu"])
    raise ValueError(f"unknown element type {obj['type']!r}")


# P_alpha basis


def p_alpha_poly(e: PAlphaElement) -> Poly:
    return _p_alpha_cached(e.alpha, float(e.mu))


@lru_cache(maxsize=None)
def _p_alpha_cached(alpha: tuple[int, ...], mu: float) -> Poly:
    d = len(alpha)
    lams = PAlphaElement(alpha, mu).lambdas()
    out = Poly.const(d)
    partial_sq = Poly.zero(d)  # |x_{j-1}|^2
    for j in range(1, d + 1):
        a = alpha[j - 1]
        if a == 0:
            partial_sq = partial_sq + Poly.var(d, j) * Poly.var(d, j)
            continue
        c = _gegenbauer_or_chebyshev(a, lams[j - 1])
        one_minus = 1 - partial_sq
        pw = [Poly.const(d)]
        for _ in range(a // 2):
            pw.append(pw[-1] * one_minus)
        factor = Poly.zero(d)
        for (k,), ck in c.items():
            # x_j^k (1-|x_{j-1}|^2)^{(a-k)/2}; C_a has the parity of a
            factor = factor + pw[(a - k) // 2].mul_var(j, k) * ck
        out = out * factor
        partial_sq = partial_sq + Poly.var(d, j) * Poly.var(d, j)
    return out


def _gegenbauer_or_chebyshev(n: int, lam: float) -> Poly:
    """``C_n^lam``, or the Chebyshev ``T_n`` in the lam = 0 limit (mu = -1/2, last factor)."""
    if lam != 0:
        return gegenbauer(n, lam)
    t = Poly.var(1, 1)
    prev, cur = Poly.const(1), t
    for _ in range(n - 1):
        prev, cur = cur, t * cur * 2 - prev
    return cur if n else prev


def p_alpha_indices(d: int, n: int) -> list[tuple[int, ...]]:
    out = [a for a in itertools.product(range(n + 1), repeat=d) if sum(a) == n]
    return sorted(out, key=grlex_key)


def p_basis(d: int, n: int, mu: float) -> list[PAlphaElement]:
    """Elements of degree exactly n."""
    return [PAlphaElement(a, mu) for a in p_alpha_indices(d, n)]


def p_basis_upto(d: int, n: int, mu: float) -> list[PAlphaElement]:
    """Graded basis of Pi_n (degrees 0..n)."""
    return [e for j in range(n + 1) for e in p_basis(d, j, mu)]


# spherical harmonics


def _re_im_power(k: int) -> tuple[Poly, Poly]:
    """Real and imaginary parts of ``(x_1 + i x_2)^k`` in two variables' slots of d=2."""
    re, im = {}, {}
    for j in range(k + 1):
        c = math.comb(k, j)
        if j % 2 == 0:
            re[(k - j, j)] = c * (-1) ** (j // 2)
        else:
            im[(k - j, j)] = c * (-1) ** ((j - 1) // 2)
    return Poly(2, re), Poly(2, im)


def _embed(p: Poly, d: int) -> Poly:
    return Poly(d, {a + (0,) * (d - p.dim): c for a, c in p.items()})


def spherical_harmonic(d: int, k: int, ell: int) -> Poly:
    """Real solid harmonic of degree k, orthonormal on S^{d-1} (normalized measure)."""
    if d not in (2, 3):
        raise ValueError("spherical harmonics are implemented for d in {2, 3}")
    if not 1 <= ell <= harmonic_dim(d, k):
        raise ValueError(f"ell must be in 1..{harmonic_dim(d, k)} for degree {k}")
    return _harmonic_cached(d, k, ell)


@lru_cache(maxsize=None)
def _harmonic_cached(d: int, k: int, ell: int) -> Poly:
    if d == 2:
        if k == 0:
            return Poly.const(2)
        re, im = _re_im_power(k)
        return (re if ell == 1 else im) * math.sqrt(2)
    m = ell // 2
    use_sin = ell > 1 and ell % 2 == 1
    leg = gegenbauer(k, 0.5)
    for _ in range(m):
        leg = leg.partial(1)
    r2 = Poly.norm_squared(3)
    radial = Poly.zero(3)
    for (p,), c in leg.items():
        radial = radial + (r2 ** ((k - m - p) // 2)).mul_var(3, p) * c
    if m == 0:
        ang = Poly.const(3)
        norm2 = 1.0 / (2 * k + 1)
    else:
        re, im = _re_im_power(m)
        ang = _embed(im if use_sin else re, 3)
        norm2 = math.factorial(k + m) / (2 * (2 * k + 1) * math.factorial(k - m))
    return ang * radial * (1 / math.sqrt(norm2))


# Q basis


def q_poly(e: QElement) -> Poly:
    return _q_cached(e.n, e.m, e.ell, e.d, float(e.mu))


@lru_cache(maxsize=None)
def _q_cached(n, m, ell, d, mu):
    k = n - 2 * m
    jac = jacobi(m, mu, k + (d - 2) / 2)
    t = Poly.norm_squared(d) * 2 - 1
    return jac.substitute_univariate(t) * spherical_harmonic(d, k, ell)


def q_basis(d: int, n: int, mu: float) -> list[QElement]:
    return [QElement(n, m, ell, d, mu)
            for m in range(n // 2 + 1)
            for ell in range(1, harmonic_dim(d, n - 2 * m) + 1)]


# projection


def inner(f: Poly, g: Poly, rule) -> float:
    return rule.integrate(f.eval_many(rule.nodes) * g.eval_many(rule.nodes))


def project_onto_Vn(f: Poly, n: int, mu: float, rule, basis: str = "P") -> Poly:
    """``proj_n(W_mu; f)`` via quadrature inner products against an orthogonal basis of V_n."""
    if rule.exact_degree is None or rule.exact_degree < max(f.degree, 0) + n:
        raise ExactnessError(f"rule exact to {rule.exact_degree}, need {max(f.degree, 0) + n}")
    if rule.weight_spec is not None and getattr(rule.weight_spec, "mu", mu) != mu:
        raise ValueError("rule weight does not match mu")
    d = f.dim
    elems = p_basis(d, n, mu) if basis == "P" else q_basis(d, n, mu)
    fv = f.eval_many(rule.nodes)
    out = Poly.zero(d)
    for e in elems:
        p = e.poly()
        pv = p.eval_many(rule.nodes)
        out = out + p * (rule.integrate(fv * pv) / rule.integrate(pv * pv))
    return out
