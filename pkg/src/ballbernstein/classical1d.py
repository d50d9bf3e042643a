"""Gegenbauer and Jacobi polynomials of one variable.

Monomial coefficients are produced by running the three-term recurrences on
:class:`~ballbernstein.polycore.Poly` objects; the ``*_eval`` functions run
the same recurrences on numbers and are the accuracy reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .polycore import Poly


@dataclass(frozen=True)
class GegenbauerParam:
    lam: float

    def __post_init__(self):
        if not self.lam > -0.5:
            raise ValueError(f"Gegenbauer parameter must exceed -1/2, got {self.lam}")
        if self.lam == 0:
            raise ValueError("lambda = 0 (Chebyshev limit) is not supported")


@dataclass(frozen=True)
class JacobiParam:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > -1 and self.beta > -1):
            raise ValueError(f"Jacobi parameters must exceed -1, got ({self.alpha}, {self.beta})")


@lru_cache(maxsize=None)
def _gegenbauer_cached(n: int, lam: float) -> Poly:
    t = Poly.var(1, 1)
    prev, cur = Poly.const(1), t * (2 * lam)
    if n == 0:
        return prev
    for k in range(2, n + 1):
        prev, cur = cur, (t * cur * (2 * (k + lam - 1)) - prev * (k + 2 * lam - 2)) / k
    return cur


def gegenbauer(n: int, lam: float) -> Poly:
    """``C_n^lam`` as a univariate polynomial."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    GegenbauerParam(lam)
    return _gegenbauer_cached(int(n), float(lam))


def gegenbauer_eval(n: int, lam: float, t):
    GegenbauerParam(lam)
    t = np.asarray(t, dtype=float)
    prev, cur = np.ones_like(t), 2 * lam * t
    if n == 0:
        return prev
    for k in range(2, n + 1):
        prev, cur = cur, (2 * (k + lam - 1) * t * cur - (k + 2 * lam - 2) * prev) / k
    return cur


def _jacobi_coeffs(k: int, a: float, b: float):
    """Recurrence ``P_k = (A x + B) P_{k-1} - C P_{k-2}`` for k >= 2."""
    s = 2 * k + a + b
    den = 2 * k * (k + a + b) * (s - 2)
    A = (s - 1) * s * (s - 2) / den
    B = (s - 1) * (a * a - b * b) / den
    C = 2 * (k + a - 1) * (k + b - 1) * s / den
    return A, B, C


@lru_cache(maxsize=None)
def _jacobi_cached(n: int, a: float, b: float) -> Poly:
    x = Poly.var(1, 1)
    prev = Poly.const(1)
    if n == 0:
        return prev
    cur = x * ((a + b + 2) / 2) + (a - b) / 2
    for k in range(2, n + 1):
        A, B, C = _jacobi_coeffs(k, a, b)
        prev, cur = cur, (x * A + B) * cur - prev * C
    return cur


def jacobi(n: int, alpha: float, beta: float) -> Poly:
    """``P_n^{(alpha, beta)}`` normalized by ``P_n(1) = (alpha+1)_n / n!``."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    JacobiParam(alpha, beta)
    return _jacobi_cached(int(n), float(alpha), float(beta))


def jacobi_eval(n: int, alpha: float, beta: float, x):
    JacobiParam(alpha, beta)
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev
    cur = (alpha + beta + 2) / 2 * x + (alpha - beta) / 2
    for k in range(2, n + 1):
        A, B, C = _jacobi_coeffs(k, alpha, beta)
        prev, cur = cur, (A * x + B) * cur - C * prev
    return cur


def jacobi_endpoint(n: int, alpha: float) -> float:
    """``(alpha+1)(alpha+2)...(alpha+n) / n!``."""
    out = 1.0
    for k in range(1, n + 1):
        out *= (alpha + k) / k
    return out


def norm_squared_1d(kind: str, n: int, *params: float) -> float:
    """``int_{-1}^{1} p_n(t)^2 w(t) dt`` by a Gauss rule exact to degree 2n.

    ``kind='gegenbauer'`` takes ``lam`` and the weight ``(1-t^2)^(lam-1/2)``;
    ``kind='jacobi'`` takes ``alpha, beta`` and ``(1-t)^alpha (1+t)^beta``.
    """
    from .quadrature import gauss_jacobi

    if kind == "gegenbauer":
        (lam,) = params
        GegenbauerParam(lam)
        a = b = lam - 0.5
        vals = lambda t: gegenbauer_eval(n, lam, t)  # noqa: E731
    elif kind == "jacobi":
        a, b = params
        JacobiParam(a, b)
        vals = lambda t: jacobi_eval(n, a, b, t)  # noqa: E731
    else:
        raise ValueError(f"unknown family {kind!r}")
    t, w = gauss_jacobi(n + 1, a, b)
    return float(np.dot(w, vals(t) ** 2))
