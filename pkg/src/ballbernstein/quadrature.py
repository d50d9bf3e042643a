"""Gauss rules for the ball and simplex measures.

The radial rule for ``r^{d-1} (1-r^2)^mu dr`` on (0, 1) is built in the
variable ``r`` from its exact moments: the Hankel moment matrix is factored
in extended precision (mpmath) to get the three-term recurrence, and the
nodes/weights then come from the Jacobi matrix (Golub-Welsch).  Building in
``r`` rather than ``r^2`` keeps odd powers of ``r`` exact, which the per-ray
quotients in :mod:`ballbernstein.operators` rely on.

Ball rules are radial x spherical products; simplex rules are either
collapsed-coordinate products of Gauss-Jacobi rules or the push-forward of a
ball rule through ``y -> (y_1^2, ..., y_d^2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .polycore import compose_psi, monomial_exponents, vandermonde

MAX_DIM = 4


class MomentProblemError(RuntimeError):
    """Moment matrix lost positive definiteness while building a Gauss rule."""

    def __init__(self, k: int, pivot):
        super().__init__(f"moment problem failed at k={k} (Cholesky pivot {pivot})")
        self.k = k


class ExactnessError(RuntimeError):
    pass


# weights


@dataclass(frozen=True)
class BallClassical:
    dim: int
    mu: float
    domain = "ball"

    def __post_init__(self):
        if not self.mu > -1:
            raise ValueError(f"mu must exceed -1, got {self.mu}")

    def __call__(self, x):
        x = np.atleast_2d(x)
        return np.maximum(1.0 - np.sum(x * x, axis=1), 0.0) ** self.mu

    def to_json_obj(self):
        return {"tag": "BallClassical", "dim": self.dim, "mu": self.mu}


@dataclass(frozen=True)
class SimplexJacobi:
    dim: int
    kappa: tuple[float, ...]
    domain = "simplex"

    def __post_init__(self):
        object.__setattr__(self, "kappa", tuple(float(k) for k in self.kappa))
        if len(self.kappa) != self.dim + 1:
            raise ValueError("kappa needs d+1 entries")
        if not all(k > -1 for k in self.kappa):
            raise ValueError(f"all kappa_i must exceed -1, got {self.kappa}")

    def __call__(self, x):
        x = np.atleast_2d(x)
        out = np.maximum(1.0 - x.sum(axis=1), 0.0) ** self.kappa[-1]
        for i in range(self.dim):
            out = out * x[:, i] ** self.kappa[i]
        return out

    def to_json_obj(self):
        return {"tag": "SimplexJacobi", "dim": self.dim, "kappa": list(self.kappa)}


@dataclass(frozen=True)
class SymmetricGeneral:
    """Ball weight ``W(x) = w(x_1^2, ..., x_d^2)`` for a positive callable ``w``."""

    dim: int
    w: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    name: str = "custom"
    domain = "ball"

    def __call__(self, x):
        x = np.atleast_2d(x)
        return np.asarray(self.w(x * x), dtype=float)

    def to_json_obj(self):
        return {"tag": "SymmetricGeneral", "dim": self.dim, "name": self.name}


@dataclass(frozen=True)
class SimplexGeneral:
    """Simplex weight ``W(u)`` given by a callable."""

    dim: int
    w: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    name: str = "custom"
    domain = "simplex"

    def __call__(self, u):
        return np.asarray(self.w(np.atleast_2d(u)), dtype=float)

    def to_json_obj(self):
        return {"tag": "SimplexGeneral", "dim": self.dim, "name": self.name}


WeightSpec = BallClassical | SimplexJacobi | SymmetricGeneral | SimplexGeneral


def weight_adapter(wb):
    """Ball weight ``w(x^2)`` to the simplex weight ``w(u) / sqrt(u_1 ... u_d)``."""
    d = wb.dim
    if isinstance(wb, BallClassical):
        return SimplexJacobi(d, (-0.5,) * d + (wb.mu,))
    if isinstance(wb, SymmetricGeneral):
        w = wb.w
        return SimplexGeneral(d, lambda u: w(u) / np.sqrt(np.prod(u, axis=1)), name=f"adapted:{wb.name}")
    raise TypeError(f"not a ball weight: {wb!r}")


def weight_adapter_inverse(ws):
    """Simplex weight ``W(u)`` to the ball weight ``W(x^2) * |x_1 ... x_d|``."""
    d = ws.dim
    if isinstance(ws, SimplexJacobi) and all(k == -0.5 for k in ws.kappa[:-1]):
        return BallClassical(d, ws.kappa[-1])
    if isinstance(ws, (SimplexJacobi, SimplexGeneral)):
        return SymmetricGeneral(d, lambda u: ws(u) * np.sqrt(np.prod(u, axis=1)), name=f"pulled-back:{ws!r}")
    raise TypeError(f"not a simplex weight: {ws!r}")


# rules


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    domain: str
    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: Optional[int]
    weight_spec: object = None
    radii: Optional[np.ndarray] = None
    directions: Optional[np.ndarray] = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape[0] != weights.shape[0]:
            raise ValueError("node/weight count mismatch")
        if not np.all(weights > 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.domain == "ball" and self.radii is None:
            r = np.linalg.norm(nodes, axis=1)
            object.__setattr__(self, "radii", r)
            object.__setattr__(self, "directions", nodes / r[:, None])

    def __len__(self):
        return len(self.weights)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values)))

    def integrate_poly(self, f) -> float:
        return self.integrate(f.eval_many(self.nodes))

    def to_json_obj(self) -> dict:
        return {
            "domain": self.domain,
            "dim": self.dim,
            "exact_degree": self.exact_degree,
            "weight": None if self.weight_spec is None else self.weight_spec.to_json_obj(),
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj) -> "QuadratureRule":
        spec = obj.get("weight")
        ws = None
        if spec and spec["tag"] == "BallClassical":
            ws = BallClassical(spec["dim"], spec["mu"])
        elif spec and spec["tag"] == "SimplexJacobi":
            ws = SimplexJacobi(spec["dim"], tuple(spec["kappa"]))
        return cls(obj["domain"], obj["dim"], np.array(obj["nodes"]), np.array(obj["weights"]),
                   obj["exact_degree"], ws)


# one-dimensional Gauss rules


def golub_welsch(alpha: np.ndarray, beta: np.ndarray, mass: float):
    """Nodes/weights from monic recurrence ``alpha_k`` and ``beta_k`` (k >= 1)."""
    alpha = np.asarray(alpha, dtype=float)
    off = np.sqrt(np.asarray(beta, dtype=float))
    if len(alpha) == 1:
        return alpha.copy(), np.array([mass])
    x, v = eigh_tridiagonal(alpha, off)
    w = mass * v[0] ** 2
    return x, w


def jacobi_recurrence(n: int, a: float, b: float):
    """Monic recurrence for ``(1-x)^a (1+x)^b`` on [-1, 1]; returns (alpha, beta[1:], mass)."""
    k = np.arange(n, dtype=float)
    s = 2 * k + a + b
    alpha = np.empty(n)
    alpha[0] = (b - a) / (a + b + 2)
    if n > 1:
        alpha[1:] = (b * b - a * a) / (s[1:] * (s[1:] + 2))
    beta = np.empty(max(n - 1, 0))
    if n > 1:
        beta[0] = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
        kk = k[2:]
        ss = s[2:]
        beta[1:] = 4 * kk * (kk + a) * (kk + b) * (kk + a + b) / (ss**2 * (ss + 1) * (ss - 1))
    mass = math.exp((a + b + 1) * math.log(2) + gammaln(a + 1) + gammaln(b + 1) - gammaln(a + b + 2))
    return alpha, beta, mass


@lru_cache(maxsize=None)
def _gauss_jacobi_cached(n: int, a: float, b: float):
    alpha, beta, mass = jacobi_recurrence(n, a, b)
    x, w = golub_welsch(alpha, beta, mass)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_jacobi(n: int, a: float, b: float):
    """n-point Gauss rule for ``(1-x)^a (1+x)^b`` on [-1, 1] (exact to degree 2n-1)."""
    if n < 1:
        raise ValueError("need at least one node")
    if not (a > -1 and b > -1):
        raise ValueError("Jacobi parameters must exceed -1")
    return _gauss_jacobi_cached(int(n), float(a), float(b))


def gauss_jacobi_01(n: int, a: float, b: float):
    """n-point Gauss rule for ``t^a (1-t)^b`` on [0, 1]."""
    x, w = gauss_jacobi(n, b, a)
    return (x + 1) / 2, w / 2 ** (a + b + 1)


def _hankel_recurrence(moments: Sequence, npts: int):
    """Monic recurrence from moments via a Cholesky factor of the Hankel matrix."""
    n = npts + 1
    R = [[mpmath.mpf(0)] * n for _ in range(n)]
    for i in range(n):
        s = moments[2 * i] - mpmath.fsum(R[k][i] ** 2 for k in range(i))
        if s <= 0:
            raise MomentProblemError(i, s)
        R[i][i] = mpmath.sqrt(s)
        for j in range(i + 1, n):
            R[i][j] = (moments[i + j] - mpmath.fsum(R[k][i] * R[k][j] for k in range(i))) / R[i][i]
    alpha, offdiag = [], []
    for j in range(npts):
        prev = R[j - 1][j] / R[j - 1][j - 1] if j else 0
        alpha.append(R[j][j + 1] / R[j][j] - prev)
        if j < npts - 1:
            offdiag.append(R[j + 1][j + 1] / R[j][j])
    return alpha, offdiag


@lru_cache(maxsize=None)
def _radial_cached(d: int, mu: float, npts: int):
    with mpmath.workdps(40 + 2 * npts):
        mu_mp = mpmath.mpf(mu)
        moments = [mpmath.beta(mpmath.mpf(k + d) / 2, mu_mp + 1) / 2 for k in range(2 * npts + 1)]
        alpha, off = _hankel_recurrence(moments, npts)
        alpha = np.array([float(a) for a in alpha])
        beta = np.array([float(b) ** 2 for b in off])
        mass = float(moments[0])
    r, w = golub_welsch(alpha, beta, mass)
    if not (r.min() > 0 and r.max() < 1):
        raise MomentProblemError(npts, "radial nodes escaped (0, 1)")
    r.setflags(write=False)
    w.setflags(write=False)
    return r, w


def radial_moment(d: int, mu: float, k: int) -> float:
    """``int_0^1 r^{k+d-1} (1-r^2)^mu dr = B((k+d)/2, mu+1) / 2``."""
    return float(mpmath.beta(mpmath.mpf(k + d) / 2, mpmath.mpf(mu) + 1) / 2)


def radial_rule(d: int, mu: float, npts: int) -> QuadratureRule:
    """Gauss rule for ``r^{d-1}(1-r^2)^mu dr`` on (0,1), exact to degree ``2 npts - 1`` in r."""
    if d < 1 or not mu > -1 or npts < 1:
        raise ValueError("need d >= 1, mu > -1, npts >= 1")
    r, w = _radial_cached(int(d), float(mu), int(npts))
    return QuadratureRule("interval", 1, r[:, None], w, 2 * npts - 1, BallClassical(d, mu))


@lru_cache(maxsize=None)
def _sphere_cached(d: int, degree: int):
    if d == 2:
        # a multiple of 4 with a half-step offset is symmetric under both
        # coordinate reflections and keeps every node off the axes
        m = 4 * ((degree + 4) // 4)
        theta = 2 * np.pi * (np.arange(m) + 0.5) / m
        return np.stack([np.cos(theta), np.sin(theta)], axis=1), np.full(m, 2 * np.pi / m)
    q = (degree + 2) // 2
    q += q % 2  # even count keeps nodes off the coordinate hyperplane t = 0
    t, wt = gauss_jacobi(q, (d - 3) / 2, (d - 3) / 2)
    inner, winner = _sphere_cached(d - 1, degree)
    s = np.sqrt(1 - t * t)
    dirs = np.concatenate([np.column_stack([np.full(len(inner), ti), si * inner]) for ti, si in zip(t, s)])
    weights = np.concatenate([wi * winner for wi in wt])
    return dirs, weights


def sphere_rule(d: int, degree: int):
    """Directions and weights on S^{d-1} (unnormalized measure), exact to ``degree``."""
    if not 2 <= d <= MAX_DIM:
        raise ValueError(f"sphere rule supports d in 2..{MAX_DIM}")
    return _sphere_cached(int(d), int(max(degree, 0)))


def sphere_area(d: int) -> float:
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def _product(d, r, wr, dirs, wd):
    radii = np.repeat(r, len(wd))
    directions = np.tile(dirs, (len(r), 1))
    weights = np.repeat(wr, len(wd)) * np.tile(wd, len(r))
    return radii, directions, weights


def ball_moment(alpha: Sequence[int], mu: float) -> float:
    """``int_B x^alpha (1-|x|^2)^mu dx`` in closed form."""
    if any(a % 2 for a in alpha):
        return 0.0
    d = len(alpha)
    half = [a // 2 for a in alpha]
    logv = sum(gammaln(h + 0.5) for h in half) + gammaln(mu + 1) - gammaln(sum(half) + d / 2 + mu + 1)
    return math.exp(logv)


def simplex_moment(beta: Sequence[int], kappa: Sequence[float]) -> float:
    """``int_Delta x^beta W_kappa(x) dx`` (Dirichlet integral)."""
    d = len(beta)
    logv = sum(gammaln(b + k + 1) for b, k in zip(beta, kappa[:d])) + gammaln(kappa[d] + 1)
    logv -= gammaln(sum(beta) + sum(kappa) + d + 1)
    return math.exp(logv)


def validate_moments(rule: QuadratureRule, degree: Optional[int] = None, tol: float = 1e-12) -> float:
    """Max relative moment error of ``rule`` against closed forms up to ``degree``."""
    degree = rule.exact_degree if degree is None else degree
    ws = rule.weight_spec
    exps = monomial_exponents(rule.dim, degree)
    V = vandermonde(rule.nodes, exps)
    got = rule.weights @ V
    if rule.domain == "ball":
        want = np.array([ball_moment(a, ws.mu) for a in exps])
        # odd moments vanish; scale them by the matching even magnitude
        scale = np.array([ball_moment(tuple(2 * ((x + 1) // 2) for x in a), ws.mu) for a in exps])
    elif rule.domain == "simplex":
        want = np.array([simplex_moment(a, ws.kappa) for a in exps])
        scale = np.abs(want)
    else:
        raise ValueError("moment validation needs a ball or simplex rule")
    err = float(np.max(np.abs(got - want) / scale))
    if err > tol:
        raise ExactnessError(f"moment error {err:.3e} exceeds {tol:.1e} up to degree {degree}")
    return err


def ball_rule(d: int, weight, exact_degree: int, validate: bool = False,
              refine_tol: float = 1e-8, max_refine: int = 6) -> QuadratureRule:
    """Product rule on B^d.

    For :class:`BallClassical` weights the rule integrates every polynomial of
    degree <= ``exact_degree`` exactly.  For :class:`SymmetricGeneral` weights
    no exactness is claimed: the resolution is doubled until a set of test
    integrals moves by at most ``refine_tol`` (relative).
    """
    if not 2 <= d <= MAX_DIM:
        raise ValueError(f"ball rules support d in 2..{MAX_DIM}, got {d}")
    if isinstance(weight, (int, float)):
        weight = BallClassical(d, float(weight))
    if isinstance(weight, BallClassical):
        npts = exact_degree // 2 + 1
        rr = radial_rule(d, weight.mu, npts)
        dirs, wd = sphere_rule(d, exact_degree)
        radii, directions, weights = _product(d, rr.nodes[:, 0], rr.weights, dirs, wd)
        rule = QuadratureRule("ball", d, radii[:, None] * directions, weights, exact_degree, weight,
                              radii, directions)
        if validate:
            validate_moments(rule)
        return rule
    if isinstance(weight, SymmetricGeneral):
        return _refined_general_ball(d, weight, exact_degree, refine_tol, max_refine)
    raise TypeError(f"unsupported ball weight {weight!r}")


def ball_product_rule(d, weight, level):
    """Unweighted product rule at resolution ``level`` times the weight at the nodes."""
    rr = radial_rule(d, 0.0, level)
    dirs, wd = sphere_rule(d, 2 * level)
    radii, directions, w = _product(d, rr.nodes[:, 0], rr.weights, dirs, wd)
    nodes = radii[:, None] * directions
    return QuadratureRule("ball", d, nodes, w * weight(nodes), None, weight, radii, directions)


def _refined_general_ball(d, weight, exact_degree, tol, max_refine):
    level = max(exact_degree // 2 + 1, 4)
    prev = None
    for _ in range(max_refine):
        rule = ball_product_rule(d, weight, level)
        x2 = rule.nodes**2
        tests = np.array([rule.integrate(np.ones(len(rule))), rule.integrate(x2[:, 0]),
                          rule.integrate(x2[:, 0] * x2[:, -1])])
        if prev is not None and np.max(np.abs(tests - prev) / np.abs(tests)) <= tol:
            return rule
        prev = tests
        level *= 2
    raise ExactnessError(f"general-weight ball rule did not converge to {tol:.1e}")


def simplex_rule(d: int, weight, exact_degree: int, method: str = "collapsed",
                 validate: bool = False) -> QuadratureRule:
    """Rule on the simplex for a Jacobi weight, exact to ``exact_degree``.

    ``method='collapsed'`` uses a product of Gauss-Jacobi rules in collapsed
    coordinates.  ``method='pushforward'`` maps a ball rule through
    ``y -> y^2``, using ``int_B F(y^2) dy = int_Delta F(x) dx / sqrt(x_1...x_d)``;
    it is exact only when every ``kappa_i + 1/2`` (i <= d) is a non-negative integer.
    """
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"simplex rules support d in 1..{MAX_DIM}, got {d}")
    if not isinstance(weight, SimplexJacobi):
        raise TypeError("simplex_rule needs a SimplexJacobi weight")
    kappa = weight.kappa
    if method == "collapsed":
        q = exact_degree // 2 + 1
        grids, wts = [], []
        for k in range(d):
            b = sum(kappa[k + 1:]) + (d - k - 1)
            t, w = gauss_jacobi_01(q, kappa[k], b)
            grids.append(t)
            wts.append(w)
        T = np.array(np.meshgrid(*grids, indexing="ij")).reshape(d, -1).T
        W = np.prod(np.array(np.meshgrid(*wts, indexing="ij")).reshape(d, -1), axis=0)
        X = np.empty_like(T)
        rem = np.ones(len(T))
        for k in range(d):
            X[:, k] = rem * T[:, k]
            rem = rem * (1 - T[:, k])
        rule = QuadratureRule("simplex", d, X, W, exact_degree, weight)
    elif method == "pushforward":
        extra = [k + 0.5 for k in kappa[:d]]
        if any(e < 0 or e != int(e) for e in extra):
            raise ValueError("pushforward is exact only for kappa_i in {-1/2, 1/2, 3/2, ...}")
        if d == 1:
            npts = exact_degree + int(extra[0]) + 1
            npts += npts % 2
            y, w = gauss_jacobi(npts, kappa[1], kappa[1])
            y = y[:, None]
        else:
            deg = 2 * exact_degree + 2 * int(sum(extra))
            br = ball_rule(d, BallClassical(d, kappa[d]), deg)
            y, w = br.nodes, br.weights
        factor = np.prod(np.abs(y) ** (2 * np.array(extra)), axis=1)
        rule = QuadratureRule("simplex", d, y**2, w * factor, exact_degree, weight)
    else:
        raise ValueError(f"unknown simplex rule method {method!r}")
    if validate:
        validate_moments(rule)
    return rule


def transfer_residual(f, mu: float = 0.0) -> float:
    """Relative gap between ``int_B f(y^2) W_mu(y) dy`` (ball rule) and
    ``int_Delta f(x) (1-|x|)^mu / sqrt(x_1...x_d) dx`` (collapsed simplex rule).

    The gap is scaled by ``int_B |f(y^2)| W_mu`` so that polynomials with a
    near-zero integral are not over-penalized.
    """
    d = f.dim
    deg = int(max(f.degree, 0))
    br = ball_rule(d, BallClassical(d, mu), 2 * deg)
    vals = compose_psi(f).eval_many(br.nodes)
    ball_side = br.integrate(vals)
    sr = simplex_rule(d, SimplexJacobi(d, (-0.5,) * d + (mu,)), deg)
    simplex_side = sr.integrate(f.eval_many(sr.nodes))
    scale = max(br.integrate(np.abs(vals)), np.finfo(float).tiny)
    return abs(ball_side - simplex_side) / scale


# distances


def distance(domain: str, x, y, tol: float = 1e-12) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if domain == "ball":
        for p in (x, y):
            if p @ p > 1 + tol:
                raise ValueError(f"point {p} is outside the unit ball")
        c = x @ y + math.sqrt(max(1 - x @ x, 0.0)) * math.sqrt(max(1 - y @ y, 0.0))
    elif domain == "simplex":
        for p in (x, y):
            if np.any(p < -tol) or p.sum() > 1 + tol:
                raise ValueError(f"point {p} is outside the simplex")
        c = np.sqrt(np.maximum(x, 0)) @ np.sqrt(np.maximum(y, 0))
        c += math.sqrt(max(1 - x.sum(), 0.0)) * math.sqrt(max(1 - y.sum(), 0.0))
    else:
        raise ValueError(f"unknown domain {domain!r}")
    return float(math.acos(min(1.0, max(-1.0, c))))
