"""Sharp L^2 Bernstein constants on the ball as generalized eigenvalues.

Each Bernstein quadratic form S is assembled over Pi_n together with the Gram
matrix M of ``<f, g>_mu``; the sharp constant is the top eigenvalue of
``S v = lambda M v``.

All four forms are integrated exactly by ``ball_rule(d, mu, 2n + 2)``.  The
forms carrying ``1/|x|^2`` use per-ray quotients: ``<x, grad f>/r`` and
``D_ij f / r`` are polynomials of degree <= n - 1 in ``r`` along each ray, so
the radial integrand is a polynomial of degree <= 2n in ``r`` against
``r^{d-1}(1-r^2)^mu dr`` and the radial Gauss rule with ``n + 2`` points
(exact to ``2n + 3``) integrates it without error.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from .ballbasis import p_basis, p_basis_upto, q_basis
from .polycore import Poly, angular_derivative, coefficient_matrix, monomial_exponents, vandermonde
from .quadrature import ExactnessError, ball_rule

KINDS = ("Full", "RotOnly", "NewRadialOnly", "NewFull")


class AssemblyError(RuntimeError):
    pass


def predicted_constant(kind: str, d: int, mu: float, n: int) -> float:
    base = n * (n + 2 * mu + d)
    if kind in ("Full", "NewFull"):
        return float(base)
    if kind in ("RotOnly", "NewRadialOnly"):
        return float(base if n % 2 == 0 else base - d + 1)
    raise ValueError(f"unknown form kind {kind!r}")


@dataclass(frozen=True)
class QuadraticFormSpec:
    kind: str
    d: int
    mu: float
    n: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.d < 1 or self.n < 0:
            raise ValueError("need d >= 1 and n >= 0")
        if not self.mu > -1:
            raise ValueError("mu must exceed -1")

    @property
    def predicted(self) -> float:
        return predicted_constant(self.kind, self.d, self.mu, self.n)

    def default_rule(self):
        return ball_rule(self.d, self.mu, 2 * self.n + 2)


@dataclass
class EigenResult:
    spec: QuadraticFormSpec
    eigenvalues: np.ndarray  # descending
    top_vector: np.ndarray
    residual: float
    basis: list[Poly] = field(repr=False)
    M: np.ndarray = field(repr=False)

    @property
    def top(self) -> float:
        return float(self.eigenvalues[0])

    def extremizer(self) -> Poly:
        out = Poly.zero(self.spec.d)
        for c, b in zip(self.top_vector, self.basis):
            out = out + b * float(c)
        return out

    def m_norm(self) -> float:
        v = self.top_vector
        return float(v @ self.M @ v)


def _derivative_map(exps, op) -> np.ndarray:
    """Matrix of a linear polynomial operator on monomial coefficient vectors."""
    return coefficient_matrix([op(Poly.monomial(a)) for a in exps], exps)


def assembly_basis(spec: QuadraticFormSpec, basis: str = "P") -> list[Poly]:
    if basis == "P":
        return [e.poly() for e in p_basis_upto(spec.d, spec.n, spec.mu)]
    if basis == "monomial":
        return [Poly.monomial(a) for a in monomial_exponents(spec.d, spec.n)]
    raise ValueError(f"unknown assembly basis {basis!r}")


def assemble(spec: QuadraticFormSpec, rule=None, basis: str = "P"):
    """Return ``(S, M, polys)`` over the chosen basis of Pi_n."""
    d, n = spec.d, spec.n
    rule = spec.default_rule() if rule is None else rule
    if rule.domain != "ball":
        raise ValueError("assembly needs a ball rule")
    if rule.exact_degree is None or rule.exact_degree < 2 * n + 2:
        raise ExactnessError(f"rule exact to {rule.exact_degree}, need {2 * n + 2}")
    mu_rule = getattr(rule.weight_spec, "mu", None)
    if mu_rule is not None and not math.isclose(mu_rule, spec.mu):
        raise ValueError(f"rule built for mu={mu_rule}, form has mu={spec.mu}")

    polys = assembly_basis(spec, basis)
    exps = monomial_exponents(d, n)
    C = coefficient_matrix(polys, exps)  # monomials x basis
    V = vandermonde(rule.nodes, exps)
    w = rule.weights
    one_minus = 1 - rule.radii**2

    def gram(A, weight):
        return (A * weight[:, None]).T @ A

    vals = V @ C
    M = gram(vals, w)
    S = np.zeros_like(M)

    degs = np.array([sum(a) for a in exps])
    shifted = np.where(degs > 0, degs - 1, 0)
    Vq = vandermonde(rule.directions, exps) * rule.radii[:, None] ** shifted[None, :]
    Vq[:, degs == 0] = 0.0

    if spec.kind in ("Full", "RotOnly"):
        for i in range(1, d + 1):
            Di = _derivative_map(exps, lambda p, i=i: p.partial(i))
            S += gram(V @ (Di @ C), w * one_minus)
    if spec.kind in ("NewRadialOnly", "NewFull"):
        S += gram(Vq @ (degs[:, None] * C), w * one_minus)
    if spec.kind in ("Full", "NewFull"):
        for i in range(1, d + 1):
            for j in range(i + 1, d + 1):
                Dij = _derivative_map(exps, lambda p, i=i, j=j: angular_derivative(p, i, j))
                A = (V if spec.kind == "Full" else Vq) @ (Dij @ C)
                S += gram(A, w)
    return 0.5 * (S + S.T), 0.5 * (M + M.T), polys


def solve_generalized(S: np.ndarray, M: np.ndarray):
    """Eigenpairs of ``S v = lambda M v``, descending, with M-orthonormal vectors.

    M is first scaled to unit diagonal, then reduced by Cholesky; the dense
    symmetric problem is solved by LAPACK's symmetric eigensolver.
    """
    scale = 1 / np.sqrt(np.diag(M))
    Ms = M * np.outer(scale, scale)
    Ss = S * np.outer(scale, scale)
    try:
        L = linalg.cholesky(Ms, lower=True)
    except linalg.LinAlgError as exc:
        cond = np.linalg.cond(Ms)
        raise AssemblyError(f"Gram matrix not positive definite (condition {cond:.3e})") from exc
    Li_S = linalg.solve_triangular(L, Ss, lower=True)
    A = linalg.solve_triangular(L, Li_S.T, lower=True).T
    lam, Y = linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(lam)[::-1]
    lam, Y = lam[order], Y[:, order]
    X = linalg.solve_triangular(L.T, Y, lower=False) * scale[:, None]
    return lam, X


def sharp_constant(spec: QuadraticFormSpec, rule=None, basis: str = "P") -> EigenResult:
    if spec.n == 0:
        polys = assembly_basis(spec, basis)
        rule = spec.default_rule() if rule is None else rule
        vol = rule.integrate(np.ones(len(rule.weights)))
        v = np.array([1.0 / math.sqrt(vol)])
        return EigenResult(spec, np.array([0.0]), v, 0.0, polys, np.array([[vol]]))
    S, M, polys = assemble(spec, rule, basis)
    lam, X = solve_generalized(S, M)
    v = X[:, 0]
    v = v / math.sqrt(v @ M @ v)
    Mv = M @ v
    residual = float(np.linalg.norm(S @ v - lam[0] * Mv) / np.linalg.norm(Mv))
    return EigenResult(spec, lam, v, residual, polys, M)


def _fractions_in(f: Poly, polys: list[Poly], rule) -> float:
    fv = f.eval_many(rule.nodes)
    total = 0.0
    for p in polys:
        pv = p.eval_many(rule.nodes)
        total += rule.integrate(fv * pv) ** 2 / rule.integrate(pv * pv)
    return total


def classify_extremizer(res: EigenResult, rule=None) -> dict:
    """Where the top eigenvector lives: its V_n fraction and, for the radial kinds
    at d in {2, 3}, its distribution over the ``m`` blocks of the Q basis of V_n."""
    spec = res.spec
    d, n, mu = spec.d, spec.n, spec.mu
    if n == 0:
        return {"vn_fraction": 1.0}
    rule = ball_rule(d, mu, 2 * n) if rule is None else rule
    f = res.extremizer()
    fv = f.eval_many(rule.nodes)
    norm2 = rule.integrate(fv * fv)
    report = {"vn_fraction": _fractions_in(f, [e.poly() for e in p_basis(d, n, mu)], rule) / norm2}
    if spec.kind in ("RotOnly", "NewRadialOnly") and d in (2, 3):
        by_m = {}
        for e in q_basis(d, n, mu):
            by_m.setdefault(e.m, []).append(e.poly())
        fr = {m: _fractions_in(f, ps, rule) / norm2 for m, ps in by_m.items()}
        target = n // 2
        report["q_fraction_by_m"] = {str(m): v for m, v in sorted(fr.items())}
        report["target_m"] = target
        report["target_fraction"] = fr[target]
    return report


def problem_report(spec: QuadraticFormSpec, classify: bool = True) -> dict:
    res = sharp_constant(spec)
    pred = spec.predicted
    out = {
        "kind": spec.kind,
        "d": spec.d,
        "mu": spec.mu,
        "n": spec.n,
        "predicted": pred,
        "computed": res.top,
        "rel_err": abs(res.top - pred) / max(abs(pred), 1.0),
        "residual": res.residual,
    }
    if classify:
        out["extremizer_classification"] = classify_extremizer(res)
    return out


def grid_specs(kinds, dims, mus, degrees):
    return [QuadraticFormSpec(k, d, float(mu), n) for k in kinds for d in dims for mu in mus for n in degrees]


def reports_to_csv(reports: list[dict]) -> str:
    cols = ["kind", "d", "mu", "n", "predicted", "computed", "rel_err", "residual"]
    lines = [",".join(cols)]
    for r in reports:
        lines.append(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in cols))
    return "\n".join(lines) + "\n"


def spec_to_json(spec: QuadraticFormSpec) -> str:
    return json.dumps(asdict(spec))
