"""Sparse multivariate polynomials with exact coefficient-level calculus.

A :class:`Poly` stores a map from exponent tuples to float coefficients.
Differentiation, parity sorting and the substitution ``u_i -> x_i**2`` only
multiply existing coefficients by small integers, so they introduce no
rounding when the input coefficients are exactly representable.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

MultiIndex = tuple[int, ...]


def grlex_key(alpha: MultiIndex):
    """Graded lexicographic order: total degree first, then x_1 powers descending."""
    return (sum(alpha), tuple(-a for a in alpha))


class Poly:
    """Immutable polynomial in ``dim`` real variables."""

    __slots__ = ("dim", "_terms", "_degree")

    def __init__(self, dim: int, terms: Mapping[Sequence[int], float] | None = None):
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        self.dim = int(dim)
        clean: dict[MultiIndex, float] = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != dim or any(a < 0 for a in alpha):
                raise ValueError(f"bad multi-index {alpha} for dim {dim}")
            c = float(c)
            if c != 0.0:
                clean[alpha] = clean.get(alpha, 0.0) + c
        self._terms = {a: clean[a] for a in sorted(clean, key=grlex_key) if clean[a] != 0.0}
        self._degree = max((sum(a) for a in self._terms), default=-1)

    # construction helpers

    @classmethod
    def const(cls, dim: int, c: float = 1.0) -> "Poly":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def var(cls, dim: int, i: int) -> "Poly":
        """The coordinate ``x_i`` (1-based axis index)."""
        _check_axis(dim, i)
        alpha = [0] * dim
        alpha[i - 1] = 1
        return cls(dim, {tuple(alpha): 1.0})

    @classmethod
    def monomial(cls, alpha: Sequence[int], c: float = 1.0) -> "Poly":
        return cls(len(alpha), {tuple(alpha): c})

    @classmethod
    def norm_squared(cls, dim: int) -> "Poly":
        """``x_1**2 + ... + x_d**2``."""
        return cls(dim, {tuple(2 * (k == i) for k in range(dim)): 1.0 for i in range(dim)})

    @classmethod
    def zero(cls, dim: int) -> "Poly":
        return cls(dim)

    # basic protocol

    @property
    def terms(self) -> dict[MultiIndex, float]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    @property
    def degree(self) -> float:
        """Total degree; ``-inf`` for the zero polynomial."""
        return float("-inf") if self._degree < 0 else self._degree

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.dim == other.dim and self._terms == other._terms

    def __hash__(self):
        return hash((self.dim, tuple(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return f"Poly(dim={self.dim}, 0)"
        parts = []
        for alpha, c in self._terms.items():
            mono = "*".join(
                f"x{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(alpha) if a
            )
            parts.append(f"{c!r}" + (f"*{mono}" if mono else ""))
        return f"Poly(dim={self.dim}, " + " + ".join(parts) + ")"

    def coeff(self, alpha: Sequence[int]) -> float:
        return self._terms.get(tuple(alpha), 0.0)

    def coeff_norm(self) -> float:
        return float(np.sqrt(sum(c * c for c in self._terms.values())))

    # arithmetic

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return other
        return Poly.const(self.dim, float(other))

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for a, c in other._terms.items():
            out[a] = out.get(a, 0.0) + c
        return Poly(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.dim, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            s = float(other)
            return Poly(self.dim, {a: s * c for a, c in self._terms.items()})
        other = self._coerce(other)
        out: dict[MultiIndex, float] = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, 0.0) + ca * cb
        return Poly(self.dim, out)

    __rmul__ = __mul__

    def __truediv__(self, s: float):
        return self * (1.0 / float(s))

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Poly.const(self.dim)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # evaluation

    def __call__(self, x) -> float:
        return self.eval(x)

    def eval(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of length {self.dim}")
        total = 0.0
        for alpha, c in self._terms.items():
            term = c
            for xi, a in zip(x, alpha):
                if a:
                    term *= xi**a
            total += term
        return float(total)

    def eval_many(self, pts) -> np.ndarray:
        """Evaluate at an ``(N, dim)`` array of points (real or complex)."""
        pts = np.asarray(pts)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValueError(f"expected points of shape (N, {self.dim})")
        if not self._terms:
            return np.zeros(pts.shape[0], dtype=pts.dtype if np.iscomplexobj(pts) else float)
        deg = self._degree
        powers = _power_table(pts, deg)
        out = np.zeros(pts.shape[0], dtype=powers.dtype)
        for alpha, c in self._terms.items():
            term = np.full(pts.shape[0], c, dtype=powers.dtype)
            for i, a in enumerate(alpha):
                if a:
                    term = term * powers[a, :, i]
            out += term
        return out

    # calculus

    def partial(self, i: int) -> "Poly":
        _check_axis(self.dim, i)
        k = i - 1
        out = {}
        for alpha, c in self._terms.items():
            if alpha[k]:
                beta = list(alpha)
                beta[k] -= 1
                out[tuple(beta)] = c * alpha[k]
        return Poly(self.dim, out)

    def mul_var(self, i: int, power: int = 1) -> "Poly":
        """Multiply by ``x_i**power`` (shifts exponents, exact)."""
        _check_axis(self.dim, i)
        out = {}
        for alpha, c in self._terms.items():
            beta = list(alpha)
            beta[i - 1] += power
            out[tuple(beta)] = c
        return Poly(self.dim, out)

    def laplacian(self) -> "Poly":
        out = Poly.zero(self.dim)
        for i in range(1, self.dim + 1):
            out = out + self.partial(i).partial(i)
        return out

    def homogeneous_parts(self) -> list[tuple[int, "Poly"]]:
        groups: dict[int, dict[MultiIndex, float]] = {}
        for alpha, c in self._terms.items():
            groups.setdefault(sum(alpha), {})[alpha] = c
        return [(k, Poly(self.dim, groups[k])) for k in sorted(groups)]

    def substitute_univariate(self, q: "Poly") -> "Poly":
        """For a univariate ``self``, return ``self(q)`` by Horner's rule."""
        if self.dim != 1:
            raise ValueError("substitute_univariate needs a univariate polynomial")
        if self.is_zero():
            return Poly.zero(q.dim)
        out = Poly.zero(q.dim)
        for k in range(self._degree, -1, -1):
            out = out * q + self.coeff((k,))
        return out

    # serialization

    def to_json_obj(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [{"alpha": list(a), "c": c} for a, c in self._terms.items()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "Poly":
        return cls(int(obj["dim"]), {tuple(t["alpha"]): float(t["c"]) for t in obj["terms"]})

    @classmethod
    def from_json(cls, s: str) -> "Poly":
        return cls.from_json_obj(json.loads(s))


def _check_axis(dim: int, i: int):
    if not 1 <= i <= dim:
        raise ValueError(f"axis {i} out of range 1..{dim}")


def _power_table(pts: np.ndarray, deg: int) -> np.ndarray:
    dtype = complex if np.iscomplexobj(pts) else float
    table = np.empty((deg + 1,) + pts.shape, dtype=dtype)
    table[0] = 1.0
    for k in range(1, deg + 1):
        table[k] = table[k - 1] * pts
    return table


def partial(f: Poly, i: int) -> Poly:
    return f.partial(i)


def angular_derivative(f: Poly, i: int, j: int) -> Poly:
    """``D_{i,j} f = x_i d_j f - x_j d_i f`` for ``i < j``."""
    if not (1 <= i < j <= f.dim):
        raise ValueError(f"angular derivative needs 1 <= i < j <= {f.dim}, got ({i}, {j})")
    return f.partial(j).mul_var(i) - f.partial(i).mul_var(j)


def euler(f: Poly) -> Poly:
    """``<x, grad> f``: each homogeneous part of degree k is scaled by k."""
    return Poly(f.dim, {a: sum(a) * c for a, c in f.items()})


def edge_derivative(f: Poly, i: int, j: int) -> Poly:
    if i == j:
        raise ValueError("edge derivative needs i != j")
    return f.partial(i) - f.partial(j)


def laplacian(f: Poly) -> Poly:
    return f.laplacian()


def homogeneous_parts(f: Poly) -> list[tuple[int, Poly]]:
    return f.homogeneous_parts()


def eval_poly(f: Poly, x) -> float:
    return f.eval(x)


@dataclass(frozen=True)
class ParityClass:
    """Parity pattern ``eps`` in {0,1}^d; ``eps_i = 1`` means odd in ``x_i``."""

    epsilon: tuple[int, ...]

    def __post_init__(self):
        if any(e not in (0, 1) for e in self.epsilon):
            raise ValueError("parity bits must be 0 or 1")
        object.__setattr__(self, "epsilon", tuple(int(e) for e in self.epsilon))

    @property
    def dim(self) -> int:
        return len(self.epsilon)

    @property
    def J(self) -> tuple[int, ...]:
        """1-based indices of the odd coordinates."""
        return tuple(i + 1 for i, e in enumerate(self.epsilon) if e)

    def monomial(self) -> Poly:
        """``x_eps = prod_{j in J} x_j``."""
        return Poly.monomial(self.epsilon)

    @classmethod
    def all(cls, d: int) -> list["ParityClass"]:
        return [cls(e) for e in itertools.product((0, 1), repeat=d)]

    @classmethod
    def of(cls, alpha: Sequence[int]) -> "ParityClass":
        return cls(tuple(a % 2 for a in alpha))


def parity_project(f: Poly, eps: ParityClass) -> Poly:
    """Component of ``f`` whose monomials have parity pattern ``eps``.

    Equivalent to ``2^{-d} sum_tau (prod tau_i^{eps_i}) f(tau x)`` over sign
    vectors ``tau``, implemented as a monomial sort.
    """
    if eps.dim != f.dim:
        raise ValueError("parity class dimension mismatch")
    return Poly(f.dim, {a: c for a, c in f.items() if ParityClass.of(a) == eps})


def parity_decompose(f: Poly) -> dict[ParityClass, Poly]:
    return {eps: parity_project(f, eps) for eps in ParityClass.all(f.dim)}


def extract_even_core(f_eps: Poly, eps: ParityClass) -> Poly:
    """Return ``g`` with ``f_eps(x) = x_eps * g(x_1**2, ..., x_d**2)``."""
    if eps.dim != f_eps.dim:
        raise ValueError("parity class dimension mismatch")
    out = {}
    for alpha, c in f_eps.items():
        if ParityClass.of(alpha) != eps:
            raise ValueError(f"monomial {alpha} is not in parity class {eps.epsilon}")
        out[tuple((a - e) // 2 for a, e in zip(alpha, eps.epsilon))] = c
    return Poly(f_eps.dim, out)


def compose_psi(g: Poly) -> Poly:
    """``g(x_1**2, ..., x_d**2)``."""
    return Poly(g.dim, {tuple(2 * a for a in alpha): c for alpha, c in g.items()})


def monomial_exponents(d: int, n: int) -> list[MultiIndex]:
    """All exponents of total degree <= n in graded lexicographic order."""
    out = [a for a in itertools.product(range(n + 1), repeat=d) if sum(a) <= n]
    out.sort(key=grlex_key)
    assert len(out) == comb(n + d, d)
    return out


def coefficient_matrix(polys: Iterable[Poly], exponents: Sequence[MultiIndex]) -> np.ndarray:
    """Columns are the coefficient vectors of ``polys`` in the given monomial list."""
    index = {a: k for k, a in enumerate(exponents)}
    polys = list(polys)
    out = np.zeros((len(exponents), len(polys)))
    for col, p in enumerate(polys):
        for alpha, c in p.items():
            try:
                out[index[alpha], col] = c
            except KeyError:
                raise ValueError(f"monomial {alpha} not in the supplied exponent list") from None
    return out


def vandermonde(pts: np.ndarray, exponents: Sequence[MultiIndex]) -> np.ndarray:
    """``V[k, m] = pts[k] ** exponents[m]``; complex points give a complex matrix."""
    pts = np.asarray(pts)
    pts = pts.astype(complex if np.iscomplexobj(pts) else float)
    exps = np.asarray(exponents, dtype=int).reshape(len(exponents), -1)
    n, d = pts.shape[0], exps.shape[1]
    if d == 0 or not len(exps):
        return np.ones((n, len(exps)), dtype=pts.dtype)
    deg = int(exps.max())
    cols = np.ascontiguousarray(pts.T)
    # rows of contiguous per-axis power tables; the result is built transposed
    out = None
    for i in range(d):
        pw = np.empty((deg + 1, n), dtype=pts.dtype)
        pw[0] = 1.0
        for k in range(1, deg + 1):
            np.multiply(pw[k - 1], cols[i], out=pw[k])
        out = pw[exps[:, i]] if out is None else np.multiply(out, pw[exps[:, i]], out=out)
    return out.T


def eval_columns(pts: np.ndarray, exponents: Sequence[MultiIndex], C: np.ndarray) -> np.ndarray:
    """``vandermonde(pts, exponents) @ C`` without forming the Vandermonde matrix.

    Horner in the leading coordinates, a dense product against the powers of
    the last one; memory stays O(n (deg + k)) instead of O(n * len(exponents)).
    """
    pts = np.asarray(pts)
    pts = pts.astype(complex if np.iscomplexobj(pts) else float)
    exps = np.asarray(exponents, dtype=int).reshape(len(exponents), -1)
    C = np.asarray(C)
    n, d = pts.shape[0], exps.shape[1]
    dtype = np.result_type(pts.dtype, C.dtype)
    if d == 0 or not len(exps):
        return np.broadcast_to(C.sum(axis=0), (n, C.shape[1])).astype(dtype)
    cols = np.ascontiguousarray(pts.T)
    deg = int(exps[:, -1].max())
    last = np.empty((deg + 1, n), dtype=pts.dtype)
    last[0] = 1.0
    for k in range(1, deg + 1):
        np.multiply(last[k - 1], cols[-1], out=last[k])
    return _horner(cols, last, exps, C.astype(dtype), 0).T


def _horner(cols, last, exps, C, axis):
    # returns the (k, n) values of sum_m C[m] x^exps[m], exps restricted to axes >= axis
    if axis == len(cols) - 1:
        dense = np.zeros((len(last), C.shape[1]), dtype=C.dtype)
        np.add.at(dense, exps[:, axis], C)
        return dense.T @ last
    e = exps[:, axis]
    acc = None
    for a in range(int(e.max()), -1, -1):
        sel = e == a
        if acc is not None:
            acc *= cols[axis]
        if sel.any():
            part = _horner(cols, last, exps[sel], C[sel], axis + 1)
            acc = part if acc is None else acc + part
    return acc
