import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballbernstein.polycore import (ParityClass, Poly, angular_derivative, coefficient_matrix, compose_psi,
                                    edge_derivative, eval_columns, euler, extract_even_core, homogeneous_parts, monomial_exponents,
                                    parity_decompose, parity_project, partial, vandermonde)

from conftest import polys

X1 = Poly.var(2, 1)
X2 = Poly.var(2, 2)


def test_partial_examples():
    assert partial(X1 * X1, 1) == X1 * 2
    assert partial(Poly.const(2, 7), 1).is_zero()
    assert partial(X1 * X2 * X2, 2) == X1 * X2 * 2
    with pytest.raises(ValueError):
        partial(X1, 3)


def test_angular_derivative_examples():
    assert angular_derivative(X2, 1, 2) == X1
    assert angular_derivative(X1 * X1 + X2 * X2, 1, 2).is_zero()
    assert angular_derivative(X1 * X2, 1, 2) == X1 * X1 - X2 * X2
    with pytest.raises(ValueError):
        angular_derivative(X1, 2, 2)
    with pytest.raises(ValueError):
        angular_derivative(X1, 1, 3)


def test_euler_examples():
    assert euler(X1 * X1 * X2) == X1 * X1 * X2 * 3
    assert euler(Poly.const(2, 5)).is_zero()
    assert euler(X1 + X2 * X2) == X1 + X2 * X2 * 2


def test_edge_derivative_examples():
    assert edge_derivative(X1 + X2, 1, 2).is_zero()
    assert edge_derivative(X1 * X1, 1, 2) == X1 * 2
    assert edge_derivative(X1 * X2, 1, 2) == X2 - X1
    with pytest.raises(ValueError):
        edge_derivative(X1, 1, 1)


def test_parity_examples():
    assert parity_project(X1 + X2, ParityClass((1, 0))) == X1
    assert parity_project(1 + X1 * X2, ParityClass((0, 0))) == Poly.const(2)
    f = X1**3 + X1 * X2 * X2 + X2
    f_eps = parity_project(f, ParityClass((1, 0)))
    assert f_eps == X1**3 + X1 * X2 * X2
    U1, U2 = Poly.var(2, 1), Poly.var(2, 2)
    assert extract_even_core(f_eps, ParityClass((1, 0))) == U1 + U2
    assert extract_even_core(Poly.const(2), ParityClass((0, 0))) == Poly.const(2)
    assert extract_even_core(X1 * X2, ParityClass((1, 1))) == Poly.const(2)
    with pytest.raises(ValueError):
        extract_even_core(X1 + X2, ParityClass((1, 0)))


def test_parity_class_index_set():
    eps = ParityClass((1, 0, 1))
    assert eps.J == (1, 3)
    assert eps.monomial() == Poly.monomial((1, 0, 1))
    assert len(ParityClass.all(3)) == 8


def test_compose_psi_examples():
    U1, U2 = Poly.var(2, 1), Poly.var(2, 2)
    assert compose_psi(U1) == X1 * X1
    assert compose_psi(1 - U1 - U2) == 1 - X1 * X1 - X2 * X2
    assert compose_psi(U1 * U2) == X1 * X1 * X2 * X2


def test_homogeneous_parts_examples():
    f = 1 + X1 + X1 * X2
    assert homogeneous_parts(f) == [(0, Poly.const(2)), (1, X1), (2, X1 * X2)]
    assert homogeneous_parts(Poly.zero(2)) == []
    assert homogeneous_parts(X1 * X1 + X2 * X2) == [(2, X1 * X1 + X2 * X2)]


def test_eval_examples():
    assert (X1 * X1 + X2 * X2).eval([0.6, 0.8]) == pytest.approx(1.0, abs=1e-15)
    assert Poly.const(2).eval([3.0, -1.0]) == 1.0
    assert (X1 * X2).eval([2.0, 3.0]) == 6.0


def test_zero_polynomial_degree_and_pruning():
    assert Poly.zero(3).degree == float("-inf")
    p = X1 - X1
    assert p.is_zero() and len(p) == 0


def test_json_round_trip_bit_exact():
    f = Poly(3, {(1, 0, 2): 0.1, (0, 0, 0): -1 / 3, (2, 1, 0): 1e-300})
    g = Poly.from_json(f.to_json())
    assert g == f
    obj = json.loads(f.to_json())
    assert [t["alpha"] for t in obj["terms"]] == [[0, 0, 0], [2, 1, 0], [1, 0, 2]]


def test_vandermonde_complex_points():
    f = X1 * X1 * X2 + 3
    Z = np.array([[1 + 2j, 0.5 - 1j], [0.3j, 2.0]])
    exps = monomial_exponents(2, 3)
    vals = vandermonde(Z, exps) @ coefficient_matrix([f], exps)[:, 0]
    np.testing.assert_allclose(vals, f.eval_many(Z), rtol=1e-15)
    assert np.iscomplexobj(vals)


@given(polys(), st.integers(0, 2**32 - 1))
def test_eval_columns_matches_vandermonde_product(f, seed):
    rng = np.random.default_rng(seed)
    exps = monomial_exponents(f.dim, int(max(f.degree, 0)) + 1)
    C = coefficient_matrix([f, f * 2 + 1], exps)
    X = rng.uniform(-1, 1, (17, f.dim))
    got = eval_columns(X, exps, C)
    np.testing.assert_allclose(got, vandermonde(X, exps) @ C, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(got[:, 0], f.eval_many(X), rtol=1e-12, atol=1e-12)


def test_eval_columns_complex_and_constant():
    f = X1 * X1 * X2 + 3
    Z = np.array([[1 + 2j, 0.5 - 1j], [0.3j, 2.0]])
    exps = monomial_exponents(2, 3)
    vals = eval_columns(Z, exps, coefficient_matrix([f], exps))[:, 0]
    np.testing.assert_allclose(vals, f.eval_many(Z), rtol=1e-15)
    assert np.iscomplexobj(vals)
    np.testing.assert_array_equal(eval_columns(np.zeros((4, 0)), [()], np.array([[2.0, -1.0]])),
                                  np.tile([2.0, -1.0], (4, 1)))


@given(polys(), polys())
def test_linearity_of_operators(f, g):
    if f.dim != g.dim:
        g = Poly(f.dim, {})
    d = f.dim
    for op in [lambda p: partial(p, 1), euler] + ([lambda p: angular_derivative(p, 1, 2)] if d > 1 else []):
        assert op(f + g * 3) == op(f) + op(g) * 3


@given(polys(dim=3))
def test_partials_commute(f):
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            assert f.partial(i).partial(j) == f.partial(j).partial(i)


@given(polys(), st.integers(0, 5))
def test_euler_on_homogeneous_parts(f, k):
    for deg, part in f.homogeneous_parts():
        assert euler(part) == part * deg


@given(polys())
def test_parity_partition(f):
    parts = parity_decompose(f)
    total = Poly.zero(f.dim)
    for fe in parts.values():
        total = total + fe
    assert total == f
    for eps, fe in parts.items():
        assert parity_project(fe, eps) == fe
        for other in parts:
            if other != eps:
                assert parity_project(fe, other).is_zero()


@given(polys())
def test_even_core_round_trip(f):
    for eps, fe in parity_decompose(f).items():
        g = extract_even_core(fe, eps)
        assert compose_psi(g) * eps.monomial() == fe
        if not fe.is_zero():
            assert g.degree <= (fe.degree - len(eps.J)) / 2


@given(st.integers(2, 4), st.integers(0, 5))
def test_angular_derivative_annihilates_radial(d, m):
    r2m = Poly.norm_squared(d) ** m
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            assert angular_derivative(r2m, i, j).is_zero()


@given(polys(dim=2))
def test_angular_derivative_preserves_degree_of_parts(f):
    for k, part in f.homogeneous_parts():
        out = angular_derivative(part, 1, 2)
        assert out.is_zero() or all(sum(a) == k for a, _ in out.items())


@given(polys(integer=False))
def test_eval_many_matches_eval(f):
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (5, f.dim))
    np.testing.assert_allclose(f.eval_many(X), [f.eval(x) for x in X], rtol=1e-12, atol=1e-12)
