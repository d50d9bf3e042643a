import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballbernstein.polycore import Poly, compose_psi
from ballbernstein.quadrature import (BallClassical, ExactnessError, QuadratureRule, SimplexJacobi,
                                      SymmetricGeneral, ball_moment, ball_rule, distance, radial_rule,
                                      simplex_moment, simplex_rule, transfer_residual, validate_moments,
                                      weight_adapter, weight_adapter_inverse)

from conftest import random_poly

MUS = [0.0, 0.5, 1.0, 2.5]


def test_radial_rule_examples():
    assert radial_rule(2, 0.0, 1).weights.sum() == pytest.approx(0.5, rel=1e-15)
    assert radial_rule(3, 0.0, 3).weights.sum() == pytest.approx(1 / 3, rel=1e-15)
    assert radial_rule(2, 1.0, 4).weights.sum() == pytest.approx(0.25, rel=1e-15)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("mu", [-0.5, 0.0, 2.5])
def test_radial_rule_exact_to_declared_degree(d, mu):
    rule = radial_rule(d, mu, 12)
    r = rule.nodes[:, 0]
    for k in range(rule.exact_degree + 1):
        want = 0.5 * math.exp(math.lgamma((k + d) / 2) + math.lgamma(mu + 1) - math.lgamma((k + d) / 2 + mu + 1))
        assert rule.integrate(r**k) == pytest.approx(want, rel=1e-13)
    assert 0 < r.min() and r.max() < 1


def test_ball_rule_examples():
    rule = ball_rule(2, 0.0, 6)
    x = rule.nodes
    assert rule.integrate(np.ones(len(rule))) == pytest.approx(math.pi, rel=1e-14)
    assert rule.integrate(x[:, 0] ** 2) == pytest.approx(math.pi / 4, rel=1e-14)
    assert abs(rule.integrate(x[:, 0])) < 1e-15


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("mu", MUS)
def test_ball_moments_exact(d, mu):
    deg = 10 if d < 4 else 8
    assert validate_moments(ball_rule(d, mu, deg)) <= 1e-12


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("kappa_tail", [0.0, 0.5, 2.5])
def test_simplex_moments_exact(d, kappa_tail):
    kappa = tuple([-0.5] * d + [kappa_tail])
    assert validate_moments(simplex_rule(d, SimplexJacobi(d, kappa), 10)) <= 1e-12
    kappa = tuple([1.5] * d + [kappa_tail])
    assert validate_moments(simplex_rule(d, SimplexJacobi(d, kappa), 8, method="pushforward")) <= 1e-12


def test_simplex_transfer_examples():
    w1 = SimplexJacobi(1, (-0.5, 0.0))
    assert simplex_rule(1, w1, 4).weights.sum() == pytest.approx(2.0, rel=1e-14)
    w2 = SimplexJacobi(2, (-0.5, -0.5, 0.0))
    r = simplex_rule(2, w2, 4)
    assert r.weights.sum() == pytest.approx(math.pi, rel=1e-14)
    assert r.integrate(r.nodes[:, 0]) == pytest.approx(math.pi / 4, rel=1e-14)
    assert simplex_moment((0, 0), w2.kappa) == pytest.approx(math.pi, rel=1e-14)
    assert ball_moment((2, 0), 0.0) == pytest.approx(math.pi / 4, rel=1e-14)


@given(st.integers(2, 4), st.sampled_from(MUS), st.integers(0, 6), st.integers(0, 10**6))
def test_transfer_identity_random(d, mu, deg, seed):
    f = random_poly(np.random.default_rng(seed), d, deg)
    assert transfer_residual(f, mu) <= 1e-10


def test_nodes_interior_and_off_axes():
    for d in (2, 3, 4):
        rule = ball_rule(d, 0.5, 9)
        assert rule.radii.min() > 0 and rule.radii.max() < 1
        assert np.all(np.abs(rule.nodes) > 0)


def test_ball_rule_reflection_symmetric():
    rule = ball_rule(2, 0.0, 7)
    keys = {tuple(np.round(x, 12)) for x in rule.nodes}
    for x in rule.nodes:
        assert tuple(np.round(x * [-1, 1], 12)) in keys
        assert tuple(np.round(x * [1, -1], 12)) in keys


def test_weight_adapter_examples():
    assert weight_adapter(BallClassical(3, 1.5)) == SimplexJacobi(3, (-0.5, -0.5, -0.5, 1.5))
    one = SymmetricGeneral(2, lambda u: np.ones(len(u)), name="one")
    simp = weight_adapter(one)
    u = np.array([[0.1, 0.3], [0.25, 0.25]])
    np.testing.assert_allclose(simp(u), 1 / np.sqrt(u.prod(axis=1)))
    back = weight_adapter_inverse(SimplexJacobi(2, (0.0, 0.0, 0.0)))
    x = np.array([[0.3, -0.4], [-0.1, 0.2]])
    np.testing.assert_allclose(back(x), np.abs(x.prod(axis=1)))


def test_weight_adapter_round_trip_pointwise(rng):
    w = SymmetricGeneral(2, lambda u: np.exp(-u.sum(axis=1)) * (1 + u[:, 0]), name="test")
    back = weight_adapter_inverse(weight_adapter(w))
    x = rng.uniform(-0.7, 0.7, (50, 2))
    np.testing.assert_allclose(back(x), w(x), rtol=1e-13)
    assert weight_adapter_inverse(weight_adapter(BallClassical(2, 0.5))) == BallClassical(2, 0.5)


def test_general_weight_rule_converges():
    w = SymmetricGeneral(2, lambda u: 1 + u[:, 0] * u[:, 1], name="bump")
    rule = ball_rule(2, w, 6)
    # int_B (1 + x^2 y^2) dx = pi + pi/24
    assert rule.integrate(np.ones(len(rule))) == pytest.approx(math.pi * (1 + 1 / 24), rel=1e-8)
    assert rule.exact_degree is None


def test_invalid_inputs():
    with pytest.raises(ValueError):
        ball_rule(5, 0.0, 4)
    with pytest.raises(ValueError):
        BallClassical(2, -1.0)
    with pytest.raises(ValueError):
        SimplexJacobi(2, (0.0, 0.0))
    with pytest.raises(ValueError):
        QuadratureRule("ball", 2, np.zeros((2, 2)) + 0.1, np.array([1.0, -1.0]), 1)


def test_rule_json_round_trip():
    rule = ball_rule(2, 0.5, 4)
    back = QuadratureRule.from_json_obj(rule.to_json_obj())
    np.testing.assert_array_equal(back.nodes, rule.nodes)
    np.testing.assert_array_equal(back.weights, rule.weights)
    assert back.weight_spec == rule.weight_spec


def test_distance_examples(rng):
    x = np.array([0.3, -0.2])
    assert distance("ball", x, x) == pytest.approx(0.0, abs=1e-7)
    assert distance("ball", np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == pytest.approx(math.pi)
    for _ in range(50):
        a, b = np.abs(rng.uniform(-0.7, 0.7, (2, 2)))
        assert distance("simplex", a * a, b * b) == pytest.approx(distance("ball", a, b), abs=1e-12)
    with pytest.raises(ValueError):
        distance("ball", np.array([1.2, 0.0]), x)


def test_insufficient_exactness_rejected():
    from ballbernstein.ballbasis import project_onto_Vn

    with pytest.raises(ExactnessError):
        project_onto_Vn(Poly.var(2, 1) ** 4, 4, 0.0, ball_rule(2, 0.0, 4))


def test_pushforward_equals_collapsed(rng):
    w = SimplexJacobi(2, (-0.5, -0.5, 1.0))
    a = simplex_rule(2, w, 8)
    b = simplex_rule(2, w, 8, method="pushforward")
    f = random_poly(rng, 2, 8)
    assert a.integrate_poly(f) == pytest.approx(b.integrate_poly(f), rel=1e-12, abs=1e-12)
    g = compose_psi(Poly.var(2, 1))
    assert g.degree == 2
