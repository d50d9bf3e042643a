import os

import hypothesis
import hypothesis.strategies as st
import numpy as np
import pytest

from ballbernstein.polycore import Poly, monomial_exponents

hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def small_ints(lo=-5, hi=5):
    return st.integers(min_value=lo, max_value=hi)


@st.composite
def polys(draw, dim=None, max_deg=4, integer=True):
    """Polynomials with small integer (exactly representable) coefficients."""
    d = draw(st.integers(1, 3)) if dim is None else dim
    exps = monomial_exponents(d, max_deg)
    picked = draw(st.lists(st.sampled_from(exps), max_size=8, unique=True))
    coef = small_ints() if integer else st.floats(-3, 3, allow_nan=False)
    return Poly(d, {a: draw(coef) for a in picked})


def random_poly(rng, d, deg):
    exps = monomial_exponents(d, deg)
    return Poly(d, {a: float(c) for a, c in zip(exps, rng.standard_normal(len(exps)))})


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
