import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from subfinsler._jets import Jet


def exp_jet(x, order=6):
    return Jet.from_derivatives([math.exp(x)] * (order + 1))


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_product_and_quotient_match_exp_rules(a, b):
    ea, eb = exp_jet(a), exp_jet(b)
    prod = (ea * eb).derivatives()
    assert np.allclose(prod, [math.exp(a + b) * 2**k for k in range(7)], rtol=1e-12)
    quot = (ea / eb).derivatives()
    assert np.allclose(quot, [math.exp(a - b) * 0**k for k in range(7)], atol=1e-10 * math.exp(a - b))


@given(st.floats(0.1, 3.0))
def test_sqrt_of_square_is_identity(x):
    t = Jet.from_derivatives([x, 1.0, 0.0, 0.0, 0.0])
    back = (t * t).sqrt().derivatives()
    assert np.allclose(back, [x, 1.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_deriv_shifts_orders():
    # sin at 0: 0, 1, 0, -1, 0
    j = Jet.from_derivatives([0.0, 1.0, 0.0, -1.0, 0.0])
    assert np.allclose(j.deriv().derivatives(), [1.0, 0.0, -1.0, 0.0])
    assert j.value() == 0.0


def test_vectorized_over_trailing_axes():
    x = np.linspace(0.1, 1.0, 5)
    j = Jet.from_derivatives([x, np.ones_like(x), np.zeros_like(x)])
    r = j.reciprocal().derivatives()
    assert np.allclose(r[0], 1 / x)
    assert np.allclose(r[1], -1 / x**2)
    assert np.allclose(r[2], 2 / x**3)
