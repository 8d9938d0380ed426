import numpy as np
import pytest

from app.core.exceptions import DimensionMismatchError, NotAContactError
from app.services.jets import (
    AngularJet,
    circle_jet,
    jet_mul,
    jet_size,
    multi_indices,
    real_strata,
    symbol_jet,
)
from app.services.polysym import evaluate, parse_expression


def test_multi_indices_are_graded():
    indices = multi_indices(2)
    assert len(indices) == jet_size(2) == 10
    assert indices[0] == (0, 0)
    assert indices[1:3] == ((1, 0), (0, 1))
    degrees = [sum(a) for a in indices]
    assert degrees == sorted(degrees)
    assert jet_size(3) == 20


def test_circle_jet_series():
    jet = circle_jet(1, 1.0, 2)
    assert jet.coefficient((0, 0)) == pytest.approx(1.0)
    assert jet.coefficient((1, 0)) == pytest.approx(1j)
    assert jet.coefficient((2, 0)) == pytest.approx(-0.5)
    assert jet.coefficient((3, 0)) == pytest.approx(-1j / 6)
    assert jet.coefficient((0, 1)) == 0


def test_circle_jet_requires_unimodular_point():
    with pytest.raises(ValueError):
        circle_jet(1, 0.9, 2)
    with pytest.raises(DimensionMismatchError):
        circle_jet(3, 1.0, 2)


def test_product_truncates_at_order_three():
    a = circle_jet(1, 1.0, 2)
    b = circle_jet(2, 1.0, 2)
    prod = jet_mul(a, b)
    # e^{i(t1+t2)}: coeficiente de t1 t2 é i^2 = -1
    assert prod.coefficient((1, 1)) == pytest.approx(-1.0)
    assert prod.coefficient((2, 1)) == pytest.approx(-0.5j)
    cube = jet_mul(jet_mul(a, a), jet_mul(a, a))
    assert cube.coefficient((3, 0)) == pytest.approx((4j) ** 3 / 6)


def test_scalar_multiplication_and_sum():
    jet = circle_jet(2, 1j, 3)
    doubled = 2 * jet
    assert np.allclose(doubled.coefficients, (jet + jet).coefficients)
    assert AngularJet.zero(3).evaluate([0.1, 0.2, 0.3]) == 0


def test_jet_is_read_only():
    jet = AngularJet.constant(2)
    with pytest.raises(ValueError):
        jet.coefficients[0] = 2.0


def test_symbol_jet_rejects_non_contact():
    p = parse_expression("z1", 2)
    with pytest.raises(NotAContactError):
        symbol_jet(p, [0.0, 0.0], -1.0)
    with pytest.raises(ValueError):
        symbol_jet(p, [0.0, 0.0], 0.5)


def test_average_strata_at_unit_point():
    p = parse_expression("(z1+z2+z3)/3", 3)
    strata = real_strata(symbol_jet(p, [0.0, 0.0, 0.0], 1.0))
    assert np.allclose(strata.re_grad, 0.0)
    assert np.allclose(strata.im_grad, [1 / 3] * 3)
    assert np.allclose(strata.contact_form, np.eye(3) / 6)
    assert np.allclose(strata.imaginary_form, 0.0)


def test_monomial_strata():
    p = parse_expression("z1*z2*z3", 3)
    strata = real_strata(symbol_jet(p, [0.0, 0.0, 0.0], 1.0))
    assert np.allclose(strata.im_grad, [1.0, 1.0, 1.0])
    assert np.allclose(strata.contact_form, np.ones((3, 3)) / 2)


@pytest.mark.parametrize(
    "expr",
    [
        "(z1+z2+z3)/3",
        "(z1*z2 + (1+z3)/2 + 0.01i*(z3-1)^2)/2",
        "(3+6z1-z1^2)/8 * z2",
    ],
)
def test_finite_difference_order(expr, rng):
    p = parse_expression(expr, 3)
    xi = np.zeros(3)
    eta = complex(evaluate(p, np.exp(1j * xi)))
    jet = symbol_jet(p, xi, eta / abs(eta))
    for _ in range(5):
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)

        def error(t: float) -> float:
            exact = np.conj(eta) * evaluate(p, np.exp(1j * (xi + t * v)))
            return abs(jet.evaluate(t * v) - exact)

        t = 0.005
        order = np.log2(error(t) / error(t / 2))
        assert order >= 3.5
