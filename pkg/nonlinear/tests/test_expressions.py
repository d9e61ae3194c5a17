import numpy as np
import pytest

from nonlinear.expressions import AnalyticFunction, parse_expression


@pytest.mark.parametrize('text, x, y, expected', [
    ('x^2 + 2*y', 1.5, 2.0, 6.25),
    ('x**2 + 2*y', 1.5, 2.0, 6.25),
    ('sqrt(x*y)', 2.0, 8.0, 4.0),
    ('exp(x - y)', 1.0, 1.0, 1.0),
    ('(1 + x)/(2 - y)', 1.0, 1.0, 2.0),
    ('3', 0.1, 0.2, 3.0),
])
def test_evaluates_grammar(text, x, y, expected):
    assert AnalyticFunction.parse(text)(x, y) == pytest.approx(expected)


@pytest.mark.parametrize('text', ['', '   ', 'x +', 'sin(x)', 'log(y)', 'z + x', 'abs(x)', 'x < 1'])
def test_rejects_text_outside_grammar(text):
    with pytest.raises(ValueError):
        parse_expression(text)


def test_unknown_name_is_reported():
    with pytest.raises(ValueError, match='z'):
        parse_expression('x + z')


def test_constants_broadcast_to_input_shape():
    f = AnalyticFunction.parse('2')
    values = f(np.zeros((3, 4)), np.zeros((3, 4)))
    assert values.shape == (3, 4)
    assert np.all(values == 2.0)


def test_derivatives():
    f = AnalyticFunction.parse('x^2*y')
    assert np.allclose(f.gradient(1.0, 2.0), [4.0, 1.0])
    assert np.allclose(f.hessian(1.0, 2.0), [[4.0, 2.0], [2.0, 0.0]])
    assert f.derivative_tensor(3)(np.ones(5), np.ones(5)).shape == (5, 2, 2, 2)


def test_hessian_matrix_function():
    f = AnalyticFunction.parse('x*y + y^2')
    x = np.linspace(0, 1, 4)
    rows = f.hessian_matrix_function()(x, x)
    assert np.allclose(rows[0][0], 0.0)
    assert np.allclose(rows[0][1], 1.0)
    assert np.allclose(rows[1][1], 2.0)


def test_monge_ampere_of_exponential():
    """det D^2 exp(|x|^2/2) = (1 + |x|^2) exp(|x|^2)."""
    f = AnalyticFunction.parse('exp((x^2 + y^2)/2)').monge_ampere()
    x, y = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 1, 7))
    r2 = x ** 2 + y ** 2
    assert np.allclose(f(x, y), (1 + r2) * np.exp(r2), rtol=1e-13)


def test_monge_ampere_matches_finite_differences():
    u = AnalyticFunction.parse('exp((x^2 + y^2)/2) + x*y/4')
    f = u.monge_ampere()
    h, x, y = 1e-4, 0.3, 0.6
    uxx = (u(x + h, y) - 2 * u(x, y) + u(x - h, y)) / h ** 2
    uyy = (u(x, y + h) - 2 * u(x, y) + u(x, y - h)) / h ** 2
    uxy = (u(x + h, y + h) - u(x + h, y - h) - u(x - h, y + h) + u(x - h, y - h)) / (4 * h ** 2)
    assert f(x, y) == pytest.approx(uxx * uyy - uxy ** 2, rel=1e-5)


def test_scaling():
    f = AnalyticFunction.parse('x^2 + y')
    assert f.scaled(0.5)(2.0, 1.0) == pytest.approx(2.5)
    assert f.scaled(0.25).monge_ampere()(0.3, 0.3) == pytest.approx(0.0)
    assert 'x^2 + y' in f.scaled(0.5).text
