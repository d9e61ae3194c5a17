import numpy as np
import pytest

from mongeampere.exceptions import ConfigError
from nonlinear.problems import PRESETS, from_expressions, manufactured, preset

POINTS = (np.array([0.0, 0.3, 1.0]), np.array([0.0, 0.7, 1.0]))


@pytest.mark.parametrize('name, density', [('quadratic', 1.0), ('anisotropic', 2.0)])
def test_polynomial_presets_have_constant_density(name, density):
    problem = preset(name)
    assert problem.is_manufactured
    assert np.allclose(problem.f(*POINTS), density)
    assert np.array_equal(problem.g(*POINTS), problem.exact(*POINTS))


def test_every_preset_builds():
    for name in PRESETS:
        assert preset(name).name == name


def test_unknown_preset():
    with pytest.raises(ConfigError) as excinfo:
        preset('gaussian')
    assert excinfo.value.field == 'problem.preset'


def test_manufactured_problem_from_text():
    problem = manufactured('x^2 + x*y + y^2', name='skew')
    assert problem.name == 'skew'
    assert np.allclose(problem.f(*POINTS), 3.0)


def test_problem_without_exact_solution():
    problem = from_expressions('1', '(x^2 + y^2)/2')
    assert not problem.is_manufactured
    assert problem.describe() == {'name': 'custom', 'f': '1', 'g': '(x^2 + y^2)/2', 'exact': None}


@pytest.mark.parametrize('f, g, exact, field', [
    ('sin(x)', 'x', None, 'problem.f'),
    ('1', 'q', None, 'problem.g'),
    ('1', 'x', 'x +', 'problem.exact'),
])
def test_invalid_expressions_name_their_field(f, g, exact, field):
    with pytest.raises(ConfigError) as excinfo:
        from_expressions(f, g, exact=exact)
    assert excinfo.value.field == field


def test_scaled_problem(exponential):
    scaled = exponential.scaled(0.5)
    assert np.allclose(scaled.f(*POINTS), 0.25 * exponential.f(*POINTS))
    assert np.allclose(scaled.g(*POINTS), 0.5 * exponential.g(*POINTS))
    assert np.allclose(scaled.exact.monge_ampere()(*POINTS), scaled.f(*POINTS))
