import numpy as np
import pytest

from fem.mesh import build_structured_mesh
from fem.spaces import LagrangeSpace, MatrixField, ScalarField, interpolate, interpolate_matrix
from nonlinear.expressions import AnalyticFunction
from studies.norms import error_norm, matrix_error_norm
from studies.rates import observed_rate


def test_norms_of_linear_function(space4):
    v = interpolate(lambda x, y: x, space4)
    assert error_norm(v, None, 'L2') == pytest.approx(np.sqrt(1 / 3), rel=1e-13)
    assert error_norm(v, None, 'H1semi') == pytest.approx(1.0, rel=1e-13)
    assert error_norm(v, None, 'H1') == pytest.approx(np.sqrt(4 / 3), rel=1e-13)
    assert error_norm(v, None, 'Linf') == pytest.approx(1.0)


@pytest.mark.parametrize('norm', ['L2', 'H1semi', 'H1', 'Linf', 'brokenHk'])
def test_polynomial_interpolant_has_no_error(space4, norm):
    exact = AnalyticFunction.parse('x^2 - x*y + 3*y + 1')
    assert error_norm(interpolate(exact, space4), exact, norm) <= 1e-12


def test_broken_norm_includes_second_derivatives(space4):
    v = interpolate(lambda x, y: x ** 2 / 2, space4)
    h1 = error_norm(v, None, 'H1')
    broken = error_norm(v, None, 'brokenHk')
    assert broken ** 2 == pytest.approx(h1 ** 2 + 1.0, rel=1e-12)


def test_triangle_inequality(space4, rng):
    a = ScalarField(space4, rng.standard_normal(space4.n_dofs))
    b = ScalarField(space4, rng.standard_normal(space4.n_dofs))
    for norm in ('L2', 'H1', 'brokenHk'):
        assert error_norm(a + b, None, norm) <= error_norm(a, None, norm) + error_norm(b, None, norm) + 1e-12


def test_unknown_norm(space4):
    with pytest.raises(ValueError):
        error_norm(ScalarField(space4), None, 'H2')
    with pytest.raises(ValueError):
        matrix_error_norm(MatrixField(space4), None, 'Linf')


def test_derivative_norm_needs_derivatives(space4):
    with pytest.raises(ValueError):
        error_norm(ScalarField(space4), lambda x, y: x, 'H1')


def test_interpolation_converges_at_degree(exponential):
    errors, hs = [], []
    for n in (4, 8, 16):
        space = LagrangeSpace(build_structured_mesh(n), 2)
        errors.append(error_norm(interpolate(exponential.exact, space), exponential.exact, 'H1'))
        hs.append(space.mesh.h)
    assert observed_rate(errors, hs).fit >= 1.9


def test_matrix_norms(space4, quadratic):
    identity = interpolate_matrix(lambda x, y: [[1.0, 0.0], [0.0, 1.0]], space4)
    assert matrix_error_norm(identity, None, 'L2') == pytest.approx(np.sqrt(2.0), rel=1e-13)
    assert matrix_error_norm(identity, quadratic.exact, 'L2') <= 1e-13
    assert matrix_error_norm(identity, quadratic.exact, 'brokenH1') <= 1e-12
    skew = interpolate_matrix(lambda x, y: [[0.0, 1.0], [1.0, 0.0]], space4)
    assert matrix_error_norm(skew, None, 'L2') == pytest.approx(np.sqrt(2.0), rel=1e-13)


def test_matrix_l2_norm_matches_mass_matrix(ops4, rng):
    sigma = MatrixField.from_vector(ops4.space, rng.standard_normal(3 * ops4.space.n_dofs))
    assert matrix_error_norm(sigma, None, 'L2') == pytest.approx(ops4.matrix_l2_norm(sigma), rel=1e-12)
