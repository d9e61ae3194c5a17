import numpy as np
import pytest

from fem.forms import assemble_mixed_operators
from fem.hessian import discrete_hessian, hessian_residual, trace_identity_residual
from fem.mesh import build_structured_mesh
from fem.spaces import LagrangeSpace, MatrixField, ScalarField, interpolate


def test_hessian_of_quadratic_is_exact(ops4):
    field = interpolate(lambda x, y: x ** 2 / 2, ops4.space)
    sigma = discrete_hessian(field, ops4)
    assert np.abs(sigma.c11 - 1.0).max() <= 1e-12
    assert np.abs(sigma.c12).max() <= 1e-12
    assert np.abs(sigma.c22).max() <= 1e-12


def test_hessian_of_mixed_quadratic(ops8):
    field = interpolate(lambda x, y: x * y + y ** 2, ops8.space)
    sigma = discrete_hessian(field, ops8)
    assert np.allclose(sigma.c11, 0.0, atol=1e-11)
    assert np.allclose(sigma.c12, 1.0, atol=1e-11)
    assert np.allclose(sigma.c22, 2.0, atol=1e-11)


@pytest.mark.parametrize('alpha', [0.0, 0.5, -2.0])
def test_hessian_is_homogeneous(ops4, rng, alpha):
    v = ScalarField(ops4.space, rng.standard_normal(ops4.space.n_dofs))
    base = discrete_hessian(v, ops4).coefficients
    scaled = discrete_hessian(alpha * v, ops4).coefficients
    assert np.allclose(scaled, alpha * base, rtol=1e-12, atol=1e-12 * np.abs(base).max())


def test_hessian_is_linear(ops4, rng):
    space = ops4.space
    v, w = (ScalarField(space, rng.standard_normal(space.n_dofs)) for _ in range(2))
    combined = discrete_hessian(v + 3.0 * w, ops4).coefficients
    separate = discrete_hessian(v, ops4).coefficients + 3.0 * discrete_hessian(w, ops4).coefficients
    assert np.allclose(combined, separate, rtol=1e-11, atol=1e-11 * np.abs(separate).max())


def test_hessian_of_zero(ops4):
    assert not np.any(discrete_hessian(ScalarField(ops4.space), ops4).coefficients)


def test_defining_equation_holds(ops4, rng):
    v = ScalarField(ops4.space, rng.standard_normal(ops4.space.n_dofs))
    sigma = discrete_hessian(v, ops4)
    assert hessian_residual(v, sigma, ops4) <= 1e-12
    perturbed = sigma + MatrixField.from_vector(ops4.space, 1e-2 * np.ones(3 * ops4.space.n_dofs))
    assert hessian_residual(v, perturbed, ops4) > 1e-6


def test_trace_identity(ops4, rng):
    """(tr H(v), phi) = -(D v, D phi) for interior phi."""
    space = ops4.space
    for _ in range(5):
        v = ScalarField(space, rng.standard_normal(space.n_dofs))
        sigma = discrete_hessian(v, ops4)
        scale = np.abs(ops4.K @ v.coefficients).max()
        assert trace_identity_residual(v, sigma, ops4) <= 1e-10 * scale


def test_trace_identity_detects_wrong_field(ops4):
    field = interpolate(lambda x, y: (x ** 2 + y ** 2) / 2, ops4.space)
    sigma = discrete_hessian(field, ops4)
    ones = np.ones(ops4.space.n_dofs)
    wrong = sigma + MatrixField(ops4.space, ones, None, ones)
    assert trace_identity_residual(field, wrong, ops4) > 1e-3


def test_hessian_converges_for_smooth_functions():
    errors = []
    for n in (4, 8):
        space = LagrangeSpace(build_structured_mesh(n), 2)
        ops = assemble_mixed_operators(space)
        field = interpolate(lambda x, y: np.exp(x + 2 * y) / 10, space)
        sigma = discrete_hessian(field, ops)
        exact = MatrixField(space, field.coefficients, 2 * field.coefficients, 4 * field.coefficients)
        errors.append(ops.matrix_l2_norm(sigma - exact))
    assert errors[1] < errors[0]


def test_rejects_fields_on_other_spaces(ops4):
    other = LagrangeSpace(build_structured_mesh(4), 2)
    with pytest.raises(ValueError):
        discrete_hessian(ScalarField(other), ops4)
