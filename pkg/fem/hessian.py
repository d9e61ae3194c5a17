"""
Discrete Hessian H(v_h) in Sigma_h:

    (H(v_h), tau) = -(div tau, D v_h) + <D v_h, tau n>    for all tau in Sigma_h.

The Sigma_h mass matrix is block diagonal, so H costs three solves with the
factorized scalar mass matrix; the off-diagonal right-hand side carries the
Frobenius weight 2 and is halved.
"""
import numpy as np

from fem.forms import MixedOperators
from fem.spaces import MatrixField, ScalarField


def discrete_hessian(v: ScalarField, ops: MixedOperators) -> MatrixField:
    if v.space is not ops.space:
        raise ValueError("field and operators live on different spaces")
    N = ops.space.n_dofs
    rhs = ops.hessian_rhs_operator @ v.coefficients
    solve = ops.mass_factorization.solve
    c11 = solve(rhs[:N])
    c12 = solve(0.5 * rhs[N:2 * N])
    c22 = solve(rhs[2 * N:])
    return MatrixField(v.space, c11, c12, c22)


def hessian_residual(v: ScalarField, eta: MatrixField, ops: MixedOperators) -> float:
    """
    Relative residual of (eta, v) in the discrete Hessian equation,
    ||M eta - rhs(v)|| / (||rhs(v)|| + ||M eta||); zero exactly when eta = H(v).
    """
    rhs = ops.hessian_rhs_operator @ v.coefficients
    lhs = ops.M @ eta.coefficients
    scale = np.linalg.norm(rhs) + np.linalg.norm(lhs)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(lhs - rhs) / scale)


def trace_identity_residual(v: ScalarField, eta: MatrixField, ops: MixedOperators) -> float:
    """max over interior DOFs i of |(tr eta, phi_i) + (D v, D phi_i)|."""
    idx = ops.space.interior_dofs
    residual = ops.mass @ (eta.c11 + eta.c22) + ops.K @ v.coefficients
    if not len(idx):
        return 0.0
    return float(np.max(np.abs(residual[idx])))
