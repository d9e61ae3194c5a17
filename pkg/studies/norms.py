"""
Error norms of discrete fields against exact functions (or zero).

Integrals use a quadrature rule of exactness 2k + 6 unless one is passed in.
``exact`` is an object with ``__call__(x, y)`` and, for derivative norms,
``derivative_tensor(order)`` (see ``nonlinear.expressions.AnalyticFunction``);
``None`` measures the field itself.
"""
import enum

import numpy as np

from fem.quadrature import QuadratureRule, make_quadrature
from fem.spaces import LagrangeSpace, MatrixField, ScalarField


class Norm(str, enum.Enum):
    L2 = 'L2'
    H1SEMI = 'H1semi'
    H1 = 'H1'
    LINF = 'Linf'
    BROKEN_HK = 'brokenHk'
    BROKEN_H1 = 'brokenH1'


def error_rule(space: LagrangeSpace) -> QuadratureRule:
    return make_quadrature(2 * space.degree + 6)


def _norm(tag) -> Norm:
    try:
        return Norm(tag)
    except ValueError:
        raise ValueError(f"unknown norm {tag!r} (choose from {', '.join(n.value for n in Norm)})") from None


def _exact_derivatives(exact, points, order):
    x, y = points[..., 0], points[..., 1]
    if exact is None:
        return 0.0
    if order == 0:
        return np.asarray(exact(x, y), dtype=float)
    if not hasattr(exact, 'derivative_tensor'):
        raise ValueError("derivative norms need an exact function with derivative_tensor()")
    return exact.derivative_tensor(order)(x, y)


def _squared(field: ScalarField, exact, rule, order) -> float:
    """sum over triangles of ||D^order (field - exact)||^2_{L2(T)}, tensor entries summed."""
    tab = field.space.tabulate(rule)
    if order == 0:
        diff = field.values_at(rule) - _exact_derivatives(exact, tab.points, 0)
    else:
        diff = field.derivatives_at(rule, order) - _exact_derivatives(exact, tab.points, order)
    diff = diff.reshape(diff.shape[:2] + (-1,))
    return float(np.einsum('tq,tqc->', tab.weights, diff ** 2))


def error_norm(field: ScalarField, exact=None, norm='H1', rule: QuadratureRule | None = None,
               order: int | None = None) -> float:
    """
    ||field - exact|| in one of L2, H1semi, H1, Linf or brokenHk (orders 0..k,
    or 0..``order``, summed element by element).
    """
    norm = _norm(norm)
    rule = error_rule(field.space) if rule is None else rule
    if norm is Norm.LINF:
        tab = field.space.tabulate(rule)
        diff = np.abs(field.values_at(rule) - _exact_derivatives(exact, tab.points, 0))
        nodes = field.space.dof_coordinates
        at_nodes = np.abs(field.coefficients - _exact_derivatives(exact, nodes, 0))
        return float(max(diff.max(), at_nodes.max()))
    if norm is Norm.L2:
        orders = (0,)
    elif norm is Norm.H1SEMI:
        orders = (1,)
    elif norm in (Norm.H1, Norm.BROKEN_H1):
        orders = (0, 1)
    else:
        orders = tuple(range((field.space.degree if order is None else order) + 1))
    return float(np.sqrt(sum(_squared(field, exact, rule, j) for j in orders)))


def matrix_error_norm(sigma: MatrixField, solution=None, norm='L2', rule: QuadratureRule | None = None) -> float:
    """
    ||sigma - D^2 solution|| in L2 or broken H1, with the Frobenius product
    (off-diagonal entry counted twice). ``solution`` is the scalar function whose
    Hessian is the reference; ``None`` measures sigma itself.
    """
    norm = _norm(norm)
    if norm not in (Norm.L2, Norm.BROKEN_H1, Norm.H1):
        raise ValueError(f"matrix fields support L2 and brokenH1, not {norm.value}")
    rule = error_rule(sigma.space) if rule is None else rule
    tab = sigma.space.tabulate(rule)
    total = 0.0
    orders = (0,) if norm is Norm.L2 else (0, 1)
    for j in orders:
        exact = _exact_derivatives(solution, tab.points, 2 + j)
        for c, (w, (a, b)) in enumerate(zip(MatrixField.FROBENIUS_WEIGHTS, MatrixField.ENTRIES)):
            component = sigma.component(c)
            discrete = component.values_at(rule) if j == 0 else component.gradients_at(rule)
            reference = 0.0 if solution is None else exact[..., a, b] if j == 0 else exact[..., a, b, :]
            diff = np.reshape(discrete - reference, tab.weights.shape + (-1,))
            total += w * float(np.einsum('tq,tqc->', tab.weights, diff ** 2))
    return float(np.sqrt(total))
