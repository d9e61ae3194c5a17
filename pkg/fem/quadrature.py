"""
Quadrature rules on the reference triangle and the reference edge.

Weights are normalized to sum to one (reference measure 1), so an integral
over a physical triangle is ``area * sum(w * g(x_q))`` and over an edge
``length * sum(w * g(x_q))``.

Degrees 1 and 2 use the classical symmetric rules; higher degrees use the
collapsed (Duffy) Gauss-Jacobi product rule, which has positive weights and
interior points for every degree.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from mongeampere.exceptions import QuadratureError

MAX_EXACTNESS = 30


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray  # (q, 3) barycentric coordinates
    weights: np.ndarray  # (q,)
    exactness_degree: int

    @property
    def reference_points(self) -> np.ndarray:
        """(q, 2) coordinates on the reference triangle (0,0), (1,0), (0,1)."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class EdgeRule:
    points: np.ndarray  # (q,) parameters in [0, 1]
    weights: np.ndarray
    exactness_degree: int

    def __len__(self):
        return len(self.weights)


def _symmetric_rule(degree):
    if degree <= 1:
        points = np.array([[1 / 3, 1 / 3, 1 / 3]])
        weights = np.array([1.0])
        return points, weights, 1
    a, b = 2 / 3, 1 / 6
    points = np.array([[a, b, b], [b, a, b], [b, b, a]])
    weights = np.full(3, 1 / 3)
    return points, weights, 2


def _collapsed_rule(degree):
    m = (degree + 2) // 2
    # s carries the collapse Jacobian (1 - s) as the Jacobi weight
    xs, ws = roots_jacobi(m, 1.0, 0.0)
    xt, wt = roots_legendre(m)
    s = 0.5 * (xs + 1.0)
    t = 0.5 * (xt + 1.0)
    ws = ws / 4.0
    wt = wt / 2.0
    S, T = np.meshgrid(s, t, indexing='ij')
    W = np.outer(ws, wt)
    xi = S.ravel()
    eta = (T * (1.0 - S)).ravel()
    points = np.stack([1.0 - xi - eta, xi, eta], axis=1)
    weights = 2.0 * W.ravel()
    return points, weights, 2 * m - 1


@lru_cache(maxsize=None)
def make_quadrature(min_exactness: int) -> QuadratureRule:
    """Triangle rule integrating every polynomial of degree <= ``min_exactness`` exactly."""
    if min_exactness < 0:
        raise QuadratureError(f"exactness must be non-negative, got {min_exactness}")
    if min_exactness > MAX_EXACTNESS:
        raise QuadratureError(
            f"no rule of exactness {min_exactness} tabulated (maximum {MAX_EXACTNESS})")
    if min_exactness <= 2:
        points, weights, degree = _symmetric_rule(min_exactness)
    else:
        points, weights, degree = _collapsed_rule(min_exactness)
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, degree)


@lru_cache(maxsize=None)
def make_edge_quadrature(min_exactness: int) -> EdgeRule:
    """Gauss-Legendre rule on [0, 1]."""
    if min_exactness < 0 or min_exactness > 2 * MAX_EXACTNESS:
        raise QuadratureError(f"no edge rule of exactness {min_exactness}")
    m = (min_exactness + 2) // 2
    x, w = roots_legendre(m)
    points = 0.5 * (x + 1.0)
    weights = 0.5 * w
    points.setflags(write=False)
    weights.setflags(write=False)
    return EdgeRule(points, weights, 2 * m - 1)


def integrate_reference(rule: QuadratureRule, g) -> float:
    """Integral of ``g(x, y)`` over the reference triangle of area 1/2."""
    x, y = rule.reference_points.T
    return 0.5 * float(np.dot(rule.weights, g(x, y)))
