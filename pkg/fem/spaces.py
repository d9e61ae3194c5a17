"""
Continuous Lagrange spaces V_h of degree k >= 2, the symmetric-matrix
companion Sigma_h, coefficient fields over them, and nodal interpolation.

DOF layout: vertex DOFs first (by vertex id), then the k-1 DOFs of every edge
ordered by global edge index and running from the lower to the higher vertex
id, then the interior DOFs triangle by triangle.
"""
import itertools
import logging
from dataclasses import dataclass
from math import factorial

import numpy as np

from fem.linalg import Sym2x2
from fem.mesh import LOCAL_EDGES, Mesh
from fem.quadrature import QuadratureRule
from mongeampere.exceptions import FieldEvaluationError

logger = logging.getLogger(__name__)

REFERENCE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class LagrangeElement:
    """Nodal P_k basis on the reference triangle, built from the monomial Vandermonde matrix."""

    def __init__(self, degree: int):
        if degree < 2:
            raise ValueError(f"Lagrange degree must be >= 2, got {degree}")
        self.degree = degree
        self.exponents = np.array([(total - j, j) for total in range(degree + 1)
                                   for j in range(total + 1)])
        self.nodes = self._nodes(degree)
        vandermonde = self._monomials(self.nodes, 0, 0)
        self.coefficients = np.linalg.inv(vandermonde)

    @property
    def n_basis(self) -> int:
        return len(self.nodes)

    @property
    def n_interior(self) -> int:
        return (self.degree - 1) * (self.degree - 2) // 2

    @staticmethod
    def _nodes(k):
        nodes = [REFERENCE_VERTICES[i] for i in range(3)]
        for a, b in LOCAL_EDGES:
            for j in range(1, k):
                nodes.append(REFERENCE_VERTICES[a] + (j / k) * (REFERENCE_VERTICES[b] - REFERENCE_VERTICES[a]))
        for i in range(1, k):
            for j in range(1, k - i):
                nodes.append(np.array([i / k, j / k]))
        return np.array(nodes)

    def _monomials(self, points, dx, dy):
        """d^dx/dx d^dy/dy of every monomial at ``points``: (q, n_monomials)."""
        points = np.atleast_2d(points)
        i, j = self.exponents[:, 0], self.exponents[:, 1]
        scale = np.zeros(len(i))
        valid = (i >= dx) & (j >= dy)
        scale[valid] = [(factorial(a) // factorial(a - dx)) * (factorial(b) // factorial(b - dy))
                        for a, b in zip(i[valid], j[valid])]
        pi = np.clip(i - dx, 0, None)
        pj = np.clip(j - dy, 0, None)
        return scale * points[:, :1] ** pi * points[:, 1:2] ** pj

    def tabulate(self, points, order: int = 0) -> np.ndarray:
        """
        Reference derivatives of the basis of a given order.

        Returns shape (q, n_basis) + (2,) * order, entry [..., c1, ..., cm]
        being the derivative along reference axes c1, ..., cm.
        """
        points = np.atleast_2d(points)
        out = np.empty((len(points), self.n_basis) + (2,) * order)
        for axes in itertools.product((0, 1), repeat=order):
            dy = sum(axes)
            out[(slice(None), slice(None)) + axes] = self._monomials(points, order - dy, dy) @ self.coefficients
        return out


@dataclass
class Tabulation:
    """Basis data of a space at the points of one quadrature rule."""
    rule: QuadratureRule
    values: np.ndarray  # (q, nb)
    gradients: np.ndarray  # (T, q, nb, 2)
    hessians: np.ndarray  # (T, q, nb, 2, 2)
    points: np.ndarray  # (T, q, 2)
    weights: np.ndarray  # (T, q) quadrature weight times triangle area


class LagrangeSpace:
    """Scalar degree-k Lagrange space V_h on a mesh."""

    def __init__(self, mesh: Mesh, degree: int = 2):
        self.mesh = mesh
        self.degree = degree
        self.element = LagrangeElement(degree)
        self._tabulations = {}
        self.cell_dofs = self._build_cell_dofs()
        self.n_dofs = int(self.cell_dofs.max()) + 1
        self.dof_coordinates = self._build_coordinates()
        self.boundary_dofs = self._build_boundary_dofs()
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.boundary_dofs] = False
        self.interior_dofs = np.flatnonzero(mask)
        for array in (self.cell_dofs, self.dof_coordinates, self.boundary_dofs, self.interior_dofs):
            array.setflags(write=False)
        logger.debug("P%d space: %d dofs (%d on the boundary)", degree, self.n_dofs, len(self.boundary_dofs))

    # ---- DOF maps ----
    def _edge_dofs(self, edge_ids):
        k, V = self.degree, self.mesh.n_vertices
        return V + (k - 1) * np.asarray(edge_ids)[..., None] + np.arange(k - 1)

    def _build_cell_dofs(self):
        mesh, k = self.mesh, self.degree
        blocks = [mesh.cells]
        for e, (a, b) in enumerate(LOCAL_EDGES):
            dofs = self._edge_dofs(mesh.cell_edges[:, e])
            flipped = mesh.cells[:, a] > mesh.cells[:, b]
            dofs[flipped] = dofs[flipped, ::-1]
            blocks.append(dofs)
        n_int = self.element.n_interior
        if n_int:
            offset = mesh.n_vertices + (k - 1) * mesh.n_edges
            blocks.append(offset + n_int * np.arange(mesh.n_cells)[:, None] + np.arange(n_int))
        return np.ascontiguousarray(np.hstack(blocks), dtype=np.int64)

    def _build_coordinates(self):
        mesh = self.mesh
        local = np.einsum('tij,nj->tni', mesh.jacobians, self.element.nodes)
        local += mesh.points[mesh.cells[:, 0]][:, None, :]
        coords = np.empty((self.n_dofs, 2))
        coords[self.cell_dofs.ravel()] = local.reshape(-1, 2)
        return coords

    def _build_boundary_dofs(self):
        mesh = self.mesh
        edge_ids = mesh.boundary_edge_ids
        parts = [mesh.boundary_vertices, self._edge_dofs(edge_ids).ravel()]
        return np.unique(np.concatenate(parts)).astype(np.int64)

    # ---- tabulation ----
    def tabulate(self, rule: QuadratureRule) -> Tabulation:
        key = id(rule)
        cached = self._tabulations.get(key)
        if cached is not None and cached.rule is rule:
            return cached
        mesh = self.mesh
        ref = rule.reference_points
        inv_jac = np.linalg.inv(mesh.jacobians)
        values = self.element.tabulate(ref, 0)
        gradients = np.einsum('qib,tba->tqia', self.element.tabulate(ref, 1), inv_jac, optimize=True)
        hessians = np.einsum('qicd,tca,tdb->tqiab', self.element.tabulate(ref, 2), inv_jac, inv_jac,
                             optimize=True)
        points = mesh.points[mesh.cells[:, 0]][:, None, :] + np.einsum('tij,qj->tqi', mesh.jacobians, ref)
        weights = mesh.areas[:, None] * rule.weights[None, :]
        tab = Tabulation(rule, values, gradients, hessians, points, weights)
        self._tabulations[key] = tab
        return tab

    def derivative_tensors(self, rule: QuadratureRule, order: int) -> np.ndarray:
        """Physical derivatives of every basis function: (T, q, nb) + (2,) * order."""
        ref = self.element.tabulate(rule.reference_points, order)
        inv_jac = np.linalg.inv(self.mesh.jacobians)
        out = np.broadcast_to(ref, (self.mesh.n_cells,) + ref.shape).copy()
        for axis in range(order):
            # contract reference axis with inv(J)[c, a] to obtain physical axis a
            out = np.moveaxis(np.einsum('tqi...c,tca->tqi...a', np.moveaxis(out, 3 + axis, -1), inv_jac),
                              -1, 3 + axis)
        return out

    def summary(self) -> dict:
        return {
            'degree': self.degree,
            'dofs': self.n_dofs,
            'boundary_dofs': len(self.boundary_dofs),
            'interior_dofs': len(self.interior_dofs),
            **self.mesh.summary(),
        }


def _check_space(space: LagrangeSpace, coefficients: np.ndarray):
    if coefficients.shape != (space.n_dofs,):
        raise ValueError(f"expected {space.n_dofs} coefficients, got shape {coefficients.shape}")


@dataclass(frozen=True, eq=False)
class PointEvaluation:
    value: object
    gradient: np.ndarray
    hessian: np.ndarray | None = None


class ScalarField:
    """Coefficient vector over V_h."""

    def __init__(self, space: LagrangeSpace, coefficients=None):
        self.space = space
        coefficients = np.zeros(space.n_dofs) if coefficients is None else np.asarray(coefficients, dtype=float)
        _check_space(space, coefficients)
        self.coefficients = coefficients

    def copy(self) -> 'ScalarField':
        return ScalarField(self.space, self.coefficients.copy())

    def __add__(self, other):
        return ScalarField(self.space, self.coefficients + other.coefficients)

    def __sub__(self, other):
        return ScalarField(self.space, self.coefficients - other.coefficients)

    def __mul__(self, alpha):
        return ScalarField(self.space, alpha * self.coefficients)

    __rmul__ = __mul__

    def _local(self):
        return self.coefficients[self.space.cell_dofs]

    def values_at(self, rule: QuadratureRule) -> np.ndarray:
        tab = self.space.tabulate(rule)
        return np.einsum('qi,ti->tq', tab.values, self._local())

    def gradients_at(self, rule: QuadratureRule) -> np.ndarray:
        tab = self.space.tabulate(rule)
        return np.einsum('tqia,ti->tqa', tab.gradients, self._local())

    def hessians_at(self, rule: QuadratureRule) -> np.ndarray:
        """Broken (element-by-element) Hessian at the quadrature points: (T, q, 2, 2)."""
        tab = self.space.tabulate(rule)
        return np.einsum('tqiab,ti->tqab', tab.hessians, self._local())

    def derivatives_at(self, rule: QuadratureRule, order: int) -> np.ndarray:
        tensors = self.space.derivative_tensors(rule, order)
        return np.einsum('tqi...,ti->tq...', tensors, self._local())


class MatrixField:
    """Symmetric matrix field in Sigma_h stored as three V_h coefficient vectors."""

    # (row, column) of c11, c12, c22 and their weights in the Frobenius product
    ENTRIES = ((0, 0), (0, 1), (1, 1))
    FROBENIUS_WEIGHTS = (1.0, 2.0, 1.0)

    def __init__(self, space: LagrangeSpace, c11=None, c12=None, c22=None):
        self.space = space
        components = []
        for c in (c11, c12, c22):
            c = np.zeros(space.n_dofs) if c is None else np.asarray(c, dtype=float)
            _check_space(space, c)
            components.append(c)
        self.c11, self.c12, self.c22 = components

    @classmethod
    def from_vector(cls, space: LagrangeSpace, vector) -> 'MatrixField':
        vector = np.asarray(vector, dtype=float)
        n = space.n_dofs
        if vector.shape != (3 * n,):
            raise ValueError(f"expected {3 * n} stacked coefficients, got shape {vector.shape}")
        return cls(space, vector[:n], vector[n:2 * n], vector[2 * n:])

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.c11, self.c12, self.c22])

    @property
    def components(self) -> tuple:
        return self.c11, self.c12, self.c22

    def component(self, index: int) -> ScalarField:
        return ScalarField(self.space, self.components[index])

    def trace(self) -> ScalarField:
        return ScalarField(self.space, self.c11 + self.c22)

    def __add__(self, other):
        return MatrixField.from_vector(self.space, self.coefficients + other.coefficients)

    def __sub__(self, other):
        return MatrixField.from_vector(self.space, self.coefficients - other.coefficients)

    def __mul__(self, alpha):
        return MatrixField.from_vector(self.space, alpha * self.coefficients)

    __rmul__ = __mul__

    def values_at(self, rule: QuadratureRule) -> Sym2x2:
        a11, a12, a22 = (self.component(i).values_at(rule) for i in range(3))
        return Sym2x2(a11, a12, a22)

    def gradients_at(self, rule: QuadratureRule) -> tuple:
        return tuple(self.component(i).gradients_at(rule) for i in range(3))


def _call(f, x, y):
    try:
        return f(x, y)
    except (ArithmeticError, ValueError) as exc:
        raise FieldEvaluationError(f"function evaluation failed at the nodes: {exc}") from exc


def _finite(values, x, y) -> np.ndarray:
    values = np.broadcast_to(np.asarray(values, dtype=float), np.shape(x))
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(values))[0]
        raise FieldEvaluationError(f"non-finite value at node ({x[bad]:.6g}, {y[bad]:.6g})")
    return values.copy()


def interpolate(f, space: LagrangeSpace) -> ScalarField:
    """Nodal interpolant I_h f; ``f(x, y)`` is called once on the arrays of DOF coordinates."""
    x, y = space.dof_coordinates.T
    return ScalarField(space, _finite(_call(f, x, y), x, y))


def interpolate_matrix(S, space: LagrangeSpace, rtol: float = 1e-12) -> MatrixField:
    """
    Componentwise nodal interpolant of a symmetric matrix function.

    ``S(x, y)`` returns [[s11, s12], [s21, s22]] (entries scalars or arrays).
    """
    x, y = space.dof_coordinates.T
    values = _call(S, x, y)
    (s11, s12), (s21, s22) = [[_finite(values[i][j], x, y) for j in range(2)] for i in range(2)]
    scale = max(1.0, float(np.abs(np.concatenate([s11, s12, s22])).max()))
    if np.max(np.abs(s12 - s21)) > rtol * scale:
        raise FieldEvaluationError("matrix function is not symmetric at the nodes")
    return MatrixField(space, s11, s12, s22)


def evaluate(field, triangle: int, barycentric) -> PointEvaluation:
    """
    Value and derivatives of the polynomial restriction of ``field`` to one triangle.

    ScalarField: value, gradient (2,), broken Hessian (2, 2).
    MatrixField: symmetric value (2, 2), gradient (2, 2, 2) with [i, j, a] = d/dx_a of entry ij.
    """
    space = field.space
    mesh = space.mesh
    if not 0 <= triangle < mesh.n_cells:
        raise IndexError(f"triangle {triangle} out of range [0, {mesh.n_cells})")
    bary = np.asarray(barycentric, dtype=float)
    if bary.shape != (3,) or np.any(bary < -1e-12) or abs(bary.sum() - 1.0) > 1e-12:
        raise ValueError(f"{barycentric} is not a point of the reference triangle")
    ref = bary[1:][None, :]
    inv_jac = np.linalg.inv(mesh.jacobians[triangle])
    phi = space.element.tabulate(ref, 0)[0]
    dphi = space.element.tabulate(ref, 1)[0] @ inv_jac
    d2phi = np.einsum('icd,ca,db->iab', space.element.tabulate(ref, 2)[0], inv_jac, inv_jac)
    dofs = space.cell_dofs[triangle]

    if isinstance(field, ScalarField):
        c = field.coefficients[dofs]
        return PointEvaluation(float(phi @ c), c @ dphi, np.einsum('iab,i->ab', d2phi, c))

    values = [float(phi @ comp[dofs]) for comp in field.components]
    grads = [comp[dofs] @ dphi for comp in field.components]
    value = np.array([[values[0], values[1]], [values[1], values[2]]])
    gradient = np.array([[grads[0], grads[1]], [grads[1], grads[2]]])
    return PointEvaluation(value, gradient)
