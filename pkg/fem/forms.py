"""
Assembly of the bilinear and linear forms of the mixed Monge-Ampere system.

With D_ab[i, j] = (d_a phi_i, d_b phi_j) and G_ab[i, j] = <n_a d_b phi_j, phi_i>,
the Sigma_h blocks (rows ordered c11 | c12 | c22, columns V_h) are

    M = diag(Ms, 2 Ms, Ms)                 (eta, tau), Frobenius weight 2 off the diagonal
    B = [D_00; D_10 + D_01; D_11]          (div tau, D w)
    G = [G_00; G_10 + G_01; G_11]          <D w, tau n>
    K = D_00 + D_11                        (D w, D v)

Element loops are vectorized; ``threads > 1`` splits the triangles into
contiguous chunks whose triplets are concatenated in chunk order.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from fem.linalg import Factorization, Sym2x2, assemble_csr, det2, factorize_spd
from fem.mesh import LOCAL_EDGES
from fem.quadrature import EdgeRule, QuadratureRule, make_edge_quadrature, make_quadrature
from fem.spaces import REFERENCE_VERTICES, LagrangeSpace, MatrixField, interpolate
from mongeampere.exceptions import QuadratureError

logger = logging.getLogger(__name__)


def default_rule(space: LagrangeSpace) -> QuadratureRule:
    """Exactness 3k: integrates det(sigma_h) v and cof(sigma_h):tau v exactly."""
    return make_quadrature(3 * space.degree)


def load_rule(space: LagrangeSpace) -> QuadratureRule:
    """Exactness 3k + 4 for loads of non-polynomial data."""
    return make_quadrature(3 * space.degree + 4)


def _require(rule, degree, what):
    if rule.exactness_degree < degree:
        raise QuadratureError(
            f"{what} needs quadrature exactness {degree}, rule has {rule.exactness_degree}")


def _chunks(n_cells, threads):
    bounds = np.linspace(0, n_cells, max(1, min(threads, n_cells)) + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _map_chunks(fn, n_cells, threads):
    chunks = _chunks(n_cells, threads)
    if len(chunks) == 1:
        return [fn(chunks[0])]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        return list(pool.map(fn, chunks))


def _scatter_matrix(cell_dofs, local, shape) -> sp.csr_matrix:
    """Sum (T, nb, nb) element blocks into a global sparse matrix."""
    nb = cell_dofs.shape[1]
    rows = np.repeat(cell_dofs, nb, axis=1)
    cols = np.tile(cell_dofs, (1, nb))
    return assemble_csr(rows, cols, local.reshape(len(local), -1), shape)


def _scatter_vector(cell_dofs, local, n) -> np.ndarray:
    return np.bincount(cell_dofs.ravel(), weights=local.ravel(), minlength=n)


@dataclass(frozen=True, eq=False)
class MixedOperators:
    space: LagrangeSpace
    rule: QuadratureRule
    edge_rule: EdgeRule
    mass: sp.csr_matrix  # scalar mass Ms
    M: sp.csr_matrix
    B: sp.csr_matrix
    G: sp.csr_matrix
    K: sp.csr_matrix

    @cached_property
    def mass_factorization(self) -> Factorization:
        """One factorization of Ms serves all three Sigma_h components."""
        return factorize_spd(self.mass)

    @cached_property
    def hessian_rhs_operator(self) -> sp.csr_matrix:
        """v -> -(div tau, D v) + <D v, tau n> for every tau in the Sigma_h basis."""
        return (self.G - self.B).tocsr()

    @cached_property
    def interior_stiffness(self) -> sp.csr_matrix:
        idx = self.space.interior_dofs
        return self.K[idx][:, idx].tocsr()

    @cached_property
    def interior_stiffness_factorization(self) -> Factorization:
        return factorize_spd(self.interior_stiffness)

    def h1_norm(self, coefficients) -> float:
        """Discrete H^1 norm sqrt(d^T (K + Ms) d) of a V_h coefficient vector."""
        d = np.asarray(coefficients)
        return float(np.sqrt(max(d @ (self.K @ d) + d @ (self.mass @ d), 0.0)))

    def h1_seminorm(self, coefficients) -> float:
        d = np.asarray(coefficients)
        return float(np.sqrt(max(d @ (self.K @ d), 0.0)))

    def l2_norm(self, coefficients) -> float:
        d = np.asarray(coefficients)
        return float(np.sqrt(max(d @ (self.mass @ d), 0.0)))

    def matrix_l2_norm(self, field: MatrixField) -> float:
        d = field.coefficients
        return float(np.sqrt(max(d @ (self.M @ d), 0.0)))


def assemble_mixed_operators(space: LagrangeSpace, rule: QuadratureRule | None = None,
                             edge_rule: EdgeRule | None = None, threads: int = 1) -> MixedOperators:
    k, N = space.degree, space.n_dofs
    rule = default_rule(space) if rule is None else rule
    edge_rule = make_edge_quadrature(2 * k) if edge_rule is None else edge_rule
    _require(rule, 2 * k, "mass matrix")
    _require(edge_rule, 2 * k - 1, "boundary coupling")

    tab = space.tabulate(rule)

    def element_blocks(chunk):
        w, grad = tab.weights[chunk], tab.gradients[chunk]
        mass = np.einsum('tq,qi,qj->tij', w, tab.values, tab.values, optimize=True)
        stiff = np.einsum('tq,tqia,tqjb->tabij', w, grad, grad, optimize=True)
        return mass, stiff

    parts = _map_chunks(element_blocks, space.mesh.n_cells, threads)
    mass_local = np.concatenate([p[0] for p in parts])
    stiff_local = np.concatenate([p[1] for p in parts])
    cell_dofs = space.cell_dofs
    Ms = _scatter_matrix(cell_dofs, mass_local, (N, N))
    D = [[_scatter_matrix(cell_dofs, stiff_local[:, a, b], (N, N)) for b in range(2)] for a in range(2)]
    Gab = _boundary_blocks(space, edge_rule)

    M = sp.block_diag([Ms, 2.0 * Ms, Ms], format='csr')
    B = sp.vstack([D[0][0], D[1][0] + D[0][1], D[1][1]], format='csr')
    G = sp.vstack([Gab[0][0], Gab[1][0] + Gab[0][1], Gab[1][1]], format='csr')
    K = (D[0][0] + D[1][1]).tocsr()
    logger.debug("assembled mixed operators: %d scalar dofs, nnz(M)=%d nnz(B)=%d nnz(G)=%d",
                 N, M.nnz, B.nnz, G.nnz)
    return MixedOperators(space, rule, edge_rule, Ms, M, B, G, K)


def _boundary_blocks(space: LagrangeSpace, edge_rule: EdgeRule):
    """G_ab = <n_a d_b phi_j, phi_i> summed over boundary edges, grouped by local edge index."""
    mesh, element, N = space.mesh, space.element, space.n_dofs
    normals, lengths = mesh.boundary_normals
    cells, local_edge = mesh.boundary_cells.T
    inv_jac = np.linalg.inv(mesh.jacobians)
    rows, cols, vals = [], [], [[[] for _ in range(2)] for _ in range(2)]
    nb = element.n_basis
    for e, (a, b) in enumerate(LOCAL_EDGES):
        sel = np.flatnonzero(local_edge == e)
        if not len(sel):
            continue
        s = edge_rule.points[:, None]
        ref = REFERENCE_VERTICES[a] + s * (REFERENCE_VERTICES[b] - REFERENCE_VERTICES[a])
        phi = element.tabulate(ref, 0)
        grad = np.einsum('qic,tca->tqia', element.tabulate(ref, 1), inv_jac[cells[sel]])
        dofs = space.cell_dofs[cells[sel]]
        rows.append(np.repeat(dofs, nb, axis=1))
        cols.append(np.tile(dofs, (1, nb)))
        for p in range(2):
            for d in range(2):
                block = np.einsum('q,qi,tqj->tij', edge_rule.weights, phi, grad[..., d])
                block *= (lengths[sel] * normals[sel, p])[:, None, None]
                vals[p][d].append(block.reshape(len(sel), -1))
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    return [[assemble_csr(rows, cols, np.concatenate(vals[p][d]), (N, N)) for d in range(2)]
            for p in range(2)]


def assemble_scalar_load(f, space: LagrangeSpace, rule: QuadratureRule | None = None) -> np.ndarray:
    """(f, phi_i) for every V_h DOF; ``f(x, y)`` is evaluated on arrays of quadrature points."""
    rule = load_rule(space) if rule is None else rule
    tab = space.tabulate(rule)
    values = np.broadcast_to(np.asarray(f(tab.points[..., 0], tab.points[..., 1]), dtype=float),
                             tab.weights.shape)
    local = np.einsum('tq,qi->ti', tab.weights * values, tab.values)
    return _scatter_vector(space.cell_dofs, local, space.n_dofs)


def assemble_det_load(eta: MatrixField, space: LagrangeSpace | None = None,
                      rule: QuadratureRule | None = None) -> np.ndarray:
    """(det eta, phi_i) over the interior DOFs, exact for degree-k fields with a 3k rule."""
    space = eta.space if space is None else space
    rule = default_rule(space) if rule is None else rule
    _require(rule, 3 * space.degree, "determinant load")
    tab = space.tabulate(rule)
    det = det2(eta.values_at(rule))
    local = np.einsum('tq,qi->ti', tab.weights * det, tab.values)
    return _scatter_vector(space.cell_dofs, local, space.n_dofs)[space.interior_dofs]


def assemble_weighted_mass(weight: np.ndarray, space: LagrangeSpace, rule: QuadratureRule) -> sp.csr_matrix:
    """(w phi_j, phi_i) for a weight given at the quadrature points, shape (T, q)."""
    tab = space.tabulate(rule)
    local = np.einsum('tq,qi,qj->tij', tab.weights * weight, tab.values, tab.values, optimize=True)
    return _scatter_matrix(space.cell_dofs, local, (space.n_dofs, space.n_dofs))


def assemble_newton_jacobian_block(eta: MatrixField, space: LagrangeSpace | None = None,
                                   rule: QuadratureRule | None = None) -> sp.csr_matrix:
    """
    (cof eta : tau_j, phi_i) for interior test functions phi_i and the Sigma_h basis tau_j.

    cof eta : tau = eta22 tau11 - 2 eta12 tau12 + eta11 tau22, so the block is
    three weighted mass matrices side by side.
    """
    space = eta.space if space is None else space
    rule = default_rule(space) if rule is None else rule
    _require(rule, 3 * space.degree, "Newton Jacobian")
    values: Sym2x2 = eta.values_at(rule)
    weights = (values.a22, -2.0 * values.a12, values.a11)
    blocks = [assemble_weighted_mass(w, space, rule) for w in weights]
    return sp.hstack(blocks, format='csr')[space.interior_dofs]


@dataclass(frozen=True, eq=False)
class DirichletSystem:
    """Interior system left after eliminating prescribed boundary values."""
    matrix: sp.csr_matrix
    rhs: np.ndarray
    interior: np.ndarray
    boundary: np.ndarray
    boundary_values: np.ndarray
    size: int

    def expand(self, interior_values) -> np.ndarray:
        full = np.empty(self.size)
        full[self.interior] = interior_values
        full[self.boundary] = self.boundary_values
        return full


def apply_dirichlet(A, b, boundary_dofs, values) -> DirichletSystem:
    """Symmetric elimination: rows and columns of the boundary DOFs are removed."""
    A = sp.csr_matrix(A)
    n = A.shape[0]
    boundary = np.asarray(boundary_dofs, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    if values.shape != boundary.shape:
        raise ValueError(f"{len(boundary)} boundary DOFs but {values.size} boundary values")
    mask = np.ones(n, dtype=bool)
    mask[boundary] = False
    interior = np.flatnonzero(mask)
    rhs = np.asarray(b, dtype=float)[interior] - A[interior][:, boundary] @ values
    return DirichletSystem(A[interior][:, interior].tocsr(), rhs, interior, boundary, values, n)


def boundary_values(g, space: LagrangeSpace) -> np.ndarray:
    """g_h = I_h g restricted to the boundary DOFs."""
    return interpolate(g, space).coefficients[space.boundary_dofs]
