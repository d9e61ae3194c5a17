"""
Legacy ASCII VTK export. Every DOF becomes a point; each degree-k triangle is
split into k^2 linear triangles over its Lagrange nodes.
"""
import io
import logging

import numpy as np

from fem.spaces import LagrangeSpace, MatrixField, ScalarField
from studies.reports import atomic_write_text

logger = logging.getLogger(__name__)

VTK_TRIANGLE = 5


def _lattice_index(space: LagrangeSpace) -> dict:
    k = space.degree
    lattice = np.rint(space.element.nodes * k).astype(int)
    return {(int(i), int(j)): local for local, (i, j) in enumerate(lattice)}


def subdivide(space: LagrangeSpace) -> np.ndarray:
    """(T * k^2, 3) global DOF triples of the linear sub-triangles, counter-clockwise."""
    k, index = space.degree, _lattice_index(space)
    local = []
    for j in range(k):
        for i in range(k - j):
            local.append((index[i, j], index[i + 1, j], index[i, j + 1]))
            if i + j <= k - 2:
                local.append((index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]))
    local = np.asarray(local)
    return space.cell_dofs[:, local].reshape(-1, 3)


def _block(array, fmt) -> str:
    buffer = io.StringIO()
    np.savetxt(buffer, array, fmt=fmt)
    return buffer.getvalue()


def render_vtk(u: ScalarField, sigma: MatrixField | None = None, title: str = 'Monge-Ampere solution') -> str:
    space = u.space
    points = np.column_stack([space.dof_coordinates, np.zeros(space.n_dofs)])
    cells = subdivide(space)
    parts = [
        "# vtk DataFile Version 3.0\n",
        f"{title}\n",
        "ASCII\n",
        "DATASET UNSTRUCTURED_GRID\n",
        f"POINTS {len(points)} double\n",
        _block(points, '%.16e'),
        f"CELLS {len(cells)} {4 * len(cells)}\n",
        _block(np.column_stack([np.full(len(cells), 3), cells]), '%d'),
        f"CELL_TYPES {len(cells)}\n",
        _block(np.full(len(cells), VTK_TRIANGLE), '%d'),
        f"POINT_DATA {len(points)}\n",
    ]
    scalars = [('u', u.coefficients)]
    if sigma is not None:
        scalars += [(f"sigma_{name[1:]}", values) for name, values in zip(('c11', 'c12', 'c22'), sigma.components)]
    for name, values in scalars:
        parts += [f"SCALARS {name} double 1\n", "LOOKUP_TABLE default\n", _block(values, '%.16e')]
    return ''.join(parts)


def export_vtk(path, u: ScalarField, sigma: MatrixField | None = None, title: str = 'Monge-Ampere solution'):
    """Write ``u`` (and the components of ``sigma``) as point data; the write is atomic."""
    if sigma is not None and sigma.space is not u.space:
        raise ValueError("u and sigma must live on the same space")
    path = atomic_write_text(path, render_vtk(u, sigma, title))
    logger.info("vtk written path=%s points=%d", path, u.space.n_dofs)
    return path
