"""
Mesh Core - FEM Module
Ensamblaje P1 escalar (rigidez y masa) sobre simplices de cualquier dimensión

Para triángulos la rigidez es el Laplaciano de cotangentes.
"""

from typing import Optional

import numpy as np
from scipy import sparse

from mesh_core.geometry import basis_gradients, cell_volumes


def local_to_global(cells: np.ndarray, block: int = 1):
    """Índices (filas, columnas) de las matrices locales aplanadas."""
    if block == 1:
        dofs = cells
    else:
        dofs = (cells[:, :, None] * block + np.arange(block)).reshape(cells.shape[0], -1)
    m = dofs.shape[1]
    rows = np.repeat(dofs, m, axis=1)
    cols = np.tile(dofs, (1, m))
    return rows.ravel(), cols.ravel()


def p1_stiffness(vertices: np.ndarray, cells: np.ndarray,
                 coefficient: Optional[np.ndarray] = None) -> sparse.csr_matrix:
    """
    Matriz de rigidez K_ij = Σ_C c_C w_C G_Ci·G_Cj

    Args:
        vertices: coordenadas (n_v, d)
        cells: (n_c, k+1)
        coefficient: coeficiente por celda (por defecto 1)
    """
    G = basis_gradients(vertices, cells)
    w = cell_volumes(vertices, cells)
    if coefficient is not None:
        w = w * coefficient
    local = w[:, None, None] * np.einsum('nid,njd->nij', G, G)
    rows, cols = local_to_global(cells)
    n = vertices.shape[0]
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def p1_mass(vertices: np.ndarray, cells: np.ndarray) -> sparse.csr_matrix:
    """Matriz de masa consistente: w/((k+1)(k+2)) · (1 + δ_ij)."""
    w = cell_volumes(vertices, cells)
    k1 = cells.shape[1]
    pattern = (np.ones((k1, k1)) + np.eye(k1)) / (k1 * (k1 + 1))
    local = w[:, None, None] * pattern[None, :, :]
    rows, cols = local_to_global(cells)
    n = vertices.shape[0]
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
