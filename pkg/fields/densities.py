"""
Fields - Densities Module
Densidad inicial de nodos g^M y densidad actual de la parametrización

Considera:
- g^M estimada como promedio de inversos de volúmenes de celdas vecinas
- Normalización a integral 1 (cuadratura P1 sobre la referencia)
- Densidad actual por celda: promedio de g^M en la celda por vol_ref/vol_cur
"""

from typing import TYPE_CHECKING, Optional

import numpy as np

from fields.containers import CellField, NodalField
from mesh_core.geometry import cell_volumes, scatter_add
from mesh_core.simplicial_mesh import SimplicialMesh
from utils.logger import setup_logger

if TYPE_CHECKING:
    from preshape.state import PreShapeState

logger = setup_logger(__name__)


def integrate_nodal(values: np.ndarray, mesh: SimplicialMesh, positions: Optional[np.ndarray] = None) -> float:
    """Integral exacta de un campo P1: suma de vol(C) por el promedio en C."""
    vertices = mesh.vertices if positions is None else positions
    vols = cell_volumes(vertices, mesh.cells)
    return float(np.sum(vols * np.asarray(values)[mesh.cells].mean(axis=1)))


def estimate_gM(mesh: SimplicialMesh) -> NodalField:
    """
    Estima la densidad inicial de nodos

    g(p_i) = promedio sobre las celdas incidentes de 1/vol(C), reescalada
    para que su integral sobre la malla sea 1.

    Args:
        mesh: malla de referencia

    Returns:
        NodalField estrictamente positivo
    """
    vols = cell_volumes(mesh.vertices, mesh.cells)
    k1 = mesh.cells.shape[1]
    inverse = np.repeat((1.0 / vols)[:, None], k1, axis=1)
    total = scatter_add(mesh.cells, inverse, mesh.n_vertices)
    count = scatter_add(mesh.cells, np.ones_like(inverse), mesh.n_vertices)
    raw = np.divide(total, count, out=np.zeros_like(total), where=count > 0)
    integral = integrate_nodal(raw, mesh)
    logger.debug(f"gM estimate: raw integral {integral:.6e}")
    return NodalField(raw / integral, mesh, name="gM")


def uniform_gM(mesh: SimplicialMesh) -> NodalField:
    """Densidad constante 1/|M|."""
    volume = float(cell_volumes(mesh.vertices, mesh.cells).sum())
    return NodalField(np.full(mesh.n_vertices, 1.0 / volume), mesh, name="gM")


def current_density(state: "PreShapeState", ref_frames=None, cur_frames=None) -> CellField:
    """
    Densidad de vértices de la configuración actual

    rho_C = promedio de g^M en C / det D^tau phi, con det = vol_cur/vol_ref
    (o calculado con marcos ortonormales explícitos).

    Args:
        state: estado actual
        ref_frames, cur_frames: marcos opcionales (n_c, d, k)

    Returns:
        CellField 'density'
    """
    det = state.jacobian_determinants(ref_frames, cur_frames)
    return CellField(state.cell_mean_gM / det, state.reference_mesh, name="density")
