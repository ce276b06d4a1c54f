"""
Preshape - Curvature Module
Curvatura media discreta y direcciones de la componente normal

Considera:
- Gradiente del área = K X (K rigidez P1, Laplaciano de cotangentes)
- kappa_i = ⟨(K X)_i, n_i⟩ / (dim · A_i), positiva en la esfera con normal saliente
- A_i: área de cotangentes (exacta en la esfera) o baricéntrica
- Borde: kappa = 0
"""

import numpy as np
from scipy import sparse

from fields.containers import NodalField
from fields.targets import TargetSpec, target_terms
from mesh_core.fem import p1_stiffness
from mesh_core.geometry import scatter_add
from preshape.derivative import Component, DerivativeCovector
from preshape.state import PreShapeState
from utils.errors import GeometryError


def area_gradient(state: PreShapeState) -> np.ndarray:
    """∂|phi(M)|/∂p_i = Σ_C w_C G_Ci, forma (n_v, d)."""
    w = state.current_volumes
    return scatter_add(state.cells, w[:, None, None] * state.basis_gradients, state.n_vertices)


def cotangent_vertex_areas(state: PreShapeState) -> np.ndarray:
    """
    A_i = Σ_{j≠i} (-K_ij) |p_i - p_j|² / (2 dim)

    Coincide con el área de Voronoi en triángulos no obtusos y con el área
    baricéntrica en mallas planas; donde no es positiva se usa la baricéntrica.
    """
    K = sparse.coo_matrix(p1_stiffness(state.positions, state.cells))
    off = K.row != K.col
    rows, cols, data = K.row[off], K.col[off], K.data[off]
    sq = np.sum((state.positions[rows] - state.positions[cols]) ** 2, axis=1)
    areas = np.bincount(rows, weights=-data * sq, minlength=state.n_vertices) / (2.0 * state.dim_cell)
    fallback = state.vertex_areas
    return np.where(areas > 1e-3 * fallback, areas, fallback)


def mean_curvature(state: PreShapeState, area: str = "barycentric") -> NodalField:
    """
    Curvatura media discreta por vértice

    Args:
        state: estado de una malla de codimensión 1
        area: 'barycentric' (A_i = vol/(k+1) por celda incidente) o 'cotangent'

    Returns:
        NodalField 'kappa' (cero en los vértices de borde)
    """
    if state.codim != 1:
        raise GeometryError("mean curvature needs a codimension-1 mesh")
    grad_area = area_gradient(state)
    if area == "cotangent":
        areas = cotangent_vertex_areas(state)
    elif area == "barycentric":
        areas = state.vertex_areas
    else:
        raise ValueError(f"unknown vertex area {area!r}")
    normal_part = np.einsum('ia,ia->i', grad_area, state.vertex_normals)
    kappa = normal_part / (state.dim_cell * areas)
    kappa[~state.interior_mask] = 0.0
    return NodalField(kappa, state.reference_mesh, name="kappa")


def _vertex_average(state: PreShapeState, cell_values: np.ndarray) -> np.ndarray:
    w = state.current_volumes
    k1 = state.dim_cell + 1
    num = scatter_add(state.cells, np.repeat((w * cell_values)[:, None], k1, axis=1), state.n_vertices)
    den = scatter_add(state.cells, np.repeat(w[:, None], k1, axis=1), state.n_vertices)
    return num / den


def minimal_surface_descent_direction(state: PreShapeState) -> DerivativeCovector:
    """
    Componente normal de la derivada de ½∫(det D^tau phi)^-2 (caso f=0, g=1)

    d_i = -(dim/2) (det^-1)²_i kappa_i A_i n_i. Se usa en ascenso: avanzar
    según su representación reduce el área de la superficie.

    Raises:
        GeometryError: superficie cerrada (problema de Plateau sin borde)
    """
    if state.codim != 1:
        raise GeometryError("minimal surfaces need a codimension-1 mesh")
    if state.reference_mesh.is_closed:
        raise GeometryError("closed surface: the Plateau problem needs a fixed boundary")
    n = state.vertex_normals
    inv_det_sq = _vertex_average(state, (1.0 / state.jacobian_determinants()) ** 2)
    kappa_area = np.einsum('ia,ia->i', area_gradient(state), n) / state.dim_cell
    values = -(state.dim_cell / 2.0) * (inv_det_sq * kappa_area)[:, None] * n
    values[~state.interior_mask] = 0.0
    return DerivativeCovector(values, Component.NORMAL, state.interior_mask, form="curvature")


def normal_curvature_covector(state: PreShapeState, spec: TargetSpec) -> DerivativeCovector:
    """
    Componente normal en forma de curvatura

    d_i = A_i [ -(½(rho² - f²) dim kappa + (rho - f) s ∂q/∂n)
                + K (∂q/∂n + dim kappa q) ]_i n_i

    con valores de vértice promediados por área y K = (∫g/(∫q)²) Σ w (rho - f) q.
    """
    if state.codim != 1:
        raise GeometryError("the curvature form needs a codimension-1 mesh")
    terms = target_terms(spec, state)
    n = state.vertex_normals
    areas = cotangent_vertex_areas(state)
    kappa = mean_curvature(state, area="cotangent").values
    dim = state.dim_cell
    if spec.is_uniform:
        q = np.ones(state.n_vertices)
        dq_dn = np.zeros(state.n_vertices)
    else:
        expr = spec.compiled()
        q = expr.evaluate(state.positions)
        dq_dn = np.einsum('ia,ia->i', expr.gradient(state.positions), n)
    rho = _vertex_average(state, state.density())
    f = terms.scale * q
    speed = -(0.5 * (rho ** 2 - f ** 2) * dim * kappa + (rho - f) * terms.scale * dq_dn)
    if terms.normalized:
        w = state.current_volumes
        K = terms.scale / terms.total_q * float(np.sum(w * (state.density() - terms.values) * terms.q))
        speed += K * (dq_dn + dim * kappa * q)
    values = (areas * speed)[:, None] * n
    values[~state.interior_mask] = 0.0
    return DerivativeCovector(values, Component.NORMAL, state.interior_mask, form="curvature")
