"""
Preshape - Derivative Module
Funcional de seguimiento de parametrización y su derivada de pre-forma

Calcula:
- J = ½ Σ_C (rho_C - f_C)² w_C
- Covector exacto de la discretización (Full) sobre campos P1
- Componente tangencial (base de prueba proyectada en los vértices) y normal
- Forma de curvatura de la componente normal (comparación)
- Derivada material de la densidad objetivo

Para V P1, div_Γ V en C es Σ_j V_j·G_Cj y dw_C = w_C div_Γ V; el centroide
actual se mueve con el promedio de V en la celda.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from fields.containers import CellField
from fields.targets import TargetSpec, target_terms
from mesh_core.geometry import scatter_add
from preshape.state import PreShapeState
from utils.errors import ComponentError, FieldError
from utils.logger import setup_logger

logger = setup_logger(__name__)


class Component(str, Enum):
    FULL = "Full"
    TANGENTIAL = "Tangential"
    NORMAL = "Normal"


@dataclass
class DerivativeCovector:
    """
    Covector d con DJ[V] = Σ_i d_i·V(p_i) sobre los vértices interiores

    Las entradas de borde se reportan pero no intervienen en el emparejamiento.
    """
    values: np.ndarray
    component: Component
    interior: np.ndarray
    form: str = "discrete"

    def pair(self, V: np.ndarray) -> float:
        V = np.asarray(V, dtype=float)
        if V.shape != self.values.shape:
            raise FieldError(f"test field shape {V.shape}, expected {self.values.shape}")
        return float(np.einsum('ia,ia->', self.values[self.interior], V[self.interior]))

    def interior_values(self) -> np.ndarray:
        return np.where(self.interior[:, None], self.values, 0.0)

    def max_norm(self) -> float:
        inner = self.values[self.interior]
        return float(np.linalg.norm(inner, axis=1).max()) if inner.size else 0.0

    def negated(self) -> "DerivativeCovector":
        return DerivativeCovector(-self.values, self.component, self.interior, self.form)


def objective(state: PreShapeState, target: CellField) -> float:
    """
    Valor del funcional de seguimiento

    Args:
        state: estado actual
        target: f construida para la configuración actual

    Returns:
        ½ Σ (rho - f)² vol_cur >= 0
    """
    if target.values.shape[0] != state.reference_mesh.n_cells:
        raise FieldError("target does not match the state's cells")
    residual = state.density() - target.values
    return 0.5 * float(np.sum(residual ** 2 * state.current_volumes))


def vertex_projectors(normals: np.ndarray) -> np.ndarray:
    """P_i = I - n_i n_i^T, forma (n_v, d, d)."""
    d = normals.shape[1]
    return np.eye(d)[None, :, :] - np.einsum('ia,ib->iab', normals, normals)


def full_covector_values(state: PreShapeState, spec: TargetSpec,
                         ref_frames=None, cur_frames=None) -> np.ndarray:
    """
    Derivada exacta de J discreto respecto a las posiciones de los vértices

    Contribuciones de la celda C al vértice local j (a = ½(rho² - f²), b = rho - f):
      - w a G_Cj                          (término de divergencia)
      - w b s ∇q_C / (k+1)                (derivada material local, s = ∫g/∫q)
      + K w (∇q_C / (k+1) + q_C G_Cj)     (variación de ∫q, K = (∫g/(∫q)²) Σ w b q)
    """
    terms = target_terms(spec, state)
    rho = state.density(ref_frames, cur_frames)
    f = terms.values
    w = state.current_volumes
    G = state.basis_gradients
    k1 = state.dim_cell + 1

    a = 0.5 * (rho ** 2 - f ** 2)
    b = rho - f
    local = -(w * a)[:, None, None] * G
    if np.any(terms.grad_q != 0.0):
        local -= (w * b * terms.scale)[:, None, None] * terms.grad_q[:, None, :] / k1
    if terms.normalized:
        K = terms.scale / terms.total_q * float(np.sum(w * b * terms.q))
        local += K * w[:, None, None] * (terms.grad_q[:, None, :] / k1 + terms.q[:, None, None] * G)
    return scatter_add(state.cells, local, state.n_vertices)


def assemble_derivative(
    state: PreShapeState,
    spec: TargetSpec,
    component: Component = Component.FULL,
    normal_form: str = "projected",
    ref_frames: Optional[np.ndarray] = None,
    cur_frames: Optional[np.ndarray] = None,
) -> DerivativeCovector:
    """
    Ensambla el covector de la derivada de pre-forma

    Args:
        state: estado actual
        spec: densidad objetivo
        component: Full, Tangential o Normal
        normal_form: 'projected' (complemento de la proyección en vértices) o
            'curvature' (términos con kappa y ∂f/∂n)
        ref_frames, cur_frames: marcos explícitos para det D^tau phi

    Returns:
        DerivativeCovector

    Raises:
        ComponentError: Normal sobre una malla de codimensión 0
    """
    component = Component(component)
    if component == Component.NORMAL and state.codim == 0:
        raise ComponentError("codimension-0 meshes have no normal component")
    interior = state.interior_mask

    if component == Component.NORMAL and normal_form == "curvature":
        from preshape.curvature import normal_curvature_covector
        return normal_curvature_covector(state, spec)

    full = full_covector_values(state, spec, ref_frames, cur_frames)
    if component == Component.FULL or state.codim == 0:
        return DerivativeCovector(full, component, interior)

    P = vertex_projectors(state.vertex_normals)
    tangential = np.einsum('iab,ib->ia', P, full)
    if component == Component.TANGENTIAL:
        return DerivativeCovector(tangential, component, interior, form="projected")
    return DerivativeCovector(full - tangential, component, interior, form="projected")


def material_derivative_target(state: PreShapeState, spec: TargetSpec, V: np.ndarray,
                               form: str = "stokes") -> CellField:
    """
    Derivada material de f_phi en la dirección V, por celda

    Local: s ∇q(c_C)·V(c_C). No local: -(∫g/(∫q)²) q_C dQ[V] con
    - form='discrete': dQ = Σ_D w_D (∇q_D·V(c_D) + q_D div V)
    - form='stokes': codimensión 0 -> 0 (V nulo en ∂D); superficies ->
      Σ_i A_i (∂q/∂n + dim·kappa·q)_i ⟨V_i, n_i⟩

    Args:
        state: estado actual
        spec: densidad objetivo; Uniform da el campo nulo (f constante con el
            volumen fijado por el borde)
        V: campo P1 (n_v, d)
        form: 'stokes' o 'discrete'
    """
    V = np.asarray(V, dtype=float)
    if V.shape != (state.n_vertices, state.dim_ambient):
        raise FieldError(f"V shape {V.shape}, expected {(state.n_vertices, state.dim_ambient)}")
    if spec.is_uniform:
        return CellField(np.zeros(state.reference_mesh.n_cells), state.reference_mesh, name="material_derivative")
    terms = target_terms(spec, state)
    V_centroid = V[state.cells].mean(axis=1)
    local = terms.scale * np.einsum('na,na->n', terms.grad_q, V_centroid)
    if not terms.normalized:
        return CellField(local, state.reference_mesh, name="material_derivative")

    if form == "discrete":
        dQ = total_q_variation(state, spec, V, terms)
    elif form == "stokes":
        dQ = 0.0 if state.codim == 0 else _stokes_q_variation(state, spec, V)
    else:
        raise ValueError(f"unknown form {form!r}")
    nonlocal_term = -(terms.total_mass / terms.total_q ** 2) * terms.q * dQ
    return CellField(local + nonlocal_term, state.reference_mesh, name="material_derivative")


def total_q_variation(state: PreShapeState, spec: TargetSpec, V: np.ndarray, terms=None) -> float:
    """dQ[V] = Σ_C w_C (∇q_C·V(c_C) + q_C div_Γ V) (variación exacta de Σ q w)."""
    terms = terms if terms is not None else target_terms(spec, state)
    w = state.current_volumes
    V_cells = V[state.cells]
    div = np.einsum('nja,nja->n', V_cells, state.basis_gradients)
    advect = np.einsum('na,na->n', terms.grad_q, V_cells.mean(axis=1))
    return float(np.sum(w * (advect + terms.q * div)))


def _stokes_q_variation(state: PreShapeState, spec: TargetSpec, V: np.ndarray) -> float:
    from preshape.curvature import cotangent_vertex_areas, mean_curvature

    n = state.vertex_normals
    areas = cotangent_vertex_areas(state)
    kappa = mean_curvature(state, area="cotangent").values
    if spec.is_uniform:
        q = np.ones(state.n_vertices)
        dq_dn = np.zeros(state.n_vertices)
    else:
        expr = spec.compiled()
        q = expr.evaluate(state.positions)
        dq_dn = np.einsum('ia,ia->i', expr.gradient(state.positions), n)
    normal_speed = np.einsum('ia,ia->i', V, n)
    weights = areas * (dq_dn + state.dim_cell * kappa * q) * normal_speed
    return float(np.sum(weights[state.interior_mask]))
