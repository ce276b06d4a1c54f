"""
Metric - Elasticity Module
Representa el covector de la derivada como campo de gradiente P1

Resuelve, para todo V P1 nulo en la frontera de Dirichlet:

    alpha_LE ∫ mu ε(U):ε(V) + alpha_L2 ∫ U·V = rhs(V)

Considera:
- Solo la parte de cizalla de la elasticidad lineal (sin término lambda·div)
- mu armónico: mu_max en los vértices de la forma, mu_min en ∂D
- Factorización dispersa directa hasta direct_limit incógnitas, CG con
  precondicionador de Jacobi por encima
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy import sparse
from scipy.sparse.linalg import cg, spsolve

from fields.containers import NodalField
from mesh_core.fem import local_to_global, p1_mass, p1_stiffness
from mesh_core.geometry import basis_gradients, cell_volumes
from mesh_core.simplicial_mesh import SimplicialMesh
from utils.errors import ConfigError, FieldError, GeometryError, SolverError
from utils.logger import setup_logger

logger = setup_logger(__name__)


class MetricConfig(BaseModel):
    """Pesos de la métrica y cotas del parámetro de Lamé"""
    alpha_LE: float = Field(default=0.02, gt=0, description="Peso de la forma de elasticidad")
    alpha_L2: float = Field(default=1.0, ge=0, description="Peso del término de masa L2")
    mu_max: float = Field(default=1.0, gt=0, description="mu en los vértices de la forma")
    mu_min: float = Field(default=1.0, gt=0, description="mu en la frontera del dominio")
    direct_limit: int = Field(default=200_000, gt=0, description="Incógnitas máximas para el solver directo")
    solver_rtol: float = Field(default=1e-10, gt=0, description="Residuo algebraico relativo máximo")


@dataclass
class GradientField:
    """Campo de gradiente U por vértice del dominio; nulo en Dirichlet"""
    values: np.ndarray
    mesh: SimplicialMesh
    dirichlet: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    residual: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = (self.mesh.n_vertices, self.mesh.dim_ambient)
        if self.values.shape != shape:
            raise FieldError(f"gradient field shape {self.values.shape}, expected {shape}")
        if not np.all(np.isfinite(self.values)):
            raise FieldError("gradient field has non-finite values")
        if np.any(self.values[self.dirichlet] != 0.0):
            raise FieldError("gradient field must vanish on the Dirichlet boundary")


def solve_mu(
    mesh: SimplicialMesh,
    shape_vertices: Sequence[int],
    cfg: MetricConfig,
    boundary_vertices: Optional[Sequence[int]] = None,
    positions: Optional[np.ndarray] = None,
) -> NodalField:
    """
    Campo de Lamé armónico

    Args:
        mesh: malla del dominio
        shape_vertices: vértices con mu = mu_max
        cfg: configuración de la métrica
        boundary_vertices: vértices con mu = mu_min (por defecto ∂D)
        positions: coordenadas actuales

    Returns:
        NodalField 'mu'

    Raises:
        SolverError: sin vértices de Dirichlet
    """
    vertices = mesh.vertices if positions is None else positions
    boundary = mesh.boundary_vertices if boundary_vertices is None else np.unique(boundary_vertices)
    shape = np.setdiff1d(np.unique(np.asarray(shape_vertices, dtype=np.int64)), boundary)
    overlap = np.intersect1d(np.asarray(shape_vertices, dtype=np.int64), boundary)
    if overlap.size and cfg.mu_max != cfg.mu_min:
        logger.warning(f"⚠️ {overlap.size} shape vertices lie on ∂D; they keep mu_min")

    fixed = np.concatenate([boundary, shape]).astype(np.int64)
    if fixed.size == 0:
        raise SolverError("mu problem has no Dirichlet vertices")
    values = np.concatenate([np.full(boundary.size, cfg.mu_min), np.full(shape.size, cfg.mu_max)])
    if np.all(values == values[0]):
        return NodalField(np.full(mesh.n_vertices, values[0]), mesh, name="mu")

    K = p1_stiffness(vertices, mesh.cells)
    free = np.setdiff1d(np.arange(mesh.n_vertices), fixed)
    mu = np.empty(mesh.n_vertices)
    mu[fixed] = values
    if free.size:
        rhs = -K[free][:, fixed] @ values
        mu[free] = _solve_spd(K[free][:, free], rhs, cfg)
    logger.info(f"mu field: range [{mu.min():.3f}, {mu.max():.3f}]")
    return NodalField(mu, mesh, name="mu")


def assemble_elasticity(vertices: np.ndarray, cells: np.ndarray, mu: np.ndarray) -> sparse.csr_matrix:
    """
    Forma de cizalla ∫ mu ε(U):ε(V) para U, V P1 vectoriales

    Bloque local: w_C mu_C · ½[δ_ab G_i·G_j + G_ib G_ja], gdl = i*d + a.
    """
    G = basis_gradients(vertices, cells)
    w = cell_volumes(vertices, cells)
    d = vertices.shape[1]
    coef = 0.5 * w * np.asarray(mu)[cells].mean(axis=1)
    GG = np.einsum('nid,njd->nij', G, G)
    eye = np.eye(d)
    local = GG[:, :, None, :, None] * eye[None, None, :, None, :]
    local = local + np.einsum('nib,nja->niajb', G, G)
    local *= coef[:, None, None, None, None]
    rows, cols = local_to_global(cells, d)
    n = vertices.shape[0] * d
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_vector_mass(vertices: np.ndarray, cells: np.ndarray) -> sparse.csr_matrix:
    d = vertices.shape[1]
    return sparse.kron(p1_mass(vertices, cells), sparse.identity(d), format="csr")


def assemble_metric(vertices: np.ndarray, cells: np.ndarray, mu: np.ndarray, cfg: MetricConfig) -> sparse.csr_matrix:
    """Matriz del sistema alpha_LE·A_elas + alpha_L2·M (sin condiciones de borde)."""
    A = cfg.alpha_LE * assemble_elasticity(vertices, cells, mu)
    if cfg.alpha_L2 > 0:
        A = A + cfg.alpha_L2 * assemble_vector_mass(vertices, cells)
    return A.tocsr()


def _solve_spd(A: sparse.spmatrix, b: np.ndarray, cfg: MetricConfig) -> np.ndarray:
    n = A.shape[0]
    if n <= cfg.direct_limit:
        x = spsolve(A.tocsc(), b)
    else:
        diag = A.diagonal()
        if np.any(diag <= 0):
            raise SolverError("metric matrix has non-positive diagonal")
        precond = sparse.diags(1.0 / diag)
        x, info = cg(A, b, rtol=0.01 * cfg.solver_rtol, maxiter=20 * n, M=precond)
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge (info={info})")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise SolverError("linear solve produced non-finite values")
    bnorm = float(np.linalg.norm(b))
    residual = float(np.linalg.norm(A @ x - b))
    if residual > cfg.solver_rtol * max(bnorm, np.finfo(float).tiny):
        raise SolverError(f"relative residual {residual / max(bnorm, 1e-300):.2e} above {cfg.solver_rtol:.0e}")
    return x


def represent_gradient(
    mesh: SimplicialMesh,
    mu: NodalField,
    cfg: MetricConfig,
    rhs,
    dirichlet: Optional[Sequence[int]] = None,
    positions: Optional[np.ndarray] = None,
    vertex_map: Optional[np.ndarray] = None,
) -> GradientField:
    """
    Resuelve el sistema de la métrica

    Args:
        mesh: malla del dominio (topología)
        mu: campo de Lamé en el dominio
        cfg: configuración de la métrica
        rhs: DerivativeCovector o array (n, d) con rhs(V) = Σ rhs_i·V_i
        dirichlet: vértices con U = 0 (por defecto ∂D)
        positions: coordenadas actuales del dominio
        vertex_map: inyección de un covector de superficie en el volumen

    Returns:
        GradientField con el residuo relativo alcanzado
    """
    vertices = mesh.vertices if positions is None else positions
    d = vertices.shape[1]
    n_v = vertices.shape[0]
    fixed = mesh.boundary_vertices if dirichlet is None else np.unique(np.asarray(dirichlet, dtype=np.int64))
    if cfg.alpha_L2 == 0 and fixed.size == 0:
        raise ConfigError("alpha_L2 = 0 with an empty Dirichlet set leaves rigid motions in the kernel")

    values = getattr(rhs, "values", rhs)
    if hasattr(rhs, "interior"):
        values = np.where(rhs.interior[:, None], values, 0.0)
    values = np.asarray(values, dtype=float)
    if vertex_map is not None:
        injected = np.zeros((n_v, d))
        injected[np.asarray(vertex_map)] = values
        values = injected
    if values.shape != (n_v, d):
        raise GeometryError(f"rhs shape {values.shape} does not conform to the domain ({n_v}, {d})")

    b = values.reshape(-1)
    fixed_dofs = (fixed[:, None] * d + np.arange(d)).reshape(-1)
    free = np.setdiff1d(np.arange(n_v * d), fixed_dofs)
    U = np.zeros(n_v * d)
    residual = 0.0
    if free.size and np.any(b[free] != 0.0):
        A = assemble_metric(vertices, mesh.cells, mu.values, cfg)
        A_ff = A[free][:, free]
        U[free] = _solve_spd(A_ff, b[free], cfg)
        residual = float(np.linalg.norm(A_ff @ U[free] - b[free]) / np.linalg.norm(b[free]))
    return GradientField(U.reshape(n_v, d), mesh, dirichlet=fixed, residual=residual)


def l2_norm(U, mesh: SimplicialMesh, positions: Optional[np.ndarray] = None) -> float:
    """
    Norma L2 con masa consistente

    Args:
        U: GradientField o array (n_v, d)
        mesh: malla del dominio
        positions: coordenadas actuales
    """
    values = np.asarray(getattr(U, "values", U), dtype=float)
    vertices = mesh.vertices if positions is None else positions
    M = p1_mass(vertices, mesh.cells)
    if values.ndim == 1:
        values = values[:, None]
    energy = float(np.einsum('ia,ia->', values, M @ values))
    return float(np.sqrt(max(energy, 0.0)))
