"""
Verify - Audit Module
Auditoría de propiedades estructurales del estado y de la derivada

Calcula:
- Defecto de masa: Σ rho·vol_cur y Σ f·vol_cur frente a ∫g
- Defecto de descomposición: DJ[V] - DJ_T[V] - DJ_N[V] sobre 50 V aleatorios
- Independencia de marcos: densidad con marcos rotados por SO(k) aleatorias
- Nulidad tangencial del funcional de área y su orden en esferas deformadas
- Defecto de divergencia: variación discreta de ∫q en campos tangenciales
"""

from dataclasses import asdict, dataclass
from typing import Dict, Sequence

import numpy as np
import pandas as pd

from fields.densities import uniform_gM
from fields.targets import TargetSpec, build_target, target_terms
from mesh_core.generators import icosphere
from preshape.curvature import area_gradient
from preshape.derivative import Component, assemble_derivative, total_q_variation, vertex_projectors
from preshape.state import PreShapeState
from utils.logger import setup_logger

logger = setup_logger(__name__)

THRESHOLDS = {"mass_defect": 1e-10, "target_mass_defect": 1e-10, "decomposition_defect": 1e-10, "frame_defect": 1e-12}
DECOMPOSITION_SAMPLES = 50
NULLITY_LEVELS = (2, 3, 4)
NULLITY_MIN_ORDER = 1.8


@dataclass
class AuditReport:
    mass_defect: float
    target_mass_defect: float
    decomposition_defect: float
    frame_defect: float
    nullity: float
    divergence_defect: float
    seed: int

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)

    def failures(self) -> Dict[str, float]:
        values = self.as_dict()
        return {k: values[k] for k, tol in THRESHOLDS.items() if not values[k] < tol}

    @property
    def passed(self) -> bool:
        return not self.failures()


def random_rotations(count: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Matrices de SO(k) (QR de gaussianas con corrección de signo)."""
    if k == 1:
        return np.ones((count, 1, 1))
    A = rng.standard_normal((count, k, k))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diagonal(R, axis1=1, axis2=2))[:, None, :]
    flip = np.linalg.det(Q) < 0
    Q[flip, :, 0] *= -1.0
    return Q


def smooth_test_field(points: np.ndarray) -> np.ndarray:
    """Campo suave sin simetrías (y·z, x², sin 3x) recortado a la dimensión ambiente."""
    x = points[:, 0]
    y = points[:, 1]
    z = points[:, 2] if points.shape[1] > 2 else np.ones_like(x)
    return np.column_stack([y * z, x ** 2, np.sin(3.0 * x)])[:, : points.shape[1]]


def mass_defects(state: PreShapeState, spec: TargetSpec):
    total = state.total_mass
    rho_mass = float(np.sum(state.density() * state.current_volumes))
    target_mass = float(np.sum(build_target(spec, state).values * state.current_volumes))
    target_defect = abs(target_mass - total) / total if spec.normalize else 0.0
    return abs(rho_mass - total) / total, target_defect


def decomposition_defect(state: PreShapeState, spec: TargetSpec, rng: np.random.Generator,
                         samples: int = DECOMPOSITION_SAMPLES) -> float:
    full = assemble_derivative(state, spec, Component.FULL)
    tangential = assemble_derivative(state, spec, Component.TANGENTIAL)
    normal = assemble_derivative(state, spec, Component.NORMAL) if state.codim == 1 else None
    worst = 0.0
    for _ in range(samples):
        V = rng.standard_normal((state.n_vertices, state.dim_ambient))
        rest = full.pair(V) - tangential.pair(V) - (normal.pair(V) if normal is not None else 0.0)
        size = float(np.sum(np.linalg.norm(full.values, axis=1) * np.linalg.norm(V, axis=1)))
        worst = max(worst, abs(rest) / size if size > 0 else abs(rest))
    return worst


def frame_defect(state: PreShapeState, rng: np.random.Generator) -> float:
    ref_frames, cur_frames = state.frames()
    n_c, k = state.reference_mesh.n_cells, state.dim_cell
    rotated_ref = np.einsum('nak,nkl->nal', ref_frames, random_rotations(n_c, k, rng))
    rotated_cur = np.einsum('nak,nkl->nal', cur_frames, random_rotations(n_c, k, rng))
    base = state.density(ref_frames, cur_frames)
    rotated = state.density(rotated_ref, rotated_cur)
    return float(np.max(np.abs(rotated - base)) / np.max(np.abs(base)))


def area_nullity(state: PreShapeState) -> float:
    """|⟨P ∇Área, W⟩| / Área para un campo suave W (cero exacto en el continuo)."""
    grad = area_gradient(state)
    if state.codim == 1:
        grad = np.einsum('iab,ib->ia', vertex_projectors(state.vertex_normals), grad)
    W = smooth_test_field(state.positions)
    interior = state.interior_mask
    return abs(float(np.einsum('ia,ia->', grad[interior], W[interior]))) / state.total_volume


@dataclass
class NullityStudy:
    table: pd.DataFrame
    order: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.order) and self.order >= NULLITY_MIN_ORDER)


def area_nullity_study(levels: Sequence[int] = NULLITY_LEVELS, warp: float = 0.1) -> NullityStudy:
    """
    Nulidad tangencial en icosferas deformadas cada vez más finas

    La deformación suave rompe las simetrías que dejan la nulidad en el
    redondeo; el orden es la pendiente de log(nulidad) frente a log(h).
    """
    rows = []
    for level in levels:
        mesh = icosphere(level, warp=warp)
        state = PreShapeState(mesh, uniform_gM(mesh))
        rows.append({"level": level, "h": state.mean_edge_length(), "nullity": area_nullity(state)})
    table = pd.DataFrame(rows)
    order = float(np.polyfit(np.log(table["h"]), np.log(table["nullity"]), 1)[0])
    logger.info(f"area nullity order {order:.2f} over levels {list(levels)}")
    return NullityStudy(table=table, order=order)


def divergence_defect(state: PreShapeState, spec: TargetSpec) -> float:
    """Variación discreta de Σ q w para un campo tangencial nulo en el borde, relativa a ∫q·max|V|."""
    W = smooth_test_field(state.positions)
    if state.codim == 1:
        W = np.einsum('iab,ib->ia', vertex_projectors(state.vertex_normals), W)
    W[~state.interior_mask] = 0.0
    scale = float(np.max(np.linalg.norm(W, axis=1)))
    if scale == 0.0:
        return 0.0
    dQ = total_q_variation(state, spec, W)
    return abs(dQ) / (target_terms(spec, state).total_q * scale)


def audit(state: PreShapeState, spec: TargetSpec, seed: int = 0) -> AuditReport:
    """
    Ejecuta todas las auditorías sobre un estado

    Args:
        state: estado válido
        spec: densidad objetivo
        seed: semilla de los campos y rotaciones aleatorias (se guarda en el reporte)

    Returns:
        AuditReport
    """
    rng = np.random.default_rng(seed)
    mass, target_mass = mass_defects(state, spec)
    report = AuditReport(
        mass_defect=mass,
        target_mass_defect=target_mass,
        decomposition_defect=decomposition_defect(state, spec, rng),
        frame_defect=frame_defect(state, rng),
        nullity=area_nullity(state),
        divergence_defect=divergence_defect(state, spec),
        seed=seed,
    )
    if report.passed:
        logger.info(f"audit (seed {seed}, {DECOMPOSITION_SAMPLES} directions) passed")
    else:
        logger.warning(f"⚠️ audit (seed {seed}) failed: {report.failures()}")
    return report
