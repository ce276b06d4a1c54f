"""
Optimizer - Minimal Surface Module
Flujo normal hacia una superficie mínima con borde fijo

Con f = 0 y g = 1 la componente normal de la derivada se anula justo en
superficies de curvatura media nula. El flujo sube por esa componente
(representada con la métrica) y cada paso se acepta solo si el área baja;
cuando la representación no baja el área se usa la masa concentrada.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from metric.elasticity import MetricConfig, represent_gradient
from optimizer.descent import OptimizerConfig, RunContext, RunStatus
from preshape.curvature import area_gradient, minimal_surface_descent_direction
from preshape.derivative import DerivativeCovector
from preshape.state import PreShapeState
from utils.errors import InvertedCellError
from utils.logger import setup_logger

logger = setup_logger(__name__)


class MinimalSurfaceConfig(BaseModel):
    """Parámetros del flujo de superficie mínima"""
    initial_scale: float = Field(default=0.02, gt=0, description="Escala inicial del paso")
    backtrack_factor: float = Field(default=0.5, gt=0, lt=1, description="Factor de reducción del paso")
    max_backtracks: int = Field(default=20, ge=0, description="Retrocesos máximos por paso")
    max_steps: int = Field(default=500, ge=0, description="Pasos máximos")
    area_rtol: float = Field(default=1e-7, gt=0, description="Cambio relativo de área que detiene el flujo")


@dataclass
class MinimalSurfaceResult:
    state: PreShapeState
    status: RunStatus
    areas: List[float] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.areas) - 1


def lumped_direction(state: PreShapeState, covector: DerivativeCovector) -> np.ndarray:
    """U_i = d_i / A_i en los vértices de la forma (masa concentrada en lugar de la métrica)."""
    domain = state.domain
    values = np.zeros((domain.mesh.n_vertices, state.dim_ambient))
    values[domain.shape_map] = covector.values / state.vertex_areas[:, None]
    return values


def area_descent_direction(state: PreShapeState, covector: DerivativeCovector,
                           U: np.ndarray) -> Tuple[np.ndarray, str]:
    """
    Devuelve U si baja el área a primer orden; si no, la dirección concentrada

    La dirección concentrada cumple Σ ∇A_i·U_i = -½ Σ det^-2 ⟨∇A_i, n_i⟩² / A_i < 0.
    """
    slope = float(np.einsum('ia,ia->', area_gradient(state), U[state.domain.shape_map]))
    if slope < 0.0:
        return U, "metric"
    return lumped_direction(state, covector), "lumped"


def _line_search(state: PreShapeState, U: np.ndarray, area: float,
                 cfg: MinimalSurfaceConfig) -> Tuple[Optional[PreShapeState], float]:
    scale = cfg.initial_scale
    for _ in range(cfg.max_backtracks + 1):
        try:
            candidate = state.with_domain_positions(state.domain.positions + scale * U)
        except InvertedCellError:
            scale *= cfg.backtrack_factor
            continue
        if candidate.total_volume < area:
            return candidate, scale
        scale *= cfg.backtrack_factor
    return None, 0.0


def minimal_surface_flow(state: PreShapeState, metric_cfg: MetricConfig,
                         cfg: Optional[MinimalSurfaceConfig] = None) -> MinimalSurfaceResult:
    """
    Ascenso normal con retroceso sobre el área

    La dirección se recalcula en cada paso desde la curvatura actual. Si la
    búsqueda lineal agota sus retrocesos con la dirección de la métrica, se
    reintenta con la dirección concentrada antes de declarar estancamiento.

    Args:
        state: superficie abierta con borde fijo
        metric_cfg: métrica usada para representar la componente normal
        cfg: parámetros del flujo

    Returns:
        MinimalSurfaceResult con la sucesión de áreas (estrictamente decreciente)
    """
    cfg = cfg if cfg is not None else MinimalSurfaceConfig()
    ctx = RunContext.prepare(state, metric_cfg, OptimizerConfig())
    areas = [state.total_volume]
    status = RunStatus.MAX_ITERS
    logger.info(f"🚀 minimal surface flow from area {areas[0]:.6f}")

    for it in range(cfg.max_steps):
        covector = minimal_surface_descent_direction(state)
        if not np.any(covector.values):
            status = RunStatus.CONVERGED
            break
        domain = state.domain
        U = represent_gradient(domain.mesh, ctx.mu, metric_cfg, covector, dirichlet=domain.dirichlet,
                               positions=domain.positions, vertex_map=domain.shape_map).values
        U, kind = area_descent_direction(state, covector, U)
        accepted, scale = _line_search(state, U, areas[-1], cfg)
        if accepted is None and kind == "metric":
            logger.debug(f"step {it}: metric direction exhausted its backtracks, retrying lumped")
            kind = "lumped"
            accepted, scale = _line_search(state, lumped_direction(state, covector), areas[-1], cfg)
        if accepted is None:
            logger.warning(f"⚠️ area did not decrease at step {it}")
            status = RunStatus.STAGNATED
            break
        state = accepted
        areas.append(state.total_volume)
        logger.debug(f"step {it:4d}  area={areas[-1]:.8f}  s={scale:.3e}  ({kind})")
        if (areas[-2] - areas[-1]) / areas[-2] < cfg.area_rtol:
            status = RunStatus.CONVERGED
            break

    logger.info(f"minimal surface flow: {status.value}, area {areas[-1]:.6f} after {len(areas) - 1} steps")
    return MinimalSurfaceResult(state=state, status=status, areas=areas)
