"""
Fields - Targets Module
Densidades objetivo f_phi normalizadas

Considera:
- Uniform: f = ∫g / |phi(M)| (constante)
- Analytic: f = (∫g / ∫q) · q evaluada en centroides actuales
- normalize=False usa q directamente (sin reescalar)
- La normalización se recalcula en cada configuración
"""

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from fields.containers import CellField
from fields.expressions import ScalarExpression
from utils.errors import TargetError

if TYPE_CHECKING:
    from preshape.state import PreShapeState


class TargetKind(str, Enum):
    UNIFORM = "Uniform"
    ANALYTIC = "Analytic"


class TargetSpec(BaseModel):
    """Descripción declarativa de la densidad objetivo"""
    model_config = ConfigDict(extra="ignore", use_enum_values=False)

    kind: TargetKind = Field(default=TargetKind.UNIFORM, description="Uniform o Analytic")
    expression: Optional[str] = Field(default=None, description="q(x, y, z) > 0 en la gramática de expresiones")
    normalize: bool = Field(default=True, description="Reescalar q para que ∫f = ∫g")

    _compiled: Optional[ScalarExpression] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_expression(self):
        if self.kind == TargetKind.ANALYTIC:
            if not self.expression:
                raise ValueError("Analytic targets need an expression")
            self._compiled = ScalarExpression(self.expression)
        return self

    @property
    def is_uniform(self) -> bool:
        return self.kind == TargetKind.UNIFORM

    def compiled(self) -> ScalarExpression:
        if self._compiled is None:
            raise TargetError("target has no differentiable expression")
        return self._compiled


@dataclass
class TargetTerms:
    """Cantidades del objetivo en la configuración actual (por celda)"""
    values: np.ndarray
    q: np.ndarray
    grad_q: np.ndarray
    total_q: float
    total_mass: float
    scale: float
    normalized: bool


def target_terms(spec: TargetSpec, state: "PreShapeState") -> TargetTerms:
    """
    Evalúa q, su gradiente y la normalización en los centroides actuales

    Uniform se trata como q ≡ 1.

    Raises:
        TargetError: si q no es positiva en algún centroide
    """
    centroids = state.centroids
    w = state.current_volumes
    n_c, d = centroids.shape
    if spec.is_uniform:
        q = np.ones(n_c)
        grad_q = np.zeros((n_c, d))
    else:
        expr = spec.compiled()
        q = expr.evaluate(centroids)
        bad = np.nonzero(~(q > 0.0))[0]
        if bad.size:
            raise TargetError(f"q({spec.expression}) = {q[bad[0]]:.3e} <= 0 at cell {bad[0]} centroid")
        grad_q = expr.gradient(centroids)
    total_q = float(np.sum(q * w))
    total_mass = state.total_mass
    normalized = spec.normalize
    scale = total_mass / total_q if normalized else 1.0
    return TargetTerms(
        values=scale * q,
        q=q,
        grad_q=grad_q,
        total_q=total_q,
        total_mass=total_mass,
        scale=scale,
        normalized=normalized,
    )


def build_target(spec: TargetSpec, state: "PreShapeState") -> CellField:
    """
    Construye f_phi por celda para la configuración actual

    Args:
        spec: especificación del objetivo
        state: estado actual

    Returns:
        CellField 'target' con Σ f·vol_cur = ∫g si está normalizado
    """
    terms = target_terms(spec, state)
    return CellField(terms.values, state.reference_mesh, name="target")
