"""Init files para convertir directorios en módulos Python

Preshape: estado de la pre-forma, funcional de seguimiento y su derivada.
"""

from preshape.derivative import (
    Component,
    DerivativeCovector,
    assemble_derivative,
    material_derivative_target,
    objective,
    total_q_variation,
)
from preshape.curvature import mean_curvature, minimal_surface_descent_direction
from preshape.state import HoldAllDomain, PreShapeState

__all__ = [
    "Component",
    "DerivativeCovector",
    "HoldAllDomain",
    "PreShapeState",
    "assemble_derivative",
    "material_derivative_target",
    "mean_curvature",
    "minimal_surface_descent_direction",
    "objective",
    "total_q_variation",
]
