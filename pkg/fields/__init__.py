"""Init files para convertir directorios en módulos Python

Fields: campos P1/P0, densidad inicial g^M y densidades objetivo.
"""

from fields.containers import CellField, NodalField, NodalVectorField
from fields.densities import current_density, estimate_gM, integrate_nodal, uniform_gM
from fields.expressions import ScalarExpression, VectorExpression
from fields.targets import TargetKind, TargetSpec, TargetTerms, build_target, target_terms

__all__ = [
    "CellField",
    "NodalField",
    "NodalVectorField",
    "ScalarExpression",
    "TargetKind",
    "TargetSpec",
    "TargetTerms",
    "VectorExpression",
    "build_target",
    "current_density",
    "estimate_gM",
    "integrate_nodal",
    "target_terms",
    "uniform_gM",
]
