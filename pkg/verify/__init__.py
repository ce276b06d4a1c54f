"""Init files para convertir directorios en módulos Python

Verify: oráculos de la circunferencia, diferencias finitas y auditorías.
"""

from verify.audit import AuditReport, audit
from verify.circle_oracle import CircleOracle, OracleKind, circle_derivative_closed_form, circle_suite
from verify.fd_check import FDReport, fd_check, negate_derivative

__all__ = [
    "AuditReport",
    "CircleOracle",
    "FDReport",
    "OracleKind",
    "audit",
    "circle_derivative_closed_form",
    "circle_suite",
    "fd_check",
    "negate_derivative",
]
