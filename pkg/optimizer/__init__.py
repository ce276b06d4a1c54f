"""Init files para convertir directorios en módulos Python

Optimizer: descenso con búsqueda lineal, registros y flujo de superficie mínima.
"""

from optimizer.descent import OptimizerConfig, RunContext, RunResult, RunStatus, run, step
from optimizer.minimal_surface import MinimalSurfaceConfig, minimal_surface_flow
from optimizer.records import CsvRecordSink, IterationRecord, MemoryRecordSink

__all__ = [
    "CsvRecordSink",
    "IterationRecord",
    "MemoryRecordSink",
    "MinimalSurfaceConfig",
    "OptimizerConfig",
    "RunContext",
    "RunResult",
    "RunStatus",
    "minimal_surface_flow",
    "run",
    "step",
]
