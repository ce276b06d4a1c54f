"""
Utils - Errores
Jerarquía de excepciones del proyecto.

Todas derivan de PreShapeError; solo main.py las captura y las traduce a
códigos de salida.
"""

from typing import Optional


class PreShapeError(Exception):
    """Base de todos los errores del proyecto"""


class MeshFormatError(PreShapeError, ValueError):
    """Archivo de malla mal formado (lleva el número de línea, 1-based)"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedElementError(MeshFormatError):
    """Tipos de elemento mezclados o no soportados"""


class DegenerateCellError(PreShapeError, ValueError):
    def __init__(self, cell: int, volume: float):
        self.cell = int(cell)
        self.volume = float(volume)
        super().__init__(f"degenerate cell {self.cell} (volume {self.volume:.3e})")


class InvertedCellError(PreShapeError, ValueError):
    def __init__(self, cell: int, detail: str = "non-positive volume"):
        self.cell = int(cell)
        super().__init__(f"inverted cell {self.cell}: {detail}")


class GeometryError(PreShapeError, ValueError):
    """Geometría inválida para la operación pedida"""


class FieldError(PreShapeError, ValueError):
    """Campo con longitud incorrecta o valores no finitos"""


class ExpressionError(PreShapeError, ValueError):
    """Expresión fuera de la gramática permitida"""


class TargetError(PreShapeError, ValueError):
    """Densidad objetivo inválida"""


class ComponentError(PreShapeError, ValueError):
    """Componente de derivada no disponible para esta malla"""


class SolverError(PreShapeError, RuntimeError):
    """Fallo del sistema lineal o de la comprobación de descenso"""


class StagnationError(PreShapeError, RuntimeError):
    """La búsqueda lineal agotó los retrocesos sin descenso estricto"""

    def __init__(self, message: str, record=None):
        self.record = record
        super().__init__(message)


class ConfigError(PreShapeError, ValueError):
    """Configuración de ejecución inválida"""
