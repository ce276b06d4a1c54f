"""
Fields - Containers
Campos escalares por vértice (P1) y por celda (P0), y campos vectoriales por vértice
"""

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from mesh_core.simplicial_mesh import SimplicialMesh
from utils.errors import FieldError


def _validated(values, expected_shape, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != expected_shape:
        raise FieldError(f"field {name!r}: shape {arr.shape}, expected {expected_shape}")
    if not np.all(np.isfinite(arr)):
        raise FieldError(f"field {name!r} has non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NodalField:
    """Un valor real por vértice (interpolación lineal)"""
    values: np.ndarray
    mesh: SimplicialMesh
    name: str = "nodal"
    location: ClassVar[str] = "point"

    def __post_init__(self):
        object.__setattr__(self, "values", _validated(self.values, (self.mesh.n_vertices,), self.name))

    def cell_average(self) -> np.ndarray:
        return self.values[self.mesh.cells].mean(axis=1)


@dataclass(frozen=True, eq=False)
class CellField:
    """Un valor real por celda (constante a trozos)"""
    values: np.ndarray
    mesh: SimplicialMesh
    name: str = "cell"
    location: ClassVar[str] = "cell"

    def __post_init__(self):
        object.__setattr__(self, "values", _validated(self.values, (self.mesh.n_cells,), self.name))


@dataclass(frozen=True, eq=False)
class NodalVectorField:
    """Un vector ambiente por vértice (exportación de covectores y gradientes)"""
    values: np.ndarray
    mesh: SimplicialMesh
    name: str = "vector"
    location: ClassVar[str] = "point"

    def __post_init__(self):
        shape = (self.mesh.n_vertices, self.mesh.dim_ambient)
        object.__setattr__(self, "values", _validated(self.values, shape, self.name))
