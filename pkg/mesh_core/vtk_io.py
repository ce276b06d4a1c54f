"""
Mesh Core - VTK Legacy I/O
Escritura y lectura de archivos VTK legacy (UNSTRUCTURED_GRID) con meshio

Considera:
- Salida ASCII determinista, bit a bit idéntica para entradas idénticas
- Datos por punto y por celda (escalares y vectores)
- Lectura de geometría y datos para comparaciones y reportes de calidad
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import meshio
import numpy as np

from mesh_core.simplicial_mesh import SimplicialMesh
from utils.errors import FieldError, MeshFormatError, PreShapeError

_MESHIO_TYPES = {1: "line", 2: "triangle", 3: "tetra"}
_VTK_TYPE_OF_MESHIO = {"line": 3, "triangle": 5, "tetra": 10}
_DIM_OF_VTK_TYPE = {3: 1, 5: 2, 10: 3}


def _as_xyz(points: np.ndarray) -> np.ndarray:
    if points.shape[1] == 3:
        return points
    return np.hstack([points, np.zeros((points.shape[0], 3 - points.shape[1]))])


def _data_array(item, expected: int) -> np.ndarray:
    values = np.asarray(item.values, dtype=float)
    if values.shape[0] != expected:
        raise FieldError(f"field {item.name!r} has {values.shape[0]} entries, expected {expected}")
    return values if values.ndim == 1 else _as_xyz(values)


def write_vtk(
    mesh: SimplicialMesh,
    fields: Sequence = (),
    path=None,
    positions: Optional[np.ndarray] = None,
) -> None:
    """
    Escribe la malla y sus campos en VTK legacy ASCII

    Args:
        mesh: topología
        fields: campos con atributos name, values y location ('point'|'cell')
        path: archivo de salida
        positions: coordenadas actuales (por defecto las de referencia)
    """
    points = mesh.vertices if positions is None else np.asarray(positions, dtype=float)
    point_data = {str(f.name).replace(" ", "_"): _data_array(f, points.shape[0])
                  for f in fields if f.location == "point"}
    cell_data = {str(f.name).replace(" ", "_"): [_data_array(f, mesh.n_cells)]
                 for f in fields if f.location == "cell"}
    mio = meshio.Mesh(
        _as_xyz(points),
        [(_MESHIO_TYPES[mesh.dim_cell], np.asarray(mesh.cells, dtype=np.int64))],
        point_data=point_data,
        cell_data=cell_data,
    )
    meshio.write(str(path), mio, file_format="vtk", binary=False)


@dataclass
class VtkContent:
    points: np.ndarray
    cells: np.ndarray
    cell_type: int
    point_data: Dict[str, np.ndarray] = field(default_factory=dict)
    cell_data: Dict[str, np.ndarray] = field(default_factory=dict)


def _squeeze(values) -> np.ndarray:
    values = np.asarray(values)
    if values.ndim == 2 and values.shape[1] == 1:
        return values[:, 0]
    return values


def read_vtk(path) -> VtkContent:
    """
    Lee un archivo VTK legacy de un solo tipo de celda

    Returns:
        VtkContent con puntos (n, 3), celdas y datos
    """
    try:
        mio = meshio.read(str(path), file_format="vtk")
    except PreShapeError:
        raise
    except Exception as err:
        raise MeshFormatError(f"vtk: {err or type(err).__name__}", None) from None

    blocks = [b for b in mio.cells if b.data.size]
    if len({b.type for b in blocks}) > 1:
        raise MeshFormatError("mixed cell types", None)
    if blocks:
        cells = np.vstack([np.asarray(b.data, dtype=np.int64) for b in blocks])
        cell_type = _VTK_TYPE_OF_MESHIO.get(blocks[0].type, 0)
    else:
        cells, cell_type = np.zeros((0, 0), dtype=np.int64), 0

    point_data = {name: _squeeze(values) for name, values in mio.point_data.items()}
    cell_data = {name: _squeeze(np.concatenate([np.asarray(v) for v in values]))
                 for name, values in mio.cell_data.items()}
    return VtkContent(_as_xyz(np.asarray(mio.points, dtype=float)), cells, cell_type, point_data, cell_data)


def read_vtk_geometry(path):
    """Devuelve (puntos (n, 3), celdas (n_c, k+1)) de un archivo VTK legacy."""
    content = read_vtk(path)
    return content.points, content.cells


def load_vtk_mesh(path) -> SimplicialMesh:
    """Reconstruye una SimplicialMesh desde un VTK escrito por write_vtk."""
    content = read_vtk(path)
    dim_cell = _DIM_OF_VTK_TYPE.get(content.cell_type)
    if dim_cell is None:
        raise MeshFormatError(f"unsupported VTK cell type {content.cell_type}", None)
    points = content.points
    if dim_cell <= 2 and np.all(points[:, 2] == 0.0):
        points = points[:, :2]
    return SimplicialMesh(points, content.cells)
