"""
Mesh Core - Gmsh Reader
Lee y escribe mallas Gmsh MSH (2.2 y 4.x, ASCII o binario) con meshio

Considera:
- Celdas: triángulos o tetraedros, el de mayor dimensión
- Elementos de una dimensión menor (líneas, triángulos) -> marcadores de faceta
- Puntos y nodos sueltos se ignoran
- Nodos compactados a índices 0..n_v-1 en el orden del archivo
"""

import tempfile
from pathlib import Path
from typing import Optional

import meshio
import numpy as np

from mesh_core.simplicial_mesh import SimplicialMesh
from utils.errors import MeshFormatError, PreShapeError, UnsupportedElementError
from utils.logger import setup_logger

logger = setup_logger(__name__)

# tipo de bloque meshio -> dimensión
CELL_DIMS = {
    "vertex": 0,
    "line": 1,
    "triangle": 2,
    "tetra": 3,
}

_MESHIO_TYPES = {1: "line", 2: "triangle", 3: "tetra"}
_NUMERIC_SECTIONS = ("$Nodes", "$Elements", "$Entities")


def _first_bad_line(text: str) -> Optional[int]:
    """Primera línea no numérica dentro de $Nodes/$Elements/$Entities (1-based)."""
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("$"):
            section = line if line in _NUMERIC_SECTIONS else None
            continue
        if section is None or not line:
            continue
        try:
            [float(tok) for tok in line.split()]
        except ValueError:
            return lineno
    return None


def _read(path: Path) -> meshio.Mesh:
    raw = path.read_bytes()
    if b"$MeshFormat" not in raw:
        raise MeshFormatError("missing $MeshFormat section", 1)
    try:
        return meshio.read(str(path), file_format="gmsh")
    except PreShapeError:
        raise
    except KeyError as err:
        raise UnsupportedElementError(f"unsupported element type {err}", None) from None
    except Exception as err:
        text = raw.decode("utf-8", errors="replace")
        raise MeshFormatError(f"gmsh: {err or type(err).__name__}", _first_bad_line(text)) from None


def _tags(mio: meshio.Mesh, index: int, n: int) -> np.ndarray:
    for key in ("gmsh:physical", "gmsh:geometrical"):
        blocks = mio.cell_data.get(key)
        if blocks is not None:
            return np.asarray(blocks[index], dtype=np.int64).reshape(-1)[:n]
    return np.zeros(n, dtype=np.int64)


def to_simplicial(mio: meshio.Mesh) -> SimplicialMesh:
    """
    Valida una malla meshio y la convierte en SimplicialMesh

    Args:
        mio: malla leída por meshio

    Returns:
        SimplicialMesh orientada, con marcadores de faceta
    """
    for block in mio.cells:
        if block.type not in CELL_DIMS:
            raise UnsupportedElementError(f"unsupported element type {block.type!r}", None)
    top = max((CELL_DIMS[b.type] for b in mio.cells if CELL_DIMS[b.type] >= 2), default=None)
    if top is None:
        raise UnsupportedElementError("no triangle or tetrahedron cells found", None)

    n_points = mio.points.shape[0]
    cell_rows, facet_rows, facet_tags = [], [], []
    for i, block in enumerate(mio.cells):
        dim = CELL_DIMS[block.type]
        conn = np.asarray(block.data, dtype=np.int64)
        if conn.size and (conn.min() < 0 or conn.max() >= n_points):
            raise MeshFormatError(f"{block.type} block references an unknown node", None)
        if dim == top:
            cell_rows.append(conn)
        elif dim == top - 1:
            facet_rows.append(conn)
            facet_tags.append(_tags(mio, i, conn.shape[0]))

    cells_raw = np.vstack(cell_rows)
    used = np.unique(cells_raw)
    index = np.full(n_points, -1, dtype=np.int64)
    index[used] = np.arange(used.size)
    coords = np.asarray(mio.points, dtype=float)[used]
    cells = index[cells_raw]

    markers = {}
    for conn, tags in zip(facet_rows, facet_tags):
        mapped = index[conn]
        for row, tag in zip(mapped, tags):
            if np.all(row >= 0):
                markers[tuple(sorted(int(v) for v in row))] = int(tag)

    if top == 2 and coords.shape[1] == 3 and np.all(coords[:, 2] == 0.0):
        coords = coords[:, :2]
    logger.info(f"gmsh: {used.size} vertices, {cells.shape[0]} cells, {len(markers)} tagged facets")
    return SimplicialMesh(coords, cells, facet_markers=markers)


def load_gmsh(path) -> SimplicialMesh:
    """
    Carga un archivo Gmsh MSH

    Args:
        path: ruta al archivo

    Returns:
        SimplicialMesh
    """
    return to_simplicial(_read(Path(path)))


def parse_gmsh(text: str) -> SimplicialMesh:
    """Convierte el texto de un archivo MSH en SimplicialMesh."""
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "mesh.msh"
        path.write_text(text, encoding="utf-8")
        return load_gmsh(path)


def write_gmsh(mesh: SimplicialMesh, path, binary: bool = False) -> None:
    """Escribe la malla en MSH 2.2 (celdas + facetas marcadas, tag físico = tag geométrico)."""
    cell_type = _MESHIO_TYPES.get(mesh.dim_cell)
    if mesh.dim_cell < 2 or cell_type is None:
        raise UnsupportedElementError(f"cannot write dim_cell={mesh.dim_cell} to MSH", None)
    coords = mesh.vertices
    if coords.shape[1] == 2:
        coords = np.hstack([coords, np.zeros((coords.shape[0], 1))])

    cells, tags = [], []
    facets = sorted(mesh.facet_markers.items())
    if facets:
        cells.append((_MESHIO_TYPES[mesh.dim_cell - 1], np.array([key for key, _ in facets], dtype=np.int64)))
        tags.append(np.array([tag for _, tag in facets], dtype=np.int64))
    cells.append((cell_type, np.asarray(mesh.cells, dtype=np.int64)))
    tags.append(np.zeros(mesh.n_cells, dtype=np.int64))

    mio = meshio.Mesh(coords, cells, cell_data={"gmsh:physical": tags, "gmsh:geometrical": tags})
    meshio.write(str(path), mio, file_format="gmsh22", binary=binary)
