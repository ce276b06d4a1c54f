"""
Mesh Core - Simplicial Mesh Module
Representación inmutable de mallas simpliciales

Considera:
- Segmentos en 2D, triángulos en 2D/3D y tetraedros en 3D
- Orientación reparada al construir (signo para volumen, BFS para superficies)
- Vértices de borde = vértices de facetas compartidas por una sola celda
- Marcadores de faceta opcionales (tags físicos de Gmsh)
"""

from collections import deque
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np

from mesh_core.geometry import (
    cell_volumes,
    check_nondegenerate,
    edge_matrices,
)
from utils.errors import GeometryError
from utils.logger import setup_logger

logger = setup_logger(__name__)

FacetKey = Tuple[int, ...]


def _facet_table(cells: np.ndarray):
    """Facetas ordenadas por (j, celda): la faceta j omite el vértice local j."""
    k1 = cells.shape[1]
    raw = np.concatenate([np.delete(cells, j, axis=1) for j in range(k1)], axis=0)
    return raw, np.sort(raw, axis=1)


def _permutation_parity(rows: np.ndarray) -> np.ndarray:
    """Paridad (0/1) de la permutación que ordena cada fila."""
    parity = np.zeros(rows.shape[0], dtype=np.int64)
    m = rows.shape[1]
    for a in range(m):
        for b in range(a + 1, m):
            parity += rows[:, a] > rows[:, b]
    return parity % 2


def _facet_partners(cells: np.ndarray):
    """
    Empareja facetas interiores

    Returns:
        (sorted_facets, inverse, counts, partner) con partner[e] la entrada
        vecina de la entrada e = j*n_c + c, o -1 en el borde
    """
    _, facets = _facet_table(cells)
    uniq, inverse, counts = np.unique(facets, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if counts.size and counts.max() > 2:
        raise GeometryError("non-manifold mesh: a facet is shared by more than two cells")
    order = np.argsort(inverse, kind='stable')
    starts = np.searchsorted(inverse[order], np.arange(uniq.shape[0]))
    pairs = np.nonzero(counts == 2)[0]
    a = order[starts[pairs]]
    b = order[starts[pairs] + 1]
    partner = np.full(inverse.size, -1, dtype=np.int64)
    partner[a] = b
    partner[b] = a
    return uniq, inverse, counts, partner


def orient_cells(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """
    Repara la orientación de las celdas

    Codimensión 0: cada celda con volumen negativo se invierte.
    Codimensión 1: propagación en anchura desde la celda 0 de cada componente
    conexa; las componentes cerradas se orientan con normal saliente.

    Args:
        vertices: coordenadas (n_v, d)
        cells: índices (n_c, k+1)

    Returns:
        Copia de cells con orientación consistente
    """
    cells = cells.copy()
    n_c, k1 = cells.shape
    d = vertices.shape[1]
    k = k1 - 1
    if k == d:
        signed = cell_volumes(vertices, cells, signed=True)
        flip = signed < 0
        cells[flip, 0], cells[flip, 1] = cells[flip, 1].copy(), cells[flip, 0].copy()
        if np.any(flip):
            logger.debug(f"orientation: flipped {int(flip.sum())} cells")
        return cells
    if d - k != 1:
        raise GeometryError(f"unsupported mesh: dim_cell={k}, dim_ambient={d}")

    raw, _ = _facet_table(cells)
    _, _, _, partner = _facet_partners(cells)
    local = np.repeat(np.arange(k1), n_c)
    sign = np.where(local % 2 == 0, 1, -1) * np.where(_permutation_parity(raw) == 0, 1, -1)
    sign = sign.reshape(k1, n_c).T
    partner = partner.reshape(k1, n_c).T

    orientation = np.zeros(n_c, dtype=np.int64)
    component = np.full(n_c, -1, dtype=np.int64)
    n_comp = 0
    for start in range(n_c):
        if orientation[start] != 0:
            continue
        orientation[start] = 1
        component[start] = n_comp
        queue = deque([start])
        while queue:
            c = queue.popleft()
            for j in range(k1):
                entry = partner[c, j]
                if entry < 0:
                    continue
                c2, j2 = entry % n_c, entry // n_c
                wanted = -sign[c, j] * orientation[c] * sign[c2, j2]
                if orientation[c2] == 0:
                    orientation[c2] = wanted
                    component[c2] = n_comp
                    queue.append(c2)
                elif orientation[c2] != wanted:
                    raise GeometryError(f"non-orientable surface near cell {c2}")
        n_comp += 1

    flip = orientation < 0
    cells[flip, 0], cells[flip, 1] = cells[flip, 1].copy(), cells[flip, 0].copy()

    # componentes cerradas: normal saliente (volumen encerrado positivo)
    corners = vertices[cells]
    enclosed = np.linalg.det(np.transpose(corners, (0, 2, 1)))
    open_cells = (partner < 0).any(axis=1)
    for comp in range(n_comp):
        members = component == comp
        if np.any(open_cells & members):
            continue
        if enclosed[members].sum() < 0:
            sel = np.nonzero(members)[0]
            cells[sel, 0], cells[sel, 1] = cells[sel, 1].copy(), cells[sel, 0].copy()
    return cells


class SimplicialMesh:
    """
    Malla simplicial con configuración de referencia fija

    La topología y las coordenadas son de solo lectura; la configuración
    actual de una optimización vive en PreShapeState.
    """

    def __init__(
        self,
        vertices,
        cells,
        facet_markers: Optional[Dict[FacetKey, int]] = None,
        orient: bool = True,
        check: bool = True,
    ):
        """
        Construye la malla, repara la orientación y calcula el borde

        Args:
            vertices: coordenadas (n_v, d), d en {2, 3}
            cells: índices (n_c, k+1), k en {1, 2, 3}
            facet_markers: faceta (tupla ordenada de vértices) -> tag
            orient: reparar la orientación
            check: rechazar celdas degeneradas
        """
        vertices = np.array(vertices, dtype=float)
        cells = np.array(cells, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
            raise GeometryError(f"vertices must have shape (n, 2|3), got {vertices.shape}")
        if cells.ndim != 2 or not 2 <= cells.shape[1] <= vertices.shape[1] + 1:
            raise GeometryError(f"cells shape {cells.shape} incompatible with ambient dim {vertices.shape[1]}")
        if cells.size and (cells.min() < 0 or cells.max() >= vertices.shape[0]):
            raise GeometryError("cell index out of range")
        if not np.all(np.isfinite(vertices)):
            raise GeometryError("non-finite vertex coordinates")
        if orient:
            cells = orient_cells(vertices, cells)
        vertices.setflags(write=False)
        cells.setflags(write=False)
        self.vertices = vertices
        self.cells = cells
        self.facet_markers: Dict[FacetKey, int] = {
            tuple(sorted(int(v) for v in key)): int(tag) for key, tag in (facet_markers or {}).items()
        }
        if check:
            check_nondegenerate(cell_volumes(vertices, cells), self.scale, self.dim_cell)

    # --- dimensiones -------------------------------------------------------

    @property
    def dim_cell(self) -> int:
        return self.cells.shape[1] - 1

    @property
    def dim_ambient(self) -> int:
        return self.vertices.shape[1]

    @property
    def codim(self) -> int:
        return self.dim_ambient - self.dim_cell

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @cached_property
    def scale(self) -> float:
        """Diagonal de la caja envolvente."""
        if self.n_vertices == 0:
            return 1.0
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    # --- topología ---------------------------------------------------------

    @cached_property
    def boundary_facets(self) -> np.ndarray:
        """Facetas (ordenadas) compartidas por una sola celda."""
        uniq, _, counts, _ = _facet_partners(self.cells)
        return uniq[counts == 1]

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_facets.reshape(-1)).astype(np.int64)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = True
        return mask

    @property
    def is_closed(self) -> bool:
        return self.boundary_facets.shape[0] == 0

    @cached_property
    def edges(self) -> np.ndarray:
        k1 = self.cells.shape[1]
        pairs = [self.cells[:, [a, b]] for a in range(k1) for b in range(a + 1, k1)]
        return np.unique(np.sort(np.concatenate(pairs, axis=0), axis=1), axis=0)

    def mean_edge_length(self, positions: Optional[np.ndarray] = None) -> float:
        pts = self.vertices if positions is None else positions
        e = self.edges
        return float(np.linalg.norm(pts[e[:, 0]] - pts[e[:, 1]], axis=1).mean())

    def tagged_vertices(self, tag: int) -> np.ndarray:
        """Vértices de las facetas marcadas con tag."""
        found = [v for key, t in self.facet_markers.items() if t == tag for v in key]
        return np.unique(np.array(found, dtype=np.int64))

    def tagged_facets(self, tag: int) -> np.ndarray:
        keys = [key for key, t in self.facet_markers.items() if t == tag]
        if not keys:
            return np.zeros((0, self.dim_cell), dtype=np.int64)
        return np.array(sorted(keys), dtype=np.int64)

    def signed_edge_matrices(self, positions: Optional[np.ndarray] = None) -> np.ndarray:
        return edge_matrices(self.vertices if positions is None else positions, self.cells)

    def __repr__(self) -> str:
        return (f"SimplicialMesh(dim_cell={self.dim_cell}, dim_ambient={self.dim_ambient}, "
                f"n_vertices={self.n_vertices}, n_cells={self.n_cells}, "
                f"boundary={self.boundary_vertices.size})")
