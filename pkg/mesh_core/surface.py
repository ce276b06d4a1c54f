"""
Mesh Core - Surface Module
Superficies embebidas en mallas de volumen y proyección al punto más cercano

Considera:
- extract_surface: facetas marcadas -> malla de superficie + mapa de vértices
- SurfaceProjector: búsqueda de candidatos con cKDTree y punto más cercano
  sobre triángulos (regiones de Voronoi de vértices, aristas y cara)
"""

from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

from mesh_core.simplicial_mesh import SimplicialMesh
from utils.errors import GeometryError


def extract_surface(volume_mesh: SimplicialMesh, tag: int) -> Tuple[SimplicialMesh, np.ndarray]:
    """
    Extrae la superficie formada por las facetas con marcador tag

    Args:
        volume_mesh: malla de volumen con facet_markers
        tag: marcador físico de la superficie

    Returns:
        (superficie orientada, vertex_map) con vertex_map[i] = índice en el volumen
    """
    facets = volume_mesh.tagged_facets(tag)
    if facets.shape[0] == 0:
        raise GeometryError(f"no facets tagged {tag}")
    vertex_map = np.unique(facets.reshape(-1))
    local = np.searchsorted(vertex_map, facets)
    surface = SimplicialMesh(volume_mesh.vertices[vertex_map], local)
    return surface, vertex_map


def closest_point_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Punto más cercano de cada triángulo (a, b, c) a p; todos (m, 3)."""
    def dot(u, v):
        return np.einsum('ij,ij->i', u, v)

    ab, ac = b - a, c - a
    ap, bp, cp = p - a, p - b, p - c
    d1, d2 = dot(ab, ap), dot(ac, ap)
    d3, d4 = dot(ab, bp), dot(ac, bp)
    d5, d6 = dot(ab, cp), dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v = np.where(denom != 0, vb / denom, 0.0)
        w = np.where(denom != 0, vc / denom, 0.0)
        result = a + ab * v[:, None] + ac * w[:, None]

        bc_num, bc_den = d4 - d3, (d4 - d3) + (d5 - d6)
        on_bc = (va <= 0) & (bc_num >= 0) & ((d5 - d6) >= 0)
        t = np.where(bc_den != 0, bc_num / bc_den, 0.0)
        result = np.where(on_bc[:, None], b + (c - b) * t[:, None], result)

        on_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        t = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
        result = np.where(on_ac[:, None], a + ac * t[:, None], result)

        on_c = (d6 >= 0) & (d5 <= d6)
        result = np.where(on_c[:, None], c, result)

        on_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        t = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
        result = np.where(on_ab[:, None], a + ab * t[:, None], result)

        on_b = (d3 >= 0) & (d4 <= d3)
        result = np.where(on_b[:, None], b, result)

        on_a = (d1 <= 0) & (d2 <= 0)
        result = np.where(on_a[:, None], a, result)
    return result


class SurfaceProjector:
    """
    Proyecta puntos sobre una superficie triangulada fija

    Los candidatos son los triángulos incidentes a los k vértices más cercanos.
    """

    def __init__(self, vertices: np.ndarray, cells: np.ndarray, neighbours: int = 4):
        if vertices.shape[1] != 3 or cells.shape[1] != 3:
            raise GeometryError("projection needs a triangle surface in 3D")
        self.vertices = np.array(vertices, dtype=float)
        self.cells = np.asarray(cells)
        self.neighbours = min(neighbours, self.vertices.shape[0])
        self.tree = cKDTree(self.vertices)
        flat = self.cells.reshape(-1)
        order = np.argsort(flat, kind="stable")
        bounds = np.searchsorted(flat[order], np.arange(self.vertices.shape[0] + 1))
        owner = order // 3
        self._incident = [owner[bounds[i]:bounds[i + 1]] for i in range(self.vertices.shape[0])]

    def project(self, points: np.ndarray) -> np.ndarray:
        """
        Punto más cercano de la superficie para cada punto

        Args:
            points: (m, 3)

        Returns:
            (m, 3)
        """
        points = np.asarray(points, dtype=float)
        _, nearest = self.tree.query(points, k=self.neighbours)
        nearest = nearest.reshape(points.shape[0], -1)
        owners, candidates = [], []
        for i, row in enumerate(nearest):
            cand = np.unique(np.concatenate([self._incident[v] for v in row]))
            owners.append(np.full(cand.size, i))
            candidates.append(cand)
        owner = np.concatenate(owners)
        cand = np.concatenate(candidates)
        tri = self.vertices[self.cells[cand]]
        q = closest_point_on_triangles(points[owner], tri[:, 0], tri[:, 1], tri[:, 2])
        dist = np.linalg.norm(q - points[owner], axis=1)
        order = np.lexsort((dist, owner))
        first = np.ones(order.size, dtype=bool)
        first[1:] = owner[order][1:] != owner[order][:-1]
        best = order[first]
        return q[best]
