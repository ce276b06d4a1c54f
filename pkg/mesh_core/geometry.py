"""
Mesh Core - Geometry Module
Consultas geométricas vectorizadas sobre celdas simpliciales

Calcula:
- Volúmenes (con signo para mallas de codimensión 0)
- Gradientes de las funciones base P1 (tangenciales en superficies)
- Marcos ortonormales locales por Gram-Schmidt
- Normales de celda y de vértice
- Calidad por razón de radios
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from utils.errors import DegenerateCellError, GeometryError

# Umbral relativo de degeneración (se escala con scale**dim_cell)
DEGENERACY_EPS = 1e-14


@dataclass(frozen=True)
class CellGeometry:
    """Geometría de una celda.

    frame: columnas ortonormales (dim_ambient x dim_cell) que generan el plano
    de la celda. normal: solo para mallas de codimensión 1; (normal, frame)
    forma una base positivamente orientada.
    """
    volume: float
    centroid: np.ndarray
    frame: np.ndarray
    normal: Optional[np.ndarray] = None


def edge_matrices(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Matrices de aristas E = [x1-x0, ..., xk-x0], forma (n_c, d, k)."""
    corners = vertices[cells]
    return np.transpose(corners[:, 1:, :] - corners[:, :1, :], (0, 2, 1))


def cell_volumes(vertices: np.ndarray, cells: np.ndarray, signed: bool = False) -> np.ndarray:
    """
    Volumen k-dimensional de cada celda

    Args:
        vertices: coordenadas (n_v, d)
        cells: índices (n_c, k+1)
        signed: devuelve det(E)/k! con signo; solo válido si k == d

    Returns:
        Array (n_c,)
    """
    E = edge_matrices(vertices, cells)
    d, k = E.shape[1], E.shape[2]
    fact = math.factorial(k)
    if k == d:
        det = np.linalg.det(E) / fact
        return det if signed else np.abs(det)
    if signed:
        raise GeometryError("signed volumes need dim_cell == dim_ambient")
    gram = np.einsum('nak,nal->nkl', E, E)
    return np.sqrt(np.clip(np.linalg.det(gram), 0.0, None)) / fact


def cell_centroids(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    return vertices[cells].mean(axis=1)


def basis_gradients(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """
    Gradientes (tangenciales) de las funciones base baricéntricas

    Las filas de la pseudo-inversa (E^T E)^{-1} E^T son los gradientes de
    lambda_1..lambda_k; grad lambda_0 = -suma.

    Returns:
        Array (n_c, k+1, d)
    """
    E = edge_matrices(vertices, cells)
    gram = np.einsum('nak,nal->nkl', E, E)
    pinv = np.linalg.solve(gram, np.transpose(E, (0, 2, 1)))
    n_c, k, d = pinv.shape
    grads = np.empty((n_c, k + 1, d))
    grads[:, 1:, :] = pinv
    grads[:, 0, :] = -pinv.sum(axis=1)
    return grads


def orthonormal_frames(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Gram-Schmidt sobre las aristas de cada celda, forma (n_c, d, k)."""
    E = edge_matrices(vertices, cells)
    Q, R = np.linalg.qr(E)
    signs = np.sign(np.diagonal(R, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return Q * signs[:, None, :]


def cell_normals(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """
    Normales unitarias orientadas (solo codimensión 1)

    Triángulos en 3D: producto vectorial de las aristas.
    Segmentos en 2D: (t_y, -t_x), saliente para polígonos antihorarios.
    """
    E = edge_matrices(vertices, cells)
    d, k = E.shape[1], E.shape[2]
    if d - k != 1:
        raise GeometryError("cell normals are defined for codimension-1 meshes only")
    if d == 3:
        raw = np.cross(E[:, :, 0], E[:, :, 1])
    elif d == 2:
        t = E[:, :, 0]
        raw = np.stack([t[:, 1], -t[:, 0]], axis=1)
    else:
        raise GeometryError(f"unsupported ambient dimension {d}")
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    return np.divide(raw, norms, out=np.zeros_like(raw), where=norms > 0)


def scatter_add(cells: np.ndarray, values: np.ndarray, n_vertices: int) -> np.ndarray:
    """
    Acumula contribuciones por (celda, vértice local) en los vértices

    Reducción determinista (np.bincount recorre en orden fijo).

    Args:
        cells: (n_c, k+1)
        values: (n_c, k+1) o (n_c, k+1, m)
        n_vertices: tamaño del acumulador

    Returns:
        (n_v,) o (n_v, m)
    """
    index = cells.reshape(-1)
    if values.ndim == 2:
        return np.bincount(index, weights=values.reshape(-1), minlength=n_vertices)
    flat = values.reshape(index.size, -1)
    out = np.empty((n_vertices, flat.shape[1]))
    for a in range(flat.shape[1]):
        out[:, a] = np.bincount(index, weights=flat[:, a], minlength=n_vertices)
    return out


def vertex_normals_from(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Promedio de normales de celda ponderado por volumen, renormalizado."""
    normals = cell_normals(vertices, cells)
    weights = cell_volumes(vertices, cells)
    k1 = cells.shape[1]
    contrib = np.repeat((normals * weights[:, None])[:, None, :], k1, axis=1)
    acc = scatter_add(cells, contrib, vertices.shape[0])
    norms = np.linalg.norm(acc, axis=1)
    used = np.zeros(vertices.shape[0], dtype=bool)
    used[cells.reshape(-1)] = True
    scale = float(weights.max()) if weights.size else 1.0
    bad = used & (norms <= 1e-12 * scale)
    if np.any(bad):
        raise GeometryError(f"zero-length vertex normal at vertex {int(np.argmax(bad))} (fold-over)")
    norms[~used] = 1.0
    return acc / norms[:, None]


def barycentric_vertex_areas(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    vols = cell_volumes(vertices, cells)
    k1 = cells.shape[1]
    return scatter_add(cells, np.repeat(vols[:, None] / k1, k1, axis=1), vertices.shape[0])


def radius_ratio(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """
    Calidad por razón de radios normalizada (1 = simplex regular)

    Triángulos: 2 r_in / R. Tetraedros: 3 r_in / R. Segmentos: 1.
    """
    k = cells.shape[1] - 1
    if k == 1:
        return np.ones(cells.shape[0])
    corners = vertices[cells]
    if k == 2:
        a = np.linalg.norm(corners[:, 1] - corners[:, 2], axis=1)
        b = np.linalg.norm(corners[:, 0] - corners[:, 2], axis=1)
        c = np.linalg.norm(corners[:, 0] - corners[:, 1], axis=1)
        area = cell_volumes(vertices, cells)
        return 16.0 * area ** 2 / ((a + b + c) * a * b * c)
    if k == 3:
        e1 = corners[:, 1] - corners[:, 0]
        e2 = corners[:, 2] - corners[:, 0]
        e3 = corners[:, 3] - corners[:, 0]
        vol = np.abs(np.einsum('ij,ij->i', e1, np.cross(e2, e3))) / 6.0
        faces = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)]
        surface = np.zeros(cells.shape[0])
        for i, j, m in faces:
            surface += 0.5 * np.linalg.norm(
                np.cross(corners[:, j] - corners[:, i], corners[:, m] - corners[:, i]), axis=1)
        r_in = 3.0 * vol / surface
        num = (np.einsum('ij,ij->i', e1, e1)[:, None] * np.cross(e2, e3)
               + np.einsum('ij,ij->i', e2, e2)[:, None] * np.cross(e3, e1)
               + np.einsum('ij,ij->i', e3, e3)[:, None] * np.cross(e1, e2))
        r_circ = np.linalg.norm(num, axis=1) / (12.0 * vol)
        return 3.0 * r_in / r_circ
    raise GeometryError(f"quality not defined for dim_cell={k}")


def check_nondegenerate(volumes: np.ndarray, scale: float, dim_cell: int) -> None:
    threshold = DEGENERACY_EPS * scale ** dim_cell
    bad = np.nonzero(~(volumes > threshold))[0]
    if bad.size:
        raise DegenerateCellError(bad[0], volumes[bad[0]])


def cell_geometry(mesh, cell: int, positions: Optional[np.ndarray] = None) -> CellGeometry:
    """
    Geometría completa de una celda

    Args:
        mesh: SimplicialMesh
        cell: índice de la celda
        positions: coordenadas actuales (por defecto las de referencia)

    Returns:
        CellGeometry
    """
    vertices = mesh.vertices if positions is None else positions
    one = mesh.cells[cell:cell + 1]
    volume = float(cell_volumes(vertices, one)[0])
    if not volume > DEGENERACY_EPS * mesh.scale ** mesh.dim_cell:
        raise DegenerateCellError(cell, volume)
    frame = orthonormal_frames(vertices, one)[0]
    normal = cell_normals(vertices, one)[0] if mesh.codim == 1 else None
    return CellGeometry(
        volume=volume,
        centroid=cell_centroids(vertices, one)[0],
        frame=frame,
        normal=normal,
    )


def vertex_normals(mesh, positions: Optional[np.ndarray] = None) -> np.ndarray:
    """Normales de vértice (n_v, d) de una malla de superficie orientada."""
    if mesh.codim != 1:
        raise GeometryError("vertex normals need a codimension-1 mesh")
    vertices = mesh.vertices if positions is None else positions
    return vertex_normals_from(vertices, mesh.cells)
