"""
Mesh Core - Generators Module
Mallas de prueba y de los experimentos sin mallador externo

Genera:
- Cuadrado unitario estructurado (n=46 -> 4232 celdas, 2209 nodos)
- Icosfera, polígono circular, disco y casquete hemisférico, cilindro abierto
- Esfera conforme dentro de una caja (tetraedros, facetas de la esfera marcadas)
"""

import math
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from mesh_core.geometry import cell_volumes
from mesh_core.simplicial_mesh import SimplicialMesh
from utils.errors import GeometryError, InvertedCellError

SPHERE_TAG = 1
BOX_TAG = 2


def rectangle_mesh(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0,
                   jitter: float = 0.0, seed: int = 0) -> SimplicialMesh:
    """
    Triangulación estructurada de [0, lx] x [0, ly]

    Las diagonales alternan por cuadrado; todas las celdas tienen la misma área.

    Args:
        nx, ny: número de cuadrados por lado
        jitter: perturbación aleatoria de vértices interiores (fracción de h)
        seed: semilla de la perturbación
    """
    if nx < 1 or ny < 1:
        raise GeometryError("rectangle_mesh needs nx, ny >= 1")
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    cells = []
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if (i + j) % 2 == 0:
                cells += [(a, b, c), (a, c, d)]
            else:
                cells += [(a, b, d), (b, c, d)]

    if jitter > 0.0:
        rng = np.random.default_rng(seed)
        h = np.array([lx / nx, ly / ny])
        on_edge = ((np.isclose(vertices[:, 0], 0.0)) | (np.isclose(vertices[:, 0], lx))
                   | (np.isclose(vertices[:, 1], 0.0)) | (np.isclose(vertices[:, 1], ly)))
        noise = rng.uniform(-jitter, jitter, size=vertices.shape) * h
        vertices = vertices + np.where(on_edge[:, None], 0.0, noise)
    return SimplicialMesh(vertices, np.array(cells))


def unit_square_mesh(n: int, jitter: float = 0.0, seed: int = 0) -> SimplicialMesh:
    return rectangle_mesh(n, n, 1.0, 1.0, jitter=jitter, seed=seed)


def displace_interior(mesh: SimplicialMesh,
                      displacement: Callable[[np.ndarray], np.ndarray]) -> SimplicialMesh:
    """
    Aplica un desplazamiento a los vértices interiores (borde fijo)

    Args:
        mesh: malla de referencia
        displacement: función (n, d) -> (n, d)

    Returns:
        Nueva malla con la misma topología

    Raises:
        InvertedCellError: si el desplazamiento invierte alguna celda
    """
    moved = np.array(mesh.vertices, dtype=float)
    interior = ~mesh.boundary_mask
    delta = np.asarray(displacement(moved[interior]), dtype=float)
    moved[interior] = moved[interior] + delta
    if mesh.codim == 0:
        signed = cell_volumes(moved, mesh.cells, signed=True)
        bad = np.nonzero(signed <= 0)[0]
        if bad.size:
            raise InvertedCellError(bad[0], "initial distortion folds the mesh")
    return SimplicialMesh(moved, mesh.cells, facet_markers=mesh.facet_markers, orient=mesh.codim != 0)


def _icosahedron() -> Tuple[np.ndarray, np.ndarray]:
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ], dtype=float)
    faces = np.array([
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ], dtype=np.int64)
    return verts / np.linalg.norm(verts, axis=1, keepdims=True), faces


def icosphere_arrays(level: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vértices unitarios y caras de la icosfera subdividida level veces."""
    verts, faces = _icosahedron()
    points = list(verts)
    for _ in range(level):
        cache: Dict[Tuple[int, int], int] = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = points[a] + points[b]
                points.append(m / np.linalg.norm(m))
                cache[key] = len(points) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = np.array(refined, dtype=np.int64)
    return np.array(points), faces


def icosphere(level: int, center: Sequence[float] = (0.0, 0.0, 0.0),
              radius: float = 1.0, warp: float = 0.0) -> SimplicialMesh:
    """
    Icosfera: 20·4^level caras, 10·4^level + 2 vértices

    warp > 0 desplaza los vértices con un campo suave y los devuelve a la
    esfera, rompiendo las simetrías sin perder suavidad (warp < 0.3).
    """
    unit, faces = icosphere_arrays(level)
    if warp:
        x, y, z = unit.T
        moved = unit + warp * np.column_stack([np.sin(2.0 * y + 1.0), np.cos(3.0 * z), np.sin(x + 2.0 * y)])
        unit = moved / np.linalg.norm(moved, axis=1, keepdims=True)
    return SimplicialMesh(np.asarray(center, dtype=float) + radius * unit, faces)


def circle_polygon(n: int, radius: float = 1.0,
                   center: Sequence[float] = (0.0, 0.0)) -> SimplicialMesh:
    """Polígono regular de n segmentos inscrito en la circunferencia."""
    theta = 2.0 * np.pi * np.arange(n) / n
    vertices = np.asarray(center, dtype=float) + radius * np.column_stack([np.cos(theta), np.sin(theta)])
    cells = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    return SimplicialMesh(vertices, cells)


def _stitch_rings(inner: np.ndarray, inner_angles: np.ndarray,
                  outer: np.ndarray, outer_angles: np.ndarray):
    """Triangula la banda entre dos anillos avanzando por ángulo (antihorario)."""
    a, b = len(inner), len(outer)
    ia = np.append(inner_angles, 2.0 * np.pi)
    oa = np.append(outer_angles, 2.0 * np.pi)
    i = j = 0
    triangles = []
    while i < a or j < b:
        advance_outer = i == a or (j < b and oa[j + 1] <= ia[i + 1])
        if advance_outer:
            triangles.append((inner[i % a], outer[j % b], outer[(j + 1) % b]))
            j += 1
        else:
            triangles.append((inner[i % a], outer[j % b], inner[(i + 1) % a]))
            i += 1
    return triangles


def _ring_surface(rings: int, radius: float, lift: Callable[[float], Tuple[float, float]]) -> SimplicialMesh:
    """Superficie de anillos concéntricos: el anillo j tiene 6j vértices."""
    if rings < 1:
        raise GeometryError("need at least one ring")
    points = [np.array([0.0, 0.0, radius * lift(0.0)[1]])]
    ring_ids, ring_angles = [], []
    for j in range(1, rings + 1):
        count = 6 * j
        phi = 2.0 * np.pi * np.arange(count) / count
        rho, z = lift(j / rings)
        start = len(points)
        for p in phi:
            points.append(np.array([radius * rho * math.cos(p), radius * rho * math.sin(p), radius * z]))
        ring_ids.append(np.arange(start, start + count))
        ring_angles.append(phi)
    triangles = []
    first = ring_ids[0]
    for m in range(6):
        triangles.append((0, first[m], first[(m + 1) % 6]))
    for j in range(1, rings):
        triangles += _stitch_rings(ring_ids[j - 1], ring_angles[j - 1], ring_ids[j], ring_angles[j])
    return SimplicialMesh(np.array(points), np.array(triangles))


def disk_mesh(rings: int, radius: float = 1.0) -> SimplicialMesh:
    """Disco plano en z=0 dentro de R^3 (6·rings^2 triángulos)."""
    return _ring_surface(rings, radius, lambda s: (s, 0.0))


def hemisphere_cap(rings: int, radius: float = 1.0) -> SimplicialMesh:
    """Casquete z >= 0 de la esfera; su borde coincide con el de disk_mesh."""
    return _ring_surface(rings, radius, lambda s: (math.sin(0.5 * math.pi * s), math.cos(0.5 * math.pi * s)))


def cylinder_mesh(radius: float, height: float, n_around: int, n_along: int) -> SimplicialMesh:
    """Tubo abierto alrededor del eje z con normales salientes."""
    phi = 2.0 * np.pi * np.arange(n_around) / n_around
    zs = np.linspace(0.0, height, n_along + 1)
    vertices = np.array([(radius * math.cos(p), radius * math.sin(p), z) for z in zs for p in phi])

    def vid(m, l):
        return l * n_around + (m % n_around)

    cells = []
    for l in range(n_along):
        for m in range(n_around):
            a, b, c, d = vid(m, l), vid(m + 1, l), vid(m + 1, l + 1), vid(m, l + 1)
            if (m + l) % 2 == 0:
                cells += [(a, b, c), (a, c, d)]
            else:
                cells += [(a, b, d), (b, c, d)]
    return SimplicialMesh(vertices, np.array(cells))


def _split_prism(bottom: Sequence[int], offset: int):
    """Tres tetraedros de un prisma; la diagonal de cada cara depende solo del orden global."""
    v0, v1, v2 = sorted(int(v) for v in bottom)
    t0, t1, t2 = v0 + offset, v1 + offset, v2 + offset
    return [(v0, v1, v2, t0), (v1, v2, t0, t1), (v2, t0, t1, t2)]


def sphere_in_box_mesh(level: int, center: Sequence[float] = (0.5, 0.5, 0.5), radius: float = 0.3,
                       box: Tuple[float, float] = (0.0, 1.0), outer_layers: int = 3,
                       inner_layers: int = 2, inner_ratio: float = 0.5) -> SimplicialMesh:
    """
    Malla tetraédrica de la caja con la esfera como superficie interna conforme

    Las capas siguen rayos desde el centro: conos en el núcleo, prismas
    radiales hasta la esfera y desde la esfera hasta la caja (proyección
    radial sobre la frontera del cubo).

    Args:
        level: nivel de la icosfera
        center, radius: esfera
        box: cubo [lo, hi]^3 que la contiene
        outer_layers: capas de prismas entre esfera y caja
        inner_layers: capas de prismas dentro de la esfera
        inner_ratio: radio del núcleo relativo a radius

    Returns:
        SimplicialMesh con facetas marcadas SPHERE_TAG (esfera) y BOX_TAG (caja)
    """
    c = np.asarray(center, dtype=float)
    lo, hi = box
    if np.any(c - radius <= lo) or np.any(c + radius >= hi):
        raise GeometryError("sphere must lie strictly inside the box")
    unit, faces = icosphere_arrays(level)
    n_s = unit.shape[0]

    # distancia por rayo hasta la frontera del cubo
    with np.errstate(divide="ignore"):
        t_hi = np.where(unit > 0, (hi - c) / unit, np.inf)
        t_lo = np.where(unit < 0, (lo - c) / unit, np.inf)
    t_box = np.minimum(t_hi, t_lo).min(axis=1)

    radii = [radius * (inner_ratio + (1.0 - inner_ratio) * l / inner_layers) for l in range(inner_layers)]
    shells = [c + r * unit for r in radii]
    sphere_shell = len(shells)
    shells.append(c + radius * unit)
    for l in range(1, outer_layers + 1):
        shells.append(c + (radius + (t_box - radius) * l / outer_layers)[:, None] * unit)
    points = np.vstack([c[None, :]] + shells)

    def shell_index(s):
        return 1 + s * n_s

    tets = [(0, *(shell_index(0) + faces[f])) for f in range(faces.shape[0])]
    for s in range(len(shells) - 1):
        base = shell_index(s)
        for tri in faces:
            tets += _split_prism(base + tri, n_s)

    markers = {}
    for tri in faces:
        markers[tuple(sorted(int(v) for v in shell_index(sphere_shell) + tri))] = SPHERE_TAG
        markers[tuple(sorted(int(v) for v in shell_index(len(shells) - 1) + tri))] = BOX_TAG
    return SimplicialMesh(points, np.array(tets), facet_markers=markers)
