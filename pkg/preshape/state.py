"""
Preshape - State Module
Estado de la pre-forma: malla de referencia, posiciones actuales y g^M

Considera:
- Dominio de representación (hold-all) con mapa forma -> dominio
- Vértices de borde y de Dirichlet fijos bit a bit
- Celdas invertidas rechazadas (volumen con signo o normal volteada)
- Cantidades geométricas cacheadas por configuración
"""

from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np

from fields.containers import NodalField
from mesh_core.geometry import (
    DEGENERACY_EPS,
    barycentric_vertex_areas,
    basis_gradients,
    cell_centroids,
    cell_normals,
    cell_volumes,
    edge_matrices,
    orthonormal_frames,
    vertex_normals_from,
)
from mesh_core.simplicial_mesh import SimplicialMesh
from utils.errors import GeometryError, InvertedCellError


def _check_fixed(positions: np.ndarray, reference: np.ndarray, indices: np.ndarray, what: str) -> None:
    if indices.size and np.any(positions[indices] != reference[indices]):
        moved = indices[np.any(positions[indices] != reference[indices], axis=1)]
        raise GeometryError(f"{what} vertex {int(moved[0])} moved")


class HoldAllDomain:
    """
    Dominio donde se representa el gradiente

    Para mallas de volumen y superficies independientes es la propia malla
    de la forma; en modo conforme es la malla de volumen que contiene la
    superficie (shape_map: vértice de la forma -> vértice del dominio).
    """

    def __init__(self, mesh: SimplicialMesh, shape_map: Sequence[int], dirichlet: Sequence[int],
                 positions: Optional[np.ndarray] = None, standalone: bool = False):
        self.mesh = mesh
        self.shape_map = np.asarray(shape_map, dtype=np.int64)
        self.dirichlet = np.unique(np.asarray(dirichlet, dtype=np.int64))
        pos = np.array(mesh.vertices if positions is None else positions, dtype=float)
        pos.setflags(write=False)
        self.positions = pos
        self.standalone = standalone

    @classmethod
    def for_shape(cls, shape_mesh: SimplicialMesh) -> "HoldAllDomain":
        return cls(shape_mesh, np.arange(shape_mesh.n_vertices), shape_mesh.boundary_vertices, standalone=True)

    @classmethod
    def conforming(cls, volume_mesh: SimplicialMesh, vertex_map: np.ndarray,
                   shape_boundary: Sequence[int] = ()) -> "HoldAllDomain":
        """Dominio de volumen; el borde de la forma (si existe) se añade a Dirichlet."""
        vertex_map = np.asarray(vertex_map, dtype=np.int64)
        extra = vertex_map[np.asarray(shape_boundary, dtype=np.int64)]
        dirichlet = np.union1d(volume_mesh.boundary_vertices, extra)
        return cls(volume_mesh, vertex_map, dirichlet)

    def moved(self, positions: np.ndarray) -> "HoldAllDomain":
        return HoldAllDomain(self.mesh, self.shape_map, self.dirichlet, positions, self.standalone)

    @property
    def shape_vertices(self) -> np.ndarray:
        return self.shape_map

    def check(self) -> None:
        _check_fixed(self.positions, self.mesh.vertices, self.dirichlet, "Dirichlet")
        if self.standalone:
            return
        signed = cell_volumes(self.positions, self.mesh.cells, signed=True)
        bad = np.nonzero(~(signed > 0))[0]
        if bad.size:
            raise InvertedCellError(bad[0], "hold-all cell has non-positive volume")


class PreShapeState:
    """
    Pre-forma phi: referencia M, posiciones actuales phi(M) y densidad g^M

    Las instancias son inmutables; cada paso produce un estado nuevo.
    """

    def __init__(self, reference_mesh: SimplicialMesh, gM: NodalField,
                 domain: Optional[HoldAllDomain] = None, check: bool = True):
        """
        Args:
            reference_mesh: malla de la forma en su configuración de referencia
            gM: densidad inicial de nodos sobre la referencia
            domain: dominio hold-all (por defecto la propia malla)
            check: validar borde fijo y celdas no invertidas
        """
        if gM.mesh is not reference_mesh or gM.values.shape[0] != reference_mesh.n_vertices:
            raise GeometryError("gM does not live on the reference mesh")
        self.reference_mesh = reference_mesh
        self.gM = gM
        self.domain = domain if domain is not None else HoldAllDomain.for_shape(reference_mesh)
        positions = self.domain.positions[self.domain.shape_map]
        positions.setflags(write=False)
        self.positions = positions
        if check:
            self.validate()

    # --- construcción ------------------------------------------------------

    def with_domain_positions(self, positions: np.ndarray) -> "PreShapeState":
        return PreShapeState(self.reference_mesh, self.gM, self.domain.moved(positions))

    def with_positions(self, positions: np.ndarray) -> "PreShapeState":
        """Mueve solo los vértices de la forma (el resto del dominio queda fijo)."""
        full = np.array(self.domain.positions)
        full[self.domain.shape_map] = positions
        return self.with_domain_positions(full)

    def validate(self) -> None:
        mesh = self.reference_mesh
        _check_fixed(self.positions, mesh.vertices, mesh.boundary_vertices, "boundary")
        if mesh.codim == 0:
            signed = cell_volumes(self.positions, mesh.cells, signed=True)
            bad = np.nonzero(~(signed > 0))[0]
            if bad.size:
                raise InvertedCellError(bad[0], f"signed volume {signed[bad[0]]:.3e}")
        else:
            threshold = DEGENERACY_EPS * mesh.scale ** mesh.dim_cell
            flipped = np.einsum('ij,ij->i', self.cell_normals, self.reference_normals) <= 0
            bad = np.nonzero(~(self.current_volumes > threshold) | flipped)[0]
            if bad.size:
                raise InvertedCellError(bad[0], "cell normal flipped or collapsed")
        self.domain.check()

    # --- dimensiones -------------------------------------------------------

    @property
    def dim_cell(self) -> int:
        return self.reference_mesh.dim_cell

    @property
    def dim_ambient(self) -> int:
        return self.reference_mesh.dim_ambient

    @property
    def codim(self) -> int:
        return self.reference_mesh.codim

    @property
    def cells(self) -> np.ndarray:
        return self.reference_mesh.cells

    @property
    def n_vertices(self) -> int:
        return self.reference_mesh.n_vertices

    @property
    def interior_mask(self) -> np.ndarray:
        return ~self.reference_mesh.boundary_mask

    # --- geometría cacheada ------------------------------------------------

    @cached_property
    def reference_volumes(self) -> np.ndarray:
        return cell_volumes(self.reference_mesh.vertices, self.cells)

    @cached_property
    def current_volumes(self) -> np.ndarray:
        return cell_volumes(self.positions, self.cells)

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        return basis_gradients(self.positions, self.cells)

    @cached_property
    def centroids(self) -> np.ndarray:
        return cell_centroids(self.positions, self.cells)

    @cached_property
    def cell_normals(self) -> np.ndarray:
        return cell_normals(self.positions, self.cells)

    @cached_property
    def reference_normals(self) -> np.ndarray:
        return cell_normals(self.reference_mesh.vertices, self.cells)

    @cached_property
    def vertex_normals(self) -> np.ndarray:
        if self.codim != 1:
            raise GeometryError("vertex normals need a codimension-1 mesh")
        return vertex_normals_from(self.positions, self.cells)

    @cached_property
    def vertex_areas(self) -> np.ndarray:
        return barycentric_vertex_areas(self.positions, self.cells)

    @cached_property
    def cell_mean_gM(self) -> np.ndarray:
        return self.gM.values[self.cells].mean(axis=1)

    @cached_property
    def total_mass(self) -> float:
        """∫g sobre la referencia (cuadratura P1 exacta)."""
        return float(np.sum(self.cell_mean_gM * self.reference_volumes))

    @property
    def total_volume(self) -> float:
        return float(self.current_volumes.sum())

    def frames(self) -> Tuple[np.ndarray, np.ndarray]:
        """Marcos de Gram-Schmidt (referencia, actual), forma (n_c, d, k)."""
        return (orthonormal_frames(self.reference_mesh.vertices, self.cells),
                orthonormal_frames(self.positions, self.cells))

    def jacobian_determinants(self, ref_frames: Optional[np.ndarray] = None,
                              cur_frames: Optional[np.ndarray] = None) -> np.ndarray:
        """
        det D^tau phi por celda

        Sin marcos explícitos es vol_cur/vol_ref; con marcos se calcula
        det(tau_cur^T E_cur) / det(tau_ref^T E_ref).
        """
        if ref_frames is None and cur_frames is None:
            return self.current_volumes / self.reference_volumes
        default_ref, default_cur = self.frames()
        ref_frames = default_ref if ref_frames is None else ref_frames
        cur_frames = default_cur if cur_frames is None else cur_frames
        E_ref = edge_matrices(self.reference_mesh.vertices, self.cells)
        E_cur = edge_matrices(self.positions, self.cells)
        M_ref = np.einsum('nak,nal->nkl', ref_frames, E_ref)
        M_cur = np.einsum('nak,nal->nkl', cur_frames, E_cur)
        return np.linalg.det(M_cur) / np.linalg.det(M_ref)

    def density(self, ref_frames=None, cur_frames=None) -> np.ndarray:
        return self.cell_mean_gM / self.jacobian_determinants(ref_frames, cur_frames)

    def mean_edge_length(self) -> float:
        return self.reference_mesh.mean_edge_length(self.positions)

    def __repr__(self) -> str:
        return f"PreShapeState({self.reference_mesh!r}, domain_vertices={self.domain.mesh.n_vertices})"
