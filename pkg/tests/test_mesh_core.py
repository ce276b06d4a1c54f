import math

import numpy as np
import pytest

from mesh_core.generators import icosphere, rectangle_mesh, unit_square_mesh
from mesh_core.geometry import (
    cell_geometry,
    cell_normals,
    cell_volumes,
    orthonormal_frames,
    radius_ratio,
    vertex_normals,
)
from mesh_core.simplicial_mesh import SimplicialMesh
from utils.errors import DegenerateCellError, GeometryError
from verify.audit import random_rotations


def test_two_triangle_square_topology(two_triangle_square):
    mesh = two_triangle_square
    assert mesh.n_vertices == 4
    assert mesh.n_cells == 2
    assert mesh.dim_cell == 2 and mesh.codim == 0
    assert sorted(mesh.boundary_vertices.tolist()) == [0, 1, 2, 3]
    assert mesh.edges.shape[0] == 5


def test_boundary_of_structured_square():
    mesh = unit_square_mesh(4)
    assert mesh.n_vertices == 25
    assert mesh.n_cells == 32
    assert mesh.boundary_vertices.size == 16
    on_edge = np.any((mesh.vertices == 0.0) | (mesh.vertices == 1.0), axis=1)
    assert np.array_equal(mesh.boundary_mask, on_edge)


def test_clockwise_cells_are_reoriented():
    mesh = SimplicialMesh([[0, 0], [0, 1], [1, 0]], [[0, 1, 2]])
    assert cell_volumes(mesh.vertices, mesh.cells, signed=True)[0] > 0


def test_degenerate_cell_is_rejected():
    with pytest.raises(DegenerateCellError) as info:
        SimplicialMesh([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])
    assert info.value.cell == 0


def test_non_manifold_edge_is_rejected():
    vertices = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]]
    with pytest.raises(GeometryError):
        SimplicialMesh(vertices, [[0, 1, 2], [0, 1, 3], [0, 1, 4]])


def test_closed_surface_gets_outward_normals():
    mesh = icosphere(1)
    flipped = SimplicialMesh(mesh.vertices, mesh.cells[:, [1, 0, 2]])
    centroids = flipped.vertices[flipped.cells].mean(axis=1)
    normals = cell_normals(flipped.vertices, flipped.cells)
    assert flipped.is_closed
    assert np.all(np.einsum('ij,ij->i', normals, centroids) > 0)


def test_cell_geometry_triangle_area():
    mesh = SimplicialMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    geo = cell_geometry(mesh, 0)
    assert geo.volume == pytest.approx(0.5)
    assert np.allclose(geo.centroid, [1 / 3, 1 / 3])
    assert geo.normal is None


def test_cell_geometry_regular_tetrahedron():
    h = math.sqrt(2.0 / 3.0)
    vertices = [[0, 0, 0], [1, 0, 0], [0.5, math.sqrt(3) / 2, 0], [0.5, math.sqrt(3) / 6, h]]
    mesh = SimplicialMesh(vertices, [[0, 1, 2, 3]])
    assert cell_geometry(mesh, 0).volume == pytest.approx(1.0 / (6.0 * math.sqrt(2.0)), rel=1e-12)
    assert radius_ratio(mesh.vertices, mesh.cells)[0] == pytest.approx(1.0, rel=1e-12)


def test_cell_geometry_planar_triangle_in_3d():
    mesh = SimplicialMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    geo = cell_geometry(mesh, 0)
    assert geo.volume == pytest.approx(0.5)
    assert np.allclose(np.abs(geo.normal), [0, 0, 1])
    assert np.allclose(geo.frame[2], 0.0)
    assert np.allclose(geo.frame.T @ geo.frame, np.eye(2), atol=1e-12)


def test_frames_orthonormal_and_right_handed():
    mesh = icosphere(2, radius=0.7)
    frames = orthonormal_frames(mesh.vertices, mesh.cells)
    normals = cell_normals(mesh.vertices, mesh.cells)
    gram = np.einsum('nak,nal->nkl', frames, frames)
    assert np.allclose(gram, np.eye(2)[None], atol=1e-12)
    assert np.max(np.abs(np.einsum('na,nak->nk', normals, frames))) < 1e-12
    handed = np.linalg.det(np.concatenate([normals[:, :, None], frames], axis=2))
    assert np.all(handed > 0)


def test_frame_change_of_basis_is_orthogonal():
    rng = np.random.default_rng(7)
    vertices = rng.standard_normal((3, 3))
    first = orthonormal_frames(vertices, np.array([[0, 1, 2]]))[0]
    second = orthonormal_frames(vertices, np.array([[1, 2, 0]]))[0]
    change = first.T @ second
    assert abs(abs(np.linalg.det(change)) - 1.0) < 1e-12


def test_volume_invariant_under_rigid_motion():
    rng = np.random.default_rng(11)
    vertices = rng.standard_normal((4, 3))
    cells = np.array([[0, 1, 2, 3]])
    base = cell_volumes(vertices, cells)
    for R in random_rotations(5, 3, rng):
        moved = vertices @ R.T + rng.standard_normal(3)
        assert cell_volumes(moved, cells)[0] == pytest.approx(base[0], rel=1e-12)


def test_vertex_normals_on_sphere():
    center = np.array([0.5, 0.5, 0.5])
    mesh = icosphere(3, center=center, radius=0.3)
    normals = vertex_normals(mesh)
    radial = (mesh.vertices - center) / 0.3
    angles = np.arccos(np.clip(np.einsum('ij,ij->i', normals, radial), -1.0, 1.0))
    assert angles.max() < 0.05


def test_vertex_normals_on_icosahedron_are_radial():
    mesh = icosphere(0)
    normals = vertex_normals(mesh)
    assert np.allclose(normals, mesh.vertices, atol=1e-12)


def test_vertex_normals_on_flat_square():
    flat = rectangle_mesh(3, 3)
    mesh = SimplicialMesh(np.column_stack([flat.vertices, np.zeros(flat.n_vertices)]), flat.cells)
    normals = vertex_normals(mesh)
    assert np.allclose(np.abs(normals[:, 2]), 1.0)
    assert np.allclose(normals, normals[0])


def test_vertex_normals_need_surface(two_triangle_square):
    with pytest.raises(GeometryError):
        vertex_normals(two_triangle_square)


def test_radius_ratio_of_right_triangle():
    mesh = unit_square_mesh(2)
    quality = radius_ratio(mesh.vertices, mesh.cells)
    assert np.allclose(quality, 2.0 * math.sqrt(2.0) - 2.0)
