import numpy as np
import pytest

from fields.expressions import VectorExpression
from mesh_core.generators import (
    SPHERE_TAG,
    circle_polygon,
    cylinder_mesh,
    disk_mesh,
    displace_interior,
    hemisphere_cap,
    icosphere,
    sphere_in_box_mesh,
    unit_square_mesh,
)
from mesh_core.geometry import cell_normals, cell_volumes
from mesh_core.surface import SurfaceProjector, extract_surface
from utils.errors import GeometryError, InvertedCellError


def test_unit_square_sizes_of_experiment_mesh():
    mesh = unit_square_mesh(46)
    assert mesh.n_cells == 4232
    assert mesh.n_vertices == 2209
    assert cell_volumes(mesh.vertices, mesh.cells).sum() == pytest.approx(1.0)


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_icosphere_counts(level):
    mesh = icosphere(level)
    assert mesh.n_cells == 20 * 4 ** level
    assert mesh.n_vertices == 10 * 4 ** level + 2
    assert mesh.is_closed
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0)


def test_circle_polygon_is_closed_curve():
    mesh = circle_polygon(16, radius=2.0)
    assert mesh.dim_cell == 1 and mesh.dim_ambient == 2
    assert mesh.is_closed
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 2.0)


def test_disk_and_cap_share_boundary():
    disk = disk_mesh(4)
    cap = hemisphere_cap(4)
    assert disk.n_cells == cap.n_cells == 6 * 4 ** 2
    assert np.array_equal(disk.boundary_vertices, cap.boundary_vertices)
    assert np.allclose(disk.vertices[disk.boundary_vertices], cap.vertices[cap.boundary_vertices], atol=1e-12)
    assert np.allclose(disk.vertices[:, 2], 0.0)


def test_cylinder_is_open_tube():
    mesh = cylinder_mesh(1.0, 2.0, 16, 4)
    assert mesh.n_cells == 2 * 16 * 4
    assert mesh.boundary_vertices.size == 32
    assert cell_volumes(mesh.vertices, mesh.cells).sum() == pytest.approx(16 * 2 * np.sin(np.pi / 16) * 2.0)


def test_sphere_in_box_layers():
    mesh = sphere_in_box_mesh(1)
    volume = cell_volumes(mesh.vertices, mesh.cells).sum()
    assert mesh.dim_cell == 3
    assert 4.0 / 3.0 * np.pi * 0.3 ** 3 < volume < 1.0
    surface, vertex_map = extract_surface(mesh, SPHERE_TAG)
    assert surface.n_vertices == vertex_map.size == 42
    centroids = surface.vertices[surface.cells].mean(axis=1) - 0.5
    normals = cell_normals(surface.vertices, surface.cells)
    assert np.all(np.einsum('ij,ij->i', normals, centroids) > 0)


def test_sphere_must_fit_in_box():
    with pytest.raises(GeometryError):
        sphere_in_box_mesh(1, center=(0.1, 0.5, 0.5), radius=0.3)


def test_displace_interior_keeps_boundary():
    mesh = unit_square_mesh(8)
    moved = displace_interior(mesh, VectorExpression(["0.025*sin(25.5*x)", "0"]))
    boundary = mesh.boundary_vertices
    assert np.array_equal(moved.vertices[boundary], mesh.vertices[boundary])
    assert not np.array_equal(moved.vertices, mesh.vertices)
    assert np.array_equal(moved.cells, mesh.cells)


def test_displace_interior_detects_folding():
    mesh = unit_square_mesh(4)
    with pytest.raises(InvertedCellError):
        displace_interior(mesh, VectorExpression(["0.3", "0"]))


def test_projector_onto_flat_disk():
    disk = disk_mesh(3)
    projector = SurfaceProjector(disk.vertices, disk.cells)
    projected = projector.project(np.array([[0.1, 0.2, 0.5], [0.3, -0.1, -0.2]]))
    assert np.allclose(projected, [[0.1, 0.2, 0.0], [0.3, -0.1, 0.0]], atol=1e-12)


def test_projector_fixes_surface_points():
    sphere = icosphere(2)
    projector = SurfaceProjector(sphere.vertices, sphere.cells)
    assert np.allclose(projector.project(sphere.vertices), sphere.vertices, atol=1e-12)
