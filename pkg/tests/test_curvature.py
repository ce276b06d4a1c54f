import numpy as np
import pytest

from fields.densities import uniform_gM
from fields.targets import TargetSpec
from mesh_core.generators import cylinder_mesh, disk_mesh, hemisphere_cap, icosphere
from preshape.curvature import (
    area_gradient,
    cotangent_vertex_areas,
    mean_curvature,
    minimal_surface_descent_direction,
    normal_curvature_covector,
)
from preshape.derivative import Component, assemble_derivative
from preshape.state import PreShapeState
from utils.errors import GeometryError


def _surface_state(mesh):
    return PreShapeState(mesh, uniform_gM(mesh))


def test_sphere_curvature_is_inverse_radius():
    state = _surface_state(icosphere(3, center=(0.5, 0.5, 0.5), radius=0.3))
    kappa = mean_curvature(state, area="cotangent").values
    assert np.allclose(kappa, 1.0 / 0.3, rtol=0.05)
    barycentric = mean_curvature(state, area="barycentric").values
    weighted = np.sum(barycentric * state.vertex_areas) / state.total_volume
    assert weighted == pytest.approx(1.0 / 0.3, rel=0.01)


def test_barycentric_area_is_the_default():
    state = _surface_state(icosphere(2))
    kappa = mean_curvature(state).values
    assert np.array_equal(kappa, mean_curvature(state, area="barycentric").values)
    normal_part = np.einsum("ia,ia->i", area_gradient(state), state.vertex_normals)
    assert np.allclose(kappa, normal_part / (2 * state.vertex_areas))


def test_flat_disk_has_no_curvature():
    state = _surface_state(disk_mesh(3))
    assert np.allclose(mean_curvature(state).values, 0.0, atol=1e-10)


def test_cylinder_curvature_and_boundary():
    state = _surface_state(cylinder_mesh(1.0, 1.0, 32, 8))
    kappa = mean_curvature(state, area="cotangent").values
    interior = state.interior_mask
    assert np.allclose(np.abs(kappa[interior]), 0.5, rtol=0.05)
    assert np.all(kappa[~interior] == 0.0)


def test_cotangent_areas_partition_the_surface():
    state = _surface_state(icosphere(2))
    areas = cotangent_vertex_areas(state)
    assert np.all(areas > 0)
    assert areas.sum() == pytest.approx(state.total_volume, rel=1e-12)


def test_area_gradient_matches_finite_differences():
    state = _surface_state(icosphere(1))
    V = np.random.default_rng(8).standard_normal(state.positions.shape)
    h = 1e-6
    plus = state.with_positions(state.positions + h * V).total_volume
    minus = state.with_positions(state.positions - h * V).total_volume
    grad = area_gradient(state)
    assert np.einsum('ia,ia->', grad, V) == pytest.approx((plus - minus) / (2 * h), rel=1e-6)


def test_curvature_needs_a_surface(jittered_square_state):
    with pytest.raises(GeometryError):
        mean_curvature(jittered_square_state)
    with pytest.raises(GeometryError):
        minimal_surface_descent_direction(jittered_square_state)


def test_closed_surface_has_no_plateau_problem(sphere_state):
    with pytest.raises(GeometryError):
        minimal_surface_descent_direction(sphere_state)


def test_minimal_surface_direction_is_normal():
    state = _surface_state(hemisphere_cap(3))
    d = minimal_surface_descent_direction(state)
    assert d.component == Component.NORMAL
    tangential = d.values - np.einsum('ia,ia->i', d.values, state.vertex_normals)[:, None] * state.vertex_normals
    assert np.max(np.abs(tangential)) < 1e-12
    assert np.all(d.values[~state.interior_mask] == 0.0)
    assert d.max_norm() > 0.0


def test_curvature_form_of_normal_component(sphere_state, analytic_target):
    d = assemble_derivative(sphere_state, analytic_target, Component.NORMAL, normal_form="curvature")
    assert d.form == "curvature"
    cross = np.cross(d.values, sphere_state.vertex_normals)
    assert np.max(np.abs(cross)) < 1e-12
    assert np.allclose(normal_curvature_covector(sphere_state, analytic_target).values, d.values)


def test_curvature_form_vanishes_at_uniform_optimum(sphere_state):
    d = normal_curvature_covector(sphere_state, TargetSpec())
    assert d.max_norm() < 1e-10
