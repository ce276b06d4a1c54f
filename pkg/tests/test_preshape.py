import numpy as np
import pytest

from fields.densities import estimate_gM
from fields.targets import TargetSpec, build_target, target_terms
from mesh_core.generators import unit_square_mesh
from preshape.derivative import (
    Component,
    assemble_derivative,
    material_derivative_target,
    objective,
    total_q_variation,
)
from preshape.state import PreShapeState
from utils.errors import ComponentError, GeometryError, InvertedCellError


def _J(state, spec, positions):
    moved = state.with_positions(positions)
    return objective(moved, build_target(spec, moved))


def _interior_direction(state, seed):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal(state.positions.shape)
    V[~state.interior_mask] = 0.0
    return V


def test_objective_vanishes_on_exact_solution():
    mesh = unit_square_mesh(6)
    state = PreShapeState(mesh, estimate_gM(mesh))
    assert objective(state, build_target(TargetSpec(), state)) == pytest.approx(0.0, abs=1e-24)


def test_objective_by_hand(fan_square):
    state = PreShapeState(fan_square, estimate_gM(fan_square))
    moved = np.array(state.positions)
    moved[4] = [0.5, 0.25]
    after = state.with_positions(moved)
    assert objective(after, build_target(TargetSpec(), after)) == pytest.approx(1.0 / 12.0, rel=1e-12)


def test_full_covector_matches_central_differences(jittered_square_state, analytic_target):
    state = jittered_square_state
    d = assemble_derivative(state, analytic_target, Component.FULL)
    h = 1e-6
    for seed in range(3):
        V = _interior_direction(state, seed)
        fd = (_J(state, analytic_target, state.positions + h * V)
              - _J(state, analytic_target, state.positions - h * V)) / (2 * h)
        assert d.pair(V) == pytest.approx(fd, rel=1e-5, abs=1e-12)


def test_full_covector_on_closed_surface(sphere_state, analytic_target):
    state = sphere_state
    d = assemble_derivative(state, analytic_target, Component.FULL)
    V = np.random.default_rng(4).standard_normal(state.positions.shape)
    h = 1e-6
    fd = (_J(state, analytic_target, state.positions + h * V)
          - _J(state, analytic_target, state.positions - h * V)) / (2 * h)
    assert d.pair(V) == pytest.approx(fd, rel=1e-5, abs=1e-12)


def test_components_split_full_on_surfaces(sphere_state, analytic_target):
    state = sphere_state
    full = assemble_derivative(state, analytic_target, Component.FULL)
    tangential = assemble_derivative(state, analytic_target, Component.TANGENTIAL)
    normal = assemble_derivative(state, analytic_target, Component.NORMAL)
    assert np.allclose(tangential.values + normal.values, full.values, atol=1e-14)
    along_normal = np.einsum('ia,ia->i', tangential.values, state.vertex_normals)
    assert np.max(np.abs(along_normal)) < 1e-12


def test_tangential_is_full_in_codimension_zero(jittered_square_state, analytic_target):
    full = assemble_derivative(jittered_square_state, analytic_target, Component.FULL)
    tangential = assemble_derivative(jittered_square_state, analytic_target, "Tangential")
    assert np.array_equal(full.values, tangential.values)


def test_normal_component_needs_codimension_one(jittered_square_state, analytic_target):
    with pytest.raises(ComponentError):
        assemble_derivative(jittered_square_state, analytic_target, Component.NORMAL)


def test_pairing_ignores_boundary_vertices(jittered_square_state, analytic_target):
    d = assemble_derivative(jittered_square_state, analytic_target)
    V = _interior_direction(jittered_square_state, 9)
    W = V.copy()
    W[~jittered_square_state.interior_mask] = 5.0
    assert d.pair(W) == d.pair(V)
    assert d.negated().pair(V) == pytest.approx(-d.pair(V))
    assert np.all(d.interior_values()[~jittered_square_state.interior_mask] == 0.0)


def test_moving_the_boundary_is_rejected(fan_square):
    state = PreShapeState(fan_square, estimate_gM(fan_square))
    moved = np.array(state.positions)
    moved[0] = [0.0, 0.01]
    with pytest.raises(GeometryError):
        state.with_positions(moved)


def test_density_on_another_mesh_is_rejected():
    mesh = unit_square_mesh(4)
    twin = unit_square_mesh(4)
    with pytest.raises(GeometryError):
        PreShapeState(mesh, estimate_gM(twin))


def test_inverted_cell_is_rejected(fan_square):
    state = PreShapeState(fan_square, estimate_gM(fan_square))
    moved = np.array(state.positions)
    moved[4] = [0.5, -0.1]
    with pytest.raises(InvertedCellError) as info:
        state.with_positions(moved)
    assert info.value.cell == 0


def test_frame_determinants_match_volume_ratio(sphere_state):
    state = sphere_state.with_positions(1.5 * sphere_state.positions)
    ref_frames, cur_frames = state.frames()
    with_frames = state.jacobian_determinants(ref_frames, cur_frames)
    assert np.allclose(with_frames, state.jacobian_determinants(), rtol=1e-12)
    assert np.allclose(with_frames, 2.25, rtol=1e-12)


def test_material_derivative_matches_finite_differences(jittered_square_state, analytic_target):
    state = jittered_square_state
    V = _interior_direction(state, 2)
    h = 1e-6
    plus = build_target(analytic_target, state.with_positions(state.positions + h * V)).values
    minus = build_target(analytic_target, state.with_positions(state.positions - h * V)).values
    derivative = material_derivative_target(state, analytic_target, V, form="discrete")
    assert derivative.name == "material_derivative"
    assert np.allclose(derivative.values, (plus - minus) / (2 * h), rtol=1e-5, atol=1e-8)


def test_total_q_variation_matches_finite_differences(jittered_square_state, analytic_target):
    state = jittered_square_state
    V = _interior_direction(state, 6)
    h = 1e-6
    plus = target_terms(analytic_target, state.with_positions(state.positions + h * V)).total_q
    minus = target_terms(analytic_target, state.with_positions(state.positions - h * V)).total_q
    assert total_q_variation(state, analytic_target, V) == pytest.approx((plus - minus) / (2 * h), rel=1e-6, abs=1e-9)


def test_uniform_target_has_no_material_derivative(jittered_square_state):
    V = _interior_direction(jittered_square_state, 1)
    spec = TargetSpec()
    discrete = material_derivative_target(jittered_square_state, spec, V, form="discrete")
    stokes = material_derivative_target(jittered_square_state, spec, V, form="stokes")
    assert np.allclose(discrete.values, 0.0, atol=1e-12)
    assert np.array_equal(stokes.values, np.zeros_like(stokes.values))


def test_uniform_target_on_a_surface_has_no_material_derivative(sphere_state):
    V = np.random.default_rng(3).standard_normal(sphere_state.positions.shape)
    derivative = material_derivative_target(sphere_state, TargetSpec(), V, form="stokes")
    assert np.array_equal(derivative.values, np.zeros(sphere_state.reference_mesh.n_cells))


def test_unnormalized_material_derivative_is_local(jittered_square_state):
    spec = TargetSpec(kind="Analytic", expression="2 + x", normalize=False)
    V = np.zeros(jittered_square_state.positions.shape)
    V[:, 0] = 1.0
    V[~jittered_square_state.interior_mask] = 0.0
    derivative = material_derivative_target(jittered_square_state, spec, V)
    centroid_speed = V[jittered_square_state.cells].mean(axis=1)[:, 0]
    assert np.allclose(derivative.values, centroid_speed)
