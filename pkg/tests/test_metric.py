import numpy as np
import pytest
from pydantic import ValidationError

from mesh_core.generators import SPHERE_TAG, icosphere, sphere_in_box_mesh, unit_square_mesh
from mesh_core.geometry import cell_volumes
from mesh_core.surface import extract_surface
from metric.elasticity import (
    MetricConfig,
    assemble_elasticity,
    assemble_metric,
    l2_norm,
    represent_gradient,
    solve_mu,
)
from preshape.derivative import assemble_derivative
from utils.errors import ConfigError, GeometryError


def test_metric_weights_are_validated():
    with pytest.raises(ValidationError):
        MetricConfig(alpha_LE=0.0)
    with pytest.raises(ValidationError):
        MetricConfig(alpha_L2=-1.0)


def test_constant_mu_when_bounds_agree():
    mesh = unit_square_mesh(4)
    mu = solve_mu(mesh, np.arange(mesh.n_vertices), MetricConfig(mu_max=3.0, mu_min=3.0))
    assert np.all(mu.values == 3.0)


def test_harmonic_mu_in_conforming_box():
    mesh = sphere_in_box_mesh(1)
    _, vertex_map = extract_surface(mesh, SPHERE_TAG)
    mu = solve_mu(mesh, vertex_map, MetricConfig(mu_max=30.0, mu_min=5.0))
    assert np.all(mu.values[vertex_map] == 30.0)
    assert np.all(mu.values[mesh.boundary_vertices] == 5.0)
    assert np.all(np.isfinite(mu.values))
    free = np.setdiff1d(np.arange(mesh.n_vertices), np.union1d(vertex_map, mesh.boundary_vertices))
    assert 5.0 < mu.values[free].mean() < 30.0


def test_rigid_motions_have_no_shear_energy():
    mesh = unit_square_mesh(5, jitter=0.2, seed=2)
    A = assemble_elasticity(mesh.vertices, mesh.cells, np.ones(mesh.n_vertices))
    translation = np.tile([1.0, 0.0], mesh.n_vertices)
    rotation = np.column_stack([-mesh.vertices[:, 1], mesh.vertices[:, 0]]).reshape(-1)
    assert np.max(np.abs(A @ translation)) < 1e-12
    assert np.max(np.abs(A @ rotation)) < 1e-12
    stretch = np.column_stack([mesh.vertices[:, 0], np.zeros(mesh.n_vertices)]).reshape(-1)
    assert stretch @ (A @ stretch) > 0


def test_zero_covector_gives_zero_gradient():
    mesh = unit_square_mesh(4)
    mu = solve_mu(mesh, np.arange(mesh.n_vertices), MetricConfig())
    U = represent_gradient(mesh, mu, MetricConfig(), np.zeros((mesh.n_vertices, 2)))
    assert np.all(U.values == 0.0)
    assert U.residual == 0.0


def test_gradient_solves_metric_system(jittered_square_state, analytic_target):
    state = jittered_square_state
    mesh = state.reference_mesh
    cfg = MetricConfig(alpha_LE=0.02, alpha_L2=1.0)
    mu = solve_mu(mesh, np.arange(mesh.n_vertices), cfg)
    d = assemble_derivative(state, analytic_target)
    U = represent_gradient(mesh, mu, cfg, d.negated())
    assert np.all(U.values[mesh.boundary_vertices] == 0.0)
    assert U.residual < 1e-10

    A = assemble_metric(mesh.vertices, mesh.cells, mu.values, cfg)
    rng = np.random.default_rng(3)
    for _ in range(3):
        V = rng.standard_normal(U.values.shape)
        V[mesh.boundary_vertices] = 0.0
        energy = U.values.reshape(-1) @ (A @ V.reshape(-1))
        assert energy == pytest.approx(-d.pair(V), rel=1e-8, abs=1e-14)
    assert d.pair(U.values) < 0


def test_iterative_solver_matches_direct(jittered_square_state, analytic_target):
    state = jittered_square_state
    mesh = state.reference_mesh
    direct_cfg = MetricConfig(solver_rtol=1e-10)
    iterative_cfg = MetricConfig(solver_rtol=1e-10, direct_limit=1)
    mu = solve_mu(mesh, np.arange(mesh.n_vertices), direct_cfg)
    d = assemble_derivative(state, analytic_target)
    direct = represent_gradient(mesh, mu, direct_cfg, d)
    iterative = represent_gradient(mesh, mu, iterative_cfg, d)
    assert np.allclose(iterative.values, direct.values, rtol=1e-6, atol=1e-12)


def test_pure_elasticity_needs_dirichlet(sphere_state):
    mesh = sphere_state.reference_mesh
    cfg = MetricConfig(alpha_L2=0.0)
    mu = solve_mu(mesh, np.arange(mesh.n_vertices), MetricConfig(), boundary_vertices=[])
    with pytest.raises(ConfigError):
        represent_gradient(mesh, mu, cfg, np.ones((mesh.n_vertices, 3)), dirichlet=[])


def test_closed_surface_with_mass_term(sphere_state, analytic_target):
    mesh = sphere_state.reference_mesh
    cfg = MetricConfig()
    mu = solve_mu(mesh, np.arange(mesh.n_vertices), cfg, boundary_vertices=[])
    d = assemble_derivative(sphere_state, analytic_target)
    U = represent_gradient(mesh, mu, cfg, d.negated(), dirichlet=[])
    assert d.pair(U.values) < 0


def test_rhs_shape_must_conform():
    mesh = unit_square_mesh(3)
    mu = solve_mu(mesh, np.arange(mesh.n_vertices), MetricConfig())
    with pytest.raises(GeometryError):
        represent_gradient(mesh, mu, MetricConfig(), np.ones((mesh.n_vertices, 3)))


def test_l2_norm_of_constant_fields():
    square = unit_square_mesh(4, jitter=0.2, seed=5)
    assert l2_norm(np.tile([1.0, 0.0], (square.n_vertices, 1)), square) == pytest.approx(1.0, rel=1e-12)
    sphere = icosphere(2)
    area = cell_volumes(sphere.vertices, sphere.cells).sum()
    constant = np.tile([0.0, 0.0, 1.0], (sphere.n_vertices, 1))
    assert l2_norm(constant, sphere) == pytest.approx(np.sqrt(area), rel=1e-12)
