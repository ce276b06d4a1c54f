import numpy as np
import pytest

from fields.densities import uniform_gM
from mesh_core.generators import disk_mesh, hemisphere_cap
from metric.elasticity import MetricConfig
from optimizer.descent import RunStatus
from optimizer.minimal_surface import (
    MinimalSurfaceConfig,
    area_descent_direction,
    lumped_direction,
    minimal_surface_flow,
)
from preshape.curvature import area_gradient, minimal_surface_descent_direction
from preshape.state import PreShapeState
from utils.errors import GeometryError


def _state(mesh):
    return PreShapeState(mesh, uniform_gM(mesh))


def test_cap_area_decreases_strictly():
    state = _state(hemisphere_cap(4))
    cfg = MinimalSurfaceConfig(max_steps=5)
    result = minimal_surface_flow(state, MetricConfig(), cfg)
    assert result.areas[0] == pytest.approx(state.total_volume)
    assert result.steps >= 1
    assert all(b < a for a, b in zip(result.areas, result.areas[1:]))
    assert result.areas[-1] >= _state(disk_mesh(4)).total_volume


def test_flow_keeps_the_boundary_ring():
    state = _state(hemisphere_cap(3))
    result = minimal_surface_flow(state, MetricConfig(), MinimalSurfaceConfig(max_steps=3))
    ring = state.reference_mesh.boundary_vertices
    assert np.array_equal(result.state.positions[ring], state.positions[ring])


def test_flat_disk_is_already_minimal():
    state = _state(disk_mesh(3))
    result = minimal_surface_flow(state, MetricConfig(), MinimalSurfaceConfig(max_steps=3))
    assert result.status == RunStatus.CONVERGED
    assert result.steps == 0
    assert result.state is state


def test_closed_surface_is_rejected(sphere_state):
    with pytest.raises(GeometryError):
        minimal_surface_flow(sphere_state, MetricConfig())


def test_lumped_direction_lowers_the_area():
    state = _state(hemisphere_cap(4))
    covector = minimal_surface_descent_direction(state)
    D = lumped_direction(state, covector)
    assert np.einsum("ia,ia->", area_gradient(state), D) < 0.0
    assert np.all(D[state.reference_mesh.boundary_vertices] == 0.0)


def test_direction_that_raises_the_area_is_replaced():
    state = _state(hemisphere_cap(4))
    covector = minimal_surface_descent_direction(state)
    uphill = -lumped_direction(state, covector)
    direction, kind = area_descent_direction(state, covector, uphill)
    assert kind == "lumped"
    assert np.einsum("ia,ia->", area_gradient(state), direction) < 0.0
    kept, kind = area_descent_direction(state, covector, -uphill)
    assert kind == "metric"
    assert np.array_equal(kept, -uphill)


def test_flow_does_not_stall_halfway():
    state = _state(hemisphere_cap(4))
    disk = _state(disk_mesh(4)).total_volume
    result = minimal_surface_flow(state, MetricConfig(), MinimalSurfaceConfig(max_steps=200))
    assert result.status != RunStatus.STAGNATED
    assert all(b < a for a, b in zip(result.areas, result.areas[1:]))
    assert result.areas[-1] < 0.5 * (result.areas[0] + disk)
