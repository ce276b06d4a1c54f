import json

import pytest

from fields.densities import estimate_gM, uniform_gM
from fields.targets import TargetSpec
from mesh_core.generators import icosphere, unit_square_mesh
from mesh_core.simplicial_mesh import SimplicialMesh
from preshape.state import PreShapeState

TWO_TRIANGLE_MSH = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
6
1 1 2 1 1 1 2
2 1 2 1 1 2 3
3 1 2 1 1 3 4
4 1 2 1 1 4 1
5 2 2 0 0 1 2 3
6 2 2 0 0 1 3 4
$EndElements
"""


@pytest.fixture
def two_triangle_square():
    return SimplicialMesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2], [0, 2, 3]])


@pytest.fixture
def fan_square():
    """Cuadrado unitario con un vértice interior en el centro"""
    vertices = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]]
    cells = [[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]]
    return SimplicialMesh(vertices, cells)


@pytest.fixture
def jittered_square_state():
    mesh = unit_square_mesh(4, jitter=0.2, seed=1)
    return PreShapeState(mesh, estimate_gM(mesh))


@pytest.fixture
def analytic_target():
    return TargetSpec(kind="Analytic", expression="1 + 0.5*x + y^2")


@pytest.fixture
def sphere_state():
    mesh = icosphere(2)
    return PreShapeState(mesh, uniform_gM(mesh))


@pytest.fixture
def two_triangle_msh(tmp_path):
    path = tmp_path / "square.msh"
    path.write_text(TWO_TRIANGLE_MSH, encoding="utf-8")
    return path


@pytest.fixture
def small_config(tmp_path):
    """Configuración pequeña (32 celdas) para los tests de la CLI"""
    data = {
        "name": "small",
        "_comment": "malla de prueba",
        "seed": 3,
        "mesh": {
            "generator": "unit_square",
            "params": {"n": 4},
            "mode": "Volume2D",
            "initial_distortion": ["0.02*sin(25.5*x)", "0"],
        },
        "density": {"gm": "estimate"},
        "target": {"kind": "Analytic", "expression": "1 + 0.5*x + y^2"},
        "metric": {"alpha_LE": 0.02, "alpha_L2": 1.0, "mu_max": 1.0, "mu_min": 1.0},
        "optimizer": {"initial_scale": 0.01, "max_iters": 2, "grad_tol_rel": 1e-12,
                      "residual_tol_rel": None, "component": "Tangential", "snapshot_every": 1},
        "output": {"output_dir": str(tmp_path / "out")},
        "logging": {"level": "WARNING"},
    }
    path = tmp_path / "small.json"
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path
