"""
Utils - Config Module
Carga y validación de la configuración de una corrida

Considera:
- JSON con secciones mesh, density, target, metric, optimizer, output, logging
- Claves que empiezan con '_comment' se ignoran (marcan valores por defecto propios)
- Variables de entorno (.env) con prioridad sobre el archivo
- Construcción de la malla, del dominio hold-all y del estado inicial
"""

import json
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, model_validator

from fields.densities import estimate_gM, uniform_gM
from fields.expressions import VectorExpression
from fields.targets import TargetSpec
from mesh_core import generators
from mesh_core.generators import displace_interior
from mesh_core.gmsh_io import load_gmsh
from mesh_core.simplicial_mesh import SimplicialMesh
from mesh_core.surface import extract_surface
from mesh_core.vtk_io import load_vtk_mesh
from metric.elasticity import MetricConfig
from optimizer.descent import OptimizerConfig
from preshape.state import HoldAllDomain, PreShapeState
from utils.errors import ConfigError, PreShapeError
from utils.logger import setup_logger

logger = setup_logger(__name__)

# Cargar variables de entorno
load_dotenv()

REPO_ROOT = Path(__file__).resolve().parent.parent

GENERATORS = {
    "unit_square": generators.unit_square_mesh,
    "rectangle": generators.rectangle_mesh,
    "circle": generators.circle_polygon,
    "icosphere": generators.icosphere,
    "disk": generators.disk_mesh,
    "hemisphere_cap": generators.hemisphere_cap,
    "cylinder": generators.cylinder_mesh,
    "sphere_in_box": generators.sphere_in_box_mesh,
}


class Mode(str, Enum):
    VOLUME_2D = "Volume2D"
    SURFACE_3D = "Surface3D"


class MeshSettings(BaseModel):
    """Origen de la malla y deformación inicial"""
    path: Optional[str] = Field(default=None, description="Archivo Gmsh .msh o VTK legacy")
    generator: Optional[str] = Field(default=None, description="Nombre de un generador incluido")
    params: Dict[str, Any] = Field(default_factory=dict, description="Argumentos del generador")
    mode: Mode = Field(default=Mode.VOLUME_2D, description="Volume2D o Surface3D")
    surface_tag: Optional[int] = Field(default=None, description="Marcador físico de la superficie (modo conforme)")
    initial_distortion: Optional[List[str]] = Field(default=None, description="Desplazamiento de vértices interiores por componente")

    @model_validator(mode="after")
    def _check_source(self):
        if (self.path is None) == (self.generator is None):
            raise ValueError("mesh needs exactly one of 'path' or 'generator'")
        if self.generator is not None and self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}; known: {sorted(GENERATORS)}")
        return self


class DensitySettings(BaseModel):
    gm: str = Field(default="estimate", pattern="^(estimate|uniform)$", description="estimate o uniform")


class OutputSettings(BaseModel):
    output_dir: str = Field(default="output", description="Carpeta de resultados")
    log_wall_time: bool = Field(default=False, description="Escribir el tiempo de pared medido en log.csv")


class LoggingSettings(BaseModel):
    level: str = Field(default="INFO", description="Nivel de logging")


class RunConfig(BaseModel):
    """Configuración completa de una corrida"""
    name: str = Field(default="run", description="Nombre de la corrida")
    seed: int = Field(default=0, description="Semilla de los chequeos aleatorios")
    mesh: MeshSettings
    density: DensitySettings = Field(default_factory=DensitySettings)
    target: TargetSpec = Field(default_factory=TargetSpec)
    metric: MetricConfig = Field(default_factory=MetricConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    output: OutputSettings = Field(default_factory=OutputSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)


def strip_comments(data):
    """Elimina recursivamente las claves '_comment*'."""
    if isinstance(data, dict):
        return {k: strip_comments(v) for k, v in data.items() if not str(k).startswith("_comment")}
    if isinstance(data, list):
        return [strip_comments(v) for v in data]
    return data


def apply_env_overrides(raw: Dict) -> Dict:
    """PRESHAPE_OUTPUT_DIR, PRESHAPE_LOG_LEVEL y PRESHAPE_SEED reemplazan lo del archivo."""
    output_dir = os.getenv("PRESHAPE_OUTPUT_DIR")
    if output_dir:
        raw.setdefault("output", {})["output_dir"] = output_dir
    level = os.getenv("PRESHAPE_LOG_LEVEL")
    if level:
        raw.setdefault("logging", {})["level"] = level
    seed = os.getenv("PRESHAPE_SEED")
    if seed:
        raw["seed"] = int(seed)
    return raw


def load_run_config(path) -> RunConfig:
    """
    Carga y valida un archivo de configuración

    Args:
        path: ruta del JSON

    Returns:
        RunConfig validado

    Raises:
        ConfigError: archivo ilegible, JSON inválido o valores fuera de rango
    """
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    raw = apply_env_overrides(strip_comments(raw))
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration {path}:\n{e}") from e
    if cfg.mesh.path is not None and not Path(cfg.mesh.path).is_absolute():
        cfg.mesh.path = str((path.parent / cfg.mesh.path).resolve())
    logger.debug(f"configuration {cfg.name} loaded from {path}")
    return cfg


def presets_dir() -> Path:
    return Path(os.getenv("PRESHAPE_PRESETS_DIR") or REPO_ROOT / "presets")


def preset_path(name: str) -> Path:
    path = presets_dir() / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r} (looked in {path.parent})")
    return path


def load_mesh(path) -> SimplicialMesh:
    """Carga Gmsh (.msh) o VTK legacy (.vtk) según la extensión."""
    path = Path(path)
    if path.suffix.lower() == ".vtk":
        return load_vtk_mesh(path)
    return load_gmsh(path)


def build_mesh(settings: MeshSettings) -> SimplicialMesh:
    if settings.path is not None:
        return load_mesh(settings.path)
    try:
        return GENERATORS[settings.generator](**settings.params)
    except TypeError as e:
        raise ConfigError(f"generator {settings.generator!r}: {e}") from e


def check_mode(mode: Mode, mesh: SimplicialMesh) -> None:
    if mode == Mode.VOLUME_2D and not (mesh.codim == 0 and mesh.dim_cell == 2):
        raise ConfigError(f"mode Volume2D needs a triangle mesh of the plane, got {mesh!r}")
    if mode == Mode.SURFACE_3D and not (mesh.dim_cell == 2 and mesh.dim_ambient == 3):
        raise ConfigError(f"mode Surface3D needs a triangle surface in 3D, got {mesh!r}")


def prepare_state(cfg: RunConfig) -> Tuple[PreShapeState, TargetSpec]:
    """
    Construye el estado inicial de la corrida

    La distorsión inicial mueve solo los vértices interiores; la malla
    distorsionada pasa a ser la referencia y g^M se estima sobre ella.

    Returns:
        (estado en la identidad, especificación del objetivo)
    """
    mesh = build_mesh(cfg.mesh)
    if cfg.mesh.initial_distortion:
        try:
            displacement = VectorExpression(cfg.mesh.initial_distortion)
            mesh = displace_interior(mesh, displacement)
        except PreShapeError as e:
            raise ConfigError(f"initial distortion: {e}") from e

    domain = None
    if cfg.mesh.surface_tag is not None:
        shape, vertex_map = extract_surface(mesh, cfg.mesh.surface_tag)
        domain = HoldAllDomain.conforming(mesh, vertex_map, shape.boundary_vertices)
        logger.info(f"conforming surface: {shape.n_cells} triangles inside {mesh.n_cells} cells")
    else:
        shape = mesh
    check_mode(cfg.mesh.mode, shape)

    gM = estimate_gM(shape) if cfg.density.gm == "estimate" else uniform_gM(shape)
    state = PreShapeState(shape, gM, domain)
    if cfg.metric.alpha_L2 == 0 and state.domain.dirichlet.size == 0:
        raise ConfigError("alpha_L2 = 0 with an empty Dirichlet set leaves rigid motions in the kernel")
    return state, cfg.target
