"""
Verify - Quality Module
Estadísticas de calidad de malla con pandas

Calcula:
- Histograma de volúmenes de celda
- Varianza de volúmenes y razón de radios mínima/media
- Densidad mínima/máxima/media: el campo 'density' del VTK, o la densidad
  estimada de nodos (g^M en la identidad) cuando el archivo no la trae
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from fields.densities import estimate_gM
from mesh_core.geometry import cell_volumes, radius_ratio
from mesh_core.gmsh_io import load_gmsh
from mesh_core.vtk_io import load_vtk_mesh, read_vtk, read_vtk_geometry
from preshape.state import PreShapeState


@dataclass
class QualityReport:
    label: str
    summary: pd.Series
    histogram: pd.DataFrame

    def to_text(self) -> str:
        lines = [f"📄 {self.label}", self.summary.to_string(float_format=lambda v: f"{v:.6e}"),
                 "", "volume histogram:", self.histogram.to_string(index=False)]
        return "\n".join(lines)


def mesh_statistics(vertices: np.ndarray, cells: np.ndarray, density: Optional[np.ndarray] = None,
                    bins: int = 10) -> tuple:
    """
    Args:
        vertices: coordenadas (n, d)
        cells: (n_c, k+1)
        density: densidad por celda (opcional)
        bins: intervalos del histograma

    Returns:
        (serie resumen, tabla del histograma)
    """
    vols = cell_volumes(vertices, cells)
    quality = radius_ratio(vertices, cells)
    stats = {
        "cells": float(cells.shape[0]),
        "vertices": float(vertices.shape[0]),
        "volume_min": vols.min(),
        "volume_max": vols.max(),
        "volume_mean": vols.mean(),
        "volume_variance": float(np.var(vols)),
        "quality_min": quality.min(),
        "quality_mean": quality.mean(),
    }
    if density is not None and len(density):
        stats.update({"density_min": density.min(), "density_max": density.max(), "density_mean": density.mean()})
    counts, edges = np.histogram(vols, bins=bins)
    histogram = pd.DataFrame({"volume_from": edges[:-1], "volume_to": edges[1:], "cells": counts})
    return pd.Series(stats), histogram


def _estimated_density(mesh) -> np.ndarray:
    return PreShapeState(mesh, estimate_gM(mesh), check=False).density()


def quality_report(path, geometry_only: bool = False, bins: int = 10) -> QualityReport:
    """Reporte de calidad de un archivo Gmsh o VTK."""
    path = Path(path)
    density = None
    if path.suffix.lower() == ".vtk":
        vertices, cells = read_vtk_geometry(path)
        if not geometry_only:
            density = read_vtk(path).cell_data.get("density")
            if density is None:
                density = _estimated_density(load_vtk_mesh(path))
    else:
        mesh = load_gmsh(path)
        vertices, cells = mesh.vertices, mesh.cells
        if not geometry_only:
            density = _estimated_density(mesh)
    summary, histogram = mesh_statistics(vertices, cells, density, bins)
    return QualityReport(label=str(path), summary=summary, histogram=histogram)


def compare_reports(first: QualityReport, second: QualityReport) -> pd.DataFrame:
    """Tabla lado a lado de dos resúmenes."""
    return pd.concat({first.label: first.summary, second.label: second.summary}, axis=1)
