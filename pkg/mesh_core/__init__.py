"""Init files para convertir directorios en módulos Python

Mesh Core: mallas simpliciales, geometría e I/O (Gmsh, VTK).
"""

from mesh_core.geometry import CellGeometry, cell_geometry, vertex_normals
from mesh_core.gmsh_io import load_gmsh
from mesh_core.simplicial_mesh import SimplicialMesh
from mesh_core.surface import SurfaceProjector, extract_surface
from mesh_core.vtk_io import load_vtk_mesh, read_vtk_geometry, write_vtk

__all__ = [
    "CellGeometry",
    "SimplicialMesh",
    "SurfaceProjector",
    "cell_geometry",
    "extract_surface",
    "load_gmsh",
    "load_vtk_mesh",
    "read_vtk_geometry",
    "vertex_normals",
    "write_vtk",
]
