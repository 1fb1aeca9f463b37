"""Tetrahedral cavity meshes: containers, generators, file formats, slicing."""

from .area import (
    AreaFunction,
    SliceTopologyWarning,
    extract_area_function,
    read_area_function,
    write_area_function,
)
from .generators import gen_horn, gen_tube
from .io import (
    MeshParseError,
    load_gmsh,
    load_mesh,
    load_tetgen,
    tetgen_paths,
    write_gmsh,
    write_tetgen,
)
from .mesh import MeshDiagnostics, MeshError, Region, TetMesh, validate

__all__ = [
    "AreaFunction",
    "MeshDiagnostics",
    "MeshError",
    "MeshParseError",
    "Region",
    "SliceTopologyWarning",
    "TetMesh",
    "extract_area_function",
    "gen_horn",
    "gen_tube",
    "load_gmsh",
    "load_mesh",
    "load_tetgen",
    "read_area_function",
    "tetgen_paths",
    "validate",
    "write_area_function",
    "write_gmsh",
    "write_tetgen",
]
