"""Mesh smoothing by a geometric element transformation, with tools for
studying the dynamics of the resulting vertex map."""

from .dynamics import (
    OrbitDistance,
    SpectrumReport,
    analytic_triangle_jacobian,
    equilateral_mesh_jacobian,
    hex_patch,
    mesh_map,
    mesh_spectrum,
    numerical_jacobian,
    orbit_tangent,
    shape_spectrum,
    similarity_distance,
    simple6_jacobian,
    spectrum,
    spectrum_survey,
    triangle_map,
)
from .errors import *  # noqa: F401,F403
from .geom import (
    centroid,
    iterate_triangle,
    radius_ratios,
    transform_polygon,
    transform_triangle,
)
from .io import parse_mesh, read_mesh, serialize_mesh, write_mesh
from .mesh import (
    Mesh,
    adjacency,
    build_mesh,
    gen_cube_tet_mesh,
    gen_grid_mesh,
    gen_simple_mesh,
    validate,
)
from .quality import mesh_quality, tet_mean_ratio, tri_quality
from .smoother import SmoothOptions, SmoothReport, run, smooth_step, smooth_step_tet, smooth_step_tri

__version__ = "0.1.0"
