"""Global mesh smoothing built from the element transformation.

One step moves every vertex to the average of its images under the
transformation of each incident triangle (planar meshes) or of each
triangular face of each incident tet (tet meshes).  All images are computed
from the old coordinates before any vertex is updated, so a step is a
well-defined map on the full coordinate vector.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvertedMeshAfterStep
from .geom import transform_triangles
from .mesh import TET_FACES, validate
from .quality import cell_qualities

logger = logging.getLogger(__name__)

BOUNDARY_POLICIES = ("fixed", "free")
INVERSION_POLICIES = ("abort", "revert_step", "accept")
_TET_FACES = np.array(TET_FACES)


@dataclass
class SmoothOptions:
    boundary_policy: str = "fixed"
    max_iterations: int = 100
    displacement_tol: float = 1e-8
    on_inversion: str = "abort"
    record_history: bool = True

    def __post_init__(self):
        if self.boundary_policy not in BOUNDARY_POLICIES:
            raise ValueError(f"boundary_policy must be one of {BOUNDARY_POLICIES}")
        if self.on_inversion not in INVERSION_POLICIES:
            raise ValueError(f"on_inversion must be one of {INVERSION_POLICIES}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.displacement_tol >= 0:
            raise ValueError("displacement_tol must be non-negative")


@dataclass
class SmoothReport:
    """Per-iteration record of a :func:`run`.

    Histories include the initial state, so they hold ``iterations_run + 1``
    entries; ``displacement_history[0]`` is 0.
    """

    iterations_run: int = 0
    quality_history: list = field(default_factory=list)
    displacement_history: list = field(default_factory=list)
    terminated_by: str = "max_iter"


def _element_images(vertices, cells):
    """Per-cell transformed coordinates and the vertex ids they belong to.

    Returns ``(targets, images)`` flattened in ascending cell order so that
    accumulation per vertex is reproducible.
    """
    if cells.shape[1] == 3:
        images = transform_triangles(vertices[cells], cells=np.arange(len(cells)))
        return cells.ravel(), images.reshape(-1, vertices.shape[1])
    faces = cells[:, _TET_FACES].reshape(-1, 3)
    owner = np.repeat(np.arange(len(cells)), len(TET_FACES))
    images = transform_triangles(vertices[faces], cells=owner)
    return faces.ravel(), images.reshape(-1, vertices.shape[1])


def apply_operator(vertices, cells, boundary_mask=None):
    """The smoothing map on raw coordinate arrays.

    ``boundary_mask`` marks vertices held in place; ``None`` moves all of
    them.  This is the function differentiated by :mod:`gemsmooth.dynamics`.
    """
    vertices = np.asarray(vertices, dtype=float)
    targets, images = _element_images(vertices, cells)
    acc = np.zeros_like(vertices)
    np.add.at(acc, targets, images)
    counts = np.bincount(targets, minlength=len(vertices))
    out = vertices.copy()
    moved = counts > 0
    out[moved] = acc[moved] / counts[moved, None]
    if boundary_mask is not None:
        out[boundary_mask] = vertices[boundary_mask]
    return out


def _step(mesh, options):
    fixed = mesh.boundary_mask if options.boundary_policy == "fixed" else None
    new = mesh.with_vertices(apply_operator(mesh.vertices, mesh.cells, fixed))
    report = validate(new)
    if not report.is_valid and options.on_inversion == "abort":
        raise InvertedMeshAfterStep(
            f"step produced inverted cells {report.inverted_cells[:10]} "
            f"and degenerate cells {report.degenerate_cells[:10]}",
            mesh=new,
        )
    return new, report


def smooth_step_tri(mesh, options=None):
    """One simultaneous smoothing step of a planar triangle mesh.

    Raises
    ------
    InvertedMeshAfterStep
        If the result has inverted cells and ``on_inversion == "abort"``.
    NearCentroidVertex
        If some cell is too degenerate to transform.
    """
    options = options or SmoothOptions()
    if mesh.is_tet:
        raise ValueError("smooth_step_tri needs a triangle mesh")
    return _step(mesh, options)[0]


def smooth_step_tet(mesh, options=None):
    """One simultaneous smoothing step of a tetrahedral mesh.

    Each vertex averages its images over the three faces containing it in
    every incident tet; interior faces therefore count once per tet.
    """
    options = options or SmoothOptions()
    if not mesh.is_tet:
        raise ValueError("smooth_step_tet needs a tetrahedral mesh")
    return _step(mesh, options)[0]


def smooth_step(mesh, options=None):
    options = options or SmoothOptions()
    return _step(mesh, options)[0]


def _quality_summary(mesh):
    q = cell_qualities(mesh, signed=True)
    return math.fsum(q) / len(q), float(q.min())


def run(mesh, options=None):
    """Iterate smoothing steps until the largest vertex move is small.

    Stops when the maximum displacement drops below
    ``displacement_tol * bbox_diagonal`` (checked after each step), after
    ``max_iterations`` steps, or on an inverted step when
    ``on_inversion == "revert_step"`` (the offending step is discarded).

    Returns
    -------
    mesh : Mesh
    report : SmoothReport
    """
    options = options or SmoothOptions()
    report = SmoothReport()
    if options.record_history:
        report.quality_history.append(_quality_summary(mesh))
        report.displacement_history.append(0.0)
    threshold = options.displacement_tol * mesh.bbox_diagonal()
    current = mesh
    for it in range(1, options.max_iterations + 1):
        try:
            new, validity = _step(current, options)
        except InvertedMeshAfterStep as exc:
            exc.report = report
            raise
        if not validity.is_valid:
            if options.on_inversion == "revert_step":
                logger.info("iteration %d inverted cells; reverting", it)
                report.terminated_by = "inversion"
                break
            logger.warning("iteration %d produced %d inverted cells", it, len(validity.inverted_cells))
        disp = float(np.sqrt(((new.vertices - current.vertices) ** 2).sum(axis=1)).max())
        current = new
        report.iterations_run = it
        if options.record_history:
            report.quality_history.append(_quality_summary(current))
            report.displacement_history.append(disp)
        if disp < threshold or disp == 0.0:
            report.terminated_by = "tolerance"
            break
    return current, report
