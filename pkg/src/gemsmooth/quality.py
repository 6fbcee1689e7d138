"""Element and mesh quality measures.

Triangles use the edge-length ratio ``min |x_i - x_j| / max |x_i - x_j|``.
Tetrahedra use the mean ratio ``3 det(S)^(2/3) / trace(S^T S)`` with
``S = D(T) W^-1``, where ``D(T)`` holds the edge vectors from the first
vertex as columns and ``W`` is the same matrix for the unit regular tet.
Both measures lie in (0, 1] and equal 1 exactly on regular elements.
"""

from dataclasses import dataclass

import math

import numpy as np

from .errors import DegenerateElement
from .mesh import edge_lengths, signed_measures

#: Edge matrix of the regular tet with unit edges.
W_REGULAR_TET = np.array(
    [
        [1.0, 0.5, 0.5],
        [0.0, np.sqrt(3.0) / 2.0, np.sqrt(3.0) / 6.0],
        [0.0, 0.0, np.sqrt(2.0 / 3.0)],
    ]
)
_W_INV = np.linalg.inv(W_REGULAR_TET)

_DEGENERATE_RATIO = 1e-12


def tri_qualities(points):
    """Edge-ratio quality for a stack of triangles ``(m, 3, d)``."""
    p = np.asarray(points, dtype=float)
    sq = ((p - np.roll(p, 1, axis=1)) ** 2).sum(axis=2)
    lo, hi = sq.min(axis=1), sq.max(axis=1)
    bad = ~(lo > _DEGENERATE_RATIO**2 * hi)
    if bad.any():
        cell = int(np.flatnonzero(bad)[0])
        raise DegenerateElement(f"cell {cell}: coincident vertices", cell=cell)
    # one rounding in the ratio of squares keeps 1/sqrt(2) exact
    return np.sqrt(lo / hi)


def tri_quality(triangle):
    """Ratio of shortest to longest edge of a triangle (2D or 3D)."""
    return float(tri_qualities(np.asarray(triangle, dtype=float)[None])[0])


def _mean_ratio(points):
    p = np.asarray(points, dtype=float)
    d = np.transpose(p[:, 1:] - p[:, :1], (0, 2, 1))
    s = d @ _W_INV
    det = np.linalg.det(s)
    frob = np.einsum("mij,mij->m", s, s)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = 3.0 * np.sign(det) * np.cbrt(det * det) / frob
    return q, det


def tet_qualities(points, signed=False):
    """Mean-ratio quality for a stack of tets ``(m, 4, 3)``.

    With ``signed=True`` inverted tets get a negative value instead of
    raising, which is handy for tracking a smoothing run that tolerates
    inversions.
    """
    q, det = _mean_ratio(points)
    if signed:
        return np.nan_to_num(q)
    bad = ~(det > 0)
    if bad.any():
        cell = int(np.flatnonzero(bad)[0])
        raise DegenerateElement(f"cell {cell}: non-positive volume", cell=cell)
    return q


def tet_mean_ratio(tet):
    """Mean-ratio quality of one positively oriented tetrahedron."""
    return float(tet_qualities(np.asarray(tet, dtype=float)[None])[0])


def cell_qualities(mesh, signed=False):
    """Per-cell quality of a mesh, dispatching on the cell type."""
    pts = mesh.cell_points()
    if mesh.is_tet:
        return tet_qualities(pts, signed=signed)
    if signed:
        return np.sign(signed_measures(pts)) * distortion_or_zero(pts)
    return tri_qualities(pts)


def distortion_or_zero(points):
    e = edge_lengths(points)
    hi = e.max(axis=1)
    return np.divide(e.min(axis=1), hi, out=np.zeros_like(hi), where=hi > 0)


@dataclass
class QualityHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    mean: float
    min: float
    values: np.ndarray


def histogram(values, bins=20):
    """Equal-width, right-closed bins ``(e_i, e_{i+1}]`` on (0, 1]."""
    if bins < 1:
        raise ValueError("bins must be positive")
    values = np.asarray(values, dtype=float)
    edges = np.linspace(0.0, 1.0, bins + 1)
    idx = np.clip(np.ceil(values * bins).astype(int) - 1, 0, bins - 1)
    return edges, np.bincount(idx, minlength=bins)


def mesh_quality(mesh, bins=20):
    """Per-cell qualities, their mean and minimum, and a histogram.

    Raises
    ------
    DegenerateElement
        Carrying the index of the first offending cell.
    """
    q = cell_qualities(mesh)
    edges, counts = histogram(q, bins)
    return QualityHistogram(edges, counts, math.fsum(q) / len(q), float(q.min()), q)
