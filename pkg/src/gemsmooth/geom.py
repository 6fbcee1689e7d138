"""Single-element geometric transformation.

Every element is an ``(k, d)`` array of vertex coordinates (``k = 3`` for
triangles, ``d`` in {2, 3}).  The triangle update moves each vertex along
its centroid ray by the ratio of the previous vertex's centroid distance to
its own, then shifts the result so the centroid stays put.  Written per
vertex with ``z_i = x_i - c`` and ``r_i = |z_{i-1}| / |z_i|``::

    x_i' = r_i z_i - (1/3) * sum_j r_j z_j + c

which is the same as ``2/3 r_i z_i - 1/3 r_{i+1} z_{i+1} - 1/3 r_{i-1} z_{i-1} + c``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MaxIterExceeded, NearCentroidVertex

#: Vertices closer to the centroid than ``EPS_RAD * diameter`` are rejected.
EPS_RAD = 1e-12


def as_element(element, min_vertices=3):
    pts = np.asarray(element, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < min_vertices or pts.shape[1] not in (2, 3):
        raise ValueError(
            f"element must be an array of shape (k>={min_vertices}, 2|3), got {pts.shape}"
        )
    if not np.all(np.isfinite(pts)):
        raise ValueError("element coordinates must be finite")
    return pts


def diameter(element):
    """Largest pairwise vertex distance."""
    pts = np.asarray(element, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def centroid(element):
    """Arithmetic mean of the element's vertices."""
    return as_element(element).mean(axis=0)


def _centered_radii(pts, cell=None):
    c = pts.mean(axis=0)
    z = pts - c
    dist = np.sqrt((z**2).sum(axis=1))
    if dist.min() <= EPS_RAD * diameter(pts):
        raise NearCentroidVertex(
            "vertex coincides with the element centroid; radius ratios undefined",
            cell=cell,
        )
    return c, z, dist


def radius_ratios(element):
    """Cyclic ratios ``r_i = |x_{i-1} - c| / |x_i - c|``.

    The product of the returned ratios is 1 up to rounding.

    Raises
    ------
    NearCentroidVertex
        If some vertex is within ``EPS_RAD * diameter`` of the centroid.
    """
    pts = as_element(element)
    _, _, dist = _centered_radii(pts)
    return np.roll(dist, 1) / dist


def transform_triangle(element):
    """Apply one step of the geometric triangle transformation.

    Parameters
    ----------
    element : array_like, shape (3, d)
        Triangle vertices, ``d`` = 2 or 3.

    Returns
    -------
    ndarray, shape (3, d)
        The transformed triangle, with the same centroid as the input.
    """
    pts = as_element(element)
    if pts.shape[0] != 3:
        raise ValueError("transform_triangle expects exactly three vertices")
    c, z, dist = _centered_radii(pts)
    rz = (np.roll(dist, 1) / dist)[:, None] * z
    return rz - rz.sum(axis=0) / 3.0 + c


def transform_triangles(tris, cells=None):
    """Vectorised :func:`transform_triangle` over an ``(m, 3, d)`` stack.

    ``cells`` optionally maps stack positions to cell ids for error reports.
    """
    tris = np.asarray(tris, dtype=float)
    c = tris.mean(axis=1, keepdims=True)
    z = tris - c
    dist = np.sqrt((z**2).sum(axis=2))
    edges = tris - np.roll(tris, 1, axis=1)
    diam = np.sqrt((edges**2).sum(axis=2)).max(axis=1)
    bad = dist.min(axis=1) <= EPS_RAD * diam
    if bad.any():
        first = int(np.flatnonzero(bad)[0])
        cell = first if cells is None else int(cells[first])
        raise NearCentroidVertex(
            f"cell {cell}: vertex coincides with the centroid", cell=cell
        )
    rz = (np.roll(dist, 1, axis=1) / dist)[..., None] * z
    return rz - rz.sum(axis=1, keepdims=True) / 3.0 + c


@dataclass
class TriangleIteration:
    element: np.ndarray
    iterations: int
    ratio_history: list = field(default_factory=list)
    converged: bool = True


def iterate_triangle(element, tol=1e-10, max_iter=200):
    """Iterate :func:`transform_triangle` until the radius ratios settle.

    Stops as soon as ``max |r_i - 1| < tol``.  ``ratio_history[n]`` holds the
    ratios of the ``n``-th iterate, so it has ``iterations + 1`` entries.

    Raises
    ------
    MaxIterExceeded
        When ``max_iter`` steps did not reach ``tol``; the partial
        :class:`TriangleIteration` is attached as ``state``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    tri = as_element(element)
    history = []
    for n in range(max_iter + 1):
        r = radius_ratios(tri)
        history.append(r)
        if np.abs(r - 1.0).max() < tol:
            return TriangleIteration(tri, n, history)
        if n == max_iter:
            break
        tri = transform_triangle(tri)
    state = TriangleIteration(tri, max_iter, history, converged=False)
    raise MaxIterExceeded(
        f"radius ratios not within {tol:g} of 1 after {max_iter} iterations",
        state=state,
    )


def transform_polygon(element):
    """One step of the k-gon generalisation, with the centroid at the origin.

    The input is first translated so its centroid is the origin; the output
    keeps the centroid there.  Each vertex becomes::

        x_i' = (k-1)/k r_i x_i - 1/k sum_{j != i} r_j x_j

    For ``k = 3`` this is :func:`transform_triangle` minus the centroid.
    Unlike the triangle case the iteration need not converge: kites with
    ``|x_0| = |x_2|`` and ``|x_1| = |x_3|`` are two-periodic.
    """
    pts = as_element(element)
    if pts.shape[1] != 2:
        raise ValueError("polygons must be planar")
    _, z, dist = _centered_radii(pts)
    k = pts.shape[0]
    rz = (np.roll(dist, 1) / dist)[:, None] * z
    return rz - rz.sum(axis=0) / k
