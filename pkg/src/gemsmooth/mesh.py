"""Mesh data model: connectivity, adjacency, validation and generators.

A mesh is a vertex array, a cell array of index triples (planar triangles)
or quadruples (tetrahedra), and a boolean boundary mask.  Cells must be
positively oriented: counter-clockwise triangles, positive-volume tets.
"""

import itertools
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import (
    DisconnectedConnectivity,
    DuplicateVertex,
    InvertedCell,
    MeshValidationError,
    TooFewSymbols,
)

# local vertex lists of the facets (edges / faces) of a cell
TRI_EDGES = ((0, 1), (1, 2), (2, 0))
# outward-oriented faces of a positively oriented tet
TET_FACES = ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1))


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable mesh.  Use :func:`build_mesh` to get a validated one."""

    vertices: np.ndarray
    cells: np.ndarray
    boundary_mask: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(np.asarray(self.vertices, dtype=float)))
        object.__setattr__(self, "cells", _frozen(np.asarray(self.cells, dtype=np.int64)))
        object.__setattr__(self, "boundary_mask", _frozen(np.asarray(self.boundary_mask, dtype=bool)))

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def nodes_per_cell(self):
        return self.cells.shape[1]

    @property
    def is_tet(self):
        return self.nodes_per_cell == 4

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_cells(self):
        return self.cells.shape[0]

    def bbox_diagonal(self):
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def cell_points(self):
        """Coordinates of every cell, shape ``(n_cells, k, d)``."""
        return self.vertices[self.cells]

    def with_vertices(self, vertices):
        """Same connectivity and boundary, new coordinates (not re-validated)."""
        return Mesh(vertices, self.cells, self.boundary_mask)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.boundary_mask, other.boundary_mask)
        )


def signed_measures(points):
    """Signed area (triangles, 2D) or signed volume (tets) per cell."""
    p = np.asarray(points, dtype=float)
    if p.shape[1] == 3 and p.shape[2] == 2:
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if p.shape[1] == 4 and p.shape[2] == 3:
        d = p[:, 1:] - p[:, :1]
        return np.linalg.det(d) / 6.0
    raise ValueError("signed measures need planar triangles or 3D tetrahedra")


def edge_lengths(points):
    """All pairwise vertex distances per cell, shape ``(n_cells, n_pairs)``."""
    p = np.asarray(points, dtype=float)
    pairs = list(itertools.combinations(range(p.shape[1]), 2))
    i, j = np.array(pairs).T
    return np.sqrt(((p[:, i] - p[:, j]) ** 2).sum(axis=2))


def facets(cells):
    """Sorted facet keys and owning cell ids.

    Facets are edges for triangles and faces for tets.
    """
    cells = np.asarray(cells)
    local = TRI_EDGES if cells.shape[1] == 3 else TET_FACES
    keys = np.sort(cells[:, np.array(local)], axis=2)
    owners = np.repeat(np.arange(len(cells)), len(local))
    return keys.reshape(-1, keys.shape[2]), owners


def boundary_vertices(cells, n_vertices):
    """Mask of vertices on a facet that belongs to exactly one cell."""
    keys, _ = facets(cells)
    uniq, counts = np.unique(keys, axis=0, return_counts=True)
    mask = np.zeros(n_vertices, dtype=bool)
    mask[uniq[counts == 1].ravel()] = True
    return mask


def _check_connected(cells):
    if len(cells) <= 1:
        return
    keys, owners = facets(cells)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    # link every cell to the first owner of each of its facets
    first = np.full(inverse.max() + 1, -1)
    order = np.argsort(inverse, kind="stable")
    sorted_inv = inverse[order]
    starts = np.r_[True, sorted_inv[1:] != sorted_inv[:-1]]
    first[sorted_inv[starts]] = owners[order][starts]
    rows = owners
    cols = first[inverse]
    n = len(cells)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    ncomp, _ = connected_components(graph, directed=False)
    if ncomp != 1:
        raise DisconnectedConnectivity(
            f"connectivity splits into {ncomp} components; neighbouring cells "
            "must share a full edge (triangles) or face (tets)"
        )


def build_mesh(vertices, cells, boundary_mask=None):
    """Validate inputs and return a :class:`Mesh`.

    Parameters
    ----------
    vertices : array_like, shape (N, 2) or (N, 3)
    cells : array_like of int, shape (M, 3) or (M, 4)
        Triangles for planar meshes, tetrahedra for 3D meshes.
    boundary_mask : array_like of bool, optional
        Detected from once-counted edges/faces when omitted.

    Raises
    ------
    MeshValidationError
        Bad shapes, indices out of range or repeated inside a cell.
    DisconnectedConnectivity, DuplicateVertex, InvertedCell
    """
    v = np.asarray(vertices, dtype=float)
    c = np.asarray(cells)
    if v.ndim != 2 or v.shape[1] not in (2, 3):
        raise MeshValidationError(f"vertices must have shape (N, 2|3), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise MeshValidationError("vertex coordinates must be finite")
    if c.ndim != 2 or c.shape[0] == 0:
        raise MeshValidationError("need at least one cell")
    if (v.shape[1], c.shape[1]) not in ((2, 3), (3, 4)):
        raise MeshValidationError(
            "supported meshes: planar triangles (2D, 3 nodes) or tetrahedra (3D, 4 nodes)"
        )
    if not np.issubdtype(c.dtype, np.integer):
        if not np.all(np.equal(np.mod(c, 1), 0)):
            raise MeshValidationError("cell indices must be integers")
        c = c.astype(np.int64)
    if c.min() < 0 or c.max() >= len(v):
        raise MeshValidationError("cell index out of range")
    srt = np.sort(c, axis=1)
    if np.any(srt[:, 1:] == srt[:, :-1]):
        raise MeshValidationError("repeated vertex index within a cell")

    _check_connected(c)

    diag = float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))
    pairs = cKDTree(v).query_pairs(1e-12 * diag) if len(v) > 1 else set()
    if diag == 0.0 or pairs:
        raise DuplicateVertex(f"coincident vertices: {sorted(pairs)[:5]}")

    meas = signed_measures(v[c])
    bad = np.flatnonzero(meas <= 0.0)
    if len(bad):
        raise InvertedCell(f"cells with non-positive orientation: {bad[:10].tolist()}", bad)

    if boundary_mask is None:
        mask = boundary_vertices(c, len(v))
    else:
        mask = np.asarray(boundary_mask, dtype=bool)
        if mask.shape != (len(v),):
            raise MeshValidationError("boundary_mask must have one entry per vertex")
    return Mesh(v, c, mask)


@dataclass(frozen=True)
class AdjacencyMap:
    """Incident cells per vertex, stored CSR style.

    For vertex ``k`` the incident cells are ``cells[offsets[k]:offsets[k+1]]``
    in ascending order and ``local`` holds the position of ``k`` in each.
    """

    offsets: np.ndarray
    cells: np.ndarray
    local: np.ndarray

    def incident(self, k):
        s = slice(self.offsets[k], self.offsets[k + 1])
        return self.cells[s], self.local[s]

    def counts(self):
        return np.diff(self.offsets)


def adjacency(mesh):
    """Build the vertex-to-cell incidence map of ``mesh``."""
    m, j = np.divmod(np.arange(mesh.cells.size), mesh.nodes_per_cell)
    verts = mesh.cells.ravel()
    order = np.lexsort((m, verts))
    offsets = np.zeros(mesh.n_vertices + 1, dtype=np.int64)
    np.cumsum(np.bincount(verts, minlength=mesh.n_vertices), out=offsets[1:])
    return AdjacencyMap(offsets, m[order], j[order])


def vertex_neighbors(mesh):
    """Sorted neighbour lists (vertices sharing a cell)."""
    nbrs = defaultdict(set)
    for cell in mesh.cells.tolist():
        for a in cell:
            nbrs[a].update(cell)
    return [sorted(nbrs[k] - {k}) for k in range(mesh.n_vertices)]


@dataclass
class ValidityReport:
    is_valid: bool
    inverted_cells: list
    degenerate_cells: list
    min_distortion: float
    overlapping_pairs: list = None


def distortion(points):
    """Shortest over longest edge length for each cell."""
    e = edge_lengths(points)
    longest = e.max(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(longest > 0, e.min(axis=1) / longest, 0.0)


def validate(mesh, exhaustive=False, flat_tol=1e-12):
    """Orientation, degeneracy and (optionally) overlap report.

    ``inverted_cells`` lists every cell with signed area/volume ``<= 0``.
    ``degenerate_cells`` lists positively oriented cells that are nearly
    flat: signed measure below ``flat_tol * longest_edge**dim``.  With
    ``exhaustive=True`` pairs of cells with overlapping interiors are
    searched as well (limited to 2000 cells).
    """
    pts = mesh.cell_points()
    meas = signed_measures(pts)
    longest = edge_lengths(pts).max(axis=1)
    inverted = np.flatnonzero(meas <= 0.0).tolist()
    degenerate = np.flatnonzero((meas > 0.0) & (meas <= flat_tol * longest**mesh.dim)).tolist()
    overlaps = None
    if exhaustive:
        if mesh.n_cells > 2000:
            raise ValueError("exhaustive overlap check is limited to 2000 cells")
        overlaps = overlapping_cells(mesh)
    ok = not inverted and not degenerate and not overlaps
    return ValidityReport(ok, inverted, degenerate, float(distortion(pts).min()), overlaps)


def _separating_axes(p, q):
    """Candidate separating axes for two simplices (rows are vertices)."""
    d = p.shape[1]
    axes = []
    for s in (p, q):
        if d == 2:
            e = np.roll(s, -1, axis=0) - s
            axes.append(np.c_[-e[:, 1], e[:, 0]])
        else:
            for a, b, c in TET_FACES:
                axes.append(np.cross(s[b] - s[a], s[c] - s[a])[None])
    if d == 3:
        ep = np.array([p[j] - p[i] for i, j in itertools.combinations(range(4), 2)])
        eq = np.array([q[j] - q[i] for i, j in itertools.combinations(range(4), 2)])
        axes.append(np.cross(ep[:, None, :], eq[None, :, :]).reshape(-1, 3))
    return np.vstack(axes)


def _interiors_overlap(p, q, rel_tol=1e-12):
    axes = _separating_axes(p, q)
    norms = np.linalg.norm(axes, axis=1)
    axes = axes[norms > 0] / norms[norms > 0, None]
    pp = p @ axes.T
    qq = q @ axes.T
    scale = max(np.ptp(p, axis=0).max(), np.ptp(q, axis=0).max())
    gap = np.maximum(qq.min(0) - pp.max(0), pp.min(0) - qq.max(0))
    # touching (gap == 0) still counts as separated
    return bool(np.all(gap < -rel_tol * scale))


def overlapping_cells(mesh):
    """Pairs of cells whose interiors intersect (separating-axis test)."""
    pts = mesh.cell_points()
    lo, hi = pts.min(axis=1), pts.max(axis=1)
    out = []
    for a in range(mesh.n_cells):
        cand = np.flatnonzero(np.all(lo[a + 1:] < hi[a], axis=1) & np.all(hi[a + 1:] > lo[a], axis=1))
        for b in cand + a + 1:
            if _interiors_overlap(pts[a], pts[b]):
                out.append((a, int(b)))
    return out


def gen_simple_mesh(N):
    """Regular fan of ``N - 1`` triangles around a centre vertex.

    Vertex 0 is the origin and vertex ``k - 1`` sits at angle
    ``2 k pi / (N - 1)`` on the unit circle for ``k = 2..N``.  For ``N = 7``
    the six triangles are equilateral.
    """
    if N < 4:
        raise TooFewSymbols(f"a simple mesh needs at least 4 symbols, got {N}")
    k = np.arange(2, N + 1)
    ang = 2.0 * k * np.pi / (N - 1)
    verts = np.vstack([[0.0, 0.0], np.c_[np.cos(ang), np.sin(ang)]])
    ring = np.arange(1, N)
    cells = np.c_[np.zeros(N - 1, dtype=int), ring, np.roll(ring, -1)]
    return build_mesh(verts, cells)


def _check_grid_args(n, jitter):
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 <= jitter < 0.5:
        raise ValueError("jitter must lie in [0, 0.5)")


def gen_grid_mesh(n, jitter=0.0, seed=0):
    """Structured triangulation of the unit square with jittered interior.

    Each of the ``n x n`` grid squares is split along its lower-left to
    upper-right diagonal.  Interior vertices get independent uniform noise
    in ``[-jitter/n, jitter/n]`` per coordinate drawn from
    ``numpy.random.default_rng(seed)``; boundary vertices stay on the square.
    """
    _check_grid_args(n, jitter)
    h = 1.0 / n
    ticks = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(ticks, ticks)
    verts = np.c_[xx.ravel(), yy.ravel()]
    ij = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    boundary = np.zeros_like(ij, dtype=bool)
    boundary[[0, -1], :] = True
    boundary[:, [0, -1]] = True
    boundary = boundary.ravel()
    if jitter > 0:
        rng = np.random.default_rng(seed)
        verts[~boundary] += rng.uniform(-jitter * h, jitter * h, size=(int((~boundary).sum()), 2))
    a = ij[:-1, :-1].ravel()
    b = ij[:-1, 1:].ravel()
    c = ij[1:, 1:].ravel()
    d = ij[1:, :-1].ravel()
    cells = np.stack([np.c_[a, b, c], np.c_[a, c, d]], axis=1).reshape(-1, 3)
    return build_mesh(verts, cells, boundary)


def gen_cube_tet_mesh(n, jitter=0.0, seed=0):
    """Structured tetrahedral mesh of the unit cube with jittered interior.

    Every grid cube is split into six tets around its main diagonal (Kuhn
    subdivision, one tet per axis permutation), which is conforming across
    cubes.  Tets are emitted cube by cube in the order of
    ``itertools.permutations(range(3))``; odd permutations have two vertices
    swapped so that every tet has positive volume.  Jitter as in
    :func:`gen_grid_mesh`.
    """
    _check_grid_args(n, jitter)
    h = 1.0 / n
    ticks = np.linspace(0.0, 1.0, n + 1)
    zz, yy, xx = np.meshgrid(ticks, ticks, ticks, indexing="ij")
    verts = np.c_[xx.ravel(), yy.ravel(), zz.ravel()]
    boundary = np.any((verts == 0.0) | (verts == 1.0), axis=1)

    def index(i, j, k):
        return (k * (n + 1) + j) * (n + 1) + i

    base = np.array([[i, j, k] for k in range(n) for j in range(n) for i in range(n)])
    cells = []
    for perm in itertools.permutations(range(3)):
        path = [np.zeros(3, dtype=int)]
        for axis in perm:
            step = path[-1].copy()
            step[axis] += 1
            path.append(step)
        cells.append(np.stack([index(*(base + p).T) for p in path], axis=1))
    cells = np.stack(cells, axis=1).reshape(-1, 4)
    # orientation decided on the unperturbed lattice
    flip = signed_measures(verts[cells]) < 0
    cells[flip, 2], cells[flip, 3] = cells[flip, 3].copy(), cells[flip, 2].copy()
    if jitter > 0:
        rng = np.random.default_rng(seed)
        verts[~boundary] += rng.uniform(-jitter * h, jitter * h, size=(int((~boundary).sum()), 3))
    return build_mesh(verts, cells, boundary)
