"""Jacobians, spectra and similarity-orbit geometry of the smoothing maps.

Coordinates are flattened point by point, ``(x0, y0, x1, y1, ...)``, so a
Jacobian of a map on ``N`` planar points is made of ``2 x 2`` blocks
``d out_k / d in_l``.

At an equilateral triangle the Jacobian of the triangle map is built from
three blocks ``A``, ``B``, ``C`` (all of the form ``a I + b J`` with ``J``
the quarter turn).  Which of ``X`` or ``X.T`` appears depends on the
labelling direction: with the vertices listed clockwise the Jacobian is the
block circulant ``[[A, B, C], [C, A, B], [B, C, A]]``; listed
counter-clockwise every block is transposed.  Meshes in this package are
counter-clockwise, hence the ``orientation`` switches below.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .eigen import eigvals
from .errors import (
    BadValence,
    DegenerateElement,
    IncompatibleMeshes,
    MapUndefined,
    NearCentroidVertex,
    NotEquilateral,
)
from .geom import as_element, transform_triangle
from .mesh import Mesh, adjacency, build_mesh, gen_simple_mesh, vertex_neighbors
from .quality import cell_qualities, tri_quality
from .smoother import apply_operator

logger = logging.getLogger(__name__)

_S3 = np.sqrt(3.0)
A = np.array([[0.75, -1 / (4 * _S3)], [1 / (4 * _S3), 0.75]])
B = np.array([[0.25, -1 / (4 * _S3)], [1 / (4 * _S3), 0.25]])
C = np.array([[0.0, 1 / (2 * _S3)], [-1 / (2 * _S3), 0.0]])

ORIENTATIONS = ("cw", "ccw")


def _check_orientation(orientation):
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")


def _reflect(m):
    """Conjugate by the reflection ``y -> -y`` on every point."""
    p = np.ones(m.shape[0])
    p[1::2] = -1.0
    return m * p[:, None] * p[None, :]


def _assemble(blocks, n):
    out = np.zeros((2 * n, 2 * n))
    for (k, l), blk in blocks.items():
        out[2 * k : 2 * k + 2, 2 * l : 2 * l + 2] += blk
    return out


# --------------------------------------------------------------------------
# maps and finite differences


def triangle_map(flat):
    """The triangle transformation on a flat 6- or 9-vector."""
    flat = np.asarray(flat, dtype=float)
    return transform_triangle(flat.reshape(3, -1)).ravel()


def mesh_map(mesh, boundary_policy="free"):
    """The mesh operator as a function of the flat coordinate vector."""
    if boundary_policy not in ("free", "fixed"):
        raise ValueError("boundary_policy must be 'free' or 'fixed'")
    cells = mesh.cells
    dim = mesh.dim
    fixed = mesh.boundary_mask if boundary_policy == "fixed" else None

    def theta(flat):
        pts = np.asarray(flat, dtype=float).reshape(-1, dim)
        return apply_operator(pts, cells, fixed).ravel()

    return theta


def _flat_point(point):
    if isinstance(point, Mesh):
        return point.vertices.ravel().astype(float)
    return np.asarray(point, dtype=float).ravel()


def numerical_jacobian(func, point, step=1e-6):
    """Central-difference Jacobian of ``func`` at ``point``.

    Parameters
    ----------
    func : callable
        Maps a flat coordinate vector to a flat vector.
    point : Mesh or array_like
        Evaluation point; meshes and element arrays are flattened row-major.
    step : float
        Relative probe size; the actual step is ``step * max(1, |x|_inf)``.

    Raises
    ------
    MapUndefined
        If a probe hits a configuration where ``func`` is undefined.
    """
    x = _flat_point(point)
    h = step * max(1.0, float(np.abs(x).max(initial=0.0)))
    try:
        func(x)
    except (NearCentroidVertex, DegenerateElement) as exc:
        raise MapUndefined(f"map undefined at the base point: {exc}") from exc
    cols = []
    for j in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        try:
            fp = np.asarray(func(xp), dtype=float)
            fm = np.asarray(func(xm), dtype=float)
        except (NearCentroidVertex, DegenerateElement) as exc:
            raise MapUndefined(f"map undefined at probe {j}: {exc}") from exc
        # divide by the step actually taken, not the nominal 2h
        col = (fp - fm) / (xp[j] - xm[j])
        if not np.all(np.isfinite(col)):
            raise MapUndefined(f"non-finite difference quotient in column {j}")
        cols.append(col)
    return np.column_stack(cols)


# --------------------------------------------------------------------------
# analytic Jacobians at equilateral configurations


def analytic_triangle_jacobian(orientation="cw"):
    """The 6 x 6 Jacobian of the triangle map at an equilateral triangle.

    ``"cw"`` gives the block circulant ``[[A, B, C], [C, A, B], [B, C, A]]``,
    valid for clockwise vertex order; ``"ccw"`` is its reflection, valid for
    counter-clockwise order.
    """
    _check_orientation(orientation)
    blocks = {}
    for k in range(3):
        for off, blk in zip(range(3), (A, B, C)):
            blocks[k, (k + off) % 3] = blk
    jac = _assemble(blocks, 3)
    return jac if orientation == "cw" else _reflect(jac)


def simple6_jacobian(orientation="ccw", variant="corrected"):
    """The 14 x 14 Jacobian of the mesh operator at the 6-simple hexagon.

    Vertex 0 is the centre and ``1..6`` the ring in counter-clockwise order,
    as produced by ``gen_simple_mesh(7)``.

    Parameters
    ----------
    orientation : {"ccw", "cw"}
        ``"ccw"`` matches ``gen_simple_mesh(7)``; ``"cw"`` is the same mesh
        reflected, where the untransposed blocks appear.
    variant : {"corrected", "literal"}
        ``"literal"`` reproduces the commonly displayed block pattern: ``A``
        on the diagonal, ``(B+C)^T / 6`` across row 0, ``B / 2`` down column
        0, ``B^T / 2`` right of the diagonal, ``C^T / 2`` left of it (cyclic)
        and an extra ``B^T / 2`` at block (5, 1).  That pattern mixes the
        two orientations and is not the derivative of the map; its spectrum
        has moduli above 1.  ``"corrected"`` is the true derivative in the
        requested frame.
    """
    _check_orientation(orientation)
    if variant not in ("corrected", "literal"):
        raise ValueError("variant must be 'corrected' or 'literal'")
    ring = range(1, 7)
    nxt = {k: k % 6 + 1 for k in ring}
    prv = {k: (k - 2) % 6 + 1 for k in ring}
    blocks = {}
    if variant == "literal":
        blocks[0, 0] = A
        for k in ring:
            blocks[0, k] = (B + C).T / 6
            blocks[k, 0] = B / 2
            blocks[k, k] = A
            blocks[k, nxt[k]] = B.T / 2
            blocks[k, prv[k]] = C.T / 2
        blocks[5, 1] = B.T / 2
        jac = _assemble(blocks, 7)
        return jac if orientation == "cw" else _reflect(jac)
    # counter-clockwise derivative
    blocks[0, 0] = A.T
    for k in ring:
        blocks[0, k] = (B + C).T / 6
        blocks[k, 0] = (B + C).T / 2
        blocks[k, k] = A.T
        blocks[k, nxt[k]] = B.T / 2
        blocks[k, prv[k]] = C.T / 2
    jac = _assemble(blocks, 7)
    return jac if orientation == "ccw" else _reflect(jac)


def _check_equilateral(mesh, tol):
    if mesh.is_tet:
        raise NotEquilateral("equilateral Jacobians are defined for planar meshes")
    q = cell_qualities(mesh)
    bad = np.flatnonzero(q < 1.0 - tol)
    if bad.size:
        raise NotEquilateral(
            f"cells {bad[:10].tolist()} are not equilateral (min quality {q.min():.6g})"
        )


def equilateral_mesh_jacobian(mesh, orientation="ccw", variant="cells", tol=1e-9):
    """Block-sparse Jacobian of the free-boundary mesh operator at an
    equilateral mesh.

    With ``variant="cells"`` each incident cell ``m`` of vertex ``k``
    contributes ``A``, ``B`` and ``C`` (transposed in the counter-clockwise
    frame) to the blocks of ``k`` itself, the vertex after ``k`` in ``m`` and
    the vertex before it, divided by the number of cells at ``k``.

    ``variant="literal"`` uses the vertex-type table instead: ``A`` on the
    diagonal, ``(B+C)^T / 6`` for neighbours of an inner vertex, ``C / 2``
    between neighbouring boundary vertices and ``B / 2`` from a boundary
    vertex to an inner neighbour.  It ignores which side of ``k`` the
    neighbour lies on, so it only agrees with the derivative where that does
    not matter.

    Raises
    ------
    NotEquilateral
        If some cell's edge ratio is below ``1 - tol``.
    BadValence
        If an inner vertex does not have exactly six neighbours.
    """
    _check_orientation(orientation)
    _check_equilateral(mesh, tol)
    nbrs = vertex_neighbors(mesh)
    inner = np.flatnonzero(~mesh.boundary_mask)
    bad = [int(k) for k in inner if len(nbrs[k]) != 6]
    if bad:
        raise BadValence(f"inner vertices {bad[:10]} do not have six neighbours")
    n = mesh.n_vertices
    blocks = {}
    if variant == "cells":
        adj = adjacency(mesh)
        counts = adj.counts()
        a, b, c = A.T, B.T, C.T
        for m, cell in enumerate(mesh.cells):
            for j in range(3):
                k = int(cell[j])
                w = 1.0 / counts[k]
                for l, blk in ((k, a), (int(cell[(j + 1) % 3]), b), (int(cell[(j - 1) % 3]), c)):
                    blocks[k, l] = blocks.get((k, l), 0.0) + w * blk
        jac = _assemble(blocks, n)
        return jac if orientation == "ccw" else _reflect(jac)
    if variant != "literal":
        raise ValueError("variant must be 'cells' or 'literal'")
    bnd = mesh.boundary_mask
    for k in range(n):
        blocks[k, k] = A
        for l in nbrs[k]:
            l = int(l)
            if not bnd[k]:
                blocks[k, l] = (B + C).T / 6
            elif bnd[l]:
                blocks[k, l] = C / 2
            else:
                blocks[k, l] = B / 2
    jac = _assemble(blocks, n)
    return jac if orientation == "cw" else _reflect(jac)


def hex_patch(rings):
    """Equilateral triangulated hexagon with ``rings`` layers around a vertex.

    One ring is the 6-simple mesh (7 vertices), two rings give 19 vertices,
    three give 37.  Every inner vertex has six neighbours.
    """
    if rings < 1:
        raise ValueError("rings must be at least 1")
    coords = {}
    for i in range(-rings, rings + 1):
        for j in range(-rings, rings + 1):
            if abs(i + j) <= rings:
                coords[i, j] = len(coords)
    pts = np.array([(i + 0.5 * j, _S3 / 2 * j) for i, j in coords], dtype=float)
    cells = []
    for (i, j), a in coords.items():
        for d1, d2 in (((1, 0), (0, 1)), ((0, 1), (-1, 1))):
            b = coords.get((i + d1[0], j + d1[1]))
            c = coords.get((i + d2[0], j + d2[1]))
            if b is not None and c is not None:
                cells.append((a, b, c))
    return build_mesh(pts, np.array(cells))


# --------------------------------------------------------------------------
# similarity orbit


def orbit_tangent(point):
    """Orthonormal basis of the tangent space of the planar similarity orbit.

    The four directions are the two translations, dilation about the
    centroid and rotation about the centroid.  Returns a ``(2N, 4)`` array.
    """
    pts = _flat_point(point).reshape(-1, 2)
    z = pts - pts.mean(axis=0)
    n = len(pts)
    tx = np.tile([1.0, 0.0], n)
    ty = np.tile([0.0, 1.0], n)
    dil = z.ravel()
    rot = np.column_stack([-z[:, 1], z[:, 0]]).ravel()
    q, _ = np.linalg.qr(np.column_stack([tx, ty, dil, rot]))
    return q


@dataclass
class SpectrumReport:
    """Eigenvalues of a Jacobian with unit-eigenvalue bookkeeping.

    ``transverse_eigenvalues`` and ``orbit_eigenvalues`` are filled when an
    invariant orbit basis was supplied; the classification then uses the
    transverse part.
    """

    eigenvalues: np.ndarray
    unit_count: int
    max_non_unit_modulus: float
    classification: str
    unit_tol: float = 1e-6
    orbit_eigenvalues: np.ndarray = None
    transverse_eigenvalues: np.ndarray = None
    invariance_residual: float = field(default=None)

    @property
    def moduli(self):
        return np.abs(self.eigenvalues)


def _sorted_eigs(ev):
    ev = np.asarray(ev, dtype=complex)
    order = np.lexsort((-ev.imag, -ev.real, -np.abs(ev)))
    return ev[order]


def _classify(moduli, tol):
    if moduli.size and moduli.max() > 1.0 + tol:
        return "saddle"
    if moduli.size == 0 or moduli.max() < 1.0 - tol:
        return "attractor_orbit"
    return "inconclusive"


def spectrum(matrix, unit_tol=1e-6, orbit_basis=None, method="auto", expected_unit=4):
    """Eigenvalues of ``matrix`` and the attractor/saddle classification.

    Without ``orbit_basis`` the matrix is an attractor if exactly
    ``expected_unit`` eigenvalues lie within ``unit_tol`` of 1 and all
    others have modulus below ``1 - unit_tol``; it is a saddle if any
    modulus exceeds ``1 + unit_tol``; otherwise inconclusive.

    With ``orbit_basis`` (columns spanning a subspace the matrix maps into
    itself, such as :func:`orbit_tangent` at a fixed point or relative
    equilibrium) the eigenvalues split into those on the subspace and those
    of the induced map on the quotient, and the classification looks at the
    quotient only.

    Raises
    ------
    NoConvergence
        From the eigensolver.
    ValueError
        If ``orbit_basis`` is not invariant under ``matrix``.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if m.shape[0] > 4096:
        raise ValueError("matrix dimension above 4096 is not supported")
    ev = _sorted_eigs(eigvals(m, method=method))
    unit = np.abs(ev - 1.0) < unit_tol
    others = np.abs(ev[~unit])
    max_other = float(others.max()) if others.size else 0.0
    report = SpectrumReport(ev, int(unit.sum()), max_other, "inconclusive", unit_tol)
    if orbit_basis is None:
        if max_other > 1.0 + unit_tol:
            report.classification = "saddle"
        elif report.unit_count == expected_unit and max_other < 1.0 - unit_tol:
            report.classification = "attractor_orbit"
        return report
    v, _ = np.linalg.qr(np.asarray(orbit_basis, dtype=float))
    full, _ = np.linalg.qr(np.column_stack([v, np.eye(m.shape[0])]), mode="complete")
    u = full[:, v.shape[1] :]
    residual = float(np.abs(u.T @ m @ v).max())
    if residual > 1e-6 * max(1.0, np.abs(m).max()):
        raise ValueError(f"orbit basis is not invariant (residual {residual:.3g})")
    report.invariance_residual = residual
    report.orbit_eigenvalues = _sorted_eigs(eigvals(v.T @ m @ v, method=method))
    report.transverse_eigenvalues = _sorted_eigs(eigvals(u.T @ m @ u, method=method))
    report.classification = _classify(np.abs(report.transverse_eigenvalues), unit_tol)
    return report


def mesh_spectrum(mesh, step=1e-6, unit_tol=1e-6, method="auto"):
    """Orbit-aware spectrum of the free-boundary mesh operator at ``mesh``.

    Suitable at fixed points and at relative equilibria (meshes mapped to a
    similar copy of themselves), where the orbit tangent is invariant.
    """
    jac = numerical_jacobian(mesh_map(mesh), mesh, step)
    return spectrum(jac, unit_tol, orbit_basis=orbit_tangent(mesh), method=method)


@dataclass
class OrbitDistance:
    """Scale-free distance between two configurations up to similarity.

    ``g(p) = scale * R(angle) p + translation`` maps the first configuration
    as close as possible onto the second; ``residual_rms`` is the remaining
    root-mean-square vertex distance in the units of the second.
    """

    d: float
    angle: float
    scale: float
    translation: np.ndarray
    residual_rms: float

    def apply(self, points):
        z = np.asarray(points, dtype=float) @ self._rotation().T * self.scale
        return z + self.translation

    def _rotation(self):
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([[c, -s], [s, c]])


def _planar_points(x):
    if isinstance(x, Mesh):
        if x.dim != 2:
            raise IncompatibleMeshes("similarity distance needs planar meshes")
        return x.vertices.astype(float)
    pts = np.asarray(x, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise IncompatibleMeshes("similarity distance needs (N, 2) point arrays")
    return pts


def similarity_distance(a, b):
    """Distance between ``a`` and ``b`` modulo rotation, scale and translation.

    Both configurations are centred and normalised to unit size; ``d`` is
    the smallest distance between the normalised ``b`` and any rotated,
    rescaled normalised ``a``.  In complex coordinates with unit vectors
    ``u``, ``v`` this is ``sqrt(1 - |<u, v>|^2)``: symmetric, zero exactly
    on similar configurations, and a metric on similarity classes.
    Reflections are not part of the group, so a mirror image is generally at
    positive distance.

    Parameters
    ----------
    a, b : Mesh or array_like, shape (N, 2)
        Meshes must share connectivity.

    Raises
    ------
    IncompatibleMeshes
        On differing connectivity, point counts or dimension.
    """
    if isinstance(a, Mesh) and isinstance(b, Mesh) and not np.array_equal(a.cells, b.cells):
        raise IncompatibleMeshes("meshes have different connectivity")
    pa, pb = _planar_points(a), _planar_points(b)
    if pa.shape != pb.shape:
        raise IncompatibleMeshes(f"point counts differ: {len(pa)} vs {len(pb)}")
    ca, cb = pa.mean(axis=0), pb.mean(axis=0)
    za = (pa - ca) @ np.array([1.0, 1.0j])
    zb = (pb - cb) @ np.array([1.0, 1.0j])
    na, nb = np.linalg.norm(za), np.linalg.norm(zb)
    if na == 0.0 or nb == 0.0:
        raise IncompatibleMeshes("configuration collapsed to a point")
    ua, ub = za / na, zb / nb
    # residual form avoids the cancellation in sqrt(1 - |<u, v>|^2)
    d = float(min(1.0, np.linalg.norm(ub - np.vdot(ua, ub) * ua)))
    s = np.vdot(za, zb) / (na * na)
    shift = cb - np.array([(s * complex(*ca)).real, (s * complex(*ca)).imag])
    residual = float(nb * d / np.sqrt(len(pa)))
    return OrbitDistance(d, float(np.angle(s)), float(abs(s)), shift, residual)


def align(source, target):
    """``source`` moved by the similarity that best matches it to ``target``."""
    return similarity_distance(source, target).apply(_planar_points(source))


def shape_normalized_map(mesh):
    """Mesh operator followed by re-alignment onto its input.

    Relative equilibria of the mesh operator (meshes mapped to a similar
    copy) become true fixed points of this map, so its spectrum measures
    shape contraction alone.
    """
    theta = mesh_map(mesh)

    def psi(flat):
        x = np.asarray(flat, dtype=float).reshape(-1, 2)
        y = theta(flat).reshape(-1, 2)
        return align(y, x).ravel()

    return psi


def shape_spectrum(mesh, step=1e-6, unit_tol=1e-6, method="auto"):
    """Orbit-aware spectrum of :func:`shape_normalized_map` at ``mesh``."""
    jac = numerical_jacobian(shape_normalized_map(mesh), mesh, step)
    return spectrum(jac, unit_tol, orbit_basis=orbit_tangent(mesh), method=method)


def relative_equilibrium_factor(mesh):
    """Complex factor ``s`` with ``Theta(x) - c = s (x - c)`` and the fit error.

    Returns ``(s, d)`` where ``d`` is the similarity distance between the
    mesh and its image; ``d = 0`` marks a relative equilibrium.
    """
    image = mesh_map(mesh)(mesh.vertices.ravel()).reshape(-1, 2)
    od = similarity_distance(mesh.vertices, image)
    return od.scale * np.exp(1j * od.angle), od.d


# --------------------------------------------------------------------------
# surveys


def random_triangle(rng, min_quality=0.3, max_tries=10000):
    """Counter-clockwise triangle in the unit square with edge ratio at
    least ``min_quality`` (rejection sampling)."""
    for _ in range(max_tries):
        t = rng.random((3, 2))
        e1, e2 = t[1] - t[0], t[2] - t[0]
        if e1[0] * e2[1] - e1[1] * e2[0] <= 0:
            t = t[[0, 2, 1]]
        try:
            if tri_quality(t) >= min_quality:
                return t
        except DegenerateElement:
            continue
    raise RuntimeError(f"no triangle with quality >= {min_quality} in {max_tries} tries")


def random_simple_mesh(N, radius_spread=0.5, angle_jitter=0.3):
    """Sampler of valid ``N``-simple meshes around the regular one.

    Ring vertices get radii in ``1 +- radius_spread`` and angular offsets of
    up to ``angle_jitter`` of the regular spacing; invalid draws are redrawn.
    """
    base = gen_simple_mesh(N)
    k = N - 1

    def sample(rng):
        while True:
            ang = 2 * np.pi * (np.arange(2, N + 1) + rng.uniform(-angle_jitter, angle_jitter, k)) / k
            rad = 1.0 + rng.uniform(-radius_spread, radius_spread, k)
            pts = np.vstack([[0.0, 0.0], np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])])
            try:
                return build_mesh(pts, base.cells, base.boundary_mask)
            except ValueError:
                continue

    return sample


@dataclass
class SurveyRow:
    quality: float
    moduli: np.ndarray
    unit_count: int
    frobenius_norm: float
    spectral_norm: float


@dataclass
class SurveyResult:
    rows: list
    skipped: int = 0


def spectrum_survey(sampler, count, seed=0, step=1e-6, unit_tol=1e-6, method="auto"):
    """Jacobian spectra over random samples.

    Parameters
    ----------
    sampler : callable
        ``sampler(rng)`` returns a triangle ``(3, 2)`` array or a planar
        :class:`~gemsmooth.mesh.Mesh`.
    count : int
        Number of samples drawn.
    seed : int
        Seed for ``numpy.random.default_rng``.

    Returns
    -------
    SurveyResult
        One row per sample where the Jacobian exists; samples where the map
        is undefined are counted in ``skipped``.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.default_rng(seed)
    result = SurveyResult([])
    for _ in range(count):
        sample = sampler(rng)
        if isinstance(sample, Mesh):
            func, q = mesh_map(sample), float(np.mean(cell_qualities(sample)))
        else:
            sample = as_element(sample)
            func, q = triangle_map, tri_quality(sample)
        try:
            jac = numerical_jacobian(func, sample, step)
        except MapUndefined:
            result.skipped += 1
            continue
        rep = spectrum(jac, unit_tol, method=method)
        result.rows.append(
            SurveyRow(
                q,
                rep.moduli,
                rep.unit_count,
                float(np.linalg.norm(jac, "fro")),
                float(np.linalg.norm(jac, 2)),
            )
        )
    if result.skipped:
        logger.info("spectrum survey skipped %d of %d samples", result.skipped, count)
    return result
