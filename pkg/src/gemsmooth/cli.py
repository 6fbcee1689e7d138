"""Command-line entry point: ``python -m gemsmooth <command> ...``.

Exit codes: 0 success, 2 invalid input or arguments, 3 a smoothing step
inverted a cell under ``--on-inversion abort``.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import dynamics
from .errors import GemSmoothError, InvertedMeshAfterStep
from .geom import transform_polygon
from .io import eigenvalue_rows, history_rows, read_mesh, write_csv, write_mesh
from .mesh import gen_cube_tet_mesh, gen_grid_mesh, gen_simple_mesh
from .quality import mesh_quality
from .smoother import SmoothOptions, run

EXIT_OK, EXIT_INVALID, EXIT_INVERTED = 0, 2, 3
_INVERSION = {"abort": "abort", "revert": "revert_step", "accept": "accept"}
_EQUILIBRIUM_TOL = 1e-9

log = logging.getLogger(__name__)


def _cmd_generate(args):
    if args.kind == "grid":
        mesh = gen_grid_mesh(args.n, args.jitter, args.seed)
    elif args.kind == "cube":
        mesh = gen_cube_tet_mesh(args.n, args.jitter, args.seed)
    else:
        mesh = gen_simple_mesh(args.n)
    write_mesh(mesh, args.out)
    print(f"vertices={mesh.n_vertices} cells={mesh.n_cells}")


def _cmd_smooth(args):
    mesh = read_mesh(args.inp)
    options = SmoothOptions(
        boundary_policy=args.boundary,
        max_iterations=args.iters,
        displacement_tol=args.tol,
        on_inversion=_INVERSION[args.on_inversion],
        record_history=True,
    )
    try:
        out, report = run(mesh, options)
    except InvertedMeshAfterStep as exc:
        if args.history and exc.report is not None:
            write_csv(args.history, ["iter", "mean_q", "min_q", "max_disp"], history_rows(exc.report))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVERTED
    write_mesh(out, args.out)
    if args.history:
        write_csv(args.history, ["iter", "mean_q", "min_q", "max_disp"], history_rows(report))
    mean_q, min_q = report.quality_history[-1]
    print(
        f"iterations={report.iterations_run} terminated_by={report.terminated_by} "
        f"mean={mean_q!r} min={min_q!r}"
    )


def _cmd_quality(args):
    mesh = read_mesh(args.inp)
    hist = mesh_quality(mesh, args.bins)
    if args.csv:
        path = Path(args.csv)
        write_csv(path, ["cell", "q"], enumerate(hist.values))
        hist_path = path.with_name(f"{path.stem}_hist.csv")
        edges = hist.bin_edges
        write_csv(
            hist_path,
            ["bin_lo", "bin_hi", "count"],
            ((edges[i], edges[i + 1], int(c)) for i, c in enumerate(hist.counts)),
        )
    print(f"mean={hist.mean!r} min={hist.min!r}")


def _spectrum_matrix(args):
    """Jacobian and optional orbit basis for the requested case."""
    analytic = args.mode == "analytic"
    if args.case == "triangle":
        if analytic:
            return dynamics.analytic_triangle_jacobian(), None
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
        return dynamics.numerical_jacobian(dynamics.triangle_map, tri), None
    if args.case == "simple6":
        mesh = gen_simple_mesh(7)
        if analytic:
            return dynamics.simple6_jacobian(), None
    elif args.case == "simple":
        if args.n is None:
            raise GemSmoothError("--case simple needs --n")
        mesh = gen_simple_mesh(args.n)
        if analytic:
            if args.n != 7:
                raise GemSmoothError("analytic Jacobian exists only for --n 7")
            return dynamics.simple6_jacobian(), None
    else:
        if args.inp is None:
            raise GemSmoothError("--case mesh needs --in")
        mesh = read_mesh(args.inp)
        if analytic:
            return dynamics.equilateral_mesh_jacobian(mesh), None
    jac = dynamics.numerical_jacobian(dynamics.mesh_map(mesh), mesh)
    # the orbit split only makes sense where the orbit is invariant
    if mesh.dim == 2 and dynamics.relative_equilibrium_factor(mesh)[1] < _EQUILIBRIUM_TOL:
        return jac, dynamics.orbit_tangent(mesh)
    log.info("mesh is not a relative equilibrium; reporting the raw spectrum")
    return jac, None


def _cmd_spectrum(args):
    jac, basis = _spectrum_matrix(args)
    rep = dynamics.spectrum(jac, orbit_basis=basis)
    rows = list(eigenvalue_rows(rep.eigenvalues))
    if args.csv:
        write_csv(args.csv, ["re", "im", "modulus"], rows)
    else:
        print("re,im,modulus")
        for row in rows:
            print(",".join(repr(v) for v in row))
    print(
        f"unit_count={rep.unit_count} max_non_unit={rep.max_non_unit_modulus!r} "
        f"classification={rep.classification}",
        file=sys.stderr,
    )


def demo_polygon(k):
    """Convex k-gon with alternating radii; ``k = 4`` gives the kite
    (2,0), (0,1), (-2,0), (0,-1)."""
    ang = 2 * np.pi * np.arange(k) / k
    c = np.cos(2 * np.pi / k)
    outer = 2.0 if c <= 0.45 else 0.9 / c
    rad = np.where(np.arange(k) % 2 == 0, outer, 1.0)
    pts = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    return np.where(np.abs(pts) < 1e-15, 0.0, pts)


def _cmd_polygon(args):
    if args.k < 3:
        raise GemSmoothError("--k must be at least 3")
    poly = demo_polygon(args.k)
    rows = []
    for it in range(args.iters + 1):
        rows.extend((it, i, float(x), float(y)) for i, (x, y) in enumerate(poly))
        if it < args.iters:
            poly = transform_polygon(poly)
    if args.csv:
        write_csv(args.csv, ["iter", "vertex", "x", "y"], rows)
    else:
        for row in rows:
            print(",".join(map(repr, row)))


def build_parser():
    p = argparse.ArgumentParser(prog="gemsmooth", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a test mesh")
    g.add_argument("--kind", choices=("grid", "cube", "simple"), required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--jitter", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("smooth", help="iterate the mesh operator")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--iters", type=int, default=100)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--boundary", choices=("fixed", "free"), default="fixed")
    s.add_argument("--on-inversion", choices=tuple(_INVERSION), default="abort")
    s.add_argument("--history")
    s.set_defaults(func=_cmd_smooth)

    q = sub.add_parser("quality", help="per-cell quality and histogram")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--bins", type=int, default=20)
    q.add_argument("--csv")
    q.set_defaults(func=_cmd_quality)

    sp = sub.add_parser("spectrum", help="Jacobian eigenvalues at a configuration")
    sp.add_argument("--case", choices=("triangle", "simple6", "simple", "mesh"), required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--in", dest="inp")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--numeric", dest="mode", action="store_const", const="numeric")
    mode.add_argument("--analytic", dest="mode", action="store_const", const="analytic")
    sp.add_argument("--csv")
    sp.set_defaults(func=_cmd_spectrum, mode="numeric")

    pg = sub.add_parser("polygon-demo", help="vertex trajectories of the k-gon map")
    pg.add_argument("--k", type=int, default=4)
    pg.add_argument("--iters", type=int, default=10)
    pg.add_argument("--csv")
    pg.set_defaults(func=_cmd_polygon)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        code = args.func(args)
    except (GemSmoothError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK if code is None else code
