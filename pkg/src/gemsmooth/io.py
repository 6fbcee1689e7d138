"""Plain-text mesh files and CSV emitters.

A mesh file holds a node section followed by an element section, in the
spirit of the Triangle ``.node``/``.ele`` pair but in one file::

    # optional comment lines
    <N> <dim> 0 1
    <i> <x> <y> [<z>] <boundary 0|1>      (N rows)
    <M> <nodes_per_cell> 0
    <j> <v0> <v1> <v2> [<v3>]             (M rows)

Indices are 0-based and rows must appear in index order.  Coordinates are
written with 17 significant digits, which round-trips doubles exactly.
"""

import csv
from pathlib import Path

import numpy as np

from .errors import IndexOutOfRange, ParseError
from .mesh import build_mesh


def _fmt(x):
    return format(float(x), ".17g")


def serialize_mesh(mesh):
    """Render ``mesh`` in the text format above (LF line endings)."""
    lines = [f"{mesh.n_vertices} {mesh.dim} 0 1"]
    for i, (p, b) in enumerate(zip(mesh.vertices, mesh.boundary_mask)):
        lines.append(" ".join([str(i), *map(_fmt, p), str(int(b))]))
    lines.append(f"{mesh.n_cells} {mesh.nodes_per_cell} 0")
    for j, cell in enumerate(mesh.cells.tolist()):
        lines.append(" ".join(map(str, [j, *cell])))
    return "\n".join(lines) + "\n"


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].split()
        if body:
            yield lineno, body


def _ints(tokens, lineno, what):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"expected integers in {what}", lineno) from None


def _header(lines, what, width):
    try:
        lineno, tok = next(lines)
    except StopIteration:
        raise ParseError(f"missing {what} header", None) from None
    if len(tok) != width:
        raise ParseError(f"{what} header needs {width} fields, got {len(tok)}", lineno)
    return lineno, _ints(tok, lineno, f"{what} header")


def _row(lines, expected_index, ncols, what, last_lineno):
    try:
        lineno, tok = next(lines)
    except StopIteration:
        raise ParseError(f"{what} section ends early", last_lineno) from None
    if len(tok) != ncols:
        raise ParseError(f"{what} row needs {ncols} fields, got {len(tok)}", lineno)
    idx = _ints(tok[:1], lineno, what)[0]
    if idx != expected_index:
        raise ParseError(f"{what} index {idx} out of sequence, expected {expected_index}", lineno)
    return lineno, tok[1:]


def parse_mesh(text):
    """Parse the text format into a validated :class:`~gemsmooth.mesh.Mesh`.

    Raises
    ------
    ParseError
        Malformed header or row, with the offending line number.
    IndexOutOfRange
        An element row references a node index outside ``0..N-1``.
    MeshValidationError
        The parsed mesh violates a mesh invariant.
    """
    lines = _data_lines(text)
    lineno, (n, dim, nattr, nmark) = _header(lines, "node", 4)
    if n < 1 or dim not in (2, 3) or nattr != 0 or nmark != 1:
        raise ParseError("node header must read '<N> <2|3> 0 1' with N >= 1", lineno)
    verts = np.empty((n, dim))
    mask = np.empty(n, dtype=bool)
    for i in range(n):
        lineno, tok = _row(lines, i, dim + 2, "node", lineno)
        try:
            verts[i] = [float(t) for t in tok[:dim]]
        except ValueError:
            raise ParseError("bad coordinate", lineno) from None
        flag = _ints(tok[dim:], lineno, "boundary marker")[0]
        if flag not in (0, 1):
            raise ParseError("boundary marker must be 0 or 1", lineno)
        mask[i] = bool(flag)
    lineno, (m, k, eattr) = _header(lines, "element", 3)
    if m < 1 or k != dim + 1 or eattr != 0:
        raise ParseError(f"element header must read '<M> {dim + 1} 0' with M >= 1", lineno)
    cells = np.empty((m, k), dtype=np.int64)
    for j in range(m):
        lineno, tok = _row(lines, j, k + 1, "element", lineno)
        row = _ints(tok, lineno, "element row")
        bad = [v for v in row if not 0 <= v < n]
        if bad:
            raise IndexOutOfRange(f"node index {bad[0]} not in 0..{n - 1}", lineno)
        cells[j] = row
    extra = next(lines, None)
    if extra is not None:
        raise ParseError("unexpected content after element section", extra[0])
    return build_mesh(verts, cells, mask)


def read_mesh(path):
    return parse_mesh(Path(path).read_text(encoding="utf-8"))


def write_mesh(mesh, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize_mesh(mesh))


def write_csv(path, header, rows):
    """Write rows with ``repr``-exact floats and LF line endings."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def history_rows(report):
    """Rows ``iter, mean_q, min_q, max_disp`` of a smoothing report."""
    for it, ((mean_q, min_q), disp) in enumerate(
        zip(report.quality_history, report.displacement_history)
    ):
        yield it, mean_q, min_q, disp


def eigenvalue_rows(eigenvalues):
    for ev in eigenvalues:
        yield float(ev.real), float(ev.imag), float(abs(ev))
