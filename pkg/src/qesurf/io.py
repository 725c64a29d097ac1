"""CSV and JSON serialization of grids, fields and reports.

Field tables are row-major with ``y`` outer, one node per line. Files
written here start with a ``#`` comment line holding a JSON header (grid
descriptor plus free metadata) so that a table can be read back without
side files; readers also accept headerless tables and infer the grid.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np

from .chart import ChartGrid, ScalarField
from .errors import DomainError

PathOrBuffer = Union[str, Path, _io.TextIOBase]

SCALAR_COLUMNS = ("x", "y", "re", "im")
MATRIX_COLUMNS = ("x", "y", "re00", "im00", "re01", "im01", "re10", "im10", "re11", "im11")


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation)."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _open(target: PathOrBuffer, mode: str):
    if isinstance(target, (str, Path)):
        return open(target, mode, newline="")
    return _NoClose(target)


class _NoClose:
    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        return False


def _fmt(v) -> str:
    # shortest round-tripping text in the value's own precision
    return np.format_float_scientific(v, unique=True)


def write_table(target: PathOrBuffer, grid: ChartGrid, columns: Mapping[str, np.ndarray],
                meta: Optional[dict] = None):
    """Write named real columns sampled on ``grid``.

    Complex arrays are split into ``<name>_re`` and ``<name>_im`` columns.
    """
    header = {"grid": grid.descriptor(), "order": grid.order, "precision": grid.precision}
    if meta:
        header["meta"] = meta
    names, data = ["x", "y"], [grid.X, grid.Y]
    for name, arr in columns.items():
        arr = np.broadcast_to(np.asarray(arr), grid.shape)
        if np.iscomplexobj(arr):
            names += [f"{name}_re", f"{name}_im"]
            data += [arr.real, arr.imag]
        else:
            names.append(name)
            data.append(arr)
    with _open(target, "w") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        flat = [np.asarray(d).ravel() for d in data]
        for k in range(grid.nx * grid.ny):
            w.writerow([_fmt(col[k]) for col in flat])


def _infer_grid(x: np.ndarray, y: np.ndarray) -> ChartGrid:
    xs, ys = np.unique(x), np.unique(y)
    nx, ny = len(xs), len(ys)
    if nx * ny != len(x):
        raise DomainError("table does not sample a rectangular grid")
    return ChartGrid((xs[0], xs[-1]), (ys[0], ys[-1]), nx, ny)


def read_table(source: PathOrBuffer) -> Tuple[ChartGrid, Dict[str, np.ndarray], dict]:
    """Inverse of :func:`write_table`.

    Returns
    -------
    grid : ChartGrid
    columns : dict of str to ndarray
        Arrays of shape ``(ny, nx)``; ``_re``/``_im`` pairs are merged back
        into complex arrays.
    meta : dict
    """
    with _open(source, "r") as fh:
        text = fh.read()
    lines = text.splitlines()
    header = {}
    body = []
    for ln in lines:
        if ln.startswith("#"):
            if not header:
                try:
                    header = json.loads(ln[1:].strip())
                except json.JSONDecodeError as exc:
                    raise DomainError(f"malformed table header: {exc}") from None
            continue
        if ln.strip():
            body.append(ln)
    if not body:
        raise DomainError("empty table")
    rows = list(csv.reader(body))
    names = [n.strip() for n in rows[0]]
    if names[:2] != ["x", "y"]:
        raise DomainError("table must start with columns x,y")
    real = np.longdouble if header.get("precision") == "extended" else np.float64
    try:
        data = np.array([[real(v) for v in r] for r in rows[1:]], dtype=real)
    except ValueError as exc:
        raise DomainError(f"non-numeric table entry: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(names):
        raise DomainError("ragged table")
    if "grid" in header:
        grid = ChartGrid.from_descriptor(header["grid"], header.get("order", 8),
                                         header.get("precision", "double"))
        if grid.nx * grid.ny != data.shape[0]:
            raise DomainError("table length does not match its grid header")
    else:
        grid = _infer_grid(data[:, 0], data[:, 1])
    cols: Dict[str, np.ndarray] = {}
    for j, name in enumerate(names[2:], start=2):
        cols[name] = data[:, j].reshape(grid.shape)
    for name in [n for n in cols if n.endswith("_re")]:
        base = name[:-3]
        if base + "_im" in cols:
            cols[base] = cols.pop(name) + 1j * cols.pop(base + "_im")
    return grid, cols, header.get("meta", {})


def write_scalar_csv(target: PathOrBuffer, f: ScalarField, meta: Optional[dict] = None):
    """Scalar field as ``x,y,re,im``."""
    v = np.asarray(f.values)
    _write_fixed(target, f.grid, SCALAR_COLUMNS, [v.real, v.imag], meta)


def read_scalar_csv(source: PathOrBuffer) -> ScalarField:
    grid, cols, _ = read_table(source)
    if set(cols) != {"re", "im"}:
        raise DomainError("scalar CSV needs columns x,y,re,im")
    return ScalarField(grid, cols["re"] + 1j * cols["im"])


def write_matrix_csv(target: PathOrBuffer, grid: ChartGrid, M: np.ndarray,
                     meta: Optional[dict] = None):
    """2×2 matrix field of shape ``(ny, nx, 2, 2)``."""
    M = np.asarray(M)
    parts = []
    for i in range(2):
        for j in range(2):
            parts += [M[..., i, j].real, M[..., i, j].imag]
    _write_fixed(target, grid, MATRIX_COLUMNS, parts, meta)


def read_matrix_csv(source: PathOrBuffer) -> Tuple[ChartGrid, np.ndarray]:
    grid, cols, _ = read_table(source)
    M = np.zeros(grid.shape + (2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            M[..., i, j] = cols[f"re{i}{j}"] + 1j * cols[f"im{i}{j}"]
    return grid, M


def _write_fixed(target, grid, names, parts, meta):
    cols = dict(zip(names[2:], parts))
    write_table(target, grid, cols, meta)


def write_json(target: PathOrBuffer, obj):
    with _open(target, "w") as fh:
        fh.write(dumps(obj))


def read_json(source: PathOrBuffer):
    with _open(source, "r") as fh:
        return json.load(fh)
