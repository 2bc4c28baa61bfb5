"""Snapshot (legacy VTK ASCII) and time-series (CSV) files."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ..channel import build_grid
from ..state import SimState

CSV_COLUMNS = ("t", "e_kin", "e_bulk", "e_surf", "e_total", "d_visc", "d_chem",
               "d_slip", "d_wall", "mass", "residual", "max_abs_phi")
SNAPSHOT_FIELDS = ("phi", "p", "u")


def _num(x: float) -> str:
    return "%.17g" % x


def _point_order(a: np.ndarray) -> np.ndarray:
    # VTK point order: x fastest, then y, then z
    return np.asarray(a).transpose().ravel()


def _write_vtk(path: Path, grid, name: str, data: np.ndarray, vector: bool, t: float) -> None:
    if grid.dim == 2:
        dims = (grid.n_periodic[0], 1, grid.n_wall)
        spacing = (grid.dx[0], 1.0, grid.dz)
    else:
        dims = (grid.n_periodic[0], grid.n_periodic[1], grid.n_wall)
        spacing = (grid.dx[0], grid.dx[1], grid.dz)
    npts = int(np.prod(dims))
    lines = ["# vtk DataFile Version 3.0",
             f"nsac {name} t={_num(t)}",
             "ASCII",
             "DATASET STRUCTURED_POINTS",
             "DIMENSIONS %d %d %d" % dims,
             "ORIGIN 0 0 -1",
             "SPACING " + " ".join(_num(s) for s in spacing),
             f"POINT_DATA {npts}"]
    if vector:
        comps = list(data)
        if grid.dim == 2:
            comps = [comps[0], np.zeros_like(comps[0]), comps[1]]
        cols = np.stack([_point_order(c) for c in comps], axis=1)
        lines.append(f"VECTORS {name} double")
        lines.extend(" ".join(_num(v) for v in row) for row in cols)
    else:
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_num(v) for v in _point_order(data))
    try:
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write snapshot file {path}: {exc}") from exc


def write_snapshot(state: SimState, path) -> Path:
    """Write ``phi.vtk``, ``p.vtk`` and ``u.vtk`` into directory ``path``."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create snapshot directory {path}: {exc}") from exc
    g = state.grid
    _write_vtk(path / "phi.vtk", g, "phi", state.phi, False, state.t)
    _write_vtk(path / "p.vtk", g, "p", state.p, False, state.t)
    _write_vtk(path / "u.vtk", g, "u", state.u, True, state.t)
    return path


def _read_vtk(path: Path):
    try:
        text = path.read_text(encoding="ascii").splitlines()
    except OSError as exc:
        raise OSError(f"cannot read snapshot file {path}: {exc}") from exc
    header = {}
    t = float(text[1].split("t=")[-1]) if "t=" in text[1] else 0.0
    i = 2
    while i < len(text):
        parts = text[i].split()
        if parts and parts[0] in ("DIMENSIONS", "ORIGIN", "SPACING", "POINT_DATA"):
            header[parts[0]] = parts[1:]
        if parts and parts[0] in ("SCALARS", "VECTORS"):
            kind = parts[0]
            i += 2 if kind == "SCALARS" else 1
            break
        i += 1
    else:
        raise ValueError(f"{path}: no data block found")
    values = np.array([float(v) for line in text[i:] for v in line.split()])
    dims = tuple(int(d) for d in header["DIMENSIONS"])
    spacing = tuple(float(s) for s in header["SPACING"])
    return kind, dims, spacing, values, t


def _unorder(values: np.ndarray, dims) -> np.ndarray:
    return values.reshape(dims[::-1]).transpose()


def read_snapshot(path) -> SimState:
    """Reload a snapshot written by :func:`write_snapshot`; psi is the trace of phi."""
    path = Path(path)
    kind, dims, spacing, values, t = _read_vtk(path / "phi.vtk")
    nx, ny, nz = dims
    if ny == 1:
        grid = build_grid(2, [nx], nz, [nx * spacing[0]])
        shape = (nx, nz)
    else:
        grid = build_grid(3, [nx, ny], nz, [nx * spacing[0], ny * spacing[1]])
        shape = (nx, ny, nz)
    phi = _unorder(values, dims).reshape(shape)
    _, _, _, pv, _ = _read_vtk(path / "p.vtk")
    p = _unorder(pv, dims).reshape(shape)
    _, _, _, uv, _ = _read_vtk(path / "u.vtk")
    uv = uv.reshape(-1, 3)
    comps = [_unorder(uv[:, c], dims).reshape(shape) for c in range(3)]
    u = np.stack([comps[0], comps[2]]) if grid.dim == 2 else np.stack(comps)
    return SimState.from_phi(grid, phi, u=u, p=p, t=t)


def write_timeseries(rows: Iterable[Mapping[str, float]], path) -> Path:
    """CSV with the fixed diagnostics header, '.' decimals, LF line endings."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([_num(float(row[c])) for c in CSV_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write time series {path}: {exc}") from exc
    return path


def read_timeseries(path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader]
    arr = np.array(data, dtype=float).reshape(-1, len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}

