"""Text writers for traces, meshes, slabs and JSON documents.

Every float is written with 17 significant digits (or the shortest
round-trip repr inside JSON), so files reload bit-exactly and reruns of the
same configuration produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .discrete import Grid, ShellConfiguration
from .errors import ConfigError, InconsistentGrid
from .kinematics import RotationField
from .reconstruction import Slab3D
from .solver import TRACE_COLUMNS, SolveTrace


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not np.isfinite(v):
            return None
        return v
    return obj


def dumps_json(doc) -> str:
    return json.dumps(_plain(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str | Path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(doc))
    return path


def trace_csv(trace: SolveTrace) -> str:
    lines = [",".join(TRACE_COLUMNS)]
    for row in trace.rows:
        vals = [str(int(row["iteration"]))] + [fmt(row[c]) for c in TRACE_COLUMNS[1:]]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def write_trace_csv(path: str | Path, trace: SolveTrace) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trace_csv(trace))
    return path


def read_trace_csv(path: str | Path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def obj_text(points: np.ndarray) -> str:
    """Quad mesh of a nodal ``(nx, ny, 3)`` array: ``v`` lines then ``f`` lines."""
    nx, ny = points.shape[:2]
    lines = [f"# midsurface {nx} x {ny}"]
    for p in points.reshape(-1, 3):
        lines.append(f"v {fmt(p[0])} {fmt(p[1])} {fmt(p[2])}")
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j + 1
            lines.append(f"f {a} {a + ny} {a + ny + 1} {a + 1}")
    return "\n".join(lines) + "\n"


def write_obj(path: str | Path, points: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(obj_text(points))
    return path


def read_obj(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(v) for v in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(v) for v in parts[1:]])
    return np.array(verts), np.array(faces, dtype=int)


def vtk_text(slab: Slab3D, title: str = "reconstructed shell") -> str:
    """Legacy ASCII structured grid; point order has x1 fastest, then x2, then x3."""
    nx, ny, nz = slab.shape
    pts = np.transpose(slab.phi, (2, 1, 0, 3)).reshape(-1, 3)
    n = pts.shape[0]
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_GRID",
        f"DIMENSIONS {nx} {ny} {nz}",
        f"POINTS {n} double",
    ]
    lines += [f"{fmt(p[0])} {fmt(p[1])} {fmt(p[2])}" for p in pts]
    lines.append(f"POINT_DATA {n}")

    def scalar(name, arr):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(fmt(v) for v in arr)

    column = lambda a: np.broadcast_to(a[:, :, None], (nx, ny, nz)).transpose(2, 1, 0).ravel()  # noqa: E731
    scalar("x3", np.broadcast_to(slab.x3[None, None, :], (nx, ny, nz)).transpose(2, 1, 0).ravel())
    scalar("rho_m", column(slab.rho_m))
    scalar("rho_b", column(slab.rho_b))
    return "\n".join(lines) + "\n"


def write_vtk(path: str | Path, slab: Slab3D) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(vtk_text(slab))
    return path


def read_vtk_points(path: str | Path) -> tuple[tuple[int, int, int], np.ndarray]:
    """Dimensions and ``(nx, ny, nz, 3)`` points of a file written by :func:`write_vtk`."""
    lines = Path(path).read_text().splitlines()
    dims = tuple(int(v) for v in lines[4].split()[1:])
    n = int(lines[5].split()[1])
    pts = np.array([[float(v) for v in ln.split()] for ln in lines[6 : 6 + n]])
    nx, ny, nz = dims
    return dims, pts.reshape(nz, ny, nx, 3).transpose(2, 1, 0, 3)


def solution_document(config: ShellConfiguration) -> dict:
    g = config.grid
    return {
        "grid": {"domain": list(g.domain), "nx": g.nx, "ny": g.ny},
        "dirichlet": list(config.dirichlet_edges),
        "m": config.m,
        "quaternions": config.rotations.quat,
    }


def read_solution(path: str | Path, template: ShellConfiguration) -> ShellConfiguration:
    """Load nodal ``m`` and rotations onto the grid and boundary data of ``template``."""
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"solution file not found: {path}") from None
    g = doc["grid"]
    grid = Grid(tuple(g["domain"]), int(g["nx"]), int(g["ny"]))
    if grid != template.grid:
        raise InconsistentGrid("solution grid does not match the configured grid")
    m = np.array(doc["m"], dtype=float)
    rot = RotationField(np.array(doc["quaternions"], dtype=float))
    return template.with_state(m, rot)
