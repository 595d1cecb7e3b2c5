"""Staggered 2D grid, field storage, medium sampling and the snapshot file format.

Index layout (arrays are indexed ``[i, j]`` with ``i`` along x):

    E3, J3   cell centres      (x_{i+1/2}, y_{j+1/2})   shape (nx, ny)
    H1, K1   horizontal edges  (x_{i+1/2}, y_j)         shape (nx, ny+1)
    H2, K2   vertical edges    (x_i, y_{j+1/2})         shape (nx+1, ny)

with ``x_i = x_min + i*dx`` and ``y_j = y_min + j*dy``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import NonFiniteField, RectangleOutsideInterior

FIELD_NAMES = ("E3", "H1", "H2", "J3", "K1", "K2")

# staggering offsets (x, y) in cell units per field
OFFSETS = {
    "E3": (0.5, 0.5),
    "J3": (0.5, 0.5),
    "H1": (0.5, 0.0),
    "K1": (0.5, 0.0),
    "H2": (0.0, 0.5),
    "K2": (0.0, 0.5),
}


@dataclass(frozen=True)
class GridSpec:
    x_min: float = -18.0
    x_max: float = 18.0
    y_min: float = -18.0
    y_max: float = 18.0
    nx: int = 360
    ny: int = 360

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"need at least 4 cells per axis, got {self.nx}x{self.ny}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("grid extent must be positive in both directions")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def shape(self, name: str) -> tuple[int, int]:
        ox, oy = OFFSETS[name]
        return (self.nx + (ox == 0.0), self.ny + (oy == 0.0))

    def coord(self, i, j, name: str):
        """Physical coordinates of integer index ``(i, j)`` of field ``name``."""
        ox, oy = OFFSETS[name]
        return (self.x_min + (np.asarray(i) + ox) * self.dx,
                self.y_min + (np.asarray(j) + oy) * self.dy)

    def index(self, x, y, name: str):
        """Inverse of :meth:`coord`, rounded to the nearest node."""
        ox, oy = OFFSETS[name]
        i = np.rint((np.asarray(x) - self.x_min) / self.dx - ox).astype(int)
        j = np.rint((np.asarray(y) - self.y_min) / self.dy - oy).astype(int)
        return i, j

    def mesh(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.shape(name)
        return self.coord(*np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij"), name)


@dataclass
class FieldState:
    """Fields at one leapfrog level.

    ``E3``/``J3`` belong to time ``t``; ``H1``/``H2`` to ``t - dt/2``.  The
    auxiliary arrays hold the running memory integrals of the matching field.
    """

    E3: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    J3: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    t: float = 0.0
    step: int = 0

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FieldState":
        return cls(*(np.zeros(grid.shape(n)) for n in FIELD_NAMES))

    def copy(self) -> "FieldState":
        return replace(self, **{n: getattr(self, n).copy() for n in FIELD_NAMES})

    def check_finite(self) -> None:
        for n in FIELD_NAMES:
            if not np.all(np.isfinite(getattr(self, n))):
                raise NonFiniteField(f"{n} is not finite at step {self.step} (t={self.t:g})")


# --------------------------------------------------------------------------- medium


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float
    w_e: float
    w_m: float
    gamma_e: float = 0.0
    gamma_m: float = 0.0

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate rectangle {self}")
        for name in ("w_e", "w_m", "gamma_e", "gamma_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0 in {self}")


@dataclass(frozen=True)
class MediumMap:
    """Piecewise-constant Drude rates: a background plus rectangles (last one wins)."""

    background: tuple[float, float] = (0.0, 0.0)
    rectangles: tuple[Rectangle, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rectangles", tuple(self.rectangles))
        if min(self.background) < 0:
            raise ValueError("background rates must be >= 0")


@dataclass
class MediumArrays:
    """Squared Drude rates and damping sampled at every staggered node."""

    we2: np.ndarray
    wm2_h1: np.ndarray
    wm2_h2: np.ndarray
    ge: np.ndarray
    gm_h1: np.ndarray
    gm_h2: np.ndarray

    @classmethod
    def vacuum(cls, grid: GridSpec) -> "MediumArrays":
        e, h1, h2 = (np.zeros(grid.shape(n)) for n in ("E3", "H1", "H2"))
        return cls(e, h1, h2, e.copy(), h1.copy(), h2.copy())

    @property
    def is_vacuum(self) -> bool:
        return not (self.we2.any() or self.wm2_h1.any() or self.wm2_h2.any())

    @property
    def lossless(self) -> bool:
        return not (self.ge.any() or self.gm_h1.any() or self.gm_h2.any())

    @property
    def max_rates(self) -> tuple[float, float]:
        wm2 = max(self.wm2_h1.max(initial=0.0), self.wm2_h2.max(initial=0.0))
        return float(np.sqrt(self.we2.max(initial=0.0))), float(np.sqrt(wm2))


def interior_bounds(grid: GridSpec, frame: float) -> tuple[float, float, float, float]:
    return (grid.x_min + frame, grid.x_max - frame, grid.y_min + frame, grid.y_max - frame)


def _inside(x, y, rect: Rectangle, tol: float):
    return (x >= rect.x0 - tol) & (x <= rect.x1 + tol) & (y >= rect.y0 - tol) & (y <= rect.y1 + tol)


def rectangle_mask(grid: GridSpec, rect: Rectangle, name: str = "E3") -> np.ndarray:
    x, y = grid.mesh(name)
    return _inside(x, y, rect, 1e-9 * min(grid.dx, grid.dy))


def sample_medium(medium: MediumMap, grid: GridSpec, frame: float = 0.0) -> MediumArrays:
    """Point-sample w^2 and damping at every staggered node.

    Rectangles are closed (with a 1e-9 cell tolerance for round-off) and
    must lie within the interior, i.e. the grid minus a ``frame``-wide border.
    """
    xa, xb, ya, yb = interior_bounds(grid, frame)
    tol = 1e-9 * min(grid.dx, grid.dy)
    for r in medium.rectangles:
        if r.x0 < xa - tol or r.x1 > xb + tol or r.y0 < ya - tol or r.y1 > yb + tol:
            raise RectangleOutsideInterior(
                f"rectangle {r} leaves the interior [{xa}, {xb}] x [{ya}, {yb}]"
            )
    bg_e, bg_m = medium.background
    out = {}
    for name, rate, damp in (("E3", "w_e", "gamma_e"), ("H1", "w_m", "gamma_m"), ("H2", "w_m", "gamma_m")):
        x, y = grid.mesh(name)
        w2 = np.full(x.shape, (bg_e if name == "E3" else bg_m) ** 2)
        g = np.zeros(x.shape)
        for r in medium.rectangles:
            m = _inside(x, y, r, tol)
            w2[m] = getattr(r, rate) ** 2
            g[m] = getattr(r, damp)
        out[name] = (w2, g)
    return MediumArrays(out["E3"][0], out["H1"][0], out["H2"][0],
                        out["E3"][1], out["H1"][1], out["H2"][1])


# --------------------------------------------------------------------------- support probe


def node_distances(grid: GridSpec, center: Sequence[float], names=("E3", "H1", "H2")):
    cx, cy = center
    return {n: np.hypot(*(c - o for c, o in zip(grid.mesh(n), (cx, cy)))) for n in names}


def support_radius(state: FieldState, grid: GridSpec, center: Sequence[float], threshold: float) -> float:
    """Largest r such that |E3|, |H1|, |H2| stay <= threshold on every node closer than r.

    With no node above the threshold the result is the distance to the
    farthest node.
    """
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    dist = node_distances(grid, center)
    d_all = np.concatenate([dist[n].ravel() for n in ("E3", "H1", "H2")])
    hot = np.concatenate([(np.abs(getattr(state, n)) > threshold).ravel() for n in ("E3", "H1", "H2")])
    if not hot.any():
        return float(d_all.max())
    return float(d_all[hot].min())


# --------------------------------------------------------------------------- snapshots

SNAPSHOT_MAGIC = "DMX1"


def _header(array: np.ndarray, grid: GridSpec, t: float, name: str) -> str:
    nx, ny = array.shape
    return f"{SNAPSHOT_MAGIC} {nx} {ny} {grid.dx:.17g} {grid.dy:.17g} {t:.17g} {name}\n"


def write_snapshot(path: str | os.PathLike, array: np.ndarray, grid: GridSpec, t: float,
                   name: str, csv: bool = False) -> None:
    """Write one field.

    Binary: ASCII header line, then the values as little-endian float64 in
    y-outer order (one x-row per y index).  CSV: the same header line, then one
    comma-separated line of ``%.17g`` values per y index.  ``nx``/``ny`` in the
    header are the array's own extents, so edge fields carry one extra row.
    """
    data = np.ascontiguousarray(np.asarray(array, dtype="<f8").T)
    head = _header(array, grid, t, name)
    if csv:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(head)
            for row in data:
                fh.write(",".join(f"{v:.17g}" for v in row))
                fh.write("\n")
    else:
        with open(path, "wb") as fh:
            fh.write(head.encode("ascii"))
            fh.write(data.tobytes())


@dataclass
class Snapshot:
    name: str
    t: float
    dx: float
    dy: float
    data: np.ndarray = field(repr=False)


def read_snapshot(path: str | os.PathLike) -> Snapshot:
    with open(path, "rb") as fh:
        head = fh.readline().decode("ascii").split()
        rest = fh.read()
    if len(head) != 7 or head[0] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a {SNAPSHOT_MAGIC} snapshot")
    nx, ny = int(head[1]), int(head[2])
    dx, dy, t = float(head[3]), float(head[4]), float(head[5])
    if len(rest) == nx * ny * 8:
        flat = np.frombuffer(rest, dtype="<f8")
    else:
        flat = np.array([float(v) for v in rest.decode("ascii").replace("\n", ",").split(",") if v])
    if flat.size != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} values, found {flat.size}")
    return Snapshot(head[6], t, dx, dy, flat.reshape(ny, nx).T.copy())
