"""Occupancy grids with submap labels, per-task overlays and ray-cast sensing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import ndimage


class GridFormatError(ValueError):
    pass


Cell = tuple[int, int]


def parse_grid(text: str):
    """Parse '#'/'.' rows; 'S' and 'G' mark free start/goal cells.

    Returns (obstacle mask, start cell or None, goal cell or None).
    """
    rows = [r.rstrip("\r") for r in text.splitlines() if r.strip()]
    if not rows:
        raise GridFormatError("grid is empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise GridFormatError("grid rows have different lengths")
    base = np.zeros((len(rows), width), dtype=bool)
    marks = {}
    for i, row in enumerate(rows):
        for j, ch in enumerate(row):
            if ch == "#":
                base[i, j] = True
            elif ch in "SG":
                marks[ch] = (i, j)
            elif ch != ".":
                raise GridFormatError(f"row {i}, column {j}: unexpected character {ch!r}")
    return base, marks.get("S"), marks.get("G")


def parse_labels(text: str, base: np.ndarray) -> np.ndarray:
    """One alphanumeric label per free cell; any other character means no label."""
    rows = [r.rstrip("\r") for r in text.splitlines() if r.strip()]
    if len(rows) != base.shape[0] or any(len(r) != base.shape[1] for r in rows):
        raise GridFormatError("label file shape does not match the grid")
    labels = np.full(base.shape, "", dtype=object)
    for i, row in enumerate(rows):
        for j, ch in enumerate(row):
            if ch.isalnum() and not base[i, j]:
                labels[i, j] = ch
    missing = np.argwhere(~base & (labels == ""))
    if len(missing):
        i, j = missing[0]
        raise GridFormatError(f"free cell ({i}, {j}) has no submap label")
    return labels


def inflate(mask: np.ndarray, radius_cells: float) -> np.ndarray:
    """Grow obstacles by a disc of the given radius (in cells)."""
    if radius_cells <= 0:
        return mask.copy()
    r = int(math.ceil(radius_cells))
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    disc = xx * xx + yy * yy <= radius_cells * radius_cells
    return ndimage.binary_dilation(mask, structure=disc)


@lru_cache(maxsize=32)
def _ray_table(radius_cells: float):
    """Cell offsets along 360 rays at 1-degree spacing, padded with a sentinel."""
    n = int(math.ceil(radius_cells))
    steps = np.arange(0.0, radius_cells + 1e-9, 0.25)
    ang = np.deg2rad(np.arange(360))
    dr = np.rint(np.outer(-np.sin(ang), steps)).astype(int)
    dc = np.rint(np.outer(np.cos(ang), steps)).astype(int)
    rays = []
    for k in range(360):
        seq = []
        for a, b in zip(dr[k], dc[k]):
            if (a, b) != (0, 0) and (not seq or seq[-1] != (a, b)) and a * a + b * b <= radius_cells ** 2 + 1e-9:
                seq.append((a, b))
        rays.append(seq)
    length = max(len(s) for s in rays)
    offs = np.full((360, length, 2), n + 10**6, dtype=int)
    for k, seq in enumerate(rays):
        if seq:
            offs[k, :len(seq)] = seq
    return offs


@dataclass
class GridWorld:
    base: np.ndarray                 # True = permanent obstacle
    labels: np.ndarray               # submap label per free cell, "" elsewhere
    resolution: float = 1.0          # meters per cell
    r_max: float = 5.0               # sensing radius in meters
    overlay: np.ndarray | None = None  # this task's extra obstacles
    robot: Cell = (0, 0)
    known_free: np.ndarray = field(default=None)
    known_obstacle: np.ndarray = field(default=None)

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=bool)
        if self.overlay is None:
            self.overlay = np.zeros_like(self.base)
        self.overlay = np.asarray(self.overlay, dtype=bool) & ~self.base
        if self.known_free is None:
            self.known_free = np.zeros_like(self.base)
        if self.known_obstacle is None:
            self.known_obstacle = self.base.copy()
        self.robot = tuple(int(x) for x in self.robot)

    @property
    def shape(self):
        return self.base.shape

    @property
    def obstacle(self) -> np.ndarray:
        """True obstacles for this task."""
        return self.base | self.overlay

    @property
    def free(self) -> np.ndarray:
        return ~self.obstacle

    @property
    def unknown(self) -> np.ndarray:
        return ~self.known_free & ~self.known_obstacle

    @property
    def optimistic(self) -> np.ndarray:
        return ~self.known_obstacle

    def in_bounds(self, cell) -> bool:
        return 0 <= cell[0] < self.shape[0] and 0 <= cell[1] < self.shape[1]

    def submap(self, cell) -> str:
        return self.labels[cell]

    def xy(self, cell) -> tuple[float, float]:
        return (cell[1] * self.resolution, cell[0] * self.resolution)

    def new_task(self, overlay=None, robot: Cell | None = None) -> "GridWorld":
        """Fresh masks for a new task; the base grid and labels are shared."""
        ov = np.zeros_like(self.base) if overlay is None else overlay
        w = GridWorld(self.base, self.labels, self.resolution, self.r_max, ov,
                      self.robot if robot is None else robot)
        if w.obstacle[w.robot]:
            raise GridFormatError(f"robot cell {w.robot} is an obstacle")
        return w

    def copy(self) -> "GridWorld":
        return GridWorld(self.base, self.labels, self.resolution, self.r_max, self.overlay.copy(), self.robot,
                         self.known_free.copy(), self.known_obstacle.copy())


def sense(world: GridWorld) -> GridWorld:
    """Cast 360 rays from the robot and mark what they reach; updates `world` in place."""
    r0, c0 = world.robot
    world.known_free[r0, c0] = True
    offs = _ray_table(world.r_max / world.resolution)
    rr = offs[..., 0] + r0
    cc = offs[..., 1] + c0
    h, w = world.shape
    inside = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    rr_c = np.clip(rr, 0, h - 1)
    cc_c = np.clip(cc, 0, w - 1)
    hit = world.obstacle[rr_c, cc_c] & inside
    # A ray stops at its first obstacle or when it leaves the grid.
    stop = hit | ~inside
    first = np.where(stop.any(axis=1), stop.argmax(axis=1), stop.shape[1])
    idx = np.arange(stop.shape[1])
    seen = (idx[None, :] <= first[:, None]) & inside
    free_seen = seen & ~hit
    obst_seen = seen & hit
    world.known_free[rr_c[free_seen], cc_c[free_seen]] = True
    world.known_obstacle[rr_c[obst_seen], cc_c[obst_seen]] = True
    return world
