"""Synthetic urban scenes and geometric ground truth.

Buildings are axis-aligned boxes standing on the ground plane.  The ground
truth link state of a flight-plane cell is decided by testing the straight
segment from the GBS antenna to the cell centre against every box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "SceneConfig",
    "UrbanGenParams",
    "Box",
    "UrbanMap",
    "TruthGrid",
    "UrbanGenerationError",
    "generate_urban_map",
    "segment_blocked",
    "segments_blocked",
    "ground_truth_lsm",
]

# cells per vectorised chunk in ground_truth_lsm; bounds the (cells x boxes) temporaries
_CHUNK = 65536


class UrbanGenerationError(RuntimeError):
    """Raised when the requested building density cannot be placed."""


@dataclass(frozen=True)
class SceneConfig:
    """Site footprint, flight plane and GBS placement (all lengths in metres)."""

    width: float = 800.0
    length: float = 800.0
    uav_height: float = 129.0
    bs_x: float = 400.0
    bs_y: float = 400.0
    bs_height: float = 15.0
    grid_step: float = 1.0

    def __post_init__(self):
        if not (self.width > 0 and self.length > 0):
            raise ValueError("scene width and length must be positive")
        if not self.grid_step > 0:
            raise ValueError("grid_step must be positive")
        if not self.bs_height < self.uav_height:
            raise ValueError("bs_height must be below uav_height")
        if not (0 <= self.bs_x <= self.width and 0 <= self.bs_y <= self.length):
            raise ValueError("GBS position must lie inside the site")

    @property
    def bs_position(self) -> tuple[float, float]:
        return (self.bs_x, self.bs_y)

    @property
    def antenna(self) -> np.ndarray:
        return np.array([self.bs_x, self.bs_y, self.bs_height])

    @property
    def shape(self) -> tuple[int, int]:
        """Raster shape as (rows, cols) = (ceil(L/step), ceil(W/step))."""
        return (_ncells(self.length, self.grid_step), _ncells(self.width, self.grid_step))

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (x, y) arrays of cell centres, each with the raster shape.

        Row index runs along y, column index along x, origin at the (0, 0)
        corner of the site.
        """
        ny, nx = self.shape
        xs = (np.arange(nx) + 0.5) * self.grid_step
        ys = (np.arange(ny) + 0.5) * self.grid_step
        return np.meshgrid(xs, ys)

    def cell_index(self, x, y):
        """Raster (row, col) containing the flight-plane point (x, y)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        tol = 1e-9
        if np.any((x < -tol) | (x > self.width + tol) | (y < -tol) | (y > self.length + tol)):
            raise IndexError("location outside the site")
        ny, nx = self.shape
        col = np.clip(np.floor(x / self.grid_step).astype(int), 0, nx - 1)
        row = np.clip(np.floor(y / self.grid_step).astype(int), 0, ny - 1)
        return row, col


def _ncells(extent: float, step: float) -> int:
    # guard against 400/0.1 style float noise producing an extra cell
    return int(math.ceil(extent / step - 1e-9))


@dataclass(frozen=True)
class UrbanGenParams:
    """Building generator settings.

    Footprint sides are drawn uniformly from [side_min, side_max]; heights
    are Rayleigh(height_scale) draws rejected at or above the flight height.
    """

    density_per_km2: float = 150.0
    side_min: float = 20.0
    side_max: float = 50.0
    height_scale: float = 40.0
    max_attempts: int = 1000

    def __post_init__(self):
        if self.density_per_km2 < 0:
            raise ValueError("density_per_km2 must be non-negative")
        if not 0 < self.side_min <= self.side_max:
            raise ValueError("need 0 < side_min <= side_max")
        if not self.height_scale > 0:
            raise ValueError("height_scale must be positive")


class Box(NamedTuple):
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    height: float


@dataclass(frozen=True)
class UrbanMap:
    buildings: tuple[Box, ...] = ()
    seed: int | None = None

    def as_array(self) -> np.ndarray:
        """Boxes as a (B, 5) float array."""
        if not self.buildings:
            return np.zeros((0, 5))
        return np.array(self.buildings, dtype=float)

    def __len__(self):
        return len(self.buildings)


@dataclass(frozen=True, eq=False)
class TruthGrid:
    """Binary LoS raster over the flight plane (1 = LoS)."""

    values: np.ndarray
    scene: SceneConfig = field(repr=False)

    def __post_init__(self):
        if self.values.shape != self.scene.shape:
            raise ValueError(
                f"raster shape {self.values.shape} does not match scene {self.scene.shape}")

    def at(self, x, y):
        row, col = self.scene.cell_index(x, y)
        return self.values[row, col]


def _overlaps(a: Box, b: Box) -> bool:
    # touching edges are allowed
    return a.x_min < b.x_max and b.x_min < a.x_max and a.y_min < b.y_max and b.y_min < a.y_max


def generate_urban_map(scene: SceneConfig, gen: UrbanGenParams, seed: int) -> UrbanMap:
    """Place non-overlapping random boxes over the site.

    The building count is ``round(density * area)``.  A box covering the GBS
    projection is rejected.  Raises UrbanGenerationError when a building
    cannot be placed within ``gen.max_attempts`` draws.
    """
    rng = np.random.default_rng(seed)
    area_km2 = scene.width * scene.length / 1e6
    target = int(round(gen.density_per_km2 * area_km2))
    side_max_x = min(gen.side_max, scene.width)
    side_max_y = min(gen.side_max, scene.length)
    bx, by = scene.bs_position

    placed: list[Box] = []
    for _ in range(target):
        for _attempt in range(gen.max_attempts):
            wx = rng.uniform(min(gen.side_min, side_max_x), side_max_x)
            wy = rng.uniform(min(gen.side_min, side_max_y), side_max_y)
            x0 = rng.uniform(0.0, scene.width - wx)
            y0 = rng.uniform(0.0, scene.length - wy)
            h = _draw_height(rng, gen.height_scale, scene.uav_height)
            box = Box(x0, x0 + wx, y0, y0 + wy, h)
            if box.x_min <= bx <= box.x_max and box.y_min <= by <= box.y_max:
                continue
            if any(_overlaps(box, other) for other in placed):
                continue
            placed.append(box)
            break
        else:
            raise UrbanGenerationError(
                f"could not place building {len(placed) + 1} of {target} "
                f"after {gen.max_attempts} attempts")
    return UrbanMap(tuple(placed), seed)


def _draw_height(rng: np.random.Generator, scale: float, ceiling: float) -> float:
    for _ in range(10000):
        h = rng.rayleigh(scale)
        if 0.0 < h < ceiling:
            return float(h)
    raise UrbanGenerationError("height distribution has no mass below the flight height")


def _slab_interval(p0, d, lo, hi):
    """Parameter interval of p0 + t*d inside the open slab (lo, hi), per row."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - p0) / d
        t2 = (hi - p0) / d
    parallel = d == 0
    inside = (p0 > lo) & (p0 < hi)
    enter = np.where(parallel, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
    leave = np.where(parallel, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
    return enter, leave


def segments_blocked(p0: Sequence[float], ends: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Vectorised blockage test of the segments p0 -> ends[k] against all boxes.

    Returns a boolean array of length ``len(ends)``.  A segment is blocked
    when it runs through the interior of a box for a positive length.
    """
    ends = np.atleast_2d(np.asarray(ends, dtype=float))
    out = np.zeros(len(ends), dtype=bool)
    if len(boxes) == 0 or len(ends) == 0:
        return out
    p0 = np.asarray(p0, dtype=float)
    boxes = np.asarray(boxes, dtype=float)
    lo = [boxes[:, 0], boxes[:, 2], np.zeros(len(boxes))]
    hi = [boxes[:, 1], boxes[:, 3], boxes[:, 4]]
    for start in range(0, len(ends), _CHUNK):
        d = ends[start:start + _CHUNK] - p0
        t_in = np.zeros((len(d), len(boxes)))
        t_out = np.ones((len(d), len(boxes)))
        for axis in range(3):
            enter, leave = _slab_interval(p0[axis], d[:, axis:axis + 1], lo[axis], hi[axis])
            t_in = np.maximum(t_in, enter)
            t_out = np.minimum(t_out, leave)
        out[start:start + _CHUNK] = np.any(t_in < t_out, axis=1)
    return out


def segment_blocked(p0: Sequence[float], p1: Sequence[float], urban: UrbanMap) -> bool:
    """True iff the open segment (p0, p1) passes through a building interior."""
    return bool(segments_blocked(p0, np.asarray(p1, dtype=float)[None, :], urban.as_array())[0])


def ground_truth_lsm(urban: UrbanMap, scene: SceneConfig) -> TruthGrid:
    boxes = urban.as_array()
    if len(boxes) and boxes[:, 4].max() >= scene.uav_height:
        raise ValueError("a building reaches the flight height")
    xs, ys = scene.cell_centers()
    ends = np.column_stack([xs.ravel(), ys.ravel(), np.full(xs.size, scene.uav_height)])
    blocked = segments_blocked(scene.antenna, ends, boxes)
    values = (~blocked).astype(np.uint8).reshape(scene.shape)
    return TruthGrid(values, scene)
