"""Polar working grid of the link state map.

The map is kept as log-odds samples along ``M`` uniformly spaced rays
from the GBS projection; ray ``j`` points at azimuth ``j * 2*pi/M`` and
carries samples at radii ``radial_step * (1, 2, ...)`` up to the site
edge.  :func:`rasterize` bridges back to the Cartesian raster on which
maps are scored.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .env import SceneConfig

__all__ = [
    "EPS",
    "L_MAX",
    "PriorFn",
    "PolarGridSpec",
    "LogOddsField",
    "ProbabilityGrid",
    "clamp_probability",
    "to_log_odds",
    "from_log_odds",
    "cartesian_to_polar",
    "polar_to_cartesian",
    "initialize_field",
    "rasterize",
    "prior_map",
]

EPS = 1e-6
L_MAX = 50.0

#: maps an (..., 2) array of flight-plane points to LoS probabilities
PriorFn = Callable[[np.ndarray], np.ndarray]


def clamp_probability(p):
    return np.clip(p, EPS, 1.0 - EPS)


def to_log_odds(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        l = np.log(p) - np.log1p(-p)
    return np.clip(l, -L_MAX, L_MAX)


def from_log_odds(l):
    l = np.asarray(l, dtype=float)
    # logistic without overflow for large |l|
    return np.where(l >= 0, 1.0 / (1.0 + np.exp(-np.abs(l))),
                    np.exp(-np.abs(l)) / (1.0 + np.exp(-np.abs(l))))


def cartesian_to_polar(xy, origin=(0.0, 0.0)):
    """Return (r, phi) with phi in [0, 2*pi); the origin maps to (0, 0)."""
    xy = np.asarray(xy, dtype=float)
    dx = xy[..., 0] - origin[0]
    dy = xy[..., 1] - origin[1]
    r = np.hypot(dx, dy)
    phi = np.mod(np.arctan2(dy, dx), 2 * np.pi)
    # mod can round 2*pi - tiny up to exactly 2*pi
    phi = np.where(phi >= 2 * np.pi, 0.0, phi)
    return r, phi


def polar_to_cartesian(r, phi, origin=(0.0, 0.0)):
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack([origin[0] + r * np.cos(phi), origin[1] + r * np.sin(phi)], axis=-1)


@dataclass(frozen=True)
class PolarGridSpec:
    direction_count: int
    radial_step: float
    origin: tuple[float, float]
    width: float
    length: float

    def __post_init__(self):
        if self.direction_count < 1:
            raise ValueError("direction_count must be >= 1")
        if not self.radial_step > 0:
            raise ValueError("radial_step must be positive")

    @classmethod
    def for_scene(cls, scene: SceneConfig, direction_count: int, radial_step: float = 1.0):
        return cls(int(direction_count), float(radial_step),
                   (float(scene.bs_x), float(scene.bs_y)), scene.width, scene.length)

    @property
    def angular_step(self) -> float:
        return 2 * math.pi / self.direction_count

    @functools.cached_property
    def angles(self) -> np.ndarray:
        return np.arange(self.direction_count) * self.angular_step

    @functools.cached_property
    def max_radius(self) -> np.ndarray:
        """Distance from the origin to the site edge along each ray."""
        ox, oy = self.origin
        c = np.cos(self.angles)
        s = np.sin(self.angles)
        with np.errstate(divide="ignore", invalid="ignore"):
            tx = np.where(c > 1e-12, (self.width - ox) / c,
                          np.where(c < -1e-12, -ox / c, np.inf))
            ty = np.where(s > 1e-12, (self.length - oy) / s,
                          np.where(s < -1e-12, -oy / s, np.inf))
        return np.minimum(tx, ty)

    @functools.cached_property
    def sample_counts(self) -> np.ndarray:
        return np.floor(self.max_radius / self.radial_step + 1e-9).astype(int)

    @property
    def max_samples(self) -> int:
        return int(self.sample_counts.max()) if self.direction_count else 0

    @functools.cached_property
    def radii(self) -> np.ndarray:
        return (np.arange(self.max_samples) + 1) * self.radial_step

    @functools.cached_property
    def valid(self) -> np.ndarray:
        """(M, R) mask of samples inside the site."""
        return np.arange(self.max_samples)[None, :] < self.sample_counts[:, None]

    def cell_points(self) -> np.ndarray:
        """(M, R, 2) flight-plane coordinates of every polar sample."""
        return polar_to_cartesian(self.radii[None, :], self.angles[:, None], self.origin)

    def direction_of(self, phi) -> np.ndarray:
        """Index of the ray nearest to azimuth ``phi`` (wraps around)."""
        return np.mod(np.rint(np.asarray(phi) / self.angular_step).astype(int),
                      self.direction_count)

    def radial_index(self, r) -> np.ndarray:
        """Index of the radial sample nearest to ``r`` (may exceed the ray extent)."""
        return np.maximum(np.rint(np.asarray(r) / self.radial_step).astype(int) - 1, 0)


@dataclass(eq=False)
class LogOddsField:
    """Mutable log-odds state on the polar grid.

    ``log_odds`` and ``prior_log_odds`` have shape (M, R); entries outside
    ``spec.valid`` are unused.  ``prior_prob`` keeps the clamped prior
    probabilities the field was initialised from.
    """

    spec: PolarGridSpec
    log_odds: np.ndarray
    prior_log_odds: np.ndarray
    prior_prob: np.ndarray
    measured: np.ndarray
    filled: np.ndarray = None
    clamp_events: int = 0

    def __post_init__(self):
        if self.filled is None:
            self.filled = np.zeros(self.spec.direction_count, dtype=bool)
        self.prior_log_odds.setflags(write=False)
        self.prior_prob.setflags(write=False)

    def probabilities(self) -> np.ndarray:
        return from_log_odds(self.log_odds)

    def copy(self) -> "LogOddsField":
        return LogOddsField(self.spec, self.log_odds.copy(), self.prior_log_odds,
                            self.prior_prob, self.measured.copy(), self.filled.copy(),
                            self.clamp_events)


@dataclass(frozen=True, eq=False)
class ProbabilityGrid:
    """Cartesian raster of LoS probabilities at scene resolution."""

    values: np.ndarray
    scene: SceneConfig = field(repr=False)

    def __post_init__(self):
        if self.values.shape != self.scene.shape:
            raise ValueError(
                f"raster shape {self.values.shape} does not match scene {self.scene.shape}")


def initialize_field(spec: PolarGridSpec, prior: PriorFn) -> LogOddsField:
    prob = np.where(spec.valid, clamp_probability(prior(spec.cell_points())), 0.5)
    l0 = to_log_odds(prob)
    return LogOddsField(spec, l0.copy(), l0, prob,
                        np.zeros(spec.direction_count, dtype=bool))


def prior_map(scene: SceneConfig, prior: PriorFn) -> ProbabilityGrid:
    xs, ys = scene.cell_centers()
    return ProbabilityGrid(clamp_probability(prior(np.stack([xs, ys], axis=-1))), scene)


@functools.lru_cache(maxsize=16)
def _lookup(spec: PolarGridSpec, scene: SceneConfig):
    """Nearest polar sample (direction, radius index) for every raster cell."""
    xs, ys = scene.cell_centers()
    r, phi = cartesian_to_polar(np.stack([xs, ys], axis=-1), spec.origin)
    j = spec.direction_of(phi)
    i = spec.radial_index(r)
    inside = i < spec.sample_counts[j]
    i = np.where(inside, i, 0)
    for a in (j, i, inside):
        a.setflags(write=False)
    return j, i, inside


def raster_lookup(spec: PolarGridSpec, scene: SceneConfig):
    """Return (direction, radial index, covered) arrays with the raster shape.

    ``covered`` is False where the nearest ray ends before the cell.
    """
    return _lookup(spec, scene)


def rasterize(fld: LogOddsField, scene: SceneConfig, prior: PriorFn) -> ProbabilityGrid:
    """Project the polar field onto the scene raster.

    Each covered cell receives the log-odds evidence (posterior minus prior)
    of its nearest polar sample on top of its own prior, so an untouched
    field reproduces the prior map exactly.  Uncovered cells keep the prior.
    """
    j, i, inside = raster_lookup(fld.spec, scene)
    base = prior_map(scene, prior).values
    evidence = fld.log_odds[j, i] - fld.prior_log_odds[j, i]
    l = np.clip(to_log_odds(base) + np.where(inside, evidence, 0.0), -L_MAX, L_MAX)
    values = np.where(inside & (evidence != 0), from_log_odds(l), base)
    return ProbabilityGrid(values, scene)
