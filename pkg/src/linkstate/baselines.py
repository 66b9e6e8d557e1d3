"""Comparison schemes: plain KNN over measurement posteriors, and ray
updates followed by KNN over resampled log-odds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .bayes_filter import build_field
from .channel import ChannelParams, Measurement, posterior_at_measurement
from .env import SceneConfig
from .grid import (
    PolarGridSpec,
    PriorFn,
    ProbabilityGrid,
    from_log_odds,
    prior_map,
    raster_lookup,
    rasterize,
)

__all__ = ["BaselineConfig", "idw_knn", "knn_posterior_map", "distance_only_map"]


@dataclass(frozen=True)
class BaselineConfig:
    k: int = 5
    resample_step: float = 1.0
    weight_epsilon: float = 1e-6

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not (self.resample_step > 0 and self.weight_epsilon > 0):
            raise ValueError("resample_step and weight_epsilon must be positive")


def idw_knn(points: np.ndarray, values: np.ndarray, queries: np.ndarray, k: int,
            eps: float) -> np.ndarray:
    """Inverse-distance weighted mean of the ``k`` nearest point values.

    Weights are ``1 / max(distance, eps)``; uses every point when fewer
    than ``k`` exist.
    """
    k = min(k, len(points))
    tree = cKDTree(points)
    dist, idx = tree.query(queries, k=k)
    if k == 1:
        dist, idx = dist[:, None], idx[:, None]
    w = 1.0 / np.maximum(dist, eps)
    return np.sum(w * values[idx], axis=1) / np.sum(w, axis=1)


def knn_posterior_map(measurements: Sequence[Measurement], prior: PriorFn,
                      params: ChannelParams, scene: SceneConfig,
                      config: BaselineConfig) -> ProbabilityGrid:
    """Interpolate single-measurement posteriors over the raster."""
    if not measurements:
        return prior_map(scene, prior)
    xy = np.array([[m.x, m.y] for m in measurements])
    z = np.array([m.z for m in measurements])
    post = posterior_at_measurement(z, xy, prior(xy), params, scene)
    xs, ys = scene.cell_centers()
    queries = np.column_stack([xs.ravel(), ys.ravel()])
    values = idw_knn(xy, post, queries, config.k, config.weight_epsilon)
    return ProbabilityGrid(values.reshape(scene.shape), scene)


def distance_only_map(measurements: Sequence[Measurement], prior: PriorFn,
                      params: ChannelParams, scene: SceneConfig, spec: PolarGridSpec,
                      config: BaselineConfig) -> ProbabilityGrid:
    """Update measured rays only, then KNN-interpolate their log-odds elsewhere.

    Measured rays are resampled every ``config.resample_step`` metres; each
    raster cell not served by a measured ray takes the inverse-distance
    weighted log-odds of its nearest resample points.
    """
    fld = build_field(prior, measurements, spec, scene, params, config=None)
    base = rasterize(fld, scene, prior)
    rays = np.flatnonzero(fld.measured)
    if len(rays) == 0:
        return base

    pts, vals = [], []
    for j in rays:
        n = spec.sample_counts[j]
        if n == 0:
            continue
        extent = n * spec.radial_step
        r = np.arange(1, int(np.floor(extent / config.resample_step + 1e-9)) + 1) \
            * config.resample_step
        i = np.minimum(spec.radial_index(r), n - 1)
        ang = spec.angles[j]
        pts.append(np.column_stack([spec.origin[0] + r * np.cos(ang),
                                    spec.origin[1] + r * np.sin(ang)]))
        vals.append(fld.log_odds[j, i])
    if not pts:
        return base
    pts = np.concatenate(pts)
    vals = np.concatenate(vals)

    j, _, covered = raster_lookup(spec, scene)
    todo = ~(covered & fld.measured[j])
    xs, ys = scene.cell_centers()
    queries = np.column_stack([xs[todo], ys[todo]])
    values = base.values.copy()
    values[todo] = from_log_odds(idw_knn(pts, vals, queries, config.k,
                                         config.weight_epsilon))
    return ProbabilityGrid(values, scene)
