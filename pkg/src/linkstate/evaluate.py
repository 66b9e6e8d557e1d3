"""MAE scoring, UAV sampling patterns and the Monte-Carlo experiment runner."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import BaselineConfig, distance_only_map, knn_posterior_map
from .bayes_filter import build_lsm
from .channel import ChannelParams, PriorModelParams, make_prior, sample_measurements
from .correlate import CorrelationConfig
from .env import (
    SceneConfig,
    TruthGrid,
    UrbanGenParams,
    generate_urban_map,
    ground_truth_lsm,
)
from .grid import PolarGridSpec, ProbabilityGrid, prior_map

__all__ = [
    "METHODS",
    "SWEEPS",
    "SamplingConfig",
    "GridConfig",
    "ExperimentConfig",
    "MetricsRow",
    "MetricsReport",
    "mae",
    "sample_locations",
    "build_map",
    "run_experiment",
]

log = logging.getLogger(__name__)

METHODS = ("prior", "knn", "dist_only", "proposed")
SWEEPS = ("none", "n_per_direction", "var_nlos", "delta_D", "delta_phi_deg")
CSV_COLUMNS = ("map_seed", "mc_seed", "method", "sweep_name", "sweep_value", "n_meas",
               "mae", "ms")


@dataclass(frozen=True)
class SamplingConfig:
    strategy: str = "circular"
    delta_D: float = 120.0
    delta_phi: float = math.pi / 36
    n_per_direction: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in ("circular", "per_direction_random"):
            raise ValueError(f"unknown sampling strategy {self.strategy!r}")
        if not self.delta_D > 0:
            raise ValueError("delta_D must be positive")
        if not 0 < self.delta_phi < 2 * math.pi:
            raise ValueError("delta_phi must lie in (0, 2*pi)")
        if self.n_per_direction < 1:
            raise ValueError("n_per_direction must be >= 1")

    @property
    def direction_count(self) -> int:
        return max(1, int(round(2 * math.pi / self.delta_phi)))


@dataclass(frozen=True)
class GridConfig:
    direction_count: int = 720
    radial_step: float = 1.0

    def spec(self, scene: SceneConfig) -> PolarGridSpec:
        return PolarGridSpec.for_scene(scene, self.direction_count, self.radial_step)


@dataclass(frozen=True)
class ExperimentConfig:
    n_maps: int = 5
    n_monte_carlo: int = 5
    scene: SceneConfig = field(default_factory=SceneConfig)
    urban: UrbanGenParams = field(default_factory=UrbanGenParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    prior: PriorModelParams = field(default_factory=PriorModelParams)
    correlation: CorrelationConfig = field(default_factory=CorrelationConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    methods: tuple[str, ...] = METHODS
    sweep_name: str = "none"
    sweep_values: tuple[float, ...] = (0.0,)
    master_seed: int = 0
    record_timing: bool = False

    def __post_init__(self):
        if self.n_maps < 1 or self.n_monte_carlo < 1:
            raise ValueError("n_maps and n_monte_carlo must be >= 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown method(s): {', '.join(sorted(unknown))}")
        if self.sweep_name not in SWEEPS:
            raise ValueError(f"unknown sweep {self.sweep_name!r}")
        if not self.sweep_values:
            raise ValueError("sweep_values must not be empty")


@dataclass(frozen=True)
class MetricsRow:
    map_seed: int
    mc_seed: int
    method: str
    sweep_name: str
    sweep_value: float
    n_meas: int
    mae: float
    ms: float | None = None

    def as_csv(self) -> list[str]:
        return [str(self.map_seed), str(self.mc_seed), self.method, self.sweep_name,
                f"{self.sweep_value:g}", str(self.n_meas), f"{self.mae:.6f}",
                "" if self.ms is None else f"{self.ms:.1f}"]


@dataclass
class MetricsReport:
    rows: list[MetricsRow]

    def select(self, method: str, sweep_value: float | None = None) -> list[MetricsRow]:
        return [r for r in self.rows if r.method == method
                and (sweep_value is None or r.sweep_value == sweep_value)]

    def summary(self) -> dict:
        """Per sweep point and method: mean, std and count of MAE."""
        out: dict = {}
        for r in self.rows:
            out.setdefault(f"{r.sweep_value:g}", {}).setdefault(r.method, []).append(r.mae)
        return {
            "sweep_name": self.rows[0].sweep_name if self.rows else None,
            "points": {
                point: {m: {"mean": float(np.nanmean(v)), "std": float(np.nanstd(v)),
                            "count": len(v)}
                        for m, v in methods.items()}
                for point, methods in out.items()
            },
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in self.rows:
                w.writerow(r.as_csv())

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def mae(truth: TruthGrid, lsm: ProbabilityGrid) -> float:
    t = np.asarray(truth.values, dtype=float)
    m = np.asarray(lsm.values, dtype=float)
    if t.shape != m.shape:
        raise ValueError(f"raster geometry mismatch: {t.shape} vs {m.shape}")
    return float(np.mean(np.abs(t - m)))


def sample_locations(config: SamplingConfig, scene: SceneConfig) -> np.ndarray:
    """Ordered (N, 2) measurement locations on the flight plane.

    ``circular``: rings of radius delta_D, 2*delta_D, ... around the GBS
    projection with one point every delta_phi, clipped to the site.
    ``per_direction_random``: n_per_direction uniform radii on each of the
    2*pi/delta_phi directions.
    """
    m = config.direction_count
    angles = np.arange(m) * (2 * math.pi / m)
    origin = np.array(scene.bs_position)
    if config.strategy == "circular":
        corners = np.array([[0, 0], [scene.width, 0], [0, scene.length],
                            [scene.width, scene.length]])
        reach = np.max(np.hypot(*(corners - origin).T))
        rings = []
        k = 1
        while k * config.delta_D <= reach:
            r = k * config.delta_D
            pts = origin + r * np.column_stack([np.cos(angles), np.sin(angles)])
            tol = 1e-9
            keep = ((pts[:, 0] >= -tol) & (pts[:, 0] <= scene.width + tol)
                    & (pts[:, 1] >= -tol) & (pts[:, 1] <= scene.length + tol))
            if keep.any():
                rings.append(np.clip(pts[keep], 0, [scene.width, scene.length]))
            k += 1
        return np.concatenate(rings) if rings else np.zeros((0, 2))

    rng = np.random.default_rng(config.seed)
    spec = PolarGridSpec.for_scene(scene, m)
    out = []
    for j in range(m):
        r = rng.uniform(0.0, spec.max_radius[j], config.n_per_direction)
        out.append(origin + r[:, None] * [math.cos(angles[j]), math.sin(angles[j])])
    return np.concatenate(out)


def build_map(method: str, measurements, prior, cfg: ExperimentConfig,
              channel: ChannelParams | None = None) -> ProbabilityGrid:
    channel = channel or cfg.channel
    scene = cfg.scene
    if method == "prior":
        return prior_map(scene, prior)
    if method == "knn":
        return knn_posterior_map(measurements, prior, channel, scene, cfg.baseline)
    if method == "dist_only":
        return distance_only_map(measurements, prior, channel, scene,
                                 cfg.grid.spec(scene), cfg.baseline)
    if method == "proposed":
        return build_lsm(prior, measurements, cfg.grid.spec(scene), scene, channel,
                         cfg.correlation)
    raise ValueError(f"unknown method {method!r}")


def _apply_sweep(cfg: ExperimentConfig, value: float):
    channel, sampling = cfg.channel, cfg.sampling
    name = cfg.sweep_name
    if name == "n_per_direction":
        sampling = replace(sampling, n_per_direction=int(value))
    elif name == "var_nlos":
        channel = replace(channel, var_nlos=float(value))
    elif name == "delta_D":
        sampling = replace(sampling, delta_D=float(value))
    elif name == "delta_phi_deg":
        sampling = replace(sampling, delta_phi=math.radians(value))
    return channel, sampling


def derive_seeds(master_seed: int, n_maps: int, n_mc: int):
    """Map seeds and per-map Monte-Carlo seeds, all derived from one master seed."""
    children = np.random.SeedSequence(master_seed).spawn(n_maps)
    map_seeds = [int(c.generate_state(1)[0]) for c in children]
    mc = [[int(g.generate_state(1)[0]) for g in c.spawn(n_mc)] for c in children]
    return map_seeds, mc


def _run_map(cfg: ExperimentConfig, map_seed: int, mc_seeds: Sequence[int]):
    scene = cfg.scene
    urban = generate_urban_map(scene, cfg.urban, map_seed)
    truth = ground_truth_lsm(urban, scene)
    prior = make_prior(cfg.prior, scene)
    rows = []
    for mc_seed in mc_seeds:
        loc_seq, meas_seq = np.random.SeedSequence(mc_seed).spawn(2)
        for value in cfg.sweep_values:
            channel, sampling = _apply_sweep(cfg, value)
            sampling = replace(sampling, seed=int(loc_seq.generate_state(1)[0]))
            locations = sample_locations(sampling, scene)
            measurements = sample_measurements(locations, truth, channel, scene,
                                               np.random.default_rng(meas_seq))
            for method in cfg.methods:
                t0 = time.perf_counter()
                try:
                    score = mae(truth, build_map(method, measurements, prior, cfg, channel))
                except Exception:  # recorded per row, the sweep carries on
                    log.exception("method %s failed (map %d, mc %d, %s=%g)",
                                  method, map_seed, mc_seed, cfg.sweep_name, value)
                    score = float("nan")
                ms = (time.perf_counter() - t0) * 1e3 if cfg.record_timing else None
                rows.append(MetricsRow(map_seed, mc_seed, method, cfg.sweep_name,
                                       float(value), len(measurements), score, ms))
    return rows


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> MetricsReport:
    """Run every (map, Monte-Carlo draw, sweep point, method) combination.

    Rows come back in (map, draw, sweep point, method) order whatever the
    worker count, so reports are reproducible from ``cfg.master_seed``.
    """
    map_seeds, mc_seeds = derive_seeds(cfg.master_seed, cfg.n_maps, cfg.n_monte_carlo)
    jobs = list(zip(map_seeds, mc_seeds))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_map, [cfg] * len(jobs), *zip(*jobs)))
    else:
        results = [_run_map(cfg, s, mc) for s, mc in jobs]
    return MetricsReport([row for rows in results for row in rows])
