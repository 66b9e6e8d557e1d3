"""Empirical LoS prior, two-class path-loss model and the inverse measurement model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import SceneConfig, TruthGrid
from .grid import L_MAX, PriorFn, clamp_probability, from_log_odds, to_log_odds

__all__ = [
    "LOS",
    "NLOS",
    "PriorModelParams",
    "ChannelParams",
    "Measurement",
    "DegenerateDensityError",
    "elevation_angle",
    "prior_los_probability",
    "make_prior",
    "path_gain",
    "mean_gain",
    "link_distance",
    "log_likelihood",
    "likelihood",
    "measurement_log_odds",
    "posterior_at_measurement",
    "sample_measurement",
    "sample_measurements",
]

LOS = 1
NLOS = 0


class DegenerateDensityError(ValueError):
    """Raised when a class-conditional density has zero variance."""


@dataclass(frozen=True)
class PriorModelParams:
    """Parameters of the elevation-angle LoS model (percent scale, degrees)."""

    a: float = 120.0
    b: float = 0.0
    c: float = 0.0
    d: float = 24.3
    e: float = 1.229

    def __post_init__(self):
        if not (self.d > 0 and self.e > 0):
            raise ValueError("prior parameters d and e must be positive")
        if self.a < self.b:
            raise ValueError("prior parameters need a >= b")


@dataclass(frozen=True)
class ChannelParams:
    """Per-class path loss ``beta + 10*alpha*log10(d)`` with Gaussian shadowing (dB)."""

    alpha_los: float = -2.20
    beta_los: float = -56.9431
    var_los: float = 3.9221
    alpha_nlos: float = -3.12
    beta_nlos: float = -43.8849
    var_nlos: float = 6.25
    noise_var: float = 0.0
    carrier_ghz: float = 28.0

    def __post_init__(self):
        if min(self.var_los, self.var_nlos, self.noise_var) < 0:
            raise ValueError("variances must be non-negative")
        # beta_los > beta_nlos is not required: the 28 GHz UMa-AV offsets violate it
        # while LoS gain still dominates beyond ~26 m
        if not self.alpha_los > self.alpha_nlos:
            raise ValueError("LoS path loss must decay slower: need alpha_los > alpha_nlos")

    def crossover_distance(self) -> float:
        """Distance beyond which the mean LoS gain exceeds the mean NLoS gain."""
        return 10 ** ((self.beta_nlos - self.beta_los)
                      / (10 * (self.alpha_los - self.alpha_nlos)))

    @classmethod
    def uma_av(cls, carrier_ghz: float = 28.0, uav_height: float = 129.0,
               var_los: float = 3.9221, var_nlos: float = 6.25, noise_var: float = 0.0):
        """3GPP TR 36.777 UMa-AV gains at the given carrier and UAV height."""
        return cls(
            alpha_los=-2.2,
            beta_los=-28.0 - 20 * math.log10(carrier_ghz),
            var_los=var_los,
            alpha_nlos=-4.6 + 0.7 * math.log10(uav_height),
            beta_nlos=17.5 - 20 * math.log10(40 * math.pi * carrier_ghz / 3),
            var_nlos=var_nlos,
            noise_var=noise_var,
            carrier_ghz=carrier_ghz,
        )

    def alpha(self, c: int) -> float:
        return self.alpha_los if c == LOS else self.alpha_nlos

    def beta(self, c: int) -> float:
        return self.beta_los if c == LOS else self.beta_nlos

    def total_var(self, c: int) -> float:
        return self.noise_var + (self.var_los if c == LOS else self.var_nlos)


@dataclass(frozen=True)
class Measurement:
    n: int
    x: float
    y: float
    z: float

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


def _horizontal_distance(xy, scene: SceneConfig):
    xy = np.asarray(xy, dtype=float)
    return np.hypot(xy[..., 0] - scene.bs_x, xy[..., 1] - scene.bs_y)


def elevation_angle(xy, scene: SceneConfig):
    """Elevation of the UAV seen from the GBS projection, in degrees."""
    return np.degrees(np.arctan2(scene.uav_height, _horizontal_distance(xy, scene)))


def prior_los_probability(xy, p: PriorModelParams, scene: SceneConfig):
    """Empirical LoS probability at flight-plane points, clamped to [EPS, 1-EPS]."""
    phi = elevation_angle(xy, scene)
    base = (phi - p.c) / p.d
    if not float(p.e).is_integer() and np.any(base <= 0):
        raise ValueError("elevation angle must exceed c for a non-integer exponent e")
    pct = p.a - (p.a - p.b) / (1.0 + np.power(base, p.e))
    return clamp_probability(pct / 100.0)


def make_prior(p: PriorModelParams, scene: SceneConfig) -> PriorFn:
    def prior(xy):
        return prior_los_probability(xy, p, scene)
    return prior


def link_distance(xy, scene: SceneConfig):
    """3D distance from the GBS antenna to flight-plane points."""
    return np.hypot(_horizontal_distance(xy, scene), scene.uav_height - scene.bs_height)


def path_gain(distance, c: int, params: ChannelParams):
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ValueError("link distance must be positive")
    return params.beta(c) + 10.0 * params.alpha(c) * np.log10(distance)


def mean_gain(xy, c: int, params: ChannelParams, scene: SceneConfig):
    return path_gain(link_distance(xy, scene), c, params)


def log_likelihood(z, xy, c: int, params: ChannelParams, scene: SceneConfig):
    var = params.total_var(c)
    if var <= 0:
        raise DegenerateDensityError(f"zero total variance for link class {c}")
    mu = mean_gain(xy, c, params, scene)
    return -0.5 * np.log(2 * np.pi * var) - (np.asarray(z) - mu) ** 2 / (2 * var)


def likelihood(z, xy, c: int, params: ChannelParams, scene: SceneConfig):
    return np.exp(log_likelihood(z, xy, c, params, scene))


def measurement_log_odds(z, xy, prior, params: ChannelParams, scene: SceneConfig):
    """Posterior LoS log-odds at the measured location from one gain sample.

    Worked entirely in log space so tail likelihoods never underflow.
    """
    llr = (log_likelihood(z, xy, LOS, params, scene)
           - log_likelihood(z, xy, NLOS, params, scene))
    return np.clip(llr + to_log_odds(prior), -L_MAX, L_MAX)


def posterior_at_measurement(z, xy, prior, params: ChannelParams, scene: SceneConfig):
    return clamp_probability(from_log_odds(measurement_log_odds(z, xy, prior, params, scene)))


def sample_measurement(xy, truth: TruthGrid, params: ChannelParams, scene: SceneConfig,
                       rng: np.random.Generator, n: int = 0) -> Measurement:
    return sample_measurements(np.asarray(xy, dtype=float)[None, :], truth, params, scene,
                               rng, start=n)[0]


def sample_measurements(locations, truth: TruthGrid, params: ChannelParams,
                        scene: SceneConfig, rng: np.random.Generator,
                        start: int = 0) -> list[Measurement]:
    """Draw one gain sample per location.

    Each location consumes two standard normals from ``rng`` (shadowing
    then receiver noise), whatever the variances, so streams stay aligned
    when parameters change between runs.
    """
    locations = np.asarray(locations, dtype=float).reshape(-1, 2)
    if len(locations) == 0:
        return []
    state = truth.at(locations[:, 0], locations[:, 1])
    draws = rng.standard_normal((len(locations), 2))
    mu = np.where(state == LOS,
                  mean_gain(locations, LOS, params, scene),
                  mean_gain(locations, NLOS, params, scene))
    shadow_sd = np.sqrt(np.where(state == LOS, params.var_los, params.var_nlos))
    z = mu + shadow_sd * draws[:, 0] + math.sqrt(params.noise_var) * draws[:, 1]
    return [Measurement(start + k, float(x), float(y), float(v))
            for k, ((x, y), v) in enumerate(zip(locations, z))]
