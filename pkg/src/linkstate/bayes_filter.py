"""Binary Bayes filter over the polar log-odds field.

Construction runs in two passes.  Every measurement first updates the ray
it falls on: the measured cell through the inverse measurement model, the
rest of the ray through the same-azimuth blockage rules.  Rays without any
measurement are then filled from the nearest measured ray using the
angular correlation model, provided it lies within ``phi_th``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelParams, Measurement, measurement_log_odds
from .correlate import CorrelationConfig, angular_rho
from .env import SceneConfig
from .grid import (
    L_MAX,
    LogOddsField,
    PolarGridSpec,
    PriorFn,
    ProbabilityGrid,
    cartesian_to_polar,
    clamp_probability,
    initialize_field,
    rasterize,
    to_log_odds,
)

__all__ = [
    "bayes_update",
    "odds_at_measurement",
    "odds_along_azimuth",
    "step1_update",
    "step2_fill",
    "correlated_posterior",
    "nearest_measured",
    "build_field",
    "build_lsm",
]

_TINY = np.exp(-L_MAX)


def bayes_update(l_prev, log_k, l0):
    """One log-odds filter step: previous belief plus new evidence minus prior."""
    return np.clip(np.asarray(l_prev) + np.asarray(log_k) - np.asarray(l0), -L_MAX, L_MAX)


def odds_at_measurement(z: float, xy, prior: float, params: ChannelParams,
                        scene: SceneConfig) -> float:
    """ln k at the measured location."""
    return float(measurement_log_odds(z, xy, prior, params, scene))


def _propagate(log_k_n, prior_x, prior_n, r, r_n):
    k_n = np.exp(np.clip(log_k_n, -L_MAX, L_MAX))
    prior_x = np.asarray(prior_x, dtype=float)
    r = np.asarray(r, dtype=float)
    near = r < r_n
    num = np.where(near, k_n * (1.0 - prior_n) - prior_n + prior_x, k_n * prior_x)
    den = np.where(near, 1.0 - prior_x, k_n * (prior_n - prior_x) + prior_n)
    # only reachable when the prior is not radially decreasing
    bad = (num <= 0) | (den <= 0)
    log_k = np.log(np.maximum(num, _TINY)) - np.log(np.maximum(den, _TINY))
    return np.clip(log_k, -L_MAX, L_MAX), int(np.count_nonzero(bad))


def odds_along_azimuth(log_k_n, prior_x, prior_n, r, r_n):
    """ln k at range ``r`` on the ray of a measurement at range ``r_n``.

    ``log_k_n`` is the posterior log-odds at the measured point and
    ``prior_x``/``prior_n`` the prior LoS probabilities at the two points.
    Vectorised over ``prior_x`` and ``r``.
    """
    log_k, _ = _propagate(log_k_n, prior_x, prior_n, r, r_n)
    return float(log_k) if np.ndim(log_k) == 0 else log_k


def step1_update(fld: LogOddsField, m: Measurement, prior: PriorFn, params: ChannelParams,
                 scene: SceneConfig) -> LogOddsField:
    """Fold one measurement into the ray it lies on (in place)."""
    spec = fld.spec
    r_n, phi_n = cartesian_to_polar(m.xy, spec.origin)
    j = int(spec.direction_of(phi_n))
    prior_n = float(clamp_probability(prior(m.xy)))
    log_k_n = odds_at_measurement(m.z, m.xy, prior_n, params, scene)
    valid = spec.valid[j]
    log_k, bad = _propagate(log_k_n, fld.prior_prob[j, valid], prior_n,
                            spec.radii[valid], float(r_n))
    fld.log_odds[j, valid] = bayes_update(fld.log_odds[j, valid], log_k,
                                          fld.prior_log_odds[j, valid])
    fld.measured[j] = True
    fld.clamp_events += bad
    return fld


def nearest_measured(measured: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For every ray, the nearest measured ray and the index distance to it.

    Distances wrap around the circle; ties go to the smaller ray index.
    Returns (-1, large) for every ray when nothing was measured.
    """
    m = len(measured)
    idx = np.flatnonzero(measured)
    if len(idx) == 0:
        return np.full(m, -1), np.full(m, np.iinfo(np.int64).max)
    diff = np.abs(np.arange(m)[:, None] - idx[None, :])
    dist = np.minimum(diff, m - diff)
    best = np.argmin(dist, axis=1)
    return idx[best], dist[np.arange(m), best]


def correlated_posterior(prior_x, prior_star, post_star, rho):
    """LoS probability at ``x`` inferred from the posterior at an equal-range ``x*``.

    The prior at ``x`` moves by the measured deviation at ``x*`` scaled by
    ``rho / T``.  Grouped so that ``rho = 1`` with equal priors returns
    ``post_star`` and ``rho = 0`` returns ``prior_x`` bit for bit.
    """
    prior_x = np.asarray(prior_x, dtype=float)
    prior_star = np.asarray(prior_star, dtype=float)
    t = np.sqrt(prior_star * (1 - prior_star) / (prior_x * (1 - prior_x)))
    s = rho / t
    return (prior_x - s * prior_star) + s * np.asarray(post_star, dtype=float)


def step2_fill(fld: LogOddsField, config: CorrelationConfig) -> LogOddsField:
    """Fill unmeasured rays from the nearest measured ray (in place).

    A ray is filled only when the nearest measured ray lies strictly
    inside ``phi_th``.  Each sample moves off its prior by the measured
    ray's deviation at the same range, scaled by rho / T.
    """
    spec = fld.spec
    star, steps = nearest_measured(fld.measured)
    posterior = fld.probabilities()
    step = spec.angular_step
    for j in np.flatnonzero(~fld.measured):
        js = star[j]
        if js < 0:
            break
        dphi = steps[j] * step
        if dphi >= config.phi_th - 1e-12:
            continue
        rho = angular_rho(min(dphi, np.pi), config.beta)
        both = spec.valid[j] & spec.valid[js]
        post = clamp_probability(correlated_posterior(
            fld.prior_prob[j, both], fld.prior_prob[js, both], posterior[js, both], rho))
        fld.log_odds[j, both] = to_log_odds(post)
        fld.filled[j] = True
    return fld


def build_field(prior: PriorFn, measurements: Iterable[Measurement], spec: PolarGridSpec,
                scene: SceneConfig, params: ChannelParams,
                config: CorrelationConfig | None = None) -> LogOddsField:
    """Run both passes and return the polar field.

    ``config=None`` stops after the first pass (measured rays only).
    """
    fld = initialize_field(spec, prior)
    for m in measurements:
        step1_update(fld, m, prior, params, scene)
    if config is not None:
        step2_fill(fld, config)
    return fld


def build_lsm(prior: PriorFn, measurements: Sequence[Measurement], spec: PolarGridSpec,
              scene: SceneConfig, params: ChannelParams,
              config: CorrelationConfig) -> ProbabilityGrid:
    fld = build_field(prior, measurements, spec, scene, params, config)
    return rasterize(fld, scene, prior)
