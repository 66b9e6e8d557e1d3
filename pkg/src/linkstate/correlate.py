"""Spatial correlation of the binary LoS state between two locations.

A :class:`CorrelationMatrix` holds the conditionals
``r[i][j] = Pr(l(x) = i | l(x_n) = j)``.  Two constructors cover the
cases the filter needs: points on the same ray from the GBS, and points at
the same distance but different azimuth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CorrelationConfig",
    "CorrelationMatrix",
    "DegenerateMarginalError",
    "wrap_angle_difference",
    "angular_rho",
    "same_azimuth_correlation",
    "same_distance_correlation",
    "phi_coefficient",
    "joints_from_conditionals",
]


class DegenerateMarginalError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationConfig:
    beta: float = 1.0
    phi_th: float = math.pi / 9

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not 0 < self.phi_th <= math.pi:
            raise ValueError("phi_th must lie in (0, pi]")


@dataclass(frozen=True)
class CorrelationMatrix:
    r11: float
    r10: float
    r01: float
    r00: float

    def column_sums(self) -> tuple[float, float]:
        """(r11 + r01, r10 + r00): conditioned on l(x_n) = 1 and = 0."""
        return (self.r11 + self.r01, self.r10 + self.r00)

    def as_array(self) -> np.ndarray:
        """2x2 array indexed [i, j] with state order (0, 1)."""
        return np.array([[self.r00, self.r01], [self.r10, self.r11]])


def wrap_angle_difference(a, b):
    """Absolute azimuth difference folded into [0, pi]."""
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), 2 * np.pi))
    return np.minimum(d, 2 * np.pi - d)


def angular_rho(dphi, beta: float):
    """Exponential decay of the phi coefficient with azimuth separation.

    ``rho = 1 - exp(beta * (1 - pi / dphi))`` on [0, pi], with the
    limiting value 1 at ``dphi = 0``.
    """
    dphi = np.asarray(dphi, dtype=float)
    if np.any(dphi < 0) or np.any(dphi > np.pi + 1e-12):
        raise ValueError("angle difference must lie in [0, pi]")
    with np.errstate(divide="ignore"):
        expo = beta * (1.0 - np.pi / dphi)
    rho = -np.expm1(expo)
    out = np.where(dphi == 0, 1.0, np.clip(rho, 0.0, 1.0))
    return float(out) if out.ndim == 0 else out


def _clamped_matrix(r11, r10) -> CorrelationMatrix:
    r11 = min(max(r11, 0.0), 1.0)
    r10 = min(max(r10, 0.0), 1.0)
    return CorrelationMatrix(r11, r10, 1.0 - r11, 1.0 - r10)


def same_azimuth_correlation(r: float, r_n: float, prior_x: float,
                             prior_n: float) -> CorrelationMatrix:
    """Conditionals for two points on one ray from the GBS.

    A LoS point makes everything nearer the GBS LoS; an NLoS point makes
    everything farther out NLoS.  The remaining entries follow from Bayes'
    rule with the prior marginals.
    """
    if r == r_n:
        return CorrelationMatrix(1.0, 0.0, 0.0, 1.0)
    if r < r_n:
        r00 = (1.0 - prior_x) / (1.0 - prior_n)
        return _clamped_matrix(1.0, 1.0 - r00)
    return _clamped_matrix(prior_x / prior_n, 0.0)


def _t_factor(prior_x, prior_n):
    return math.sqrt(prior_n * (1.0 - prior_n) / (prior_x * (1.0 - prior_x)))


def same_distance_correlation(prior_x: float, prior_n: float, rho: float,
                              raw: bool = False) -> CorrelationMatrix:
    """Conditionals for two points at equal range with phi coefficient ``rho``.

    Entries pushed outside [0, 1] by large ``rho`` and skewed priors are
    clamped and the columns renormalised; in-range results are returned
    untouched.  ``raw=True`` skips the repair.
    """
    s = rho / _t_factor(prior_x, prior_n)
    r11 = prior_x + s * (1.0 - prior_n)
    r00 = (1.0 - prior_x) + s * prior_n
    r10 = prior_x - s * prior_n
    r01 = (1.0 - prior_x) - s * (1.0 - prior_n)
    if raw:
        return CorrelationMatrix(r11, r10, r01, r00)
    if min(r11, r10, r01, r00) >= 0.0 and max(r11, r10, r01, r00) <= 1.0:
        return CorrelationMatrix(r11, r10, r01, r00)
    r11, r10, r01, r00 = (min(max(v, 0.0), 1.0) for v in (r11, r10, r01, r00))
    c1 = r11 + r01
    c0 = r10 + r00
    return CorrelationMatrix(r11 / c1, r10 / c0, r01 / c1, r00 / c0)


def joints_from_conditionals(m: CorrelationMatrix, prior_n: float):
    """(p11, p10, p01, p00) with p_ij = r_ij * Pr(l(x_n) = j)."""
    return (m.r11 * prior_n, m.r10 * (1 - prior_n), m.r01 * prior_n, m.r00 * (1 - prior_n))


def phi_coefficient(p11: float, p10: float, p01: float, p00: float) -> float:
    joints = (p11, p10, p01, p00)
    if min(joints) < 0 or abs(sum(joints) - 1.0) > 1e-9:
        raise ValueError("joint probabilities must be non-negative and sum to 1")
    marginals = (p11 + p10) * (p01 + p00) * (p01 + p11) * (p00 + p10)
    if marginals <= 0:
        raise DegenerateMarginalError("phi coefficient undefined for a zero marginal")
    return (p11 * p00 - p10 * p01) / math.sqrt(marginals)
