"""Probabilistic LoS link state maps for cellular-connected UAVs.

The map is a binary Bayes filter over a polar grid centred on the ground
base station.  Measurements update their own ray directly and nearby
unmeasured rays through an angular correlation model.
"""

from .bayes_filter import build_field, build_lsm
from .channel import ChannelParams, Measurement, PriorModelParams, make_prior
from .correlate import CorrelationConfig
from .env import SceneConfig, UrbanGenParams, generate_urban_map, ground_truth_lsm
from .evaluate import ExperimentConfig, mae, run_experiment
from .grid import PolarGridSpec, ProbabilityGrid

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "CorrelationConfig",
    "ExperimentConfig",
    "Measurement",
    "PolarGridSpec",
    "PriorModelParams",
    "ProbabilityGrid",
    "SceneConfig",
    "UrbanGenParams",
    "build_field",
    "build_lsm",
    "generate_urban_map",
    "ground_truth_lsm",
    "mae",
    "make_prior",
    "run_experiment",
]
