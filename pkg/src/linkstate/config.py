"""Experiment configuration files.

Configs are INI files with one section per component.  Keys are the
dataclass field names; angle fields may be given in degrees by appending
``_deg`` (``phi_th_deg = 20``).  Missing keys keep their defaults.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import types
import typing
from importlib import resources
from pathlib import Path

from .baselines import BaselineConfig
from .channel import ChannelParams, PriorModelParams
from .correlate import CorrelationConfig
from .env import SceneConfig, UrbanGenParams
from .evaluate import ExperimentConfig, GridConfig, SamplingConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "default_config_text"]

SECTIONS = {
    "scene": SceneConfig,
    "urban": UrbanGenParams,
    "channel": ChannelParams,
    "prior": PriorModelParams,
    "correlation": CorrelationConfig,
    "baseline": BaselineConfig,
    "sampling": SamplingConfig,
    "grid": GridConfig,
}
_EXPERIMENT_KEYS = {"n_maps", "n_monte_carlo", "methods", "sweep_name", "sweep_values",
                    "record_timing"}
_RUN_KEYS = {"seed", "out"}


class ConfigError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class RunConfig:
    experiment: ExperimentConfig
    out: str = "out"

    @property
    def seed(self) -> int:
        return self.experiment.master_seed

    def __getattr__(self, name):
        # scene, channel, prior, ... are forwarded to the experiment config
        if name in SECTIONS:
            return getattr(self.experiment, name)
        raise AttributeError(name)


def default_config_text() -> str:
    return resources.files("linkstate").joinpath("default.ini").read_text()


def _convert(section: str, key: str, raw: str, typ):
    origin = typing.get_origin(typ)
    try:
        if typ is bool:
            return {"true": True, "yes": True, "1": True,
                    "false": False, "no": False, "0": False}[raw.strip().lower()]
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw.strip()
        if origin is tuple:
            inner = typing.get_args(typ)[0]
            return tuple(_convert(section, key, part, inner)
                         for part in raw.split(",") if part.strip())
        if origin is typing.Union or origin is types.UnionType:
            return _convert(section, key, raw, next(a for a in typing.get_args(typ)
                                                    if a is not type(None)))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc
    raise ConfigError(f"[{section}] {key}: unsupported field type {typ}")


def _build(section: str, cls, items: dict[str, str], overrides: dict | None = None):
    hints = typing.get_type_hints(cls)
    kwargs = dict(overrides or {})
    for key, raw in items.items():
        name, scale = key, None
        if key not in hints and key.endswith("_deg") and key[:-4] in hints:
            name, scale = key[:-4], math.pi / 180
        if name not in hints:
            raise ConfigError(f"[{section}] {key}: unknown key")
        value = _convert(section, key, raw, hints[name])
        kwargs[name] = value * scale if scale else value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def load_config(path: str | Path | None = None, seed: int | None = None,
                out: str | None = None) -> RunConfig:
    """Parse a config file on top of the packaged defaults.

    ``seed`` and ``out`` override the ``[run]`` section (command-line flags).
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(default_config_text(), source="<defaults>")
    if path is not None:
        text = Path(path).read_text()
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    known = set(SECTIONS) | {"experiment", "run"}
    for name in parser.sections():
        if name not in known:
            raise ConfigError(f"[{name}]: unknown section")

    parts = {name: _build(name, cls, dict(parser.items(name)) if parser.has_section(name)
                          else {})
             for name, cls in SECTIONS.items()}

    exp_items = dict(parser.items("experiment")) if parser.has_section("experiment") else {}
    run_items = dict(parser.items("run")) if parser.has_section("run") else {}
    for key in exp_items:
        if key not in _EXPERIMENT_KEYS:
            raise ConfigError(f"[experiment] {key}: unknown key")
    for key in run_items:
        if key not in _RUN_KEYS:
            raise ConfigError(f"[run] {key}: unknown key")

    master = seed if seed is not None else _convert("run", "seed", run_items.get("seed", "0"), int)
    experiment = _build("experiment", ExperimentConfig, exp_items,
                        overrides={**parts, "master_seed": master})
    return RunConfig(experiment, out if out is not None else run_items.get("out", "out"))
