"""Command-line driver.

Exit codes: 0 success, 1 usage or config error, 2 I/O error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .channel import make_prior, sample_measurements
from .config import ConfigError, RunConfig, load_config
from .env import TruthGrid, generate_urban_map, ground_truth_lsm
from .evaluate import build_map, mae, run_experiment, sample_locations
from .grid import ProbabilityGrid

log = logging.getLogger("linkstate")

EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 1, 2, 3
METHOD_ALIASES = {"dist-only": "dist_only"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, out_default: str | None = None):
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p.add_argument("--config", metavar="PATH", help="INI config (defaults are built in)")
    p.add_argument("--seed", type=int, metavar="N", help="master seed (overrides [run] seed)")
    p.add_argument("--out", metavar="DIR", default=out_default,
                   help="output directory (overrides [run] out)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="linkstate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-env", help="generate buildings and the ground-truth map")
    _common(p)

    p = sub.add_parser("sample", help="simulate measurements along the configured trajectory")
    _common(p)
    p.add_argument("--env", required=True, metavar="DIR", help="output of gen-env")

    p = sub.add_parser("build", help="construct a link state map from measurements")
    _common(p)
    p.add_argument("--measurements", required=True, metavar="CSV")
    p.add_argument("--method", required=True, metavar="NAME",
                   help="prior, knn, dist-only or proposed")
    p.add_argument("--env", metavar="DIR", help="gen-env output; reports MAE when given")

    p = sub.add_parser("eval", help="print the MAE between a truth raster and a map")
    p.add_argument("truth", metavar="TRUTH_CSV")
    p.add_argument("map", metavar="MAP_CSV")
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("experiment", help="run the Monte-Carlo sweep")
    _common(p)
    p.add_argument("--workers", type=int, default=1, metavar="N")
    return parser


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_truth(env_dir, cfg: RunConfig) -> TruthGrid:
    values, geom = io.read_raster_csv(Path(env_dir) / "truth.csv")
    scene = cfg.scene
    if geom != (scene.width, scene.length, scene.grid_step):
        raise ValueError(f"truth raster geometry {geom} does not match the configured scene")
    return TruthGrid(values, scene)


def cmd_gen_env(args, cfg: RunConfig) -> None:
    urban = generate_urban_map(cfg.scene, cfg.urban, cfg.seed)
    truth = ground_truth_lsm(urban, cfg.scene)
    out = _outdir(cfg)
    io.write_buildings(out / "buildings.txt", urban)
    io.write_raster_csv(out / "truth.csv", truth.values, cfg.scene)
    io.write_pgm(out / "truth.pgm", truth.values)
    log.info("%d buildings, LoS fraction %.4f", len(urban), truth.values.mean())


def cmd_sample(args, cfg: RunConfig) -> None:
    truth = _read_truth(args.env, cfg)
    loc_seq, meas_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    sampling = replace(cfg.sampling, seed=int(loc_seq.generate_state(1)[0]))
    locations = sample_locations(sampling, cfg.scene)
    ms = sample_measurements(locations, truth, cfg.channel, cfg.scene,
                             np.random.default_rng(meas_seq))
    out = _outdir(cfg)
    io.write_measurements(out / "measurements.csv", ms)
    log.info("%d measurements", len(ms))


def cmd_build(args, cfg: RunConfig) -> None:
    method = METHOD_ALIASES.get(args.method, args.method)
    if method not in ("prior", "knn", "dist_only", "proposed"):
        raise UsageError(f"unknown method {args.method!r}")
    ms = io.read_measurements(args.measurements)
    truth = _read_truth(args.env, cfg) if args.env else None
    lsm = build_map(method, ms, make_prior(cfg.prior, cfg.scene), cfg.experiment)
    out = _outdir(cfg)
    stem = f"map_{method}"
    io.write_raster_csv(out / f"{stem}.csv", lsm.values, cfg.scene)
    io.write_pgm(out / f"{stem}.pgm", lsm.values)
    if truth is not None:
        log.info("MAE %.6f", mae(truth, lsm))


def cmd_eval(args) -> None:
    t_values, t_geom = io.read_raster_csv(args.truth)
    m_values, m_geom = io.read_raster_csv(args.map)
    if t_geom != m_geom or t_values.shape != m_values.shape:
        raise ValueError("truth and map rasters have different geometry")
    scene = replace(load_config().scene, width=t_geom[0], length=t_geom[1],
                    grid_step=t_geom[2], bs_x=0.0, bs_y=0.0)
    value = mae(TruthGrid(t_values, scene), ProbabilityGrid(m_values, scene))
    print(f"{value:.6f}")


def cmd_experiment(args, cfg: RunConfig) -> None:
    report = run_experiment(cfg.experiment, workers=max(1, args.workers))
    out = _outdir(cfg)
    report.write_csv(out / "metrics.csv")
    report.write_json(out / "summary.json")
    log.info("%d rows written to %s", len(report.rows), out)


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except UsageError as exc:
        print(f"linkstate: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "eval":
            cmd_eval(args)
            return 0
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        handler = {"gen-env": cmd_gen_env, "sample": cmd_sample, "build": cmd_build,
                   "experiment": cmd_experiment}[args.command]
        handler(args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"linkstate: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"linkstate: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"linkstate: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
