"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed at the end of the
pytest run (see conftest.py).  Run alone with

    pytest tests/test_acceptance.py -v
"""

import contextlib
import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

from linkstate.bayes_filter import (
    bayes_update,
    build_lsm,
    correlated_posterior,
    odds_along_azimuth,
    odds_at_measurement,
)
from linkstate.channel import (
    LOS,
    NLOS,
    ChannelParams,
    Measurement,
    make_prior,
    mean_gain,
    sample_measurements,
)
from linkstate.cli import main
from linkstate.config import load_config
from linkstate.correlate import (
    joints_from_conditionals,
    phi_coefficient,
    same_distance_correlation,
)
from linkstate.env import SceneConfig, UrbanMap, generate_urban_map, ground_truth_lsm, \
    segments_blocked
from linkstate.evaluate import run_experiment, sample_locations
from linkstate.grid import from_log_odds, to_log_odds

ROOT = Path(__file__).resolve().parents[1]
DESK = ROOT / "configs" / "desk.ini"

RESULTS: dict[int, tuple[bool, str]] = {}


@contextlib.contextmanager
def criterion(n: int):
    """Record the outcome of criterion ``n``; the body fills ``info['detail']``."""
    info = {"detail": ""}
    try:
        yield info
    except BaseException as exc:
        RESULTS[n] = (False, f"{info['detail']} {type(exc).__name__}: {exc}".strip())
        print(f"criterion {n}: FAIL  {RESULTS[n][1]}")
        raise
    RESULTS[n] = (True, info["detail"])
    print(f"criterion {n}: PASS  {info['detail']}")


def _gauss(z, mu, var):
    return math.exp(-(z - mu) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)


def desk_experiment():
    return load_config(DESK).experiment


def test_criterion_01_filter_matches_product_posterior():
    with criterion(1) as info:
        scene, channel = SceneConfig(), ChannelParams()
        rng = np.random.default_rng(101)
        t0 = time.perf_counter()
        worst = 0.0
        for _ in range(1000):
            xy = (scene.bs_x + rng.uniform(20, 390), scene.bs_y + rng.uniform(-5, 5))
            prior = rng.uniform(0.02, 0.98)
            mu1 = float(mean_gain(xy, LOS, channel, scene))
            mu0 = float(mean_gain(xy, NLOS, channel, scene))
            zs = rng.normal(rng.choice([mu1, mu0]), 2.5, rng.integers(1, 8))
            l0 = float(to_log_odds(prior))
            l = l0
            for z in zs:
                l = bayes_update(l, odds_at_measurement(z, xy, prior, channel, scene), l0)
            f1 = math.prod(_gauss(z, mu1, channel.var_los) for z in zs)
            f0 = math.prod(_gauss(z, mu0, channel.var_nlos) for z in zs)
            want = prior * f1 / (prior * f1 + (1 - prior) * f0)
            worst = max(worst, abs(float(from_log_odds(l)) - want))
        elapsed = time.perf_counter() - t0
        info["detail"] = f"max |diff| = {worst:.2e}, {elapsed:.2f} s"
        assert worst <= 1e-9
        assert elapsed < 1.0


def test_criterion_02_propagation_matches_two_term_form():
    with criterion(2) as info:
        rng = np.random.default_rng(102)
        t0 = time.perf_counter()
        worst = 0.0
        for _ in range(1000):
            a, b = sorted(rng.uniform(0.01, 0.99, 2))
            r_n = rng.uniform(5, 500)
            nearer = rng.random() < 0.5
            r = rng.uniform(0.5, r_n) if nearer else rng.uniform(r_n, 700)
            prior_x, prior_n = (b, a) if nearer else (a, b)
            q = rng.uniform(1e-4, 1 - 1e-4)
            l_n = math.log(q / (1 - q))
            if r < r_n:
                want = q + (1 - q) * (1 - (1 - prior_x) / (1 - prior_n))
            else:
                want = q * prior_x / prior_n
            got = float(from_log_odds(odds_along_azimuth(l_n, prior_x, prior_n, r, r_n)))
            worst = max(worst, abs(got - want))
        elapsed = time.perf_counter() - t0
        info["detail"] = f"max |diff| = {worst:.2e}, {elapsed:.2f} s"
        assert worst <= 1e-9
        assert elapsed < 1.0


def test_criterion_03_correlation_roundtrip():
    with criterion(3) as info:
        rng = np.random.default_rng(103)
        worst_rho = worst_col = 0.0
        used = 0
        while used < 1000:
            px, pn = rng.uniform(0.01, 0.99, 2)
            rho = rng.uniform(0, 1)
            m = same_distance_correlation(px, pn, rho)
            c1, c0 = m.column_sums()
            worst_col = max(worst_col, abs(c1 - 1), abs(c0 - 1))
            raw = same_distance_correlation(px, pn, rho, raw=True)
            if min(raw.r11, raw.r10, raw.r01, raw.r00) < 0 or \
                    max(raw.r11, raw.r10, raw.r01, raw.r00) > 1:
                continue
            got = phi_coefficient(*joints_from_conditionals(m, pn))
            worst_rho = max(worst_rho, abs(got - rho))
            used += 1
        info["detail"] = f"max |rho diff| = {worst_rho:.2e}, max |col sum - 1| = {worst_col:.2e}"
        assert worst_rho <= 1e-9
        assert worst_col <= 1e-9


def test_criterion_04_special_cases_exact():
    with criterion(4) as info:
        rng = np.random.default_rng(104)
        p = rng.uniform(0.01, 0.99, 1000)
        q = rng.uniform(0, 1, 1000)
        assert np.array_equal(correlated_posterior(p, p, q, 1.0), q)
        assert np.array_equal(correlated_posterior(p, p, q, 0.0), p)
        for rho in rng.uniform(0, 1, 1000):
            m = same_distance_correlation(0.5, 0.5, rho)
            assert m.r11 == (1 + rho) / 2 and m.r00 == (1 + rho) / 2
            assert m.r10 == (1 - rho) / 2 and m.r01 == (1 - rho) / 2
        info["detail"] = "rho=1, rho=0 and uniform-prior cases bit-exact"


def test_criterion_05_desk_ordering():
    with criterion(5) as info:
        # 50 runs: at 20 the ratio swings by about +-0.05 between master seeds
        cfg = replace(desk_experiment(), n_maps=10, n_monte_carlo=5)
        t0 = time.perf_counter()
        rep = run_experiment(cfg, workers=4)
        elapsed = time.perf_counter() - t0
        means = {m: np.mean([r.mae for r in rep.select(m)]) for m in ("prior", "knn",
                                                                     "proposed")}
        runs = len(rep.select("proposed"))
        info["detail"] = (f"{runs} runs: proposed {means['proposed']:.4f}, "
                          f"knn {means['knn']:.4f} (ratio {means['proposed'] / means['knn']:.3f})"
                          f", prior {means['prior']:.4f}, {elapsed:.0f} s")
        assert runs >= 20
        assert means["proposed"] <= 0.85 * means["knn"]
        assert means["proposed"] < means["prior"]
        assert elapsed < 600


def test_criterion_06_more_measurements_help():
    with criterion(6) as info:
        base = desk_experiment()
        values = (1, 2, 4, 8, 16)
        cfg = replace(base, n_maps=5, n_monte_carlo=2, methods=("proposed",),
                      sampling=replace(base.sampling, strategy="per_direction_random",
                                       delta_phi=math.pi / 30),
                      sweep_name="n_per_direction", sweep_values=values)
        rep = run_experiment(cfg, workers=4)
        means = [np.mean([r.mae for r in rep.select("proposed", v)]) for v in values]
        n_meas = [rep.select("proposed", v)[0].n_meas for v in values]
        rho = spearmanr(n_meas, means)[0]
        seeds = len(rep.select("proposed", values[0]))
        info["detail"] = (f"N={n_meas}, MAE={[round(float(m), 4) for m in means]}, "
                          f"Spearman {rho:.3f} over {seeds} seeds")
        assert seeds >= 10 and len(values) >= 5
        assert rho <= -0.8


def test_criterion_07_noisier_nlos_hurts():
    with criterion(7) as info:
        base = desk_experiment()
        values = (2.0, 6.25, 16.0, 36.0)
        cfg = replace(base, n_maps=5, n_monte_carlo=4, methods=("proposed",),
                      sweep_name="var_nlos", sweep_values=values)
        rep = run_experiment(cfg, workers=4)
        stats = []
        for v in values:
            x = np.array([r.mae for r in rep.select("proposed", v)])
            stats.append((x.mean(), x.std(ddof=1) / math.sqrt(len(x))))
        inversions = [(a, b) for a, b in zip(stats, stats[1:]) if b[0] < a[0]]
        info["detail"] = "MAE " + ", ".join(f"{m:.4f}+-{s:.4f}" for m, s in stats)
        assert len(inversions) <= 1
        assert all(a[0] - b[0] <= max(a[1], b[1]) for a, b in inversions)


def test_criterion_08_geometry_oracle():
    with criterion(8) as info:
        scene = SceneConfig(width=200, length=200, bs_x=100, bs_y=100)
        urban = generate_urban_map(scene, load_config().urban, 108)
        boxes = urban.as_array()
        rng = np.random.default_rng(108)
        n = 10_000
        ends = np.column_stack([rng.uniform(0, 200, n), rng.uniform(0, 200, n),
                                np.full(n, 129.0)])
        fast = segments_blocked(scene.antenna, ends, boxes)
        t = (np.arange(2048) + 0.5) / 2048
        disagree = 0
        for e, f in zip(ends, fast):
            pts = scene.antenna + t[:, None] * (e - scene.antenna)
            hit = False
            for x0, x1, y0, y1, h in boxes:
                if np.any((pts[:, 0] > x0) & (pts[:, 0] < x1) & (pts[:, 1] > y0)
                          & (pts[:, 1] < y1) & (pts[:, 2] < h)):
                    hit = True
                    break
            disagree += hit != f
        empty = ground_truth_lsm(UrbanMap(), SceneConfig())
        info["detail"] = (f"{disagree} disagreements on {n} links "
                          f"({int(fast.sum())} blocked, {len(boxes)} boxes); "
                          f"empty map all LoS: {bool((empty.values == 1).all())}")
        assert disagree == 0
        assert 0 < fast.sum() < n
        assert (empty.values == 1).all()


def test_criterion_09_linear_complexity():
    with criterion(9) as info:
        exp = desk_experiment()
        scene = exp.scene
        truth = ground_truth_lsm(generate_urban_map(scene, exp.urban, 109), scene)
        prior = make_prior(exp.prior, scene)
        spec = exp.grid.spec(scene)
        rng = np.random.default_rng(109)
        sampling = replace(exp.sampling, strategy="per_direction_random", seed=109)

        def measurements(n_per_dir):
            locs = sample_locations(replace(sampling, n_per_direction=n_per_dir), scene)
            return sample_measurements(locs, truth, exp.channel, scene, rng)

        def timed(ms):
            out = []
            for _ in range(3):
                t0 = time.perf_counter()
                build_lsm(prior, ms, spec, scene, exp.channel, exp.correlation)
                out.append(time.perf_counter() - t0)
            return float(np.median(out))

        small, large = measurements(4), measurements(8)
        timed(small)  # warm the lookup cache
        t_small, t_large = timed(small), timed(large)
        ratio = t_large / t_small
        info["detail"] = (f"N={len(small)}: {t_small * 1e3:.1f} ms, N={len(large)}: "
                          f"{t_large * 1e3:.1f} ms, ratio {ratio:.2f}")
        assert ratio <= 2.5


def test_criterion_10_deterministic_reports(tmp_path):
    with criterion(10) as info:
        cfg = tmp_path / "c.ini"
        desk = DESK.read_text().split("[experiment]")[0]
        cfg.write_text(desk + "[experiment]\nn_maps = 2\nn_monte_carlo = 2\n"
                       "sweep_name = delta_D\nsweep_values = 80, 100\n")
        outs = []
        for name, workers in (("a", "1"), ("b", "3")):
            assert main(["experiment", "--config", str(cfg), "--seed", "2024",
                         "--workers", workers, "--out", str(tmp_path / name)]) == 0
            outs.append((tmp_path / name / "metrics.csv").read_bytes())
        rows = len(outs[0].splitlines()) - 1
        info["detail"] = f"{len(outs[0])} bytes, {rows} rows, identical"
        assert outs[0] == outs[1]


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
