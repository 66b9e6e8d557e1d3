import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linkstate.env import (
    Box,
    SceneConfig,
    TruthGrid,
    UrbanGenParams,
    UrbanGenerationError,
    UrbanMap,
    generate_urban_map,
    ground_truth_lsm,
    segment_blocked,
    segments_blocked,
)


def sampled_blocked(p0, p1, boxes, n=4096):
    """Point-sampling oracle: any interior sample point inside any box."""
    t = (np.arange(n) + 0.5) / n
    pts = p0 + t[:, None] * (p1 - p0)
    for x0, x1, y0, y1, h in boxes:
        inside = ((pts[:, 0] > x0) & (pts[:, 0] < x1) & (pts[:, 1] > y0) & (pts[:, 1] < y1)
                  & (pts[:, 2] > 0) & (pts[:, 2] < h))
        if inside.any():
            return True
    return False


class TestSceneConfig:
    def test_shape_is_ceil(self):
        assert SceneConfig(width=801, length=400, bs_x=1, bs_y=1, grid_step=2).shape == (200, 401)

    def test_float_step_has_no_extra_cell(self):
        assert SceneConfig(width=400, length=400, bs_x=1, bs_y=1, grid_step=0.1).shape \
            == (4000, 4000)

    @pytest.mark.parametrize("kwargs", [
        dict(width=0), dict(grid_step=0), dict(bs_height=200), dict(bs_x=900),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SceneConfig(**kwargs)

    def test_cell_index_and_outside(self, small_scene):
        assert small_scene.cell_index(3.0, 1.0) == (0, 1)
        assert small_scene.cell_index(100.0, 100.0) == (49, 49)
        with pytest.raises(IndexError):
            small_scene.cell_index(-1.0, 5.0)


class TestSegmentBlocked:
    def test_box_in_the_way(self):
        urban = UrbanMap((Box(40, 60, -5, 5, 120),))
        assert segment_blocked((0, 0, 15), (100, 0, 129), urban)

    def test_link_passes_above(self):
        urban = UrbanMap((Box(40, 60, -5, 5, 50),))
        assert not segment_blocked((0, 0, 15), (100, 0, 129), urban)

    def test_example_heights_along_link(self):
        # link height over the box footprint
        z = 15 + 114 * np.array([40, 60]) / 100
        np.testing.assert_allclose(z, [60.6, 83.4])

    def test_touching_face_is_not_blocked(self):
        urban = UrbanMap((Box(40, 60, 0, 10, 100),))
        assert not segment_blocked((0, 0, 15), (100, 0, 129), urban)

    def test_agrees_with_point_sampling(self):
        rng = np.random.default_rng(8)
        boxes = np.array([[20, 35, 20, 30, 60], [60, 80, 10, 25, 100], [40, 55, 60, 90, 30],
                          [70, 90, 70, 85, 120], [5, 15, 50, 75, 80]], dtype=float)
        n = 10_000
        p0 = np.array([50.0, 50.0, 15.0])
        ends = np.column_stack([rng.uniform(0, 100, n), rng.uniform(0, 100, n),
                                np.full(n, 129.0)])
        fast = segments_blocked(p0, ends, boxes)
        slow = np.array([sampled_blocked(p0, e, boxes) for e in ends])
        assert 0 < fast.sum() < n
        assert np.count_nonzero(fast != slow) == 0

    def test_no_boxes(self):
        assert not segments_blocked((0, 0, 0), np.ones((3, 3)), np.zeros((0, 5))).any()


class TestGenerator:
    def test_building_count_matches_density(self):
        scene = SceneConfig()
        urban = generate_urban_map(scene, UrbanGenParams(density_per_km2=100), seed=7)
        assert abs(len(urban) - 100 * 0.64) <= 6

    def test_boxes_valid(self):
        scene = SceneConfig(width=400, length=400, bs_x=200, bs_y=200)
        gen = UrbanGenParams()
        urban = generate_urban_map(scene, gen, seed=1)
        a = urban.as_array()
        assert (a[:, 0] >= 0).all() and (a[:, 1] <= 400).all()
        assert (a[:, 2] >= 0).all() and (a[:, 3] <= 400).all()
        assert ((a[:, 4] > 0) & (a[:, 4] < scene.uav_height)).all()
        sides = np.concatenate([a[:, 1] - a[:, 0], a[:, 3] - a[:, 2]])
        assert ((sides >= gen.side_min) & (sides <= gen.side_max)).all()
        for i in range(len(a)):
            for k in range(i + 1, len(a)):
                overlap = (a[i, 0] < a[k, 1] and a[k, 0] < a[i, 1]
                           and a[i, 2] < a[k, 3] and a[k, 2] < a[i, 3])
                assert not overlap
        covers_bs = (a[:, 0] <= 200) & (a[:, 1] >= 200) & (a[:, 2] <= 200) & (a[:, 3] >= 200)
        assert not covers_bs.any()

    def test_deterministic(self):
        scene = SceneConfig(width=300, length=300, bs_x=150, bs_y=150, grid_step=3)
        a = generate_urban_map(scene, UrbanGenParams(), 11)
        b = generate_urban_map(scene, UrbanGenParams(), 11)
        assert a == b
        np.testing.assert_array_equal(ground_truth_lsm(a, scene).values,
                                      ground_truth_lsm(b, scene).values)
        assert generate_urban_map(scene, UrbanGenParams(), 12) != a

    def test_impossible_density(self):
        scene = SceneConfig(width=100, length=100, bs_x=50, bs_y=50)
        with pytest.raises(UrbanGenerationError):
            generate_urban_map(scene, UrbanGenParams(density_per_km2=2000, side_min=40,
                                                     side_max=50, max_attempts=50), 0)


class TestGroundTruth:
    def test_empty_map_all_los(self, small_scene):
        t = ground_truth_lsm(UrbanMap(), small_scene)
        assert t.values.shape == small_scene.shape
        assert (t.values == 1).all()

    def test_shadow_wedge_behind_box(self):
        scene = SceneConfig(width=200, length=200, bs_x=100, bs_y=100, grid_step=1)
        urban = UrbanMap((Box(130, 140, 95, 105, 60),))
        t = ground_truth_lsm(urban, scene)
        assert t.at(120.0, 100.0) == 1          # between GBS and box
        assert t.at(195.0, 100.0) == 0          # behind the box
        assert t.at(100.0, 195.0) == 1          # other azimuth
        assert t.at(5.0, 100.0) == 1            # opposite side
        # every blocked cell agrees with the per-cell segment test
        xs, ys = scene.cell_centers()
        rows, cols = np.nonzero(t.values == 0)
        for r, c in zip(rows[::25], cols[::25]):
            assert segment_blocked(scene.antenna, (xs[r, c], ys[r, c], 129.0), urban)

    def test_rejects_building_above_flight_height(self, small_scene):
        with pytest.raises(ValueError):
            ground_truth_lsm(UrbanMap((Box(0, 10, 0, 10, 200),)), small_scene)

    def test_shape_mismatch(self, small_scene):
        with pytest.raises(ValueError):
            TruthGrid(np.ones((3, 3), dtype=np.uint8), small_scene)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), idx=st.integers(0, 100), bump=st.floats(1, 60))
    def test_antitone_in_heights(self, seed, idx, bump):
        scene = SceneConfig(width=120, length=120, bs_x=60, bs_y=60, grid_step=4)
        urban = generate_urban_map(scene, UrbanGenParams(density_per_km2=400), seed)
        if not len(urban):
            return
        boxes = list(urban.buildings)
        b = boxes[idx % len(boxes)]
        boxes[idx % len(boxes)] = b._replace(height=min(b.height + bump, 128.0))
        low = ground_truth_lsm(urban, scene).values
        high = ground_truth_lsm(UrbanMap(tuple(boxes)), scene).values
        assert not np.any((low == 0) & (high == 1))
