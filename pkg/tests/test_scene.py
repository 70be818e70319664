"""Scene generation: determinism, bounds, and the frozen corpus."""

import numpy as np
import pytest

from bonsai.rng import Rand
from bonsai.scene import (
    SceneSpec,
    default_corpus,
    generate_scene,
    plant_boundary_points,
)
from bonsai.tree import PointCloud


class TestGeneration:
    def test_bit_identical_across_calls(self):
        spec = SceneSpec(seed=404, n_objects=12, ground_points=500)
        a = generate_scene(spec)
        b = generate_scene(spec)
        assert a.xyz.tobytes() == b.xyz.tobytes()
        assert a.frame_id == b.frame_id == "scene-404"

    def test_different_seeds_differ(self):
        a = generate_scene(SceneSpec(seed=1, n_objects=10, ground_points=200))
        b = generate_scene(SceneSpec(seed=2, n_objects=10, ground_points=200))
        assert a.xyz.tobytes() != b.xyz.tobytes()

    def test_everything_finite_and_capped(self):
        spec = SceneSpec(seed=7, range_cap=50.0, n_objects=30, ground_points=800)
        cloud = generate_scene(spec)
        assert np.all(np.isfinite(cloud.xyz))
        assert float(np.abs(cloud.xyz).max()) <= 50.0

    def test_objects_only_and_ground_only(self):
        objects = generate_scene(SceneSpec(seed=3, n_objects=5, ground_points=0))
        assert len(objects) > 0
        ground = generate_scene(SceneSpec(seed=3, n_objects=0, ground_points=150))
        assert len(ground) == 150
        # ground hugs z ~ 0
        assert float(np.abs(ground.xyz[:, 2]).max()) < 1.0

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SceneSpec(n_objects=-1)
        with pytest.raises(ValueError):
            SceneSpec(n_objects=0, ground_points=0)
        with pytest.raises(ValueError):
            SceneSpec(points_per_object=(0, 5))
        with pytest.raises(ValueError):
            SceneSpec(points_per_object=(9, 5))
        with pytest.raises(ValueError):
            SceneSpec(object_extent=(0.0, 1.0))
        with pytest.raises(ValueError):
            SceneSpec(range_cap=0.0)
        with pytest.raises(ValueError):
            SceneSpec(noise_sigma=-0.1)


class TestCorpus:
    def test_shape_is_frozen(self):
        corpus = default_corpus()
        assert [s.seed for s in corpus] == [2101, 2102, 2103, 2104, 2105]
        assert len({s.seed for s in corpus}) == 5

    def test_sizes_are_mid_scale(self):
        for spec in default_corpus():
            n = len(generate_scene(spec))
            assert 10_000 <= n <= 100_000, spec.seed


class TestPlanting:
    def test_planted_distances_bracket_the_radius(self, rand):
        base = PointCloud(
            rand.uniform(3 * 100, -10, 10).reshape(100, 3).astype(np.float32)
        )
        anchors = np.array([4, 50, 93], dtype=np.intp)
        r = 1.5
        out = plant_boundary_points(base, anchors, r, seed=11, steps=(1, 2, 4, 8))
        added = out.xyz[len(base):]
        assert added.shape == (3 * 8, 3)  # 4 steps x 2 signs per anchor
        per_anchor = added.reshape(3, 8, 3)
        for a, block in zip(anchors, per_anchor):
            d = np.linalg.norm(
                block.astype(np.float64) - base.xyz[a].astype(np.float64), axis=1
            )
            assert np.all(np.abs(d - r) < 1e-5)
            assert np.any(d < r) and np.any(d > r)

    def test_original_cloud_untouched(self, rand):
        base = PointCloud(
            rand.uniform(3 * 20, -5, 5).reshape(20, 3).astype(np.float32)
        )
        before = base.xyz.copy()
        out = plant_boundary_points(base, np.array([0], dtype=np.intp), 1.0, seed=5)
        assert np.array_equal(base.xyz, before)
        assert len(out) == 20 + 8
        assert np.array_equal(out.xyz[:20], before)

    def test_deterministic(self, rand):
        base = PointCloud(
            rand.uniform(3 * 30, -5, 5).reshape(30, 3).astype(np.float32)
        )
        idx = np.array([1, 2], dtype=np.intp)
        a = plant_boundary_points(base, idx, 0.7, seed=9)
        b = plant_boundary_points(base, idx, 0.7, seed=9)
        assert a.xyz.tobytes() == b.xyz.tobytes()

    def test_rejects_coordinate_anchors(self, rand):
        base = PointCloud(
            rand.uniform(3 * 10, -5, 5).reshape(10, 3).astype(np.float32)
        )
        with pytest.raises(ValueError, match="indices"):
            plant_boundary_points(base, base.xyz[:2], 1.0, seed=1)


class TestRand:
    def test_streams_are_deterministic_and_tagged(self):
        a, b = Rand(42), Rand(42)
        assert np.array_equal(a.uniform(16), b.uniform(16))
        assert not np.array_equal(Rand(42).uniform(8), Rand(43).uniform(8))
        s1, s2 = Rand(42).spawn(1), Rand(42).spawn(2)
        assert not np.array_equal(s1.uniform(8), s2.uniform(8))
        assert np.array_equal(Rand(42).spawn(1).uniform(8), Rand(42).spawn(1).uniform(8))

    def test_uniform_bounds_and_progression(self):
        r = Rand(7)
        u = r.uniform(10_000)
        assert np.all((0.0 <= u) & (u < 1.0))
        v = r.uniform(10_000)  # stream advances
        assert not np.array_equal(u, v)

    def test_normal_moments(self):
        z = Rand(3).normal(200_000)
        assert abs(float(z.mean())) < 0.01
        assert abs(float(z.std()) - 1.0) < 0.01

    def test_integer_inclusive(self):
        r = Rand(1)
        draws = {r.integer(2, 4) for _ in range(200)}
        assert draws == {2, 3, 4}

    def test_sample_indices_distinct(self):
        idx = Rand(2).sample_indices(100, 30)
        assert len(set(idx.tolist())) == 30
        assert np.array_equal(Rand(2).sample_indices(100, 30), idx)
        assert np.array_equal(Rand(9).sample_indices(5, 10), np.arange(5))
