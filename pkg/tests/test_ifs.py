"""IFS core: sampling, probabilities, the chaos game, fluctuation variants."""

import numpy as np
import pytest

from ofdb_forge import (
    AffineMap,
    DivergenceError,
    IfsSystem,
    PointCloud,
    chaos_game,
    det_weighted_probabilities,
    fluctuate_ifs,
    sample_ifs,
)
from ofdb_forge.ifs import FLUCTUATION_FACTORS, N_FLUCTUATION_VARIANTS
from ofdb_forge.seeds import SeedKey


def _single_map(linear, translation):
    m = AffineMap(np.asarray(linear, dtype=float), np.asarray(translation, dtype=float))
    return IfsSystem((m,), np.array([1.0]))


class TestAffineMap:
    def test_apply_matches_manual_loop(self):
        rng = np.random.default_rng(5)
        m = AffineMap(rng.normal(size=(2, 2)), rng.normal(size=2))
        pts = rng.normal(size=(17, 2))
        out = m(pts)
        for i in range(len(pts)):
            # batched matmul may order the sums differently; ULP-level slack
            expected = m.linear @ pts[i] + m.translation
            assert np.allclose(out[i], expected, atol=1e-13, rtol=1e-13)

    def test_value_equality(self):
        a = AffineMap(np.eye(2), np.zeros(2))
        b = AffineMap(np.eye(2), np.zeros(2))
        c = AffineMap(np.eye(2), np.ones(2))
        assert a == b and a != c

    def test_arrays_are_read_only(self):
        m = AffineMap(np.eye(2), np.zeros(2))
        with pytest.raises(ValueError):
            m.linear[0, 0] = 2.0

    def test_rejects_bad_shapes_and_values(self):
        with pytest.raises(ValueError):
            AffineMap(np.eye(4), np.zeros(4))
        with pytest.raises(ValueError):
            AffineMap(np.eye(2), np.zeros(3))
        with pytest.raises(ValueError):
            AffineMap(np.full((2, 2), np.nan), np.zeros(2))


class TestIfsSystem:
    def test_rejects_bad_probabilities(self):
        maps = (AffineMap(0.5 * np.eye(2), np.zeros(2)),) * 2
        with pytest.raises(ValueError):
            IfsSystem(maps, np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            IfsSystem(maps, np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            IfsSystem(maps, np.array([1.0]))

    def test_rejects_mixed_dimensions(self):
        maps = (
            AffineMap(np.eye(2) * 0.5, np.zeros(2)),
            AffineMap(np.eye(3) * 0.5, np.zeros(3)),
        )
        with pytest.raises(ValueError):
            IfsSystem(maps, np.array([0.5, 0.5]))

    def test_single_map_system_is_allowed(self):
        sys_ = _single_map(0.5 * np.eye(2), [0.3, 0.4])
        assert sys_.n_maps == 1


class TestDetWeightedProbabilities:
    def test_uniform_for_equal_determinants(self, sierpinski2d):
        p = det_weighted_probabilities(sierpinski2d.maps)
        assert np.allclose(p, 1.0 / 3.0, atol=1e-15)

    def test_proportional_to_abs_det(self):
        maps = (
            AffineMap(0.5 * np.eye(2), np.zeros(2)),   # |det| = 0.25
            AffineMap(np.diag([0.5, 1.0]), np.zeros(2)),  # |det| = 0.5
        )
        p = det_weighted_probabilities(maps)
        assert np.allclose(p, [0.25 / 0.75, 0.5 / 0.75], atol=1e-15)

    def test_floor_keeps_singular_maps_selectable(self):
        maps = (
            AffineMap(np.zeros((2, 2)), np.ones(2)),  # det = 0
            AffineMap(0.5 * np.eye(2), np.zeros(2)),
        )
        p = det_weighted_probabilities(maps)
        assert p[0] > 0
        assert np.isclose(p[0], 1e-6 / (1e-6 + 0.25), atol=1e-18)


class TestSampleIfs:
    def test_deterministic(self):
        a = sample_ifs(2, SeedKey(11, 3))
        b = sample_ifs(2, SeedKey(11, 3))
        assert a == b

    def test_map_count_and_coefficient_ranges(self):
        counts = set()
        for i in range(200):
            sys_ = sample_ifs(2, SeedKey(42, i))
            counts.add(sys_.n_maps)
            for m in sys_.maps:
                assert np.abs(m.linear).max() <= 1.0
                assert np.abs(m.translation).max() <= 1.0
        assert counts == {2, 3, 4, 5, 6, 7, 8}

    def test_probabilities_come_from_determinants(self):
        sys_ = sample_ifs(3, SeedKey(0, 0))
        expected = det_weighted_probabilities(sys_.maps)
        assert np.array_equal(sys_.probabilities, expected)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            sample_ifs(4, SeedKey(0))


class TestChaosGame:
    def test_deterministic_and_shaped(self, sierpinski2d):
        a = chaos_game(sierpinski2d, 5000, SeedKey(3))
        b = chaos_game(sierpinski2d, 5000, SeedKey(3))
        assert np.array_equal(a.points, b.points)
        assert a.points.shape == (5000, 2)
        assert a.burn_in == 100

    def test_starts_at_origin_without_burn_in(self, sierpinski2d):
        cloud = chaos_game(sierpinski2d, 10, SeedKey(0), burn_in=0)
        assert np.array_equal(cloud.points[0], [0.0, 0.0])

    def test_custom_start_point(self, sierpinski2d):
        cloud = chaos_game(
            sierpinski2d, 5, SeedKey(0), burn_in=0, v1=np.array([0.25, 0.5])
        )
        assert np.array_equal(cloud.points[0], [0.25, 0.5])

    def test_burn_in_is_a_pure_prefix_drop(self, sierpinski2d):
        # Same seed: the burn-in run must emit exactly the tail of the
        # zero-burn-in run, bit for bit.
        full = chaos_game(sierpinski2d, 300, SeedKey(9), burn_in=0)
        tail = chaos_game(sierpinski2d, 200, SeedKey(9), burn_in=100)
        assert np.array_equal(full.points[100:], tail.points)

    def test_single_map_converges_to_fixed_point(self):
        # v* = (I - A)^-1 b; contraction halves the error each step, so
        # after 200 steps the trajectory sits on v* to double precision.
        sys_ = _single_map(0.5 * np.eye(2), [0.3, 0.4])
        cloud = chaos_game(sys_, 10, SeedKey(1), burn_in=200)
        assert np.allclose(cloud.points[-1], [0.6, 0.8], atol=1e-9)

    def test_selection_frequencies_match_probabilities(self):
        # Maps are inferred from consecutive point pairs (translations are
        # well separated), giving a frequency oracle independent of the
        # selection code path.
        maps = tuple(
            AffineMap(0.5 * np.eye(2), np.array(t))
            for t in ([0.0, 0.0], [10.0, 0.0], [0.0, 10.0])
        )
        probs = np.array([0.5, 0.25, 0.25])
        sys_ = IfsSystem(maps, probs)
        n = 50_000
        pts = chaos_game(sys_, n, SeedKey(77), burn_in=0).points
        deltas = pts[1:] - 0.5 * pts[:-1]
        counts = np.zeros(3)
        for j, m in enumerate(maps):
            counts[j] = (np.abs(deltas - m.translation).max(axis=1) < 1e-9).sum()
        assert counts.sum() == n - 1  # every step attributed to exactly one map
        for j in range(3):
            sigma = np.sqrt((n - 1) * probs[j] * (1 - probs[j]))
            assert abs(counts[j] - (n - 1) * probs[j]) < 4 * sigma

    def test_divergence_raises(self):
        sys_ = _single_map(2.0 * np.eye(2), [1.0, 0.0])
        with pytest.raises(DivergenceError):
            chaos_game(sys_, 1000, SeedKey(0))

    def test_attractor_stays_in_unit_box(self, sierpinski2d):
        pts = chaos_game(sierpinski2d, 20_000, SeedKey(5)).points
        assert pts.min() >= 0.0 and pts.max() <= 1.0

    def test_rejects_bad_counts(self, sierpinski2d):
        with pytest.raises(ValueError):
            chaos_game(sierpinski2d, 0, SeedKey(0))
        with pytest.raises(ValueError):
            chaos_game(sierpinski2d, 10, SeedKey(0), burn_in=-1)


class TestFluctuateIfs:
    def test_identity_variant_returns_input_unchanged(self, sierpinski2d):
        assert fluctuate_ifs(sierpinski2d, 12) is sierpinski2d

    def test_factor_grid_layout(self, sierpinski2d):
        # variant 5a+b scales linear by factor a, translation by factor b
        v = fluctuate_ifs(sierpinski2d, 0)  # (0.8, 0.8)
        assert np.allclose(v.maps[1].linear, 0.4 * np.eye(2))
        assert np.allclose(v.maps[1].translation, [0.4, 0.0])
        v = fluctuate_ifs(sierpinski2d, 5 * 4 + 2)  # (1.2, 1.0)
        assert np.allclose(v.maps[1].linear, 0.6 * np.eye(2))
        assert np.allclose(v.maps[1].translation, [0.5, 0.0])

    def test_all_25_variants_distinct(self, sierpinski2d):
        variants = [fluctuate_ifs(sierpinski2d, i) for i in range(N_FLUCTUATION_VARIANTS)]
        for i in range(len(variants)):
            for j in range(i + 1, len(variants)):
                assert variants[i] != variants[j]

    def test_probabilities_rederived_from_scaled_dets(self):
        # A hand-set probability vector is NOT preserved: non-identity
        # variants recompute det-weighted probabilities.
        maps = (
            AffineMap(0.5 * np.eye(2), np.zeros(2)),
            AffineMap(0.5 * np.eye(2), np.ones(2)),
        )
        sys_ = IfsSystem(maps, np.array([0.9, 0.1]))
        v = fluctuate_ifs(sys_, 0)
        assert np.allclose(v.probabilities, [0.5, 0.5])

    def test_factor_count(self):
        assert len(FLUCTUATION_FACTORS) == 5
        assert N_FLUCTUATION_VARIANTS == 25

    def test_rejects_out_of_range_variant(self, sierpinski2d):
        for bad in (-1, 25):
            with pytest.raises(ValueError):
                fluctuate_ifs(sierpinski2d, bad)


class TestPointCloud:
    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            PointCloud(np.zeros((4, 5)))

    def test_rejects_non_finite(self):
        pts = np.zeros((3, 2))
        pts[1, 0] = np.inf
        with pytest.raises(ValueError):
            PointCloud(pts)

    def test_len_and_dimension(self):
        cloud = PointCloud(np.zeros((7, 3)))
        assert len(cloud) == 7 and cloud.dimension == 3
