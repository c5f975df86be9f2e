"""Losses, epoch plans, augmentation materialization, and frame streaming."""

import io
import math
import os

import numpy as np
import pytest

from ofdb_forge import (
    BatchPlan,
    PlanEntry,
    SeedKey,
    ShapeMismatchError,
    cross_entropy,
    dot_neighborhood_mask,
    one_instance_nll,
    plan_epoch,
    materialize_entry,
    read_stream,
    rotate90,
    stream_plan,
    write_stream,
)
from ofdb_forge.io_utils import decode_png, read_png
from ofdb_forge.training import PROB_FLOOR


def row_stochastic(rng, n, c):
    raw = rng.random((n, c)) + 1e-9
    return raw / raw.sum(axis=1, keepdims=True)


class TestCrossEntropy:
    def test_perfect_predictions_give_zero(self):
        preds = np.eye(6)
        assert cross_entropy(preds, np.arange(6)) == 0.0

    def test_uniform_thousand_way_is_log_1000(self):
        c = 1000
        preds = np.full((4, c), 1.0 / c)
        labels = np.array([0, 17, 500, 999])
        assert math.isclose(cross_entropy(preds, labels), math.log(c), rel_tol=1e-12)

    def test_matches_scalar_double_loop(self):
        rng = np.random.default_rng(11)
        preds = row_stochastic(rng, 5, 4)
        labels = rng.integers(0, 4, size=5)
        total = 0.0
        for i in range(5):
            total += -math.log(preds[i, labels[i]])
        want = total / 5
        assert math.isclose(cross_entropy(preds, labels), want, rel_tol=1e-12)

    def test_zero_probability_is_clamped_not_infinite(self):
        preds = np.array([[0.0, 1.0]])
        loss = cross_entropy(preds, np.array([0]))
        assert math.isclose(loss, -math.log(PROB_FLOOR), rel_tol=1e-12)
        assert math.isfinite(loss)

    def test_probabilities_above_one_clamp_to_zero_loss(self):
        preds = np.array([[2.0, 0.5]])
        assert cross_entropy(preds, np.array([0])) == 0.0

    def test_loss_is_non_negative(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            preds = row_stochastic(rng, 8, 5)
            labels = rng.integers(0, 5, size=8)
            assert cross_entropy(preds, labels) >= 0.0

    def test_shape_and_range_errors(self):
        with pytest.raises(ShapeMismatchError):
            cross_entropy(np.ones(3), np.array([0]))
        with pytest.raises(ShapeMismatchError):
            cross_entropy(np.ones((2, 2)) / 2, np.array([0]))
        with pytest.raises(ValueError):
            cross_entropy(np.ones((2, 2)) / 2, np.array([0, 2]))
        with pytest.raises(ValueError):
            cross_entropy(np.ones((2, 2)) / 2, np.array([-1, 0]))


class TestOneInstanceNll:
    def test_identity_matrix_gives_zero(self):
        assert one_instance_nll(np.eye(7), 7) == 0.0

    def test_uniform_ten_way_is_log_10(self):
        preds = np.full((10, 10), 0.1)
        assert math.isclose(one_instance_nll(preds, 10), math.log(10), rel_tol=1e-12)

    def test_reduces_to_cross_entropy_with_identity_labels(self):
        rng = np.random.default_rng(13)
        preds = row_stochastic(rng, 9, 9)
        want = cross_entropy(preds, np.arange(9))
        assert math.isclose(one_instance_nll(preds, 9), want, rel_tol=1e-12)

    def test_rejects_non_square_or_wrong_size(self):
        with pytest.raises(ShapeMismatchError):
            one_instance_nll(np.ones((3, 4)) / 4, 3)
        with pytest.raises(ShapeMismatchError):
            one_instance_nll(np.eye(5), 6)


class TestPlanEpoch:
    def test_each_category_exactly_once(self, small_dataset):
        manifest, _ = small_dataset
        plan = plan_epoch(manifest, 0, 4, "pattern", SeedKey(9))
        assert sorted(e.category_id for e in plan.entries) == list(range(10))

    def test_deterministic(self, small_dataset):
        manifest, _ = small_dataset
        a = plan_epoch(manifest, 3, 4, "texture", SeedKey(9), with_rotation=True)
        b = plan_epoch(manifest, 3, 4, "texture", SeedKey(9), with_rotation=True)
        assert a == b

    def test_epochs_shuffle_and_reseed(self, small_dataset):
        manifest, _ = small_dataset
        plans = [plan_epoch(manifest, e, 4, "pattern", SeedKey(9)) for e in range(2)]
        seeds = [
            {e.category_id: e.aug_seed for e in plan.entries} for plan in plans
        ]
        for category in range(10):
            assert seeds[0][category] != seeds[1][category]

    def test_aug_seed_follows_category_not_position(self, small_dataset):
        manifest, _ = small_dataset
        from ofdb_forge.seeds import TAG_PLAN_AUG

        plan = plan_epoch(manifest, 5, 4, "pattern", SeedKey(9))
        for entry in plan.entries:
            assert entry.aug_seed == SeedKey(9).child(TAG_PLAN_AUG, 5, entry.category_id)

    def test_batches_cover_entries_in_order(self, small_dataset):
        manifest, _ = small_dataset
        plan = plan_epoch(manifest, 0, 4, "plain", SeedKey(1))
        batches = plan.batches()
        assert [len(b) for b in batches] == [4, 4, 2]
        flattened = tuple(e for b in batches for e in b)
        assert flattened == plan.entries

    def test_batch_size_larger_than_categories(self, small_dataset):
        manifest, _ = small_dataset
        plan = plan_epoch(manifest, 0, 64, "plain", SeedKey(1))
        assert [len(b) for b in plan.batches()] == [10]

    def test_rotations_drawn_only_when_asked(self, small_dataset):
        manifest, _ = small_dataset
        still = plan_epoch(manifest, 0, 4, "plain", SeedKey(2))
        assert all(e.rotation == 0 for e in still.entries)
        spun = plan_epoch(manifest, 0, 4, "plain", SeedKey(2), with_rotation=True)
        rotations = [e.rotation for e in spun.entries]
        assert all(0 <= r <= 3 for r in rotations)
        assert any(r != 0 for r in rotations)

    def test_json_round_trip(self, small_dataset):
        manifest, _ = small_dataset
        plan = plan_epoch(manifest, 2, 3, "texture", SeedKey(7), with_rotation=True)
        assert BatchPlan.from_json(plan.to_json()) == plan

    def test_rejects_bad_arguments(self, small_dataset):
        manifest, _ = small_dataset
        with pytest.raises(ValueError):
            plan_epoch(manifest, 0, 0, "plain", SeedKey(1))
        with pytest.raises(ValueError):
            plan_epoch(manifest, 0, 4, "fixed_patch", SeedKey(1))


class TestMaterializeEntry:
    def test_plain_is_the_stored_render_rotated(self, small_dataset):
        manifest, root = small_dataset
        stored = read_png(os.path.join(root, manifest.records[4].path))
        for rotation in range(4):
            entry = PlanEntry(4, SeedKey(0), rotation=rotation)
            got = materialize_entry(manifest, root, entry, "plain")
            assert np.array_equal(got, rotate90(stored, rotation))

    def test_pattern_stays_inside_dot_neighborhoods(self, small_dataset):
        manifest, root = small_dataset
        stored = read_png(os.path.join(root, manifest.records[0].path))
        from ofdb_forge import DotGrid

        mask = dot_neighborhood_mask(DotGrid(stored.shape[0], stored > 0))
        entry = PlanEntry(0, SeedKey(41).child(1, 2))
        got = materialize_entry(manifest, root, entry, "pattern")
        assert not np.any(got[~mask])

    def test_deterministic_per_seed(self, small_dataset):
        manifest, root = small_dataset
        entry = PlanEntry(3, SeedKey(5, 77), rotation=1)
        a = materialize_entry(manifest, root, entry, "texture")
        b = materialize_entry(manifest, root, entry, "texture")
        assert np.array_equal(a, b)


class TestStreaming:
    def test_round_trip(self):
        frames = [(7, b"abc"), (0, b""), (4_000_000_000, b"\x00" * 17)]
        buf = io.BytesIO()
        assert write_stream(buf, frames) == 3
        buf.seek(0)
        assert list(read_stream(buf)) == frames

    def test_empty_stream_yields_nothing(self):
        assert list(read_stream(io.BytesIO())) == []

    def test_truncated_header_raises(self):
        buf = io.BytesIO()
        write_stream(buf, [(1, b"xy")])
        data = buf.getvalue()
        with pytest.raises(ValueError, match="header"):
            list(read_stream(io.BytesIO(data + b"\x01\x02")))

    def test_truncated_payload_raises(self):
        buf = io.BytesIO()
        write_stream(buf, [(1, b"hello")])
        data = buf.getvalue()[:-2]
        with pytest.raises(ValueError, match="payload"):
            list(read_stream(io.BytesIO(data)))

    def test_stream_plan_emits_materialized_frames(self, small_dataset):
        manifest, root = small_dataset
        plan = plan_epoch(manifest, 1, 4, "pattern", SeedKey(33))
        buf = io.BytesIO()
        assert stream_plan(manifest, root, plan, buf) == 10
        buf.seek(0)
        frames = list(read_stream(buf))
        assert [label for label, _ in frames] == [e.category_id for e in plan.entries]
        for (label, payload), entry in zip(frames, plan.entries):
            want = materialize_entry(manifest, root, entry, "pattern")
            assert np.array_equal(decode_png(payload), want)
