"""Virtual camera: rotations, projection, viewpoint enumeration."""

import numpy as np
import pytest

from ofdb_forge import (
    CameraPose,
    PointCloud,
    chaos_game,
    enumerate_viewpoints,
    project,
    rotation_matrix,
)
from ofdb_forge.seeds import SeedKey

RANDOM_POSES = [
    CameraPose(0, 0, 0),
    CameraPose(90, 0, 0),
    CameraPose(0, 90, 0),
    CameraPose(0, 0, 90),
    CameraPose(10, 20, 30),
    CameraPose(123.4, 271.9, 45.0),
    CameraPose(359.9, 0.1, 180.0),
]


class TestRotationMatrix:
    @pytest.mark.parametrize("pose", RANDOM_POSES)
    def test_orthonormal_and_proper(self, pose):
        r = rotation_matrix(pose)
        assert np.abs(r.T @ r - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(r) - 1.0) < 1e-12

    def test_yaw_rotates_x_to_y(self):
        r = rotation_matrix(CameraPose(yaw=90))
        assert np.allclose(r @ [1, 0, 0], [0, 1, 0], atol=1e-12)

    def test_pitch_rotates_x_to_minus_z(self):
        r = rotation_matrix(CameraPose(pitch=90))
        assert np.allclose(r @ [1, 0, 0], [0, 0, -1], atol=1e-12)

    def test_roll_rotates_y_to_z(self):
        r = rotation_matrix(CameraPose(roll=90))
        assert np.allclose(r @ [0, 1, 0], [0, 0, 1], atol=1e-12)

    def test_composition_order_is_yaw_pitch_roll(self):
        # R must equal Rz @ Ry @ Rx built from scratch.
        def rx(t):
            c, s = np.cos(t), np.sin(t)
            return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])

        def ry(t):
            c, s = np.cos(t), np.sin(t)
            return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])

        def rz(t):
            c, s = np.cos(t), np.sin(t)
            return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])

        pose = CameraPose(31.0, 47.0, 211.0)
        expected = (
            rz(np.radians(211.0)) @ ry(np.radians(47.0)) @ rx(np.radians(31.0))
        )
        assert np.abs(rotation_matrix(pose) - expected).max() < 1e-12


class TestCameraPose:
    def test_angles_normalize_into_360(self):
        pose = CameraPose(roll=-30, pitch=360, yaw=720 + 45)
        assert pose.roll == 330 and pose.pitch == 0 and pose.yaw == 45

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            CameraPose(yaw=np.nan)


class TestProject:
    def test_drops_depth_and_keeps_order(self, sierpinski3d):
        cloud = chaos_game(sierpinski3d, 500, SeedKey(4))
        flat = project(cloud, CameraPose())
        assert flat.dimension == 2 and len(flat) == 500
        assert np.array_equal(flat.points, cloud.points[:, :2])
        assert flat.source_seed == cloud.source_seed
        assert flat.burn_in == cloud.burn_in

    def test_rotation_preserves_pairwise_distances(self, sierpinski3d):
        cloud = chaos_game(sierpinski3d, 200, SeedKey(8))
        r = rotation_matrix(CameraPose(12, 34, 56))
        rotated = cloud.points @ r.T
        d0 = np.linalg.norm(cloud.points[:50, None] - cloud.points[None, :50], axis=2)
        d1 = np.linalg.norm(rotated[:50, None] - rotated[None, :50], axis=2)
        assert np.abs(d0 - d1).max() < 1e-9

    def test_full_turn_equals_identity(self, sierpinski3d):
        cloud = chaos_game(sierpinski3d, 1000, SeedKey(2))
        a = project(cloud, CameraPose(yaw=0)).points
        b = project(cloud, CameraPose(yaw=360)).points
        assert np.abs(a - b).max() < 1e-9

    def test_rejects_2d_cloud(self):
        flat = PointCloud(np.zeros((3, 2)))
        with pytest.raises(ValueError):
            project(flat, CameraPose())


class TestEnumerateViewpoints:
    def test_yaw_every_30_degrees_gives_12_poses(self):
        vs = enumerate_viewpoints(("yaw",), 30)
        assert len(vs.poses) == 12
        assert [p.yaw for p in vs.poses] == [30.0 * i for i in range(12)]
        assert all(p.roll == 0 and p.pitch == 0 for p in vs.poses)

    def test_count_law_for_two_axes(self):
        vs = enumerate_viewpoints(("pitch", "yaw"), 90)
        assert len(vs.poses) == (360 // 90) ** 2

    def test_axes_canonicalized_and_last_fastest(self):
        vs = enumerate_viewpoints(("yaw", "pitch"), 180)
        assert vs.axes == ("pitch", "yaw")
        expected = [(0, 0), (0, 180), (180, 0), (180, 180)]
        assert [(p.pitch, p.yaw) for p in vs.poses] == expected

    def test_rejects_bad_step_or_axis(self):
        with pytest.raises(ValueError):
            enumerate_viewpoints(("yaw",), 50)
        with pytest.raises(ValueError):
            enumerate_viewpoints(("yaw",), 0)
        with pytest.raises(ValueError):
            enumerate_viewpoints(("zoom",), 30)
        with pytest.raises(ValueError):
            enumerate_viewpoints((), 30)
