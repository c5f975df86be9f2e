"""Virtual camera: roll/pitch/yaw rotation and orthographic projection to 2D.

The composition order is fixed for reproducibility: R = Rz(yaw) @ Ry(pitch)
@ Rx(roll), each a standard right-handed axis rotation.  Projection is
orthographic: rotate the cloud, then drop the depth (z) axis, so the camera
looks along -z.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ifs import PointCloud

AXES = ("roll", "pitch", "yaw")


@dataclass(frozen=True)
class CameraPose:
    """Camera orientation in degrees; angles are normalized into [0, 360)."""

    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        for name in AXES:
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v % 360.0)


def _axis_rotation(axis: int, degrees: float) -> np.ndarray:
    theta = math.radians(degrees)
    c, s = math.cos(theta), math.sin(theta)
    r = np.eye(3)
    i, j = [(1, 2), (0, 2), (0, 1)][axis]
    r[i, i] = c
    r[j, j] = c
    r[i, j] = -s if axis != 1 else s
    r[j, i] = s if axis != 1 else -s
    return r


def rotation_matrix(pose: CameraPose) -> np.ndarray:
    """3x3 rotation Rz(yaw) @ Ry(pitch) @ Rx(roll); orthonormal, det +1."""
    return (
        _axis_rotation(2, pose.yaw)
        @ _axis_rotation(1, pose.pitch)
        @ _axis_rotation(0, pose.roll)
    )


def project(cloud: PointCloud, pose: CameraPose) -> PointCloud:
    """Rotate a 3D cloud by the pose and drop the depth axis.

    Returns the (x, y) pairs as a 2D cloud; point order is preserved and the
    generation metadata is carried over.
    """
    if cloud.dimension != 3:
        raise ValueError("project expects a 3D cloud")
    rotated = cloud.points @ rotation_matrix(pose).T
    return PointCloud(
        points=rotated[:, :2],
        source_seed=cloud.source_seed,
        burn_in=cloud.burn_in,
    )


@dataclass(frozen=True)
class ViewpointSet:
    """All camera poses on a fixed angular grid over a subset of axes."""

    axes: tuple[str, ...]
    step: float
    poses: tuple[CameraPose, ...]


def enumerate_viewpoints(axes, step: float) -> ViewpointSet:
    """Enumerate poses stepping each chosen axis through {0, step, ..., 360-step}.

    Axes are taken in canonical (roll, pitch, yaw) order with the last axis
    varying fastest; unchosen axes stay at 0.  The default 3D configuration,
    axes={yaw} with step=30, yields the 12 fixed viewpoints.
    """
    chosen = tuple(a for a in AXES if a in set(axes))
    if not chosen:
        raise ValueError(f"need a non-empty subset of {AXES}")
    unknown = set(axes) - set(AXES)
    if unknown:
        raise ValueError(f"unknown axes: {sorted(unknown)}")
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    n = 360.0 / step
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"step must divide 360, got {step}")
    angles = [i * step for i in range(round(n))]
    poses = tuple(
        CameraPose(**dict(zip(chosen, combo)))
        for combo in itertools.product(angles, repeat=len(chosen))
    )
    return ViewpointSet(axes=chosen, step=float(step), poses=poses)
