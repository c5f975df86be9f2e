"""Shared fixtures: oracle IFSs with known geometry and a small built dataset."""

import numpy as np
import pytest

from ofdb_forge import AffineMap, DatasetSpec, IfsSystem, SearchConfig, build


@pytest.fixture(scope="session")
def sierpinski2d() -> IfsSystem:
    """Three half-scale maps toward the corners of a right triangle.

    The attractor is the Sierpinski gasket; |det| = 0.25 for every map, so
    the det-weighted probabilities are exactly uniform.
    """
    half = 0.5 * np.eye(2)
    corners = ([0.0, 0.0], [0.5, 0.0], [0.0, 0.5])
    maps = tuple(AffineMap(half, np.array(t)) for t in corners)
    return IfsSystem(maps, np.full(3, 1.0 / 3.0))


@pytest.fixture(scope="session")
def sierpinski3d() -> IfsSystem:
    """Four half-scale maps toward tetrahedron vertices (3D gasket)."""
    half = 0.5 * np.eye(3)
    corners = (
        [0.0, 0.0, 0.0],
        [0.5, 0.0, 0.0],
        [0.0, 0.5, 0.0],
        [0.0, 0.0, 0.5],
    )
    maps = tuple(AffineMap(half, np.array(t)) for t in corners)
    return IfsSystem(maps, np.full(4, 0.25))


def desk_spec(**overrides) -> DatasetSpec:
    """A cheap 2D build spec; tests override individual fields as needed."""
    base = dict(
        name="desk",
        dimension=2,
        categories=6,
        master_seed=20260815,
        image_side=64,
        points_per_cloud=3000,
    )
    base.update(overrides)
    if "search" not in base:
        base["search"] = SearchConfig(
            target_categories=base["categories"],
            render_probe=64,
            probe_points=base["points_per_cloud"],
            probe_burn_in=base.get("burn_in", 100),
            variance_threshold=0.004,
            require_variant_stability=base.get("expansion") is not None,
        )
    return DatasetSpec(**base)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """One shared 10-category 2D build; treat the directory as read-only."""
    root = tmp_path_factory.mktemp("small2d")
    spec = desk_spec(categories=10, name="small2d")
    manifest = build(spec, root, workers=1, overwrite=True)
    return manifest, root
