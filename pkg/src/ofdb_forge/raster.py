"""Rasterization of point clouds and the fractal-specific augmentation stamps.

Images are plain numpy arrays: shape (side, side), dtype uint8, background 0
and foreground 255 (polarity can be flipped at export time by the dataset
builder).  A rendered dot occupies one pixel cell; every augmentation replaces
each dot with a 3x3 stamp centered on its cell, stamps are composited with a
per-pixel max, and pixels falling outside the image are clipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateExtentError, EmptyCloudError
from .ifs import PointCloud
from .seeds import SeedKey

MIN_SIDE = 8

N_BINARY_PATTERNS = 512  # 2**(3*3), the all-zero pattern included

# Published table of fixed 3x3 patch patterns for the x10 instance expansion.
# Index 0 is the single center dot, so it reproduces the plain render.
FIXED_PATCH_PATTERNS = np.array(
    [
        [[0, 0, 0], [0, 1, 0], [0, 0, 0]],  # 0: center dot
        [[1, 1, 1], [1, 1, 1], [1, 1, 1]],  # 1: full block
        [[0, 1, 0], [1, 1, 1], [0, 1, 0]],  # 2: cross
        [[1, 0, 1], [0, 1, 0], [1, 0, 1]],  # 3: X
        [[0, 0, 0], [1, 1, 1], [0, 0, 0]],  # 4: horizontal bar
        [[0, 1, 0], [0, 1, 0], [0, 1, 0]],  # 5: vertical bar
        [[1, 0, 0], [0, 1, 0], [0, 0, 1]],  # 6: main diagonal
        [[0, 0, 1], [0, 1, 0], [1, 0, 0]],  # 7: anti-diagonal
        [[1, 1, 1], [1, 0, 1], [1, 1, 1]],  # 8: hollow ring
        [[1, 0, 1], [0, 0, 0], [1, 0, 1]],  # 9: corners
    ],
    dtype=np.uint8,
)
N_FIXED_PATCHES = len(FIXED_PATCH_PATTERNS)


@dataclass(frozen=True)
class DotGrid:
    """Occupancy grid: cells of a side x side raster hit by >= 1 point."""

    side: int
    mask: np.ndarray

    def __post_init__(self):
        mask = np.ascontiguousarray(self.mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        if self.side < MIN_SIDE:
            raise ValueError(f"side must be >= {MIN_SIDE}, got {self.side}")
        if mask.shape != (self.side, self.side):
            raise ValueError(f"mask shape {mask.shape} != ({self.side}, {self.side})")

    def occupied_cells(self) -> np.ndarray:
        """(n, 2) array of occupied (row, col) cells in row-major order."""
        return np.argwhere(self.mask)

    @property
    def n_occupied(self) -> int:
        return int(self.mask.sum())


def normalize_points(cloud: PointCloud, side: int, margin: float = 0.05) -> DotGrid:
    """Fit a 2D cloud into a side x side grid and mark the cells points hit.

    The bounding box is scaled isotropically (longest axis governs) and
    centered so the cloud occupies the (1 - 2*margin)*side inner square.
    Cell (row, col) = (floor of scaled y, floor of scaled x), clamped to the
    grid.  Raises DegenerateExtentError when the cloud has zero extent along
    every axis (a single repeated point); one non-degenerate axis suffices.
    """
    if side < MIN_SIDE:
        raise ValueError(f"side must be >= {MIN_SIDE}, got {side}")
    if not 0.0 <= margin < 0.5:
        raise ValueError(f"margin must be in [0, 0.5), got {margin}")
    if cloud.dimension != 2:
        raise ValueError("normalize_points expects a 2D cloud; project 3D first")
    pts = cloud.points
    if len(pts) == 0:
        raise EmptyCloudError("cannot normalize an empty cloud")

    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = float((hi - lo).max())
    if extent == 0.0:
        raise DegenerateExtentError("cloud is a single point; no extent to scale")

    scale = (1.0 - 2.0 * margin) * side / extent
    center = (lo + hi) / 2.0
    xy = (pts - center) * scale + side / 2.0
    idx = np.clip(np.floor(xy).astype(np.int64), 0, side - 1)

    mask = np.zeros((side, side), dtype=bool)
    mask[idx[:, 1], idx[:, 0]] = True  # row = y cell, col = x cell
    return DotGrid(side=side, mask=mask)


def render_plain(grid: DotGrid) -> np.ndarray:
    """Binary render: occupied cells 255, everything else 0."""
    return np.where(grid.mask, 255, 0).astype(np.uint8)


def pattern_bits(pattern_id: int) -> np.ndarray:
    """Decode a pattern id in [0, 512) to its 3x3 binary mask.

    Bit k of the id (LSB first) is the mask entry at (k // 3, k % 3).
    """
    if not 0 <= pattern_id < N_BINARY_PATTERNS:
        raise ValueError(f"pattern_id must be in [0, 512), got {pattern_id}")
    bits = (pattern_id >> np.arange(9)) & 1
    return bits.reshape(3, 3).astype(np.uint8)


def _stamp_binary(img: np.ndarray, cells: np.ndarray, ids: np.ndarray) -> None:
    # Per-cell 3x3 binary stamps, centered, union-composited, clipped.
    side = img.shape[0]
    for k in range(9):
        on = ((ids >> k) & 1).astype(bool)
        if not on.any():
            continue
        rr = cells[on, 0] + k // 3 - 1
        cc = cells[on, 1] + k % 3 - 1
        keep = (rr >= 0) & (rr < side) & (cc >= 0) & (cc < side)
        img[rr[keep], cc[keep]] = 255


def render_pattern_aug(grid: DotGrid, seed: SeedKey) -> np.ndarray:
    """Stamp every dot with an independent uniform-random 3x3 binary pattern.

    Patterns are drawn uniformly over all 512 binary 3x3 masks (the all-zero
    mask included), assigned to occupied cells in row-major order.
    """
    cells = grid.occupied_cells()
    img = np.zeros((grid.side, grid.side), dtype=np.uint8)
    if len(cells) == 0:
        return img
    ids = seed.rng().integers(0, N_BINARY_PATTERNS, size=len(cells))
    _stamp_binary(img, cells, ids)
    return img


def render_texture_aug(grid: DotGrid, seed: SeedKey) -> np.ndarray:
    """Stamp every dot with a 3x3 patch of independent uniform intensities.

    Each of the nine stamp pixels is drawn uniformly from {0, ..., 255};
    overlapping stamps composite by per-pixel max.
    """
    cells = grid.occupied_cells()
    img = np.zeros((grid.side, grid.side), dtype=np.uint8)
    if len(cells) == 0:
        return img
    values = seed.rng().integers(0, 256, size=(len(cells), 9), dtype=np.uint8)
    side = grid.side
    for k in range(9):
        rr = cells[:, 0] + k // 3 - 1
        cc = cells[:, 1] + k % 3 - 1
        keep = (rr >= 0) & (rr < side) & (cc >= 0) & (cc < side)
        np.maximum.at(img, (rr[keep], cc[keep]), values[keep, k])
    return img


def render_fixed_patch(grid: DotGrid, pattern_index: int) -> np.ndarray:
    """Stamp every dot with the same fixed pattern from the published table."""
    if not 0 <= pattern_index < N_FIXED_PATCHES:
        raise ValueError(
            f"pattern_index must be in [0, {N_FIXED_PATCHES}), got {pattern_index}"
        )
    cells = grid.occupied_cells()
    img = np.zeros((grid.side, grid.side), dtype=np.uint8)
    if len(cells) == 0:
        return img
    bits = FIXED_PATCH_PATTERNS[pattern_index].reshape(9)
    pattern_id = int((bits.astype(np.int64) << np.arange(9)).sum())
    _stamp_binary(img, cells, np.full(len(cells), pattern_id, dtype=np.int64))
    return img


def rotate90(img: np.ndarray, quarter_turns: int) -> np.ndarray:
    """Lossless clockwise rotation by quarter_turns * 90 degrees.

    One turn maps pixel (r, c) to (c, side - 1 - r).
    """
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ValueError(f"expected a square image, got shape {img.shape}")
    if not 0 <= quarter_turns <= 3:
        raise ValueError(f"quarter_turns must be in 0..3, got {quarter_turns}")
    return np.ascontiguousarray(np.rot90(img, -quarter_turns))


def dot_neighborhood_mask(grid: DotGrid) -> np.ndarray:
    """Boolean mask of the union of 3x3 neighborhoods of all occupied cells.

    Every augmentation mode writes foreground only inside this region, so two
    renders of the same grid can differ only here (the shape-preservation
    guarantee of the stamp kernels).
    """
    out = np.zeros_like(grid.mask)
    side = grid.side
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            src_r = slice(max(0, -dr), side - max(0, dr))
            dst_r = slice(max(0, dr), side - max(0, -dr))
            src_c = slice(max(0, -dc), side - max(0, dc))
            dst_c = slice(max(0, dc), side - max(0, -dc))
            out[dst_r, dst_c] |= grid.mask[src_r, src_c]
    return out
