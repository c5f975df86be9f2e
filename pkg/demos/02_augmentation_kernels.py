"""
Augmentation kernels
====================

Render one searched fractal category under every augmentation mode: the
plain binary render, random 3x3 binary patterns, random 3x3 textures, and
the ten fixed patch stamps.  All modes only redraw pixels inside the 3x3
neighborhoods of occupied cells, so the shape itself never changes.
"""

import os

import numpy as np

from ofdb_forge import (
    N_FIXED_PATCHES,
    SearchConfig,
    SeedKey,
    chaos_game,
    normalize_points,
    render_fixed_patch,
    render_pattern_aug,
    render_plain,
    render_texture_aug,
    search_categories,
)
from ofdb_forge.io_utils import write_png

OUT = os.path.join(os.path.dirname(__file__), "output", "02_augmentation")
os.makedirs(OUT, exist_ok=True)
SIDE = 128

# Search for one usable 2D system (fill rate >= 20% on a probe raster).
config = SearchConfig(target_categories=1, render_probe=64, probe_points=5000)
record = search_categories(config, dimension=2, master_seed=42)[0]
print(f"accepted candidate at stream {record.seed.stream_index}, "
      f"fill rate {record.acceptance_stat[0]:.3f}")

cloud = chaos_game(record.ifs, 50_000, record.seed.child(1))
grid = normalize_points(cloud, SIDE, margin=0.05)

write_png(os.path.join(OUT, "plain.png"), render_plain(grid))

# Two draws of each random mode: same shape, different dots.
for tag, kernel in (("pattern", render_pattern_aug), ("texture", render_texture_aug)):
    for draw in range(2):
        img = kernel(grid, SeedKey(2026, draw))
        write_png(os.path.join(OUT, f"{tag}_{draw}.png"), img)
    print(f"{tag}: wrote 2 variants")

# The fixed patch table: index 0 is the plain single dot, index 1 the full
# 3x3 block, the rest are crosses, bars, diagonals, a ring, and corners.
sheet = []
for index in range(N_FIXED_PATCHES):
    img = render_fixed_patch(grid, index)
    write_png(os.path.join(OUT, f"patch_{index}.png"), img)
    sheet.append(img)
contact = np.hstack([np.pad(s, 2) for s in sheet])
write_png(os.path.join(OUT, "patch_sheet.png"), contact)
print(f"fixed patches: wrote {N_FIXED_PATCHES} renders and a contact sheet")
print("output in", OUT)
