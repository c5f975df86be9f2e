"""
Chaos game basics
=================

Build an iterated function system by hand, sample its attractor with the
chaos game, and rasterize the point cloud to a PNG.
"""

import os

import numpy as np

from ofdb_forge import (
    AffineMap,
    IfsSystem,
    SeedKey,
    chaos_game,
    det_weighted_probabilities,
    normalize_points,
    render_plain,
)
from ofdb_forge.io_utils import write_png

OUT = os.path.join(os.path.dirname(__file__), "output", "01_chaos_game")
os.makedirs(OUT, exist_ok=True)

# Three half-scale contractions toward the corners of a right triangle.
# Iterating them traces the Sierpinski gasket.
half = 0.5 * np.eye(2)
maps = tuple(
    AffineMap(half, np.array(corner))
    for corner in ([0.0, 0.0], [0.5, 0.0], [0.0, 0.5])
)

# Selection probabilities are proportional to |det| of each linear part;
# here all three determinants are 0.25, so the weights come out uniform.
probs = det_weighted_probabilities(maps)
print("det-weighted probabilities:", probs)

ifs = IfsSystem(maps, probs)

# Run the chaos game.  The seed is a (master, stream) pair; the same pair
# always reproduces the same cloud, bit for bit.
cloud = chaos_game(ifs, 100_000, SeedKey(7), burn_in=100)
print(f"sampled {len(cloud)} points, "
      f"bbox x [{cloud.points[:, 0].min():.3f}, {cloud.points[:, 0].max():.3f}]")

again = chaos_game(ifs, 100_000, SeedKey(7), burn_in=100)
print("re-run identical:", np.array_equal(cloud.points, again.points))

# Rasterize: fit the cloud isotropically into a 256-pixel square with a 5%
# margin, mark occupied cells, write white-on-black.
grid = normalize_points(cloud, side=256, margin=0.05)
image = render_plain(grid)
path = os.path.join(OUT, "sierpinski.png")
write_png(path, image)
print(f"occupied cells: {grid.n_occupied} / {256 * 256}")
print("wrote", path)
