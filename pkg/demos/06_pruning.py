"""
Category pruning
================

Select a category subset by difficulty score.  Scores might come from a
probe model's per-category loss; here they are synthetic.  The keep set
mixes the easiest and hardest categories; a 50:50 split keeps both ends
of the difficulty range.
"""

import os
import shutil

import numpy as np

from ofdb_forge import DatasetSpec, SearchConfig, build, select_categories, verify
from ofdb_forge.cli import main as cli

OUT = os.path.join(os.path.dirname(__file__), "output", "06_pruning")
shutil.rmtree(OUT, ignore_errors=True)
root = os.path.join(OUT, "data")

spec = DatasetSpec(
    name="prune-12",
    dimension=2,
    categories=12,
    master_seed=5,
    image_side=64,
    points_per_cloud=5000,
    search=SearchConfig(target_categories=12, render_probe=64, probe_points=5000),
)
manifest = build(spec, root)

rng = np.random.default_rng(0)
scores = {c: float(rng.random()) for c in range(12)}
print("scores:", {c: round(s, 2) for c, s in scores.items()})

# Categories sort by ascending score; "easy" keeps come from the low end,
# "hard" keeps from the high end.
for easy_fraction in (0.0, 0.5, 1.0):
    kept = select_categories(manifest, scores, keep=6, easy_fraction=easy_fraction)
    print(f"keep 6, easy fraction {easy_fraction}: {kept}")

# The same operation through the CLI, producing a filtered manifest that
# still verifies against the original image tree.
import json

scores_path = os.path.join(OUT, "scores.json")
with open(scores_path, "w") as fh:
    json.dump({str(c): s for c, s in scores.items()}, fh)
filtered_path = os.path.join(OUT, "filtered_manifest.json")
rc = cli([
    "prune",
    "--manifest", os.path.join(root, "manifest.json"),
    "--scores", scores_path,
    "--keep", "6",
    "--easy-fraction", "0.5",
    "--out", os.path.join(OUT, "kept.json"),
    "--filtered-manifest", filtered_path,
])
print("cli prune exit code:", rc)

from ofdb_forge import load_manifest

sub = load_manifest(filtered_path)
print(f"filtered manifest: {sub.spec.categories} categories, "
      f"verify ok={verify(sub, root).ok}")
