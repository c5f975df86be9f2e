"""
Training-side contract
======================

Build a 10-category one-instance dataset, lay out deterministic epoch
plans with per-image augmentation seeds, materialize batches, and fit a
multinomial logistic regression on raw pixels with the one-instance loss.
Also round-trips a plan through the length-prefixed binary stream format.
"""

import io
import os
import shutil

import numpy as np

from ofdb_forge import (
    DatasetSpec,
    SearchConfig,
    SeedKey,
    build,
    materialize_entry,
    one_instance_nll,
    plan_epoch,
    read_stream,
    stream_plan,
)

OUT = os.path.join(os.path.dirname(__file__), "output", "05_training")
shutil.rmtree(OUT, ignore_errors=True)

spec = DatasetSpec(
    name="train-10",
    dimension=2,
    categories=10,
    master_seed=20260815,
    image_side=64,
    points_per_cloud=5000,
    search=SearchConfig(target_categories=10, render_probe=64, probe_points=5000),
)
manifest = build(spec, OUT)
print(f"dataset: {len(manifest.records)} images")

# An epoch plan shuffles the categories once and assigns every image a
# fresh augmentation seed; two epochs redraw every pattern independently.
plan0 = plan_epoch(manifest, epoch=0, batch_size=4, augmentation="pattern",
                   seed=SeedKey(1), with_rotation=True)
plan1 = plan_epoch(manifest, epoch=1, batch_size=4, augmentation="pattern",
                   seed=SeedKey(1), with_rotation=True)
print("epoch 0 batch sizes:", [len(b) for b in plan0.batches()])
print("epoch order changes:",
      [e.category_id for e in plan0.entries] != [e.category_id for e in plan1.entries]
      or plan0.entries[0].aug_seed != plan1.entries[0].aug_seed)

batch = plan0.batches()[0]
images = np.stack([materialize_entry(manifest, OUT, e, "pattern") for e in batch])
print("materialized batch:", images.shape, "labels",
      [e.category_id for e in batch])

# Frame format: u32 label, u32 byte length, PNG bytes; concatenated.
buf = io.BytesIO()
n = stream_plan(manifest, OUT, plan0, buf)
buf.seek(0)
labels = [label for label, _ in read_stream(buf)]
print(f"streamed {n} frames, labels round-trip:",
      labels == [e.category_id for e in plan0.entries])

# One image per class makes a tiny, perfectly learnable training set.
records = sorted(manifest.records, key=lambda r: r.category_id)
from ofdb_forge.io_utils import read_png

X = np.stack([
    read_png(os.path.join(OUT, r.path)).astype(np.float64).ravel() / 255.0
    for r in records
])
X = np.hstack([X, np.ones((len(records), 1))])
c = len(records)
weights = np.zeros((c, X.shape[1]))
for step in range(1, 501):
    logits = X @ weights.T
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    accuracy = float(np.mean(np.argmax(probs, axis=1) == np.arange(c)))
    loss = one_instance_nll(probs, c)
    if step == 1 or accuracy == 1.0:
        print(f"step {step}: loss {loss:.4f}, accuracy {accuracy:.0%}")
    if accuracy == 1.0:
        break
    weights -= ((probs - np.eye(c)).T @ X) / c
