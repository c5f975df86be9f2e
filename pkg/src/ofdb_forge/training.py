"""Training-side contract: losses, epoch batch plans, and batch streaming.

The losses mirror the one-instance setting: with exactly one image per
category and labels y_i = i, cross-entropy collapses to the mean negative
log-probability of the diagonal.  Epoch plans pre-assign a fresh augmentation
seed (and optional quarter-turn draw) to every category so trainers in any
language reproduce the same batches.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError
from .io_utils import dumps_json17, encode_png, read_png
from .raster import DotGrid, render_pattern_aug, render_plain, render_texture_aug, rotate90
from .seeds import TAG_PLAN, TAG_PLAN_AUG, SeedKey

PROB_FLOOR = 1e-12
PLAN_AUGMENTATIONS = ("plain", "pattern", "texture")


def _clamped_log(values: np.ndarray) -> np.ndarray:
    return np.log(np.clip(values, PROB_FLOOR, 1.0))


def cross_entropy(preds: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-probability of the labeled class.

    preds is an N x C row-stochastic matrix; labels an N-vector of class
    indices.  Probabilities are clamped to [1e-12, 1] so the loss is total.
    """
    preds = np.asarray(preds, dtype=np.float64)
    labels = np.asarray(labels)
    if preds.ndim != 2:
        raise ShapeMismatchError(f"predictions must be 2D, got shape {preds.shape}")
    if labels.ndim != 1 or len(labels) != preds.shape[0]:
        raise ShapeMismatchError(
            f"labels length {labels.shape} does not match {preds.shape[0]} rows"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= preds.shape[1]):
        raise ValueError("label index out of range")
    picked = preds[np.arange(preds.shape[0]), labels]
    return float(-np.mean(_clamped_log(picked)))


def one_instance_nll(preds: np.ndarray, n_categories: int) -> float:
    """Negative log-likelihood of the diagonal of a C x C prediction matrix.

    Row c holds the prediction for category c's single instance, so the
    correct class of row c is c itself.
    """
    preds = np.asarray(preds, dtype=np.float64)
    if preds.ndim != 2 or preds.shape != (n_categories, n_categories):
        raise ShapeMismatchError(
            f"expected a {n_categories}x{n_categories} matrix, got {preds.shape}"
        )
    return float(-np.mean(_clamped_log(np.diag(preds))))


@dataclass(frozen=True)
class PlanEntry:
    """One training image for the epoch: category, its fresh seed, rotation."""

    category_id: int
    aug_seed: SeedKey
    rotation: int = 0

    def to_dict(self) -> dict:
        return {
            "category_id": self.category_id,
            "aug_seed": {
                "master_seed": self.aug_seed.master_seed,
                "stream_index": self.aug_seed.stream_index,
            },
            "rotation": self.rotation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlanEntry":
        return cls(
            category_id=data["category_id"],
            aug_seed=SeedKey(
                data["aug_seed"]["master_seed"], data["aug_seed"]["stream_index"]
            ),
            rotation=data.get("rotation", 0),
        )


@dataclass(frozen=True)
class BatchPlan:
    """A deterministic epoch schedule: every category exactly once."""

    epoch: int
    batch_size: int
    augmentation: str
    entries: tuple[PlanEntry, ...]

    def batches(self) -> list[tuple[PlanEntry, ...]]:
        return [
            self.entries[i : i + self.batch_size]
            for i in range(0, len(self.entries), self.batch_size)
        ]

    def to_json(self) -> str:
        return dumps_json17(
            {
                "epoch": self.epoch,
                "batch_size": self.batch_size,
                "augmentation": self.augmentation,
                "entries": [e.to_dict() for e in self.entries],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "BatchPlan":
        data = json.loads(text)
        return cls(
            epoch=data["epoch"],
            batch_size=data["batch_size"],
            augmentation=data["augmentation"],
            entries=tuple(PlanEntry.from_dict(e) for e in data["entries"]),
        )


def plan_epoch(
    manifest,
    epoch: int,
    batch_size: int,
    augmentation: str,
    seed: SeedKey,
    with_rotation: bool = False,
) -> BatchPlan:
    """Shuffle all categories for one epoch and assign per-image seeds.

    The shuffle and rotation draws are keyed by (seed, epoch); augmentation
    seeds are keyed by (seed, epoch, category_id), so every epoch re-draws
    every image's pattern or texture independently.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if augmentation not in PLAN_AUGMENTATIONS:
        raise ValueError(f"unknown plan augmentation {augmentation!r}")
    category_ids = sorted({r.category_id for r in manifest.records})
    rng = seed.child(TAG_PLAN, epoch).rng()
    order = rng.permutation(len(category_ids))
    rotations = (
        rng.integers(0, 4, size=len(category_ids))
        if with_rotation
        else np.zeros(len(category_ids), dtype=np.int64)
    )
    entries = tuple(
        PlanEntry(
            category_id=category_ids[order[i]],
            aug_seed=seed.child(TAG_PLAN_AUG, epoch, category_ids[order[i]]),
            rotation=int(rotations[i]),
        )
        for i in range(len(category_ids))
    )
    return BatchPlan(
        epoch=epoch, batch_size=batch_size, augmentation=augmentation,
        entries=entries,
    )


def materialize_entry(manifest, root, entry: PlanEntry, augmentation: str) -> np.ndarray:
    """Load the stored plain render and apply the entry's augmentation.

    Only instance 0 of the category is used; one-instance datasets have no
    other instance, and stored renders are binary so the occupied-cell grid
    reconstructs exactly from the image.
    """
    record = next(
        r
        for r in manifest.records
        if r.category_id == entry.category_id and r.instance_id == 0
    )
    image = read_png(os.path.join(os.fspath(root), record.path))
    grid = DotGrid(image.shape[0], image > 0)
    if augmentation == "plain":
        out = render_plain(grid)
    elif augmentation == "pattern":
        out = render_pattern_aug(grid, entry.aug_seed)
    elif augmentation == "texture":
        out = render_texture_aug(grid, entry.aug_seed)
    else:
        raise ValueError(f"unknown plan augmentation {augmentation!r}")
    return rotate90(out, entry.rotation)


# --- length-prefixed batch streaming -----------------------------------------
#
# Frame layout, little endian:
#   u32 label (category id), u32 payload length, then that many PNG bytes.
# A stream is any concatenation of frames; readers stop cleanly at EOF.

_FRAME_HEADER = struct.Struct("<II")


def write_stream(fh, frames) -> int:
    """Write (label, png_bytes) frames; returns the number written."""
    count = 0
    for label, data in frames:
        fh.write(_FRAME_HEADER.pack(label, len(data)))
        fh.write(data)
        count += 1
    return count


def read_stream(fh):
    """Yield (label, png_bytes) frames until EOF; trailing garbage is an error."""
    while True:
        header = fh.read(_FRAME_HEADER.size)
        if not header:
            return
        if len(header) < _FRAME_HEADER.size:
            raise ValueError("truncated stream header")
        label, length = _FRAME_HEADER.unpack(header)
        data = fh.read(length)
        if len(data) < length:
            raise ValueError("truncated stream payload")
        yield label, data


def stream_plan(manifest, root, plan: BatchPlan, fh) -> int:
    """Materialize a plan in entry order and emit it as framed PNG bytes."""
    return write_stream(
        fh,
        (
            (entry.category_id, encode_png(
                materialize_entry(manifest, root, entry, plan.augmentation)
            ))
            for entry in plan.entries
        ),
    )
