"""End-to-end dataset builds: search, render, write, verify, prune.

A dataset is a directory of PNGs laid out as <category:05d>/<instance:04d>.png
plus a categories.csv (the accepted IFS parameters) and a manifest.json whose
records carry per-image seeds and checksums.  Everything the build writes is a
deterministic function of the DatasetSpec, independent of worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraPose, ViewpointSet, enumerate_viewpoints, project
from .errors import InsufficientCategoriesError
from .ifs import IfsSystem, chaos_game, fluctuate_ifs
from .io_utils import (
    checksum_bytes,
    checksum_file,
    encode_png,
    read_json,
    write_json17,
    write_png,
)
from .raster import (
    normalize_points,
    render_fixed_patch,
    render_pattern_aug,
    render_plain,
    render_texture_aug,
    rotate90,
)
from .search import (
    CategoryRecord,
    SearchConfig,
    SearchStats,
    format_category_line,
    parse_category_line,
    search_categories_with_stats,
)
from .seeds import TAG_AUG, TAG_CLOUD, SeedKey
from .version import __version__

SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"
CATEGORY_FILE_NAME = "categories.csv"
AUGMENTATION_MODES = ("plain", "pattern", "texture", "fixed_patch")
POSE_POLICIES = ("modulo", "first")


@dataclass(frozen=True)
class ExpansionSpec:
    """Full-instance expansion grid: rotations x fluctuations x patch patterns."""

    rotations: int = 4
    fluctuations: int = 25
    patches: int = 10

    def __post_init__(self):
        if not 1 <= self.rotations <= 4:
            raise ValueError("rotations must be in 1..4")
        if not 1 <= self.fluctuations <= 25:
            raise ValueError("fluctuations must be in 1..25")
        if not 1 <= self.patches <= 10:
            raise ValueError("patches must be in 1..10")

    @property
    def instances(self) -> int:
        return self.rotations * self.fluctuations * self.patches

    def instance_id(self, rotation: int, fluctuation: int, patch: int) -> int:
        return (rotation * self.fluctuations + fluctuation) * self.patches + patch

    def decompose(self, instance_id: int) -> tuple[int, int, int]:
        """Unique (rotation, fluctuation, patch) triple of an instance id."""
        if not 0 <= instance_id < self.instances:
            raise ValueError(f"instance_id {instance_id} out of range")
        patch = instance_id % self.patches
        rest = instance_id // self.patches
        return rest // self.fluctuations, rest % self.fluctuations, patch

    def to_dict(self) -> dict:
        return {
            "rotations": self.rotations,
            "fluctuations": self.fluctuations,
            "patches": self.patches,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExpansionSpec":
        return cls(**data)


@dataclass(frozen=True)
class DatasetSpec:
    """Complete description of a build; the dataset is a function of this."""

    name: str
    dimension: int
    categories: int
    augmentation_mode: str = "plain"
    expansion: ExpansionSpec | None = None
    master_seed: int = 0
    image_side: int = 256
    points_per_cloud: int = 100_000
    burn_in: int = 100
    margin: float = 0.05
    search: SearchConfig | None = None
    viewpoints: ViewpointSet | None = None
    pose_policy: str = "modulo"
    fixed_patch_index: int = 0

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.categories < 1:
            raise ValueError("categories must be >= 1")
        if self.augmentation_mode not in AUGMENTATION_MODES:
            raise ValueError(f"unknown augmentation_mode {self.augmentation_mode!r}")
        if self.pose_policy not in POSE_POLICIES:
            raise ValueError(f"unknown pose_policy {self.pose_policy!r}")
        if not 0 <= self.fixed_patch_index < 10:
            raise ValueError("fixed_patch_index must be in 0..9")
        if self.search is None:
            object.__setattr__(
                self,
                "search",
                SearchConfig(
                    target_categories=self.categories,
                    probe_points=self.points_per_cloud,
                    probe_burn_in=self.burn_in,
                    require_variant_stability=self.expansion is not None,
                ),
            )
        if self.search.target_categories != self.categories:
            raise ValueError("search.target_categories must equal categories")
        if self.dimension == 3 and self.viewpoints is None:
            object.__setattr__(
                self, "viewpoints", enumerate_viewpoints(("yaw",), 30.0)
            )
        if self.dimension == 2 and self.viewpoints is not None:
            raise ValueError("viewpoints only apply to 3D builds")

    @property
    def instances_per_category(self) -> int:
        return self.expansion.instances if self.expansion is not None else 1

    def to_dict(self) -> dict:
        search = self.search
        return {
            "name": self.name,
            "dimension": self.dimension,
            "categories": self.categories,
            "instances_per_category": self.instances_per_category,
            "augmentation_mode": self.augmentation_mode,
            "expansion": self.expansion.to_dict() if self.expansion else None,
            "master_seed": self.master_seed,
            "image_side": self.image_side,
            "points_per_cloud": self.points_per_cloud,
            "burn_in": self.burn_in,
            "margin": float(self.margin),
            "search": {
                "target_categories": search.target_categories,
                "fill_rate_threshold": float(search.fill_rate_threshold),
                "variance_threshold": float(search.variance_threshold),
                "max_attempts": search.max_attempts,
                "render_probe": search.render_probe,
                "probe_points": search.probe_points,
                "probe_burn_in": search.probe_burn_in,
                "require_variant_stability": search.require_variant_stability,
            },
            "viewpoints": (
                {
                    "axes": list(self.viewpoints.axes),
                    "step": float(self.viewpoints.step),
                }
                if self.viewpoints
                else None
            ),
            "pose_policy": self.pose_policy,
            "fixed_patch_index": self.fixed_patch_index,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetSpec":
        search = data.get("search")
        viewpoints = data.get("viewpoints")
        expansion = data.get("expansion")
        return cls(
            name=data["name"],
            dimension=data["dimension"],
            categories=data["categories"],
            augmentation_mode=data.get("augmentation_mode", "plain"),
            expansion=ExpansionSpec.from_dict(expansion) if expansion else None,
            master_seed=data.get("master_seed", 0),
            image_side=data.get("image_side", 256),
            points_per_cloud=data.get("points_per_cloud", 100_000),
            burn_in=data.get("burn_in", 100),
            margin=data.get("margin", 0.05),
            search=SearchConfig(**search) if search else None,
            viewpoints=(
                enumerate_viewpoints(tuple(viewpoints["axes"]), viewpoints["step"])
                if viewpoints
                else None
            ),
            pose_policy=data.get("pose_policy", "modulo"),
            fixed_patch_index=data.get("fixed_patch_index", 0),
        )


@dataclass(frozen=True)
class RecordEntry:
    """One image of the dataset: identity, location, seed, checksum."""

    category_id: int
    instance_id: int
    path: str
    seed: SeedKey
    pose: CameraPose | None
    checksum: str

    def to_dict(self) -> dict:
        return {
            "category_id": self.category_id,
            "instance_id": self.instance_id,
            "path": self.path,
            "seed": {
                "master_seed": self.seed.master_seed,
                "stream_index": self.seed.stream_index,
            },
            "pose": (
                {
                    "roll": float(self.pose.roll),
                    "pitch": float(self.pose.pitch),
                    "yaw": float(self.pose.yaw),
                }
                if self.pose
                else None
            ),
            "checksum": self.checksum,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RecordEntry":
        pose = data.get("pose")
        return cls(
            category_id=data["category_id"],
            instance_id=data["instance_id"],
            path=data["path"],
            seed=SeedKey(data["seed"]["master_seed"], data["seed"]["stream_index"]),
            pose=CameraPose(**pose) if pose else None,
            checksum=data["checksum"],
        )


@dataclass(frozen=True)
class DatasetManifest:
    """Schema-versioned index of a finished build."""

    spec: DatasetSpec
    records: tuple[RecordEntry, ...]
    category_lines: tuple[str, ...]
    search_stats: SearchStats
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "spec": self.spec.to_dict(),
            "search_stats": {
                "candidates_consumed": self.search_stats.candidates_consumed,
                "accepted": self.search_stats.accepted,
                "acceptance_rate": self.search_stats.acceptance_rate,
            },
            "category_file": CATEGORY_FILE_NAME,
            "category_lines": list(self.category_lines),
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported manifest schema {data.get('schema_version')}")
        stats = data["search_stats"]
        return cls(
            spec=DatasetSpec.from_dict(data["spec"]),
            records=tuple(RecordEntry.from_dict(r) for r in data["records"]),
            category_lines=tuple(data["category_lines"]),
            search_stats=SearchStats(
                candidates_consumed=stats["candidates_consumed"],
                accepted=stats["accepted"],
            ),
            tool_version=data["tool_version"],
        )

    def categories(self) -> list[CategoryRecord]:
        return [parse_category_line(line) for line in self.category_lines]


def save_manifest(manifest: DatasetManifest, path) -> None:
    write_json17(path, manifest.to_dict())


def load_manifest(path) -> DatasetManifest:
    return DatasetManifest.from_dict(read_json(path))


def pose_for_category(spec: DatasetSpec, category_id: int) -> CameraPose | None:
    """3D pose assignment: cycle through the pose set by category id."""
    if spec.viewpoints is None:
        return None
    poses = spec.viewpoints.poses
    if spec.pose_policy == "first":
        return poses[0]
    return poses[category_id % len(poses)]


def instance_relpath(category_id: int, instance_id: int) -> str:
    return f"{category_id:05d}/{instance_id:04d}.png"


def render_instance(
    spec: DatasetSpec,
    ifs: IfsSystem,
    seed: SeedKey,
    category_id: int,
    instance_id: int,
    pose: CameraPose | None,
) -> np.ndarray:
    """Render one dataset image from its category IFS and seed.

    The cloud stream is shared by every instance of a category (and by the
    search probe), so expansion variants differ only through the coefficient
    fluctuation, patch stamp, and rotation applied on top.
    """
    cloud_key = seed.child(TAG_CLOUD)
    if spec.expansion is not None:
        rotation, fluctuation, patch = spec.expansion.decompose(instance_id)
        system = fluctuate_ifs(ifs, fluctuation)
        cloud = chaos_game(
            system, spec.points_per_cloud, cloud_key, burn_in=spec.burn_in
        )
        if spec.dimension == 3:
            cloud = project(cloud, pose)
        grid = normalize_points(cloud, spec.image_side, margin=spec.margin)
        return rotate90(render_fixed_patch(grid, patch), rotation)

    cloud = chaos_game(ifs, spec.points_per_cloud, cloud_key, burn_in=spec.burn_in)
    if spec.dimension == 3:
        cloud = project(cloud, pose)
    grid = normalize_points(cloud, spec.image_side, margin=spec.margin)
    mode = spec.augmentation_mode
    if mode == "plain":
        return render_plain(grid)
    if mode == "fixed_patch":
        return render_fixed_patch(grid, spec.fixed_patch_index)
    aug_key = seed.child(TAG_AUG, instance_id)
    if mode == "pattern":
        return render_pattern_aug(grid, aug_key)
    return render_texture_aug(grid, aug_key)


def _generate_category(args) -> list[tuple[int, str, str]]:
    """Worker: render and write every instance of one category.

    Returns (instance_id, relpath, checksum) triples; file writes land in the
    category's own subdirectory so parallel workers never contend.
    """
    spec, category, out_root = args
    pose = pose_for_category(spec, category.category_id)
    cat_dir = os.path.join(out_root, f"{category.category_id:05d}")
    os.makedirs(cat_dir, exist_ok=True)
    out: list[tuple[int, str, str]] = []

    if spec.expansion is None:
        relpath = instance_relpath(category.category_id, 0)
        image = render_instance(spec, category.ifs, category.seed,
                                category.category_id, 0, pose)
        data = write_png(os.path.join(out_root, relpath), image)
        return [(0, relpath, checksum_bytes(data))]

    # Expansion grid: one cloud per fluctuation serves patches x rotations.
    exp = spec.expansion
    cloud_key = category.seed.child(TAG_CLOUD)
    for fluctuation in range(exp.fluctuations):
        system = fluctuate_ifs(category.ifs, fluctuation)
        cloud = chaos_game(
            system, spec.points_per_cloud, cloud_key, burn_in=spec.burn_in
        )
        if spec.dimension == 3:
            cloud = project(cloud, pose)
        grid = normalize_points(cloud, spec.image_side, margin=spec.margin)
        for patch in range(exp.patches):
            base = render_fixed_patch(grid, patch)
            for rotation in range(exp.rotations):
                instance_id = exp.instance_id(rotation, fluctuation, patch)
                relpath = instance_relpath(category.category_id, instance_id)
                data = write_png(
                    os.path.join(out_root, relpath), rotate90(base, rotation)
                )
                out.append((instance_id, relpath, checksum_bytes(data)))
    out.sort()
    return out


def build(
    spec: DatasetSpec, out_dir, workers: int = 1, overwrite: bool = False
) -> DatasetManifest:
    """Run the full pipeline and write images, category file, and manifest.

    Refuses a non-empty output directory unless overwrite is set.  If any
    stage fails, files written so far are removed so no half-built dataset
    is left looking valid.
    """
    out_root = os.fspath(out_dir)
    if os.path.isdir(out_root) and os.listdir(out_root) and not overwrite:
        raise FileExistsError(f"output directory {out_root!r} is not empty")
    os.makedirs(out_root, exist_ok=True)

    categories, stats = search_categories_with_stats(
        spec.search, spec.dimension, spec.master_seed, workers=workers
    )
    category_lines = tuple(format_category_line(c) for c in categories)

    # The layout is deterministic, so every path this build may touch is
    # known up front; on failure they are removed rather than left half-built.
    planned = [os.path.join(out_root, CATEGORY_FILE_NAME),
               os.path.join(out_root, MANIFEST_NAME)]
    for category in categories:
        for instance_id in range(spec.instances_per_category):
            planned.append(
                os.path.join(
                    out_root,
                    instance_relpath(category.category_id, instance_id),
                )
            )
    try:
        with open(os.path.join(out_root, CATEGORY_FILE_NAME), "w",
                  encoding="utf-8") as fh:
            for line in category_lines:
                fh.write(line + "\n")

        jobs = [(spec, category, out_root) for category in categories]
        if workers <= 1 or len(categories) == 1:
            per_category = [_generate_category(job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                per_category = list(pool.map(_generate_category, jobs, chunksize=1))

        records = []
        for category, instances in zip(categories, per_category):
            pose = pose_for_category(spec, category.category_id)
            for instance_id, relpath, checksum in instances:
                records.append(
                    RecordEntry(
                        category_id=category.category_id,
                        instance_id=instance_id,
                        path=relpath,
                        seed=category.seed,
                        pose=pose,
                        checksum=checksum,
                    )
                )

        manifest = DatasetManifest(
            spec=spec,
            records=tuple(records),
            category_lines=category_lines,
            search_stats=stats,
        )
        save_manifest(manifest, os.path.join(out_root, MANIFEST_NAME))
        return manifest
    except BaseException:
        for path in planned:
            try:
                os.unlink(path)
            except OSError:
                pass
        for category in categories:
            try:
                os.rmdir(os.path.join(out_root, f"{category.category_id:05d}"))
            except OSError:
                pass
        raise


@dataclass
class VerifyReport:
    """Outcome of an integrity check; discrepancies are content, not errors."""

    discrepancies: list[str] = field(default_factory=list)
    files_checked: int = 0
    regenerated: int = 0

    @property
    def ok(self) -> bool:
        return not self.discrepancies


def verify(manifest: DatasetManifest, root, regen_sample: int = 10) -> VerifyReport:
    """Recompute checksums and spot-regenerate images for bit-equality.

    The regeneration sample is spread evenly over the record list; each
    sampled image is rebuilt from its stored seed and compared byte-for-byte
    with the file on disk.
    """
    report = VerifyReport()
    spec = manifest.spec
    expected = spec.categories * spec.instances_per_category
    if len(manifest.records) != expected:
        report.discrepancies.append(
            f"record count {len(manifest.records)} != expected {expected}"
        )
    if len(manifest.category_lines) != spec.categories:
        report.discrepancies.append(
            f"category line count {len(manifest.category_lines)} != "
            f"{spec.categories}"
        )

    root = os.fspath(root)
    for record in manifest.records:
        path = os.path.join(root, record.path)
        if not os.path.isfile(path):
            report.discrepancies.append(f"missing file {record.path}")
            continue
        report.files_checked += 1
        actual = checksum_file(path)
        if actual != record.checksum:
            report.discrepancies.append(
                f"checksum mismatch {record.path}: {actual} != {record.checksum}"
            )

    n = len(manifest.records)
    if n and regen_sample > 0:
        if regen_sample >= n:
            sample = range(n)
        else:
            step = (n - 1) / (regen_sample - 1) if regen_sample > 1 else 0.0
            sample = sorted({round(i * step) for i in range(regen_sample)})
        by_id = {c.category_id: c for c in manifest.categories()}
        for idx in sample:
            record = manifest.records[idx]
            category = by_id.get(record.category_id)
            if category is None:
                report.discrepancies.append(
                    f"no category line for id {record.category_id}"
                )
                continue
            image = render_instance(
                spec, category.ifs, record.seed,
                record.category_id, record.instance_id, record.pose,
            )
            report.regenerated += 1
            path = os.path.join(root, record.path)
            try:
                with open(path, "rb") as fh:
                    on_disk = fh.read()
            except OSError:
                continue  # already reported as missing above
            if encode_png(image) != on_disk:
                report.discrepancies.append(
                    f"regeneration mismatch {record.path}"
                )
    return report


def select_categories(
    manifest: DatasetManifest, scores: dict[int, float], keep: int,
    easy_fraction: float,
) -> list[int]:
    """Score-based pruning: keep the easiest and hardest categories.

    Categories sort by (score, category_id) ascending; the kept set is the
    first floor-complement slice from the easy end and the last slice from
    the hard end, with any rounding remainder going to the easy side.
    Returns ascending category ids.
    """
    if not 0.0 <= easy_fraction <= 1.0:
        raise ValueError("easy_fraction must be in [0, 1]")
    category_ids = sorted({r.category_id for r in manifest.records})
    if keep > len(category_ids):
        raise InsufficientCategoriesError(
            f"cannot keep {keep} of {len(category_ids)} categories"
        )
    missing = [c for c in category_ids if c not in scores]
    if missing:
        raise ValueError(f"scores missing for categories {missing[:5]}")

    ranked = sorted(category_ids, key=lambda c: (scores[c], c))
    n_hard = int(keep * (1.0 - easy_fraction))
    n_easy = keep - n_hard
    chosen = ranked[:n_easy] + (ranked[len(ranked) - n_hard:] if n_hard else [])
    return sorted(chosen)
