"""Deterministic fractal dataset synthesis for formula-driven pre-training.

The pipeline: sample affine iterated function systems, filter them by a
fill-rate or scatter criterion into categories, trace attractor point clouds
with the chaos game, optionally pose and project 3D clouds, rasterize to
binary dot grids, and stamp per-dot augmentation kernels.  Every artifact is
a pure function of a seed, so builds are reproducible bit-for-bit at any
worker count.
"""

from .builder import (
    DatasetManifest,
    DatasetSpec,
    ExpansionSpec,
    RecordEntry,
    VerifyReport,
    build,
    load_manifest,
    render_instance,
    save_manifest,
    select_categories,
    verify,
)
from .camera import CameraPose, ViewpointSet, enumerate_viewpoints, project, rotation_matrix
from .errors import (
    DegenerateExtentError,
    DivergenceError,
    EmptyCloudError,
    ForgeError,
    InsufficientCategoriesError,
    SearchExhaustedError,
    ShapeMismatchError,
)
from .ifs import (
    AffineMap,
    IfsSystem,
    PointCloud,
    chaos_game,
    det_weighted_probabilities,
    fluctuate_ifs,
    sample_ifs,
)
from .raster import (
    FIXED_PATCH_PATTERNS,
    N_BINARY_PATTERNS,
    N_FIXED_PATCHES,
    DotGrid,
    dot_neighborhood_mask,
    normalize_points,
    pattern_bits,
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
    axis_variances,
    fill_rate,
    read_category_file,
    search_categories,
    search_categories_with_stats,
    write_category_file,
)
from .seeds import SeedKey
from .training import (
    BatchPlan,
    PlanEntry,
    cross_entropy,
    materialize_entry,
    one_instance_nll,
    plan_epoch,
    read_stream,
    stream_plan,
    write_stream,
)
from .version import __version__

__all__ = [
    "AffineMap",
    "BatchPlan",
    "CameraPose",
    "CategoryRecord",
    "DatasetManifest",
    "DatasetSpec",
    "DegenerateExtentError",
    "DivergenceError",
    "DotGrid",
    "EmptyCloudError",
    "ExpansionSpec",
    "FIXED_PATCH_PATTERNS",
    "ForgeError",
    "IfsSystem",
    "InsufficientCategoriesError",
    "N_BINARY_PATTERNS",
    "N_FIXED_PATCHES",
    "PlanEntry",
    "PointCloud",
    "RecordEntry",
    "SearchConfig",
    "SearchExhaustedError",
    "SearchStats",
    "SeedKey",
    "ShapeMismatchError",
    "VerifyReport",
    "ViewpointSet",
    "__version__",
    "axis_variances",
    "build",
    "chaos_game",
    "cross_entropy",
    "det_weighted_probabilities",
    "dot_neighborhood_mask",
    "enumerate_viewpoints",
    "fill_rate",
    "fluctuate_ifs",
    "load_manifest",
    "materialize_entry",
    "normalize_points",
    "one_instance_nll",
    "pattern_bits",
    "plan_epoch",
    "project",
    "read_category_file",
    "read_stream",
    "render_fixed_patch",
    "render_instance",
    "render_pattern_aug",
    "render_plain",
    "render_texture_aug",
    "rotate90",
    "rotation_matrix",
    "sample_ifs",
    "save_manifest",
    "search_categories",
    "search_categories_with_stats",
    "select_categories",
    "stream_plan",
    "verify",
    "write_category_file",
    "write_stream",
]
