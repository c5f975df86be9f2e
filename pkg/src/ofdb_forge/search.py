"""Category search: rejection sampling of IFSs into dataset categories.

Candidates are drawn with stream indices 0, 1, 2, ... under one master seed
and accepted in candidate order, so the accepted list is identical for any
worker count and the accepted set for a smaller target is always a prefix of
the set for a larger one.  2D candidates must reach a minimum fill rate on a
probe raster; 3D candidates must scatter enough along every axis (per-axis
variance after unit-cube normalization).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateExtentError,
    DivergenceError,
    EmptyCloudError,
    SearchExhaustedError,
)
from .ifs import (
    N_FLUCTUATION_VARIANTS,
    AffineMap,
    IfsSystem,
    PointCloud,
    chaos_game,
    fluctuate_ifs,
    sample_ifs,
)
from .raster import normalize_points
from .seeds import TAG_CLOUD, SeedKey

DEFAULT_FILL_RATE_THRESHOLD = 0.2
DEFAULT_VARIANCE_THRESHOLD = 0.05
DEFAULT_PROBE_SIDE = 256
DEFAULT_PROBE_POINTS = 100_000
DEFAULT_BURN_IN = 100
MAX_ATTEMPTS_PER_CATEGORY = 50


@dataclass(frozen=True)
class SearchConfig:
    """Thresholds and budgets for the category search."""

    target_categories: int
    fill_rate_threshold: float = DEFAULT_FILL_RATE_THRESHOLD
    variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD
    max_attempts: int = 0  # 0 means the 50x-target default
    render_probe: int = DEFAULT_PROBE_SIDE
    probe_points: int = DEFAULT_PROBE_POINTS
    probe_burn_in: int = DEFAULT_BURN_IN
    # In expansion (full-instance) builds every fluctuation variant must stay
    # bounded, otherwise rendering the x25 grid would blow up mid-build.
    require_variant_stability: bool = False

    def __post_init__(self):
        if self.target_categories < 1:
            raise ValueError("target_categories must be >= 1")
        if not 0.0 <= self.fill_rate_threshold <= 1.0:
            raise ValueError("fill_rate_threshold must be a fraction in [0, 1]")
        if self.variance_threshold < 0.0:
            raise ValueError("variance_threshold must be >= 0")
        if self.max_attempts == 0:
            object.__setattr__(
                self,
                "max_attempts",
                MAX_ATTEMPTS_PER_CATEGORY * self.target_categories,
            )
        if self.max_attempts < self.target_categories:
            raise ValueError("max_attempts must be >= target_categories")


@dataclass(frozen=True)
class CategoryRecord:
    """An accepted IFS together with the stat that justified acceptance."""

    category_id: int
    ifs: IfsSystem
    seed: SeedKey
    acceptance_stat: tuple[float, ...]


@dataclass(frozen=True)
class SearchStats:
    """Bookkeeping of a finished search (deterministic given seed and config)."""

    candidates_consumed: int
    accepted: int

    @property
    def acceptance_rate(self) -> float:
        if self.candidates_consumed == 0:
            return 0.0
        return self.accepted / self.candidates_consumed


def fill_rate(points: PointCloud, probe_side: int) -> float:
    """Fraction of probe-raster pixels occupied by the normalized cloud.

    Uses the production normalization with zero margin.  A cloud collapsed to
    a single point occupies exactly one pixel.
    """
    if points.dimension != 2:
        raise ValueError("fill_rate expects a 2D cloud")
    if len(points) == 0:
        raise EmptyCloudError("cannot measure fill rate of an empty cloud")
    try:
        grid = normalize_points(points, probe_side, margin=0.0)
    except DegenerateExtentError:
        return 1.0 / probe_side**2
    return grid.n_occupied / probe_side**2


def axis_variances(points: PointCloud) -> np.ndarray:
    """Per-axis variance of the cloud after unit-cube normalization.

    Normalization is isotropic (longest axis spans [0, 1], centered), the
    same convention the renderer uses.  A single repeated point has zero
    scatter on every axis.
    """
    if points.dimension != 3:
        raise ValueError("axis_variances expects a 3D cloud")
    pts = points.points
    if len(pts) == 0:
        raise EmptyCloudError("cannot measure variance of an empty cloud")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = float((hi - lo).max())
    if extent == 0.0:
        return np.zeros(3)
    unit = (pts - (lo + hi) / 2.0) / extent + 0.5
    return np.var(unit, axis=0)


def probe_cloud(ifs: IfsSystem, seed: SeedKey, cfg: SearchConfig) -> PointCloud:
    """The deterministic probe cloud a candidate is judged on.

    Derived from the candidate's stored seed, so acceptance stats can be
    re-measured exactly later (the dataset builder reuses the same stream
    for the final render).
    """
    return chaos_game(
        ifs, cfg.probe_points, seed.child(TAG_CLOUD), burn_in=cfg.probe_burn_in
    )


def measure_candidate(
    dimension: int, master_seed: int, index: int, cfg: SearchConfig
) -> tuple[float, ...] | None:
    """Evaluate candidate `index`; return its acceptance stat or None.

    Pure function of its arguments, safe to fan out across workers.
    """
    seed = SeedKey(master_seed, index)
    ifs = sample_ifs(dimension, seed)
    try:
        cloud = probe_cloud(ifs, seed, cfg)
    except DivergenceError:
        return None

    if dimension == 2:
        stat = (fill_rate(cloud, cfg.render_probe),)
        if stat[0] < cfg.fill_rate_threshold:
            return None
    else:
        variances = axis_variances(cloud)
        stat = tuple(float(v) for v in variances)
        if (variances < cfg.variance_threshold).any():
            return None

    if cfg.require_variant_stability:
        for variant in range(N_FLUCTUATION_VARIANTS):
            if variant == 12:
                continue
            try:
                chaos_game(
                    fluctuate_ifs(ifs, variant),
                    cfg.probe_points,
                    seed.child(TAG_CLOUD),
                    burn_in=cfg.probe_burn_in,
                )
            except DivergenceError:
                return None
    return stat


def _measure_star(args) -> tuple[float, ...] | None:
    return measure_candidate(*args)


def search_categories_with_stats(
    cfg: SearchConfig, dimension: int, master_seed: int, workers: int = 1
) -> tuple[list[CategoryRecord], SearchStats]:
    """Run the search and also report how many candidates it consumed.

    `candidates_consumed` counts up to and including the candidate that
    completed the quota, never the speculative overshoot of a parallel batch,
    so the stats are as deterministic as the records.
    """
    if dimension not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dimension}")
    target = cfg.target_categories
    accepted: list[tuple[int, tuple[float, ...]]] = []

    def consume(results) -> None:
        for index, stat in results:
            if stat is not None and len(accepted) < target:
                accepted.append((index, stat))

    if workers <= 1:
        for index in range(cfg.max_attempts):
            consume([(index, measure_candidate(dimension, master_seed, index, cfg))])
            if len(accepted) >= target:
                break
    else:
        batch = max(16, workers * 8)
        next_index = 0
        with ProcessPoolExecutor(max_workers=workers) as pool:
            while len(accepted) < target and next_index < cfg.max_attempts:
                n = min(batch, cfg.max_attempts - next_index)
                indices = range(next_index, next_index + n)
                stats = pool.map(
                    _measure_star,
                    [(dimension, master_seed, i, cfg) for i in indices],
                    chunksize=max(1, n // (workers * 4)),
                )
                consume(zip(indices, stats))
                next_index += n

    if len(accepted) < target:
        raise SearchExhaustedError(
            attempts=cfg.max_attempts, accepted=len(accepted), target=target
        )

    records = [
        CategoryRecord(
            category_id=cid,
            ifs=sample_ifs(dimension, SeedKey(master_seed, index)),
            seed=SeedKey(master_seed, index),
            acceptance_stat=stat,
        )
        for cid, (index, stat) in enumerate(accepted)
    ]
    stats = SearchStats(candidates_consumed=accepted[-1][0] + 1, accepted=target)
    return records, stats


def search_categories(
    cfg: SearchConfig, dimension: int, master_seed: int, workers: int = 1
) -> list[CategoryRecord]:
    """Accept candidate IFSs until the target category count is reached."""
    records, _ = search_categories_with_stats(cfg, dimension, master_seed, workers)
    return records


# --- category file -----------------------------------------------------------
#
# One record per line, comma separated:
#   category_id, dimension, M,
#   M * (d*d linear entries row-major, then d translation entries),
#   M probabilities, master_seed, stream_index, acceptance stat values
# Floats use 17 significant digits so parsing reproduces them bit-exactly.


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_category_line(record: CategoryRecord) -> str:
    ifs = record.ifs
    d = ifs.dimension
    parts = [str(record.category_id), str(d), str(ifs.n_maps)]
    for m in ifs.maps:
        parts.extend(_fmt(v) for v in m.linear.reshape(d * d))
        parts.extend(_fmt(v) for v in m.translation)
    parts.extend(_fmt(p) for p in ifs.probabilities)
    parts.append(str(record.seed.master_seed))
    parts.append(str(record.seed.stream_index))
    parts.extend(_fmt(s) for s in record.acceptance_stat)
    return ",".join(parts)


def parse_category_line(line: str) -> CategoryRecord:
    fields = line.strip().split(",")
    category_id, d, m = int(fields[0]), int(fields[1]), int(fields[2])
    pos = 3
    span = d * d + d
    maps = []
    for _ in range(m):
        chunk = np.array([float(v) for v in fields[pos : pos + span]])
        maps.append(AffineMap(chunk[: d * d].reshape(d, d), chunk[d * d :]))
        pos += span
    probs = np.array([float(v) for v in fields[pos : pos + m]])
    pos += m
    seed = SeedKey(int(fields[pos]), int(fields[pos + 1]))
    pos += 2
    stat = tuple(float(v) for v in fields[pos:])
    return CategoryRecord(
        category_id=category_id,
        ifs=IfsSystem(tuple(maps), probs),
        seed=seed,
        acceptance_stat=stat,
    )


def write_category_file(path, records: list[CategoryRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(format_category_line(record) + "\n")


def read_category_file(path) -> list[CategoryRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return [parse_category_line(line) for line in fh if line.strip()]
