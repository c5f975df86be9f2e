"""Iterated function systems: random sampling, the chaos game, fluctuation.

An IFS is a set of affine maps w_j(v) = A_j v + b_j in 2 or 3 dimensions with
selection probabilities p_j.  Iterating v_{t+1} = w*(v_t), where w* is drawn
from the categorical distribution p at every step, traces out the attractor;
the retained point sequence is the raw material for every rendered image.

Probabilities are always derived from map determinants: p_j is proportional
to max(|det A_j|, DET_WEIGHT_FLOOR), so degenerate (near-singular) maps keep a
tiny but non-zero selection weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DivergenceError
from .seeds import SeedKey

# Weight floor applied to |det| before normalizing selection probabilities.
DET_WEIGHT_FLOOR = 1e-6

# A retained coordinate beyond this magnitude means the system is not
# contractive on average; genuinely contractive systems stay far below it.
DIVERGENCE_LIMIT = 1e6

# Coefficient scale grid for the x25 instance fluctuation: variant 5a+b scales
# all linear entries by factor a and all translations by factor b.
FLUCTUATION_FACTORS = (0.8, 0.9, 1.0, 1.1, 1.2)
N_FLUCTUATION_VARIANTS = len(FLUCTUATION_FACTORS) ** 2

MIN_MAPS = 2
MAX_MAPS = 8


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AffineMap:
    """One affine transformation v -> linear @ v + translation."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        lin = _readonly(self.linear)
        tr = _readonly(self.translation)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)
        d = tr.shape[0] if tr.ndim == 1 else -1
        if d not in (2, 3) or lin.shape != (d, d):
            raise ValueError(
                f"expected a d x d matrix and d-vector with d in (2, 3), "
                f"got {lin.shape} and {tr.shape}"
            )
        if not (np.isfinite(lin).all() and np.isfinite(tr).all()):
            raise ValueError("affine map entries must be finite")

    @property
    def dimension(self) -> int:
        return self.translation.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, AffineMap):
            return NotImplemented
        return np.array_equal(self.linear, other.linear) and np.array_equal(
            self.translation, other.translation
        )

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Apply the map to one point or an (n, d) array of points."""
        return np.asarray(points) @ self.linear.T + self.translation


@dataclass(frozen=True, eq=False)
class IfsSystem:
    """A finite set of affine maps with selection probabilities.

    Invariants: all maps share one dimension, every p_j > 0, and the
    probabilities sum to 1 within 1e-12.  Single-map systems are permitted
    for degenerate/testing setups; the random sampler always draws 2..8 maps.
    """

    maps: tuple[AffineMap, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        p = _readonly(self.probabilities)
        object.__setattr__(self, "probabilities", p)
        if len(maps) < 1:
            raise ValueError("an IFS needs at least one map")
        dims = {m.dimension for m in maps}
        if len(dims) != 1:
            raise ValueError(f"maps disagree on dimension: {sorted(dims)}")
        if p.shape != (len(maps),):
            raise ValueError("need exactly one probability per map")
        if not (p > 0).all():
            raise ValueError("all selection probabilities must be positive")
        if abs(float(p.sum()) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")

    @property
    def dimension(self) -> int:
        return self.maps[0].dimension

    @property
    def n_maps(self) -> int:
        return len(self.maps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IfsSystem):
            return NotImplemented
        return (
            len(self.maps) == len(other.maps)
            and all(a == b for a, b in zip(self.maps, other.maps))
            and np.array_equal(self.probabilities, other.probabilities)
        )


@dataclass(frozen=True)
class PointCloud:
    """Ordered chaos-game point sequence with its generation metadata."""

    points: np.ndarray
    source_seed: SeedKey = field(default=SeedKey(0, 0))
    burn_in: int = 0

    def __post_init__(self):
        pts = _readonly(self.points)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise ValueError(f"points must be (n, 2) or (n, 3), got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("point cloud contains non-finite coordinates")

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


def det_weighted_probabilities(maps: tuple[AffineMap, ...]) -> np.ndarray:
    """Selection probabilities proportional to floored |det| of each map."""
    dets = np.abs(np.linalg.det(np.stack([m.linear for m in maps])))
    weights = np.maximum(dets, DET_WEIGHT_FLOOR)
    return weights / weights.sum()


def sample_ifs(dimension: int, seed: SeedKey) -> IfsSystem:
    """Draw a random IFS: M ~ U{2..8}, coefficients ~ U[-1, 1], p from dets."""
    if dimension not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dimension}")
    rng = seed.rng()
    m = int(rng.integers(MIN_MAPS, MAX_MAPS + 1))
    linear = rng.uniform(-1.0, 1.0, size=(m, dimension, dimension))
    translation = rng.uniform(-1.0, 1.0, size=(m, dimension))
    maps = tuple(AffineMap(linear[j], translation[j]) for j in range(m))
    return IfsSystem(maps, det_weighted_probabilities(maps))


def fluctuate_ifs(ifs: IfsSystem, variant_index: int) -> IfsSystem:
    """Scale all linear entries and all translations by a factor-grid pair.

    variant_index = 5a + b picks linear factor FLUCTUATION_FACTORS[a] and
    translation factor FLUCTUATION_FACTORS[b].  Index 12 is the (1.0, 1.0)
    identity pair and returns the input system unchanged.  Probabilities of
    non-identity variants are re-derived from the scaled determinants.
    """
    if not 0 <= variant_index < N_FLUCTUATION_VARIANTS:
        raise ValueError(f"variant_index must be in [0, 25), got {variant_index}")
    f_lin = FLUCTUATION_FACTORS[variant_index // 5]
    f_tr = FLUCTUATION_FACTORS[variant_index % 5]
    if f_lin == 1.0 and f_tr == 1.0:
        return ifs
    maps = tuple(
        AffineMap(m.linear * f_lin, m.translation * f_tr) for m in ifs.maps
    )
    return IfsSystem(maps, det_weighted_probabilities(maps))


@njit(cache=True)
def _iterate_affine(linear, translation, selections, v0, burn_in, out):
    # Sequential recurrence v_{t+1} = A[j] v_t + b[j]; the emitted sequence
    # starts at v0 and the first `burn_in` entries are skipped.
    d = v0.shape[0]
    n_keep = out.shape[0]
    total = burn_in + n_keep
    v = v0.copy()
    w = np.empty(d, dtype=np.float64)
    for i in range(total):
        if i >= burn_in:
            for k in range(d):
                out[i - burn_in, k] = v[k]
        if i + 1 < total:
            j = selections[i]
            for r in range(d):
                acc = 0.0
                for c in range(d):
                    acc += linear[j, r, c] * v[c]
                w[r] = acc + translation[j, r]
            for k in range(d):
                v[k] = w[k]


def chaos_game(
    ifs: IfsSystem,
    n_points: int,
    seed: SeedKey,
    *,
    burn_in: int = 100,
    v1: np.ndarray | None = None,
) -> PointCloud:
    """Run the chaos game and return exactly n_points retained points.

    The trajectory starts at v1 (origin by default), maps are selected by
    inverse-CDF sampling of the system's probabilities, and the first
    `burn_in` points of the emitted sequence are discarded.  Raises
    DivergenceError if any retained coordinate is non-finite or exceeds
    DIVERGENCE_LIMIT in magnitude.
    """
    if n_points < 1:
        raise ValueError(f"n_points must be >= 1, got {n_points}")
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    d = ifs.dimension
    if v1 is None:
        v0 = np.zeros(d)
    else:
        v0 = np.asarray(v1, dtype=np.float64).reshape(d).copy()
        if not np.isfinite(v0).all():
            raise ValueError("v1 must be finite")

    total = burn_in + n_points
    rng = seed.rng()
    cdf = np.cumsum(ifs.probabilities)
    u = rng.random(total - 1)
    selections = np.minimum(
        np.searchsorted(cdf, u, side="right"), ifs.n_maps - 1
    ).astype(np.int64)

    linear = np.stack([m.linear for m in ifs.maps])
    translation = np.stack([m.translation for m in ifs.maps])
    out = np.empty((n_points, d), dtype=np.float64)
    _iterate_affine(linear, translation, selections, v0, burn_in, out)

    if not np.isfinite(out).all() or np.abs(out).max() > DIVERGENCE_LIMIT:
        raise DivergenceError(
            f"trajectory left the +/-{DIVERGENCE_LIMIT:g} box; system is not contractive"
        )
    return PointCloud(points=out, source_seed=seed, burn_in=burn_in)
