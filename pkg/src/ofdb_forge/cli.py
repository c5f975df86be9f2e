"""Command-line front end: generate, preview-aug, prune, verify, stats.

Option values resolve in three layers: hard defaults, then a JSON config
file (--config), then explicit flags.  The fully resolved configuration is
echoed to stderr so any run can be reconstructed from its log.  Exit codes:
0 success, 1 domain error (bad data, exhausted search, I/O), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from .builder import (
    MANIFEST_NAME,
    DatasetManifest,
    DatasetSpec,
    ExpansionSpec,
    build,
    load_manifest,
    save_manifest,
    select_categories,
    verify,
)
from .camera import enumerate_viewpoints
from .errors import ForgeError
from .io_utils import read_json, read_png, write_json17, write_png
from .raster import DotGrid, render_fixed_patch, render_pattern_aug, render_plain, render_texture_aug
from .search import SearchConfig
from .seeds import SeedKey
from .training import PLAN_AUGMENTATIONS
from .version import __version__

THREADS_ENV_VAR = "OFDB_FORGE_THREADS"

GENERATE_DEFAULTS = {
    "out": None,
    "name": None,
    "dim": 2,
    "categories": 1000,
    "seed": 0,
    "mode": "ofdb",
    "augmentation": "plain",
    "image_side": 256,
    "points": 100_000,
    "burn_in": 100,
    "margin": 0.05,
    "fill_threshold": 0.2,
    "variance_threshold": 0.05,
    "max_attempts": 0,
    "probe_side": 256,
    "probe_points": 0,
    "viewpoint_axes": "yaw",
    "viewpoint_step": 30.0,
    "pose_policy": "modulo",
    "patch_index": 0,
    "rotations": 4,
    "fluctuations": 25,
    "patches": 10,
    "overwrite": False,
}

PREVIEW_DEFAULTS = {
    "manifest": None,
    "out": None,
    "category": 0,
    "augmentation": "pattern",
    "seed": 0,
}

PRUNE_DEFAULTS = {
    "manifest": None,
    "scores": None,
    "keep": None,
    "easy_fraction": 0.5,
    "out": None,
    "filtered_manifest": None,
}

VERIFY_DEFAULTS = {"manifest": None, "root": None, "sample": 10}

STATS_DEFAULTS = {"manifest": None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofdb-forge",
        description="Deterministic fractal pre-training dataset generator.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--threads", type=int, help="worker count "
                       f"(default: ${THREADS_ENV_VAR} or all cores)")
        p.add_argument("--json", action="store_true",
                       help="machine-readable summary on stdout")

    g = sub.add_parser("generate", help="build a dataset")
    common(g)
    g.add_argument("--out", help="output directory")
    g.add_argument("--name", help="dataset name (defaults to a descriptive one)")
    g.add_argument("--dim", type=int, choices=(2, 3))
    g.add_argument("--categories", type=int)
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--mode", choices=("ofdb", "fractaldb"),
                   help="one image per category, or the x4 x25 x10 expansion")
    g.add_argument("--augmentation",
                   choices=("plain", "pattern", "texture", "fixed_patch"))
    g.add_argument("--image-side", type=int)
    g.add_argument("--points", type=int, help="chaos-game points per cloud")
    g.add_argument("--burn-in", type=int)
    g.add_argument("--margin", type=float)
    g.add_argument("--fill-threshold", type=float, help="2D acceptance")
    g.add_argument("--variance-threshold", type=float, help="3D acceptance")
    g.add_argument("--max-attempts", type=int,
                   help="search budget (0 = 50x categories)")
    g.add_argument("--probe-side", type=int)
    g.add_argument("--probe-points", type=int, help="0 = same as --points")
    g.add_argument("--viewpoint-axes", help="comma list, e.g. yaw or pitch,yaw")
    g.add_argument("--viewpoint-step", type=float, help="degrees per pose step")
    g.add_argument("--pose-policy", choices=("modulo", "first"))
    g.add_argument("--patch-index", type=int,
                   help="stamp index for --augmentation fixed_patch")
    g.add_argument("--rotations", type=int, help="fractaldb mode only")
    g.add_argument("--fluctuations", type=int, help="fractaldb mode only")
    g.add_argument("--patches", type=int, help="fractaldb mode only")
    g.add_argument("--overwrite", action="store_true", default=None,
                   help="allow writing into a non-empty directory")

    p = sub.add_parser("preview-aug", help="write two augmented variants "
                       "of one category plus their difference image")
    common(p)
    p.add_argument("--manifest", help="path to a dataset manifest.json")
    p.add_argument("--out", help="output directory for the three PNGs")
    p.add_argument("--category", type=int)
    p.add_argument("--augmentation", help="plain, pattern, texture, fixed_patch")
    p.add_argument("--seed", type=int)

    r = sub.add_parser("prune", help="score-based category selection")
    common(r)
    r.add_argument("--manifest")
    r.add_argument("--scores", help="JSON file mapping category id to score")
    r.add_argument("--keep", type=int)
    r.add_argument("--easy-fraction", type=float)
    r.add_argument("--out", help="where to write the selected id list (JSON)")
    r.add_argument("--filtered-manifest",
                   help="optionally write a manifest restricted to the kept set")

    v = sub.add_parser("verify", help="check a dataset against its manifest")
    common(v)
    v.add_argument("--manifest")
    v.add_argument("--root", help="dataset root (default: manifest directory)")
    v.add_argument("--sample", type=int, help="images to spot-regenerate")

    s = sub.add_parser("stats", help="summarize acceptance statistics")
    common(s)
    s.add_argument("--manifest")
    return parser


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Apply defaults < config file < flags, strictly over known keys."""
    config = {}
    if args.config:
        config = read_json(args.config)
        if not isinstance(config, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = sorted(set(config) - set(defaults) - {"threads"})
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    merged = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        merged[key] = flag if flag is not None else config.get(key, default)
    merged["threads"] = _resolve_threads(args, config)
    return merged


def _resolve_threads(args: argparse.Namespace, config: dict) -> int:
    threads = args.threads
    if threads is None:
        threads = config.get("threads")
    if threads is None:
        env = os.environ.get(THREADS_ENV_VAR)
        if env:
            threads = int(env)
    if threads is None:
        threads = os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


def _echo(resolved: dict) -> None:
    print(json.dumps(resolved, sort_keys=True), file=sys.stderr)


def _require(merged: dict, *keys: str) -> None:
    for key in keys:
        if merged[key] is None:
            raise ValueError(f"--{key.replace('_', '-')} is required")


def _spec_from_options(opts: dict) -> DatasetSpec:
    dim = opts["dim"]
    expansion = None
    if opts["mode"] == "fractaldb":
        expansion = ExpansionSpec(
            rotations=opts["rotations"],
            fluctuations=opts["fluctuations"],
            patches=opts["patches"],
        )
    probe_points = opts["probe_points"] or opts["points"]
    search = SearchConfig(
        target_categories=opts["categories"],
        fill_rate_threshold=opts["fill_threshold"],
        variance_threshold=opts["variance_threshold"],
        max_attempts=opts["max_attempts"],
        render_probe=opts["probe_side"],
        probe_points=probe_points,
        probe_burn_in=opts["burn_in"],
        require_variant_stability=expansion is not None,
    )
    viewpoints = None
    if dim == 3:
        axes = tuple(a.strip() for a in opts["viewpoint_axes"].split(",") if a.strip())
        viewpoints = enumerate_viewpoints(axes, opts["viewpoint_step"])
    name = opts["name"]
    if name is None:
        kind = "fdb" if expansion else "ofdb"
        name = f"{dim}d-{kind}-{opts['categories']}"
    return DatasetSpec(
        name=name,
        dimension=dim,
        categories=opts["categories"],
        augmentation_mode=opts["augmentation"],
        expansion=expansion,
        master_seed=opts["seed"],
        image_side=opts["image_side"],
        points_per_cloud=opts["points"],
        burn_in=opts["burn_in"],
        margin=opts["margin"],
        search=search,
        viewpoints=viewpoints,
        pose_policy=opts["pose_policy"],
        fixed_patch_index=opts["patch_index"],
    )


def _cmd_generate(args: argparse.Namespace) -> int:
    opts = _resolve(args, GENERATE_DEFAULTS)
    _require(opts, "out")
    spec = _spec_from_options(opts)
    _echo({"subcommand": "generate", "threads": opts["threads"],
           "out": opts["out"], "overwrite": bool(opts["overwrite"]),
           "spec": spec.to_dict()})

    start = time.perf_counter()
    manifest = build(spec, opts["out"], workers=opts["threads"],
                     overwrite=bool(opts["overwrite"]))
    elapsed = time.perf_counter() - start
    summary = {
        "manifest": os.path.join(opts["out"], MANIFEST_NAME),
        "categories": spec.categories,
        "instances_per_category": spec.instances_per_category,
        "images": len(manifest.records),
        "acceptance_rate": manifest.search_stats.acceptance_rate,
        "wall_time_s": round(elapsed, 3),
    }
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"wrote {summary['images']} images for {spec.categories} "
              f"categories to {opts['out']}")
        print(f"manifest: {summary['manifest']}")
        print(f"search acceptance rate: {summary['acceptance_rate']:.4f}")
        print(f"wall time: {elapsed:.1f}s")
    return 0


def _cmd_preview_aug(args: argparse.Namespace) -> int:
    opts = _resolve(args, PREVIEW_DEFAULTS)
    _require(opts, "manifest", "out")
    _echo({"subcommand": "preview-aug", **{k: opts[k] for k in PREVIEW_DEFAULTS}})
    mode = opts["augmentation"]
    if mode not in (*PLAN_AUGMENTATIONS, "fixed_patch"):
        raise ValueError(f"unknown augmentation name {mode!r}")

    manifest = load_manifest(opts["manifest"])
    root = os.path.dirname(os.path.abspath(opts["manifest"]))
    record = next(
        (r for r in manifest.records
         if r.category_id == opts["category"] and r.instance_id == 0),
        None,
    )
    if record is None:
        raise ValueError(f"category {opts['category']} not in manifest")
    image = read_png(os.path.join(root, record.path))
    grid = DotGrid(image.shape[0], image > 0)

    def variant(stream: int) -> np.ndarray:
        key = SeedKey(opts["seed"], stream)
        if mode == "plain":
            return render_plain(grid)
        if mode == "pattern":
            return render_pattern_aug(grid, key)
        if mode == "texture":
            return render_texture_aug(grid, key)
        return render_fixed_patch(grid, stream % 10)

    os.makedirs(opts["out"], exist_ok=True)
    a, b = variant(0), variant(1)
    diff = np.abs(a.astype(np.int16) - b.astype(np.int16)).astype(np.uint8)
    paths = {}
    for tag, img in (("variant_a", a), ("variant_b", b), ("difference", diff)):
        path = os.path.join(opts["out"], f"{tag}.png")
        write_png(path, img)
        paths[tag] = path
    if args.json:
        print(json.dumps(paths))
    else:
        for tag, path in paths.items():
            print(f"{tag}: {path}")
    return 0


def _cmd_prune(args: argparse.Namespace) -> int:
    opts = _resolve(args, PRUNE_DEFAULTS)
    _require(opts, "manifest", "scores", "keep")
    _echo({"subcommand": "prune", **{k: opts[k] for k in PRUNE_DEFAULTS}})

    manifest = load_manifest(opts["manifest"])
    raw = read_json(opts["scores"])
    if not isinstance(raw, dict):
        raise ValueError("scores file must map category id to score")
    scores = {int(k): float(v) for k, v in raw.items()}
    selected = select_categories(manifest, scores, opts["keep"],
                                 opts["easy_fraction"])
    if opts["out"]:
        write_json17(opts["out"], selected)
    if opts["filtered_manifest"]:
        save_manifest(_filter_manifest(manifest, selected),
                      opts["filtered_manifest"])
    if args.json:
        print(json.dumps({"selected": selected}))
    else:
        print(f"kept {len(selected)} of "
              f"{len({r.category_id for r in manifest.records})} categories")
        print(" ".join(str(c) for c in selected))
    return 0


def _filter_manifest(manifest: DatasetManifest, selected: list[int]) -> DatasetManifest:
    """A view of the manifest restricted to the kept categories.

    Category ids and file paths are preserved; only the spec's category
    count (and search target) shrink so the count law still holds.
    """
    keep = set(selected)
    spec = manifest.spec
    new_spec = replace(
        spec,
        categories=len(keep),
        search=replace(spec.search, target_categories=len(keep)),
    )
    return DatasetManifest(
        spec=new_spec,
        records=tuple(r for r in manifest.records if r.category_id in keep),
        category_lines=tuple(
            line for line in manifest.category_lines
            if int(line.split(",", 1)[0]) in keep
        ),
        search_stats=manifest.search_stats,
        tool_version=manifest.tool_version,
    )


def _cmd_verify(args: argparse.Namespace) -> int:
    opts = _resolve(args, VERIFY_DEFAULTS)
    if opts["manifest"] is None and opts["root"]:
        opts["manifest"] = os.path.join(opts["root"], MANIFEST_NAME)
    _require(opts, "manifest")
    if opts["root"] is None:
        opts["root"] = os.path.dirname(os.path.abspath(opts["manifest"]))
    _echo({"subcommand": "verify", **{k: opts[k] for k in VERIFY_DEFAULTS}})

    manifest = load_manifest(opts["manifest"])
    report = verify(manifest, opts["root"], regen_sample=opts["sample"])
    if args.json:
        print(json.dumps({
            "ok": report.ok,
            "files_checked": report.files_checked,
            "regenerated": report.regenerated,
            "discrepancies": report.discrepancies,
        }))
    else:
        print(f"checked {report.files_checked} files, "
              f"regenerated {report.regenerated}")
        for line in report.discrepancies:
            print(f"discrepancy: {line}")
        print("ok" if report.ok else f"{len(report.discrepancies)} discrepancies")
    return 0 if report.ok else 1


def _histogram(values: np.ndarray, bins: int = 10, width: int = 40) -> list[str]:
    counts, edges = np.histogram(values, bins=bins)
    top = max(int(counts.max()), 1)
    lines = []
    for i, count in enumerate(counts):
        bar = "#" * max(1 if count else 0, round(width * count / top))
        lines.append(f"  [{edges[i]:.4f}, {edges[i + 1]:.4f}) {count:6d} {bar}")
    return lines


def _cmd_stats(args: argparse.Namespace) -> int:
    opts = _resolve(args, STATS_DEFAULTS)
    _require(opts, "manifest")
    _echo({"subcommand": "stats", **{k: opts[k] for k in STATS_DEFAULTS}})

    manifest = load_manifest(opts["manifest"])
    spec = manifest.spec
    categories = manifest.categories()
    stats = np.array([c.acceptance_stat for c in categories])
    summary = {
        "name": spec.name,
        "dimension": spec.dimension,
        "categories": spec.categories,
        "instances_per_category": spec.instances_per_category,
        "images": len(manifest.records),
        "acceptance_rate": manifest.search_stats.acceptance_rate,
    }
    if spec.dimension == 2:
        fills = stats[:, 0]
        summary["fill_rate"] = {
            "min": float(fills.min()), "mean": float(fills.mean()),
            "max": float(fills.max()),
        }
    else:
        mins = stats.min(axis=1)
        summary["axis_variance_min"] = {
            "min": float(mins.min()), "mean": float(mins.mean()),
            "max": float(mins.max()),
        }
    if args.json:
        print(json.dumps(summary))
        return 0
    print(f"dataset {spec.name}: {spec.categories} categories x "
          f"{spec.instances_per_category} instances, dimension {spec.dimension}")
    print(f"search acceptance rate: {summary['acceptance_rate']:.4f}")
    if spec.dimension == 2:
        fills = stats[:, 0]
        print(f"fill rate: min {fills.min():.4f} mean {fills.mean():.4f} "
              f"max {fills.max():.4f}")
        print("fill rate histogram:")
        print("\n".join(_histogram(fills)))
    else:
        mins = stats.min(axis=1)
        print(f"weakest-axis variance: min {mins.min():.4f} "
              f"mean {mins.mean():.4f} max {mins.max():.4f}")
        print("weakest-axis variance histogram:")
        print("\n".join(_histogram(mins)))
    return 0


HANDLERS = {
    "generate": _cmd_generate,
    "preview-aug": _cmd_preview_aug,
    "prune": _cmd_prune,
    "verify": _cmd_verify,
    "stats": _cmd_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return HANDLERS[args.subcommand](args)
    except (ForgeError, OSError, ValueError, KeyError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
