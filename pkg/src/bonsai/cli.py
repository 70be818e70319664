"""Command line interface.

Subcommands: verify, bench, table1, cluster, gen. Flags are long-form
kebab-case; any flag (minus the leading dashes) may instead be given in
a key=value config file passed with --config, with explicit flags
winning over the file. All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import RunConfig, run_bench, run_cluster, run_table1, run_verify
from .pcd import write_pcd_file
from .report import (
    BENCH_COLUMNS,
    CLUSTER_COLUMNS,
    TABLE1_COLUMNS,
    save_bench_figures,
    save_cluster_figure,
    save_table1_figure,
    write_metrics_csv,
)
from .scene import SceneSpec, generate_scene
from .search import DEFAULT_SAFETY_FACTOR
from .tree import DEFAULT_LEAF_CAPACITY

__all__ = ["main", "build_parser"]


def _add_scene_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("synthetic scene")
    g.add_argument("--scene-seed", type=int, default=None,
                   help="generate one scene with this seed instead of the corpus")
    g.add_argument("--objects", type=int, default=60, help="objects per scene")
    g.add_argument("--points-per-object", type=int, nargs=2, default=(60, 320),
                   metavar=("LO", "HI"), help="points per object, inclusive range")
    g.add_argument("--extent", type=float, nargs=2, default=(0.6, 4.2),
                   metavar=("LO", "HI"), help="object extent range in meters")
    g.add_argument("--cap", type=float, default=120.0, help="sensor range cap in meters")
    g.add_argument("--noise-sigma", type=float, default=0.012,
                   help="gaussian jitter sigma in meters")
    g.add_argument("--ground-points", type=int, default=2500, help="ground disk points")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", default=None, metavar="PCD",
                   help="read this PCD file instead of synthetic scenes")
    p.add_argument("--leaf-capacity", type=int, default=DEFAULT_LEAF_CAPACITY,
                   help="max points per leaf (1..16)")
    p.add_argument("--radius", type=float, default=0.5,
                   help="search radius / cluster tolerance in meters")
    p.add_argument("--queries", default="2000",
                   help="'all', a sample count, or @file.pcd with query points")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for query sampling and planted points")
    p.add_argument("--safety-factor", type=float, default=DEFAULT_SAFETY_FACTOR,
                   help="multiplier applied to the error shell")
    p.add_argument("--workers", type=int, default=1,
                   help="worker threads for query batches")
    p.add_argument("--out", default=None, metavar="PATH",
                   help="write the delimited report here")
    p.add_argument("--no-figures", action="store_true",
                   help="skip the PNG figures that accompany --out")
    p.add_argument("--config", default=None, metavar="FILE",
                   help="key=value file supplying defaults for any flag")
    # negative-control switch for exactness testing; keep out of --help
    p.add_argument("--unsafe-no-fallback", action="store_true",
                   help=argparse.SUPPRESS)
    _add_scene_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bonsai",
        description="Radius search over k-d trees with compressed leaves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="prove compressed search equals the baseline")
    _add_run_flags(p)

    p = sub.add_parser("bench", help="compression and traffic metrics per frame")
    _add_run_flags(p)

    p = sub.add_parser("table1", help="misclassification study across storage formats")
    _add_run_flags(p)

    p = sub.add_parser("cluster", help="euclidean clustering in both modes")
    _add_run_flags(p)
    p.add_argument("--min-size", type=int, default=1, help="smallest kept cluster")
    p.add_argument("--max-size", type=int, default=0, help="largest kept cluster, 0 = unbounded")
    p.add_argument("--write-clusters", default=None, metavar="DIR",
                   help="write one PCD per cluster into this directory")

    p = sub.add_parser("gen", help="write a synthetic scene as PCD")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--format", choices=("ascii", "binary"), default="binary")
    p.add_argument("--config", default=None, metavar="FILE",
                   help="key=value file supplying defaults for any flag")
    _add_scene_flags(p)
    return parser


def _load_config(path: str) -> dict:
    values = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_TUPLE_KEYS = {"points_per_object", "extent"}
_INT_KEYS = {
    "leaf_capacity", "seed", "workers", "objects", "ground_points",
    "scene_seed", "min_size", "max_size",
}
_FLOAT_KEYS = {"radius", "safety_factor", "cap", "noise_sigma"}
_BOOL_KEYS = {"no_figures", "unsafe_no_fallback"}


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    if "--config" in argv:
        path = argv[argv.index("--config") + 1]
    else:
        prefixed = [a for a in argv if a.startswith("--config=")]
        if not prefixed:
            return
        path = prefixed[0].split("=", 1)[1]
    defaults = {}
    for key, value in _load_config(path).items():
        if key in _TUPLE_KEYS:
            defaults[key] = tuple(type_of(v) for type_of, v in
                                  zip((float, float) if key == "extent" else (int, int),
                                      value.split()))
        elif key in _INT_KEYS:
            defaults[key] = int(value)
        elif key in _FLOAT_KEYS:
            defaults[key] = float(value)
        elif key in _BOOL_KEYS:
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = value
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        for sub in action.choices.values():
            sub.set_defaults(**defaults)


def _scene_from_args(args) -> SceneSpec | None:
    if getattr(args, "scene_seed", None) is None:
        return None
    return SceneSpec(
        seed=args.scene_seed,
        n_objects=args.objects,
        points_per_object=tuple(args.points_per_object),
        object_extent=tuple(args.extent),
        range_cap=args.cap,
        noise_sigma=args.noise_sigma,
        ground_points=args.ground_points,
    )


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        input_path=args.input,
        scene=_scene_from_args(args),
        leaf_capacity=args.leaf_capacity,
        radius=args.radius,
        queries=args.queries,
        seed=args.seed,
        safety_factor=args.safety_factor,
        fallback=not args.unsafe_no_fallback,
        min_cluster_size=getattr(args, "min_size", 1),
        max_cluster_size=getattr(args, "max_size", 0),
        workers=args.workers,
    )


def _report_paths(out: str):
    path = Path(out)
    return path, path.parent if path.suffix else path


def _cmd_verify(args) -> int:
    cfg = _config_from_args(args)
    result = run_verify(cfg)
    lines = []
    for f in result.frames:
        lines.append(
            f"frame {f['frame']}: points={f['n_points']} "
            f"queries={f['n_queries']} divergences={f['divergences']}"
        )
    lines.append(
        f"TOTAL: {len(result.frames)} frames, {result.total_queries} queries, "
        f"{len(result.divergences)} divergences"
    )
    for d in result.divergences:
        lines.append(
            f"DIVERGENCE frame={d['frame']} q={d['query']} r={d['radius']}\n"
            f"  missing={d['missing']} points={d['missing_points']}\n"
            f"  extra={d['extra']} points={d['extra_points']}"
        )
    text = "\n".join(lines)
    print(text)
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    return 0 if result.ok else 1


def _cmd_bench(args) -> int:
    cfg = _config_from_args(args)
    records = run_bench(cfg)
    for rec in records:
        print(
            f"frame {rec['frame']}: leaves={rec['n_leaves']} "
            f"any-flag={rec['any_flag_freq']:.1%} "
            f"bytes-ratio={rec['bytes_ratio']:.3f} "
            f"inconclusive={rec['inconclusive_rate']:.4%}"
        )
    if args.out:
        csv_path, fig_dir = _report_paths(args.out)
        write_metrics_csv(records, BENCH_COLUMNS, csv_path)
        print(f"wrote {csv_path}")
        if not args.no_figures:
            for p in save_bench_figures(records, fig_dir, csv_path.stem or "bench"):
                print(f"wrote {p}")
    return 0


def _cmd_table1(args) -> int:
    cfg = _config_from_args(args)
    rows = run_table1(cfg)
    agg = [r for r in rows if r["frame"] == "all"]
    print(f"{'format':<10} {'bits':>12} {'classified':>12} {'misclassified':>14}")
    for r in agg:
        bits = f"1/{r['exponent_bits']}/{r['mantissa_bits']}"
        print(f"{r['format']:<10} {bits:>12} {r['classified']:>12} "
              f"{r['misclassified_pct']:>13.5f}%")
    if args.out:
        csv_path, fig_dir = _report_paths(args.out)
        write_metrics_csv(rows, TABLE1_COLUMNS, csv_path)
        print(f"wrote {csv_path}")
        if not args.no_figures:
            for p in save_table1_figure(agg, fig_dir, csv_path.stem or "table1"):
                print(f"wrote {p}")
    return 0


def _cmd_cluster(args) -> int:
    cfg = _config_from_args(args)
    records, stats, modes_equal, cluster_sets = run_cluster(cfg)
    n_clusters = len(records)
    print(f"{n_clusters} clusters across {len(cluster_sets)} frames "
          f"(modes {'agree' if modes_equal else 'DIVERGE'})")
    for cloud, result in cluster_sets:
        sizes = result.sizes
        noise = len(result.noise)
        head = ", ".join(str(s) for s in sizes[:8])
        more = "..." if len(sizes) > 8 else ""
        print(f"frame {cloud.frame_id}: {len(sizes)} clusters [{head}{more}] noise={noise}")
    print(f"search traffic: {stats.bytes_fetched_compressed} compressed bytes vs "
          f"{stats.bytes_fetched_baseline_equivalent} baseline "
          f"(ratio {stats.bytes_ratio:.3f})")
    if args.out:
        csv_path, fig_dir = _report_paths(args.out)
        write_metrics_csv(records, CLUSTER_COLUMNS, csv_path)
        print(f"wrote {csv_path}")
        if not args.no_figures:
            for p in save_cluster_figure(records, fig_dir, csv_path.stem or "cluster"):
                print(f"wrote {p}")
    if args.write_clusters:
        from .tree import PointCloud

        out_dir = Path(args.write_clusters)
        out_dir.mkdir(parents=True, exist_ok=True)
        for cloud, result in cluster_sets:
            for k, members in enumerate(result.clusters):
                sub = PointCloud(cloud.xyz[members], f"{cloud.frame_id}-c{k}")
                write_pcd_file(sub, out_dir / f"{cloud.frame_id}_cluster{k:04d}.pcd")
        print(f"wrote {n_clusters} cluster files to {out_dir}")
    return 0 if modes_equal else 1


def _cmd_gen(args) -> int:
    spec = SceneSpec(
        seed=args.seed,
        n_objects=args.objects,
        points_per_object=tuple(args.points_per_object),
        object_extent=tuple(args.extent),
        range_cap=args.cap,
        noise_sigma=args.noise_sigma,
        ground_points=args.ground_points,
    )
    cloud = generate_scene(spec)
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_pcd_file(cloud, path, args.format)
    print(f"wrote {len(cloud)} points to {path} ({args.format})")
    return 0


_COMMANDS = {
    "verify": _cmd_verify,
    "bench": _cmd_bench,
    "table1": _cmd_table1,
    "cluster": _cmd_cluster,
    "gen": _cmd_gen,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
