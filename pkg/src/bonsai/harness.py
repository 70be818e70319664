"""End-to-end pipelines behind the CLI subcommands.

Each run_* function takes a RunConfig, iterates the configured frames
(one PCD file, one ad-hoc scene, or the frozen five-frame corpus) and
returns plain records that the CLI prints, writes as CSV, and renders
as figures. The acceptance suite calls these directly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cluster import ClusterParams, extract_clusters
from .floats import STUDY_FORMATS
from .pcd import read_pcd_file
from .rng import Rand
from .scene import SceneSpec, default_corpus, generate_scene, plant_boundary_points
from .search import (
    DEFAULT_SAFETY_FACTOR,
    SearchStats,
    misclassification_study,
    radius_search_baseline,
    radius_search_bonsai,
)
from .tree import DEFAULT_LEAF_CAPACITY, build_tree

__all__ = [
    "RunConfig",
    "VerifyResult",
    "iter_frames",
    "select_queries",
    "run_verify",
    "run_bench",
    "run_table1",
    "run_cluster",
    "tree_storage_record",
]


@dataclass(frozen=True)
class RunConfig:
    """One resolved invocation: exactly one input source, one radius."""

    input_path: str | None = None
    scene: SceneSpec | None = None
    leaf_capacity: int = DEFAULT_LEAF_CAPACITY
    radius: float = 0.5
    queries: str = "2000"  # "all", a count, or @file with query points
    seed: int = 0
    safety_factor: float = DEFAULT_SAFETY_FACTOR
    fallback: bool = True
    min_cluster_size: int = 1
    max_cluster_size: int = 0  # 0 means unbounded
    workers: int = 1

    def __post_init__(self) -> None:
        if self.input_path is not None and self.scene is not None:
            raise ValueError("choose one input source, file or scene")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("radius must be positive and finite")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def iter_frames(cfg: RunConfig):
    """Yield the clouds this config runs over."""
    if cfg.input_path is not None:
        result = read_pcd_file(cfg.input_path)
        cloud = result.cloud
        if not cloud.frame_id:
            cloud.frame_id = Path(cfg.input_path).name
        yield cloud
    elif cfg.scene is not None:
        yield generate_scene(cfg.scene)
    else:
        for spec in default_corpus():
            yield generate_scene(spec)


def select_queries(cfg: RunConfig, cloud, rng: Rand) -> np.ndarray:
    """Query points per the config: all points, a sample, or a file."""
    spec = str(cfg.queries).strip()
    if spec == "all":
        return cloud.xyz
    if spec.startswith("@"):
        result = read_pcd_file(spec[1:])
        return result.cloud.xyz
    count = int(spec)
    if count <= 0:
        raise ValueError("query count must be positive")
    idx = rng.sample_indices(len(cloud), count)
    return cloud.xyz[idx]


def _map_queries(fn, queries: np.ndarray, workers: int):
    """Apply fn to each query point, output ordered by query index."""
    if workers <= 1 or len(queries) < 64:
        return [fn(q) for q in queries]
    chunks = np.array_split(np.arange(len(queries)), workers * 4)
    results: list = [None] * len(queries)

    def work(chunk):
        return [(int(i), fn(queries[i])) for i in chunk]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(work, chunks):
            for i, value in part:
                results[i] = value
    return results


@dataclass
class VerifyResult:
    frames: list = field(default_factory=list)
    divergences: list = field(default_factory=list)

    @property
    def total_queries(self) -> int:
        return sum(f["n_queries"] for f in self.frames)

    @property
    def ok(self) -> bool:
        return not self.divergences


def run_verify(cfg: RunConfig, plant: bool = True) -> VerifyResult:
    """Compare the compressed search against the baseline on every query.

    Synthetic frames get adversarial points planted at ULP offsets
    around sampled query spheres before the comparison. Any mismatch is
    recorded with a full dump of the query and the differing indices.
    """
    rng = Rand(cfg.seed)
    out = VerifyResult()
    for cloud in iter_frames(cfg):
        frame_rng = rng.spawn(len(out.frames) + 1)
        queries = select_queries(cfg, cloud, frame_rng)
        if plant:
            anchors = frame_rng.sample_indices(len(cloud), min(12, len(cloud)))
            cloud = plant_boundary_points(
                cloud, anchors, cfg.radius, seed=cfg.seed ^ 0x5EED, steps=(1, 2, 4, 8)
            )
            queries = np.concatenate([queries, cloud.xyz[anchors]])
        tree = build_tree(cloud, cfg.leaf_capacity)
        divergence_count = 0

        def compare(q):
            base = radius_search_baseline(tree, q, cfg.radius)
            comp, _ = radius_search_bonsai(
                tree, q, cfg.radius, cfg.safety_factor, cfg.fallback
            )
            if base.shape == comp.shape and np.array_equal(base, comp):
                return None
            missing = np.setdiff1d(base, comp)
            extra = np.setdiff1d(comp, base)
            return {
                "frame": cloud.frame_id,
                "query": [float(v) for v in q],
                "radius": cfg.radius,
                "missing": missing.tolist(),
                "extra": extra.tolist(),
                "missing_points": cloud.xyz[missing].tolist(),
                "extra_points": cloud.xyz[extra].tolist(),
            }

        for issue in _map_queries(compare, queries, cfg.workers):
            if issue is not None:
                divergence_count += 1
                out.divergences.append(issue)
        out.frames.append(
            {
                "frame": cloud.frame_id,
                "n_points": len(cloud),
                "n_queries": len(queries),
                "divergences": divergence_count,
            }
        )
    return out


def tree_storage_record(tree) -> dict:
    """Static per-tree compression metrics (no queries involved)."""
    leaves = tree.leaves
    n_leaves = len(leaves)
    compressed = [lf for lf in leaves if lf.compressed]
    flag_freq = [0.0, 0.0, 0.0]
    any_flag = 0
    for lf in compressed:
        for c in range(3):
            if lf.flags & (1 << c):
                flag_freq[c] += 1
        if lf.flags:
            any_flag += 1
    raw_bytes = 12 * tree.n_points
    return {
        "n_points": tree.n_points,
        "n_leaves": n_leaves,
        "leaves_compressed": len(compressed),
        "flag_x_freq": flag_freq[0] / n_leaves if n_leaves else 0.0,
        "flag_y_freq": flag_freq[1] / n_leaves if n_leaves else 0.0,
        "flag_z_freq": flag_freq[2] / n_leaves if n_leaves else 0.0,
        "any_flag_freq": any_flag / n_leaves if n_leaves else 0.0,
        "arena_bytes": len(tree.arena),
        "raw_bytes": raw_bytes,
        "stored_ratio": len(tree.arena) / raw_bytes if raw_bytes else 0.0,
    }


def run_bench(cfg: RunConfig) -> list[dict]:
    """One record per frame: storage metrics plus aggregated search stats."""
    rng = Rand(cfg.seed)
    records = []
    for frame_no, cloud in enumerate(iter_frames(cfg), start=1):
        tree = build_tree(cloud, cfg.leaf_capacity)
        queries = select_queries(cfg, cloud, rng.spawn(frame_no))
        total = SearchStats()

        def one(q):
            _, stats = radius_search_bonsai(
                tree, q, cfg.radius, cfg.safety_factor, cfg.fallback
            )
            return stats

        for stats in _map_queries(one, queries, cfg.workers):
            total.merge(stats)

        rec = {"frame": cloud.frame_id, **tree_storage_record(tree)}
        rec.update(
            radius=cfg.radius,
            n_queries=len(queries),
            leaves_visited=total.leaves_visited,
            points_classified=total.points_classified,
            inconclusive_count=total.inconclusive_count,
            inconclusive_rate=total.inconclusive_rate,
            fallback_recomputations=total.fallback_recomputations,
            bytes_fetched_compressed=total.bytes_fetched_compressed,
            bytes_fetched_baseline_equivalent=total.bytes_fetched_baseline_equivalent,
            bytes_ratio=total.bytes_ratio,
        )
        records.append(rec)
    return records


def run_table1(cfg: RunConfig) -> list[dict]:
    """Misclassification study rows, one per frame and format, plus
    an aggregate row per format (frame == "all")."""
    rng = Rand(cfg.seed)
    rows = []
    totals = {fmt.name: [0, 0] for fmt in STUDY_FORMATS}
    for frame_no, cloud in enumerate(iter_frames(cfg), start=1):
        tree = build_tree(cloud, cfg.leaf_capacity)
        queries = select_queries(cfg, cloud, rng.spawn(frame_no))
        for fmt in STUDY_FORMATS:
            result = misclassification_study(
                cloud, queries, cfg.radius, fmt, cfg.leaf_capacity, tree=tree
            )
            totals[fmt.name][0] += result.mismatched
            totals[fmt.name][1] += result.classified
            rows.append(
                {
                    "frame": cloud.frame_id,
                    "format": fmt.name,
                    "sign_bits": 1,
                    "exponent_bits": fmt.exponent_bits,
                    "mantissa_bits": fmt.mantissa_bits,
                    "classified": result.classified,
                    "mismatched": result.mismatched,
                    "misclassified_pct": 100.0 * result.fraction,
                }
            )
    for fmt in STUDY_FORMATS:
        mis, tot = totals[fmt.name]
        rows.append(
            {
                "frame": "all",
                "format": fmt.name,
                "sign_bits": 1,
                "exponent_bits": fmt.exponent_bits,
                "mantissa_bits": fmt.mantissa_bits,
                "classified": tot,
                "mismatched": mis,
                "misclassified_pct": 100.0 * mis / tot if tot else 0.0,
            }
        )
    return rows


def run_cluster(cfg: RunConfig, compare_modes: bool = True):
    """Cluster every frame; returns (records, stats, modes_equal)."""
    params = ClusterParams(
        tolerance=cfg.radius,
        min_cluster_size=cfg.min_cluster_size,
        max_cluster_size=cfg.max_cluster_size or np.iinfo(np.int64).max,
    )
    records = []
    total = SearchStats()
    equal = True
    cluster_sets = []
    for cloud in iter_frames(cfg):
        tree = build_tree(cloud, cfg.leaf_capacity)
        result, stats = extract_clusters(tree, params, "bonsai", cfg.safety_factor)
        total.merge(stats)
        if compare_modes:
            base, _ = extract_clusters(tree, params, "baseline")
            same = len(base.clusters) == len(result.clusters) and all(
                np.array_equal(a, b) for a, b in zip(base.clusters, result.clusters)
            )
            same = same and np.array_equal(base.noise, result.noise)
            equal = equal and same
        for k, members in enumerate(result.clusters):
            records.append(
                {
                    "frame": cloud.frame_id,
                    "cluster": k,
                    "size": len(members),
                    "min_index": int(members[0]),
                }
            )
        cluster_sets.append((cloud, result))
    return records, total, equal, cluster_sets
