"""Radius search: full-precision baseline and compressed-leaf variant.

Membership is inclusive, d^2 <= r^2, with both sides in float32. The
compressed path computes squared distances from the widened halves and
brackets each with the worst-case conversion error

    err_c = 2 * max|dB| * |a - b'| + max|dB|^2      (per coordinate)

summed over coordinates. A point is In when d'^2 <= r^2 - err, Out when
d'^2 > r^2 + err, and otherwise falls back to the original float32
point through the exact same arithmetic the baseline uses, so the two
searches return identical index sets. The error total is additionally
inflated by a small safety factor (default 1 + 2^-18) to cover the
float32 rounding of the subtract/square/sum chain itself, which the
per-coordinate bound does not model.

Both paths share one distance kernel with a fixed operation order,
(dx*dx + dy*dy) + dz*dz, per coordinate then summed, all float32;
identical inputs therefore produce bit-identical results. Verdict
comparisons run in float64 on the float32 operands so the comparison
arithmetic adds no rounding of its own.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import RAW_POINT_BYTES, decompress_leaf
from .floats import (
    HALF_DELTA_SQ,
    HALF_TWO_DELTA,
    ReducedFormat,
    half_bits_to_single,
    to_reduced_array,
    widen_array,
)
from .tree import KdTree, build_tree, leaf_visit_order

__all__ = [
    "DEFAULT_SAFETY_FACTOR",
    "SearchStats",
    "RadiusQuery",
    "Classification",
    "StudyResult",
    "squared_distances",
    "sq_diff_with_error",
    "classify",
    "radius_search_baseline",
    "radius_search_bonsai",
    "misclassification_study",
]

DEFAULT_SAFETY_FACTOR = 1.0 + 2.0 ** -18


@dataclass
class SearchStats:
    """Memory-traffic and classification counters for one or more searches.

    Byte counts model fetches at leaf granularity: a visited leaf costs
    its blob length on the compressed counter and 12 bytes per point on
    the baseline-equivalent counter, and every fallback recomputation
    adds one original 12-byte point to the compressed counter.
    """

    leaves_visited: int = 0
    points_classified: int = 0
    inconclusive_count: int = 0
    fallback_recomputations: int = 0
    bytes_fetched_compressed: int = 0
    bytes_fetched_baseline_equivalent: int = 0

    def merge(self, other: "SearchStats") -> "SearchStats":
        self.leaves_visited += other.leaves_visited
        self.points_classified += other.points_classified
        self.inconclusive_count += other.inconclusive_count
        self.fallback_recomputations += other.fallback_recomputations
        self.bytes_fetched_compressed += other.bytes_fetched_compressed
        self.bytes_fetched_baseline_equivalent += other.bytes_fetched_baseline_equivalent
        return self

    @property
    def bytes_ratio(self) -> float:
        if self.bytes_fetched_baseline_equivalent == 0:
            return 0.0
        return self.bytes_fetched_compressed / self.bytes_fetched_baseline_equivalent

    @property
    def inconclusive_rate(self) -> float:
        if self.points_classified == 0:
            return 0.0
        return self.inconclusive_count / self.points_classified


@dataclass(frozen=True)
class RadiusQuery:
    """A query point with its radius; r^2 is fixed in float32 up front."""

    point: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "point", np.asarray(self.point, dtype=np.float32).reshape(3)
        )
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("radius must be positive and finite")

    @property
    def r2(self) -> np.float32:
        r = np.float32(self.radius)
        return r * r


@dataclass
class Classification:
    """Verdict for one point, with the trace of how it was reached."""

    in_radius: bool
    d2_approx: float
    total_error: float
    fallback_fired: bool


@dataclass
class StudyResult:
    """Misclassification tally for one reduced format."""

    format_name: str
    mismatched: int
    classified: int

    @property
    def fraction(self) -> float:
        return self.mismatched / self.classified if self.classified else 0.0


def squared_distances(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """float32 squared distances, fixed order: (dx^2 + dy^2) + dz^2."""
    dx = points[:, 0] - q[0]
    dy = points[:, 1] - q[1]
    dz = points[:, 2] - q[2]
    return (dx * dx + dy * dy) + dz * dz


def _leaf_approx(q: np.ndarray, halves: np.ndarray):
    """Approximate squared distances and error totals for one leaf."""
    widened = half_bits_to_single(halves).reshape(halves.shape[0], 3)
    efield = (halves >> 10) & np.uint16(0x1F)
    diff = q[np.newaxis, :] - widened
    sq = diff * diff
    err = HALF_TWO_DELTA[efield] * np.abs(diff) + HALF_DELTA_SQ[efield]
    d2 = (sq[:, 0] + sq[:, 1]) + sq[:, 2]
    total_err = (err[:, 0] + err[:, 1]) + err[:, 2]
    return d2, total_err


def sq_diff_with_error(a: float, b_half: int):
    """One coordinate: (a - widen(b))^2 and its worst-case error.

    `b_half` is a half bit pattern; the error bound is looked up by its
    exponent field and uses the rounded float32 difference.
    """
    e = (int(b_half) >> 10) & 0x1F
    if e == 0x1F:
        raise ValueError("non-finite half pattern")
    b = half_bits_to_single(np.uint16(b_half)).reshape(())[()]
    diff = np.float32(a) - b
    sq = diff * diff
    err = HALF_TWO_DELTA[e] * np.abs(diff) + HALF_DELTA_SQ[e]
    return sq, err


def classify(
    query: RadiusQuery,
    p_half,
    original,
    safety_factor: float = DEFAULT_SAFETY_FACTOR,
    fallback: bool = True,
) -> Classification:
    """Shell-classify one point given its three half patterns.

    `original` is the uncompressed float32 point used when the verdict
    is inconclusive.
    """
    halves = np.asarray(p_half, dtype=np.uint16).reshape(1, 3)
    d2, err = _leaf_approx(query.point, halves)
    total = err[0] * np.float32(safety_factor)
    r2 = np.float64(query.r2)
    d2_64 = np.float64(d2[0])
    if d2_64 <= r2 - np.float64(total):
        return Classification(True, float(d2[0]), float(total), False)
    if d2_64 > r2 + np.float64(total):
        return Classification(False, float(d2[0]), float(total), False)
    if fallback:
        pts = np.asarray(original, dtype=np.float32).reshape(1, 3)
        exact = squared_distances(pts, query.point)[0]
        return Classification(bool(exact <= query.r2), float(d2[0]), float(total), True)
    # fallback disabled: resolve with the approximate comparison and say so
    return Classification(bool(d2[0] <= query.r2), float(d2[0]), float(total), False)


def radius_search_baseline(
    tree: KdTree, q, r: float, stats: SearchStats | None = None
) -> np.ndarray:
    """Exact float32 radius search; returns sorted point indices."""
    query = RadiusQuery(q, r)
    r2 = query.r2
    xyz = tree.cloud.xyz
    hits = []
    for leaf in leaf_visit_order(tree, query.point, r):
        pts = xyz[leaf.indices]
        mask = squared_distances(pts, query.point) <= r2
        if mask.any():
            hits.append(leaf.indices[mask])
        if stats is not None:
            stats.leaves_visited += 1
            stats.points_classified += leaf.count
            stats.bytes_fetched_baseline_equivalent += RAW_POINT_BYTES * leaf.count
    if not hits:
        return np.empty(0, dtype=np.intp)
    out = np.concatenate(hits)
    out.sort()
    return out


def radius_search_bonsai(
    tree: KdTree,
    q,
    r: float,
    safety_factor: float = DEFAULT_SAFETY_FACTOR,
    fallback: bool = True,
) -> tuple[np.ndarray, SearchStats]:
    """Radius search over compressed leaves; equals the baseline result.

    Returns (sorted indices, stats). `fallback=False` disables the
    inconclusive recomputation and resolves shell points with the
    approximate comparison instead; it exists for negative testing only
    and voids the exactness guarantee.
    """
    query = RadiusQuery(q, r)
    r2_32 = query.r2
    r2 = np.float64(r2_32)
    sf = np.float32(safety_factor)
    xyz = tree.cloud.xyz
    stats = SearchStats()
    hits = []
    for leaf in leaf_visit_order(tree, query.point, r):
        stats.leaves_visited += 1
        stats.points_classified += leaf.count
        stats.bytes_fetched_baseline_equivalent += RAW_POINT_BYTES * leaf.count
        stats.bytes_fetched_compressed += leaf.blob_len
        if not leaf.compressed:
            pts = xyz[leaf.indices]
            mask = squared_distances(pts, query.point) <= r2_32
        else:
            halves = decompress_leaf(tree.leaf_blob(leaf), leaf.count)
            d2, err = _leaf_approx(query.point, halves)
            total = (err * sf).astype(np.float64)
            d2_64 = d2.astype(np.float64)
            mask = d2_64 <= r2 - total
            shell = ~mask & ~(d2_64 > r2 + total)
            n_shell = int(np.count_nonzero(shell))
            if n_shell:
                stats.inconclusive_count += n_shell
                if fallback:
                    stats.fallback_recomputations += n_shell
                    stats.bytes_fetched_compressed += RAW_POINT_BYTES * n_shell
                    pts = xyz[leaf.indices[shell]]
                    mask[shell] = squared_distances(pts, query.point) <= r2_32
                else:
                    mask[shell] = d2[shell] <= r2_32
        if mask.any():
            hits.append(leaf.indices[mask])
    if hits:
        out = np.concatenate(hits)
        out.sort()
    else:
        out = np.empty(0, dtype=np.intp)
    return out, stats


def misclassification_study(
    cloud,
    query_points,
    radius: float,
    fmt: ReducedFormat,
    leaf_capacity: int = 15,
    tree: KdTree | None = None,
) -> StudyResult:
    """Fraction of visited-point verdicts that flip under a reduced format.

    Classifies every point of every leaf the full-precision traversal
    visits, once with original float32 coordinates and once with the
    format's widened values, no error shell and no fallback. binary32
    reproduces the originals exactly, so its fraction is structurally
    zero.
    """
    if tree is None:
        tree = build_tree(cloud, leaf_capacity)
    xyz = tree.cloud.xyz
    reduced = widen_array(to_reduced_array(xyz, fmt), fmt)
    r2 = RadiusQuery(np.zeros(3), radius).r2
    mismatched = 0
    classified = 0
    for qp in np.asarray(query_points, dtype=np.float32).reshape(-1, 3):
        for leaf in leaf_visit_order(tree, qp, radius):
            base = squared_distances(xyz[leaf.indices], qp) <= r2
            approx = squared_distances(reduced[leaf.indices], qp) <= r2
            mismatched += int(np.count_nonzero(base != approx))
            classified += leaf.count
    return StudyResult(fmt.name, mismatched, classified)
