"""Acceptance gate: the eight release criteria.

One test per criterion, so `pytest -v` prints one pass/fail line for
each. Every test also prints a PASS line with the measured numbers
(shown with -s or -rA). Bounds live in the asserts and nowhere else;
nothing here is tuned to make a failing build look green.
"""

import json
import re
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from bonsai.cli import main
from bonsai.cluster import ClusterParams, extract_clusters
from bonsai.codec import blob_size, compress_leaf, decompress_leaf, header_flags
from bonsai.floats import (
    HALF_DELTA_SQ,
    HALF_TWO_DELTA,
    half_bits_to_single,
    single_to_half_bits,
)
from bonsai.harness import RunConfig, run_bench, run_cluster, run_table1
from bonsai.rng import Rand
from bonsai.scene import default_corpus, generate_scene
from bonsai.search import (
    DEFAULT_SAFETY_FACTOR,
    radius_search_bonsai,
    sq_diff_with_error,
    squared_distances,
)
from bonsai.tree import PointCloud, build_tree

GOLDEN = Path(__file__).parent / "golden" / "codec_blobs.json"


def _report(criterion: str, detail: str) -> None:
    print(f"PASS {criterion}: {detail}")


# --- 1. exactness ---------------------------------------------------------


def test_criterion_1_search_exactness(capsys):
    """Compressed search is bit-identical to the float32 baseline.

    Five synthetic scenes of 10^4..10^5 points, 10^4+ queries each,
    including planted points at distance r * (1 +- k * 2^-24) around
    sampled query centers. The CLI exit status is the verdict.
    """
    t0 = time.perf_counter()
    rc = main(["verify", "--queries", "10000", "--seed", "20260816"])
    elapsed = time.perf_counter() - t0
    out = capsys.readouterr().out
    assert rc == 0
    assert "DIVERGENCE" not in out

    frames = re.findall(
        r"frame (\S+): points=(\d+) queries=(\d+) divergences=(\d+)", out
    )
    assert len(frames) == 5
    for _, points, queries, divergences in frames:
        assert 10_000 <= int(points) <= 100_000
        assert int(queries) >= 10_000
        assert int(divergences) == 0
    assert elapsed < 300.0

    with capsys.disabled():
        _report(
            "criterion 1 (exactness)",
            f"5 scenes, {sum(int(q) for _, _, q, _ in frames)} queries, "
            f"0 divergences, {elapsed:.1f}s",
        )


# --- 2. error-bound soundness ---------------------------------------------


def _stress_pairs(rng: Rand):
    """10^6 uniform (a, b) pairs in [-120, 120] plus engineered batches
    that sit on the hard edges of the bound: values at half rounding
    midpoints, a few ULP off representable halves, subnormal-half b
    against distant a, and near-coincident pairs."""
    a_parts = [rng.uniform(1_000_000, -120, 120)]
    b_parts = [rng.uniform(1_000_000, -120, 120)]

    pats = (rng.uniform(60_000) * 65536).astype(np.uint16)
    widened = half_bits_to_single(pats)
    hv = widened[np.isfinite(widened) & (np.abs(widened) <= 119.0)][:50_000]
    ulps = (rng.uniform(len(hv)) * 5 - 2).astype(np.int32)  # -2..2
    nudged = hv.copy()
    for k in (-2, -1, 1, 2):
        vals = hv[ulps == k]
        for _ in range(abs(k)):
            vals = np.nextafter(vals, np.float32(np.sign(k) * np.inf), dtype=np.float32)
        nudged[ulps == k] = vals
    a_parts.append(rng.uniform(len(nudged), -120, 120))
    b_parts.append(nudged.astype(np.float64))

    pats = (rng.uniform(80_000) * 0x7C00).astype(np.uint16)
    lo = half_bits_to_single(pats)
    hi = half_bits_to_single(pats + np.uint16(1))
    keep = np.isfinite(hi) & (np.abs(hi) <= 119.0)
    mid = ((lo[keep].astype(np.float64) + hi[keep].astype(np.float64)) / 2)[:50_000]
    sign = np.where(rng.uniform(len(mid)) < 0.5, -1.0, 1.0)
    a_parts.append(rng.uniform(len(mid), -120, 120))
    b_parts.append(sign * mid)

    a_parts.append(rng.uniform(50_000, -120, 120))
    b_parts.append(rng.uniform(50_000, -(2.0 ** -14), 2.0 ** -14))

    near = rng.uniform(50_000, -119, 119)
    a_parts.append(near + rng.uniform(50_000, -1e-3, 1e-3))
    b_parts.append(near)

    a = np.concatenate(a_parts).astype(np.float32)
    b = np.concatenate(b_parts).astype(np.float32)
    return a, b


def test_criterion_2_error_bound_soundness():
    """|(a - widen(half(b)))^2 - (a - b)^2| <= err * safety factor.

    The left side is evaluated in exact rational arithmetic; err comes
    from sq_diff_with_error. A float64 screen with an explicit rounding
    allowance selects candidates, exact arithmetic settles them.
    """
    a, b = _stress_pairs(Rand(0xACCE))
    n = len(a)
    assert n >= 1_000_000

    hb = single_to_half_bits(b)
    e = ((hb >> np.uint16(10)) & np.uint16(0x1F)).astype(np.intp)
    assert not np.any(e == 0x1F)
    bp = half_bits_to_single(hb)
    diff = a - bp
    err = HALF_TWO_DELTA[e] * np.abs(diff) + HALF_DELTA_SQ[e]

    # the vectorized err must be the scalar function, bit for bit
    for i in range(0, n, 9973):
        sq_s, err_s = sq_diff_with_error(float(a[i]), int(hb[i]))
        assert np.float32(err_s) == err[i]
        assert np.float32(sq_s) == np.float32(diff[i]) * np.float32(diff[i])

    a64, b64, bp64 = a.astype(np.float64), b.astype(np.float64), bp.astype(np.float64)
    sq_widened = (a64 - bp64) ** 2
    sq_exact = (a64 - b64) ** 2
    lhs64 = np.abs(sq_widened - sq_exact)
    rhs64 = err.astype(np.float64) * DEFAULT_SAFETY_FACTOR
    # float64 evaluation of lhs is within ~4 ulp of the largest square
    noise = 2.0 ** -48 * np.maximum(sq_widened, sq_exact)
    suspects = np.flatnonzero(lhs64 > rhs64 * (1.0 - 2.0 ** -40) - noise)

    violations = []
    sf = Fraction(DEFAULT_SAFETY_FACTOR)
    for i in suspects:
        _, err_s = sq_diff_with_error(float(a[i]), int(hb[i]))
        fa, fb = Fraction(float(a[i])), Fraction(float(b[i]))
        fbp = Fraction(float(bp[i]))
        lhs = abs((fa - fbp) ** 2 - (fa - fb) ** 2)
        if lhs > Fraction(float(err_s)) * sf:
            violations.append((float(a[i]), float(b[i])))
    assert violations == []
    _report(
        "criterion 2 (error bound)",
        f"{n} pairs, {len(suspects)} screened exactly, 0 violations",
    )


# --- 3. storage-format study ----------------------------------------------


def test_criterion_3_format_study_orderings():
    """Without fallback: binary32 exact, half under 1% and better than
    bfloat16, the 24-bit layout better than half, on every scene."""
    rows = run_table1(RunConfig(queries="200", seed=47))
    by_frame = {}
    for row in rows:
        by_frame.setdefault(row["frame"], {})[row["format"]] = row["misclassified_pct"]
    assert len(by_frame) == 6  # five scenes plus the aggregate
    for frame, pct in by_frame.items():
        assert pct["binary32"] == 0.0, frame
        assert pct["half"] < 1.0, frame
        assert pct["half"] < pct["bfloat16"], frame
        assert pct["custom24"] < pct["half"], frame
    worst = max(p["half"] for p in by_frame.values())
    _report(
        "criterion 3 (format study)",
        f"orderings hold on all scenes; worst half error {worst:.3f}%",
    )


# --- 4. traffic model ------------------------------------------------------


def test_criterion_4_traffic_model():
    """Full 15-point fully-shared leaves fetch exactly 64/180 of the
    baseline bytes; the mixed default scenes stay at or under 0.55."""
    rng = Rand(99)
    xyz = rng.uniform(960 * 3, 16.0, 31.0).reshape(960, 3).astype(np.float32)
    tree = build_tree(PointCloud(xyz), leaf_capacity=15)
    assert {leaf.count for leaf in tree.leaves} == {15}
    assert {leaf.flags for leaf in tree.leaves} == {7}
    assert {leaf.blob_len for leaf in tree.leaves} == {64}

    center = np.array([23.5, 23.5, 23.5], dtype=np.float32)
    hits, stats = radius_search_bonsai(tree, center, 100.0)
    assert len(hits) == 960
    assert stats.inconclusive_count == 0
    ratio = Fraction(
        stats.bytes_fetched_compressed, stats.bytes_fetched_baseline_equivalent
    )
    assert ratio == Fraction(64, 180)

    records = run_bench(RunConfig(queries="200", seed=31))
    mixed = {rec["frame"]: rec["bytes_ratio"] for rec in records}
    assert all(r <= 0.55 for r in mixed.values()), mixed
    _report(
        "criterion 4 (traffic)",
        f"full-leaf ratio exactly 64/180; mixed scenes max {max(mixed.values()):.3f}",
    )


# --- 5. inconclusive rate ---------------------------------------------------


def test_criterion_5_inconclusive_rate():
    """Fallback fires for at most 2% of classifications across the
    working radius range on every default scene."""
    worst = (0.0, None, None)
    for radius in (0.2, 0.5, 1.0, 2.0):
        for rec in run_bench(RunConfig(radius=radius, queries="200", seed=31)):
            assert rec["points_classified"] > 0, rec["frame"]
            rate = rec["inconclusive_rate"]
            assert rate <= 0.02, (radius, rec["frame"], rate)
            if rate > worst[0]:
                worst = (rate, radius, rec["frame"])
    _report(
        "criterion 5 (inconclusive rate)",
        f"max {worst[0]:.4%} at r={worst[1]} on {worst[2]} (bound 2%)",
    )


# --- 6. sharing frequency ---------------------------------------------------


def test_criterion_6_sharing_frequency():
    """At least 70% of leaves over the frozen corpus share sign and
    exponent on at least one coordinate."""
    flagged = total = 0
    per_scene = {}
    for spec in default_corpus():
        tree = build_tree(generate_scene(spec))
        scene_flagged = sum(
            1 for leaf in tree.leaves if leaf.compressed and leaf.flags
        )
        per_scene[spec.seed] = scene_flagged / len(tree.leaves)
        flagged += scene_flagged
        total += len(tree.leaves)
    assert total > 0
    assert flagged / total >= 0.70, per_scene
    _report(
        "criterion 6 (sharing frequency)",
        f"{flagged}/{total} leaves flagged = {flagged / total:.1%} "
        f"(per scene min {min(per_scene.values()):.1%})",
    )


# --- 7. codec ----------------------------------------------------------------


def _leaf_payload(rng: Rand, count: int, want_flags: int) -> np.ndarray:
    """count points engineering exactly want_flags: everything in one
    positive binade, then unshared coordinates pushed out of it."""
    vals = rng.uniform(count * 3, 16.0, 31.0).reshape(count, 3)
    if count > 1:
        for c in range(3):
            if not (want_flags >> c) & 1:
                vals[1:, c] = rng.uniform(count - 1, 128.0, 255.0)
    return vals.astype(np.float32)


def test_criterion_7_codec_exhaustive():
    """Every leaf size x every flag pattern x 100 payloads: header and
    size as computed, decode equals the half cast, re-compression is
    byte-identical. Golden vectors replay exactly."""
    rng = Rand(7011)
    cycles = 0
    for count in range(1, 17):
        for want in range(8):
            expect = 7 if count == 1 else want
            for _ in range(100):
                pts = _leaf_payload(rng, count, want)
                blob = compress_leaf(pts)
                assert blob is not None
                assert header_flags(blob) == expect
                assert len(blob) == blob_size(count, expect)
                halves = decompress_leaf(blob, count)
                assert np.array_equal(halves, single_to_half_bits(pts))
                assert compress_leaf(half_bits_to_single(halves)) == blob
                cycles += 1
    assert cycles == 16 * 8 * 100

    golden = json.loads(GOLDEN.read_text())
    assert len(golden) >= 10
    for case in golden:
        pts = np.array(case["points"], dtype=np.float32)
        blob = compress_leaf(pts)
        assert blob.hex() == case["blob"], case["label"]
        assert header_flags(blob) == case["flags"], case["label"]
        halves = decompress_leaf(blob, len(pts))
        assert halves.tolist() == case["halves"], case["label"]
    _report(
        "criterion 7 (codec)",
        f"{cycles} round-trip cycles and {len(golden)} golden vectors byte-stable",
    )


# --- 8. clustering -----------------------------------------------------------


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> None:
        self.parent[self.find(x)] = self.find(y)


def _oracle_components(xyz: np.ndarray, params: ClusterParams):
    """Connected components of the inclusive <= tolerance graph via the
    same float32 distance kernel, dense pairwise."""
    n = len(xyz)
    tol2 = np.float32(params.tolerance) * np.float32(params.tolerance)
    uf = _UnionFind(n)
    for i in range(n):
        d2 = squared_distances(xyz, xyz[i])
        for j in np.flatnonzero(d2 <= tol2):
            uf.union(i, int(j))
    groups = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    clusters, noise = [], []
    for members in groups.values():
        if params.min_cluster_size <= len(members) <= params.max_cluster_size:
            clusters.append(np.array(members, dtype=np.intp))
        else:
            noise.extend(members)
    clusters.sort(key=lambda m: m[0])
    return clusters, np.array(sorted(noise), dtype=np.intp)


def _small_clouds(rng: Rand):
    spread = rng.uniform(1200 * 3, -6, 6).reshape(1200, 3)
    gridded = np.round(rng.uniform(900 * 3, -4, 4).reshape(900, 3) * 2) / 2
    blob_a = rng.uniform(800 * 3, 0, 1.5).reshape(800, 3)
    blob_b = rng.uniform(800 * 3, 0, 1.5).reshape(800, 3) + [8.0, 0.0, 0.0]
    twin = np.concatenate([blob_a, blob_b])
    return [
        (PointCloud(spread.astype(np.float32)), ClusterParams(tolerance=0.5)),
        (
            PointCloud(gridded.astype(np.float32)),
            ClusterParams(tolerance=0.6, min_cluster_size=4),
        ),
        (PointCloud(twin.astype(np.float32)), ClusterParams(tolerance=0.7)),
    ]


def test_criterion_8_clustering_oracle():
    """Both cluster modes equal brute-force connected components on
    small clouds, and equal each other on every default scene."""
    for cloud, params in _small_clouds(Rand(88)):
        assert len(cloud) <= 2000
        want_clusters, want_noise = _oracle_components(cloud.xyz, params)
        tree = build_tree(cloud)
        for mode in ("baseline", "bonsai"):
            got, _ = extract_clusters(tree, params, mode)
            assert len(got.clusters) == len(want_clusters), mode
            for a, b in zip(got.clusters, want_clusters):
                assert np.array_equal(a, b), mode
            assert np.array_equal(got.noise, want_noise), mode

    records, _, modes_equal, cluster_sets = run_cluster(RunConfig(radius=0.5, seed=7))
    assert modes_equal
    assert len(cluster_sets) == 5
    assert records
    _report(
        "criterion 8 (clustering)",
        f"oracle match on 3 small clouds; modes equal on all 5 scenes "
        f"({len(records)} clusters)",
    )


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
