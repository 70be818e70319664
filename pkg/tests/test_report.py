"""CSV shape and figure emission."""

from pathlib import Path

import pytest

from bonsai.report import (
    BENCH_COLUMNS,
    CLUSTER_COLUMNS,
    TABLE1_COLUMNS,
    metrics_csv,
    save_bench_figures,
    save_cluster_figure,
    save_table1_figure,
    write_metrics_csv,
)


def bench_record(frame="scene-1", ratio=0.5):
    rec = dict.fromkeys(BENCH_COLUMNS, 0)
    rec.update(
        frame=frame,
        n_points=1000,
        n_leaves=70,
        leaves_compressed=66,
        flag_x_freq=0.7,
        flag_y_freq=0.65,
        flag_z_freq=0.9,
        any_flag_freq=0.93,
        arena_bytes=4480,
        raw_bytes=12000,
        stored_ratio=4480 / 12000,
        radius=0.5,
        n_queries=100,
        leaves_visited=800,
        points_classified=11500,
        inconclusive_count=40,
        inconclusive_rate=40 / 11500,
        fallback_recomputations=40,
        bytes_fetched_compressed=51200,
        bytes_fetched_baseline_equivalent=int(51200 / ratio),
        bytes_ratio=ratio,
    )
    return rec


class TestCsv:
    def test_golden_text(self):
        cols = ("frame", "size", "ratio")
        rows = [
            {"frame": "a", "size": 3, "ratio": 0.1},
            {"frame": "b", "size": 7, "ratio": 1.0 / 3.0},
        ]
        want = (
            "frame,size,ratio\n"
            "a,3,0.1\n"
            "b,7,0.3333333333333333\n"
        )
        assert metrics_csv(rows, cols) == want

    def test_floats_round_trip_exactly(self):
        value = 0.1 + 0.2  # not 0.3
        text = metrics_csv([{"v": value}], ("v",))
        assert float(text.splitlines()[1]) == value

    def test_write_creates_parents(self, tmp_path):
        target = tmp_path / "deep" / "nested" / "out.csv"
        got = write_metrics_csv([bench_record()], BENCH_COLUMNS, target)
        assert got == target
        lines = target.read_text().splitlines()
        assert lines[0] == ",".join(BENCH_COLUMNS)
        assert len(lines) == 2

    def test_column_orders_are_pinned(self):
        assert BENCH_COLUMNS[0] == TABLE1_COLUMNS[0] == CLUSTER_COLUMNS[0] == "frame"
        assert "bytes_ratio" in BENCH_COLUMNS
        assert "misclassified_pct" in TABLE1_COLUMNS
        assert CLUSTER_COLUMNS == ("frame", "cluster", "size", "min_index")

    def test_missing_column_raises(self):
        with pytest.raises(KeyError):
            metrics_csv([{"frame": "x"}], ("frame", "size"))


def _assert_png(path: Path):
    assert path.exists()
    data = path.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 1000


class TestFigures:
    def test_bench_figures(self, tmp_path):
        records = [bench_record("scene-1", 0.45), bench_record("scene-2", 0.52)]
        paths = save_bench_figures(records, tmp_path, stem="probe")
        assert [p.name for p in paths] == [
            "probe_traffic.png",
            "probe_fallback.png",
            "probe_sharing.png",
        ]
        for p in paths:
            _assert_png(p)

    def test_table1_figure_handles_zero_rows(self, tmp_path):
        rows = [
            {"format": "binary32", "misclassified_pct": 0.0},
            {"format": "half", "misclassified_pct": 0.21},
            {"format": "bfloat16", "misclassified_pct": 1.3},
            {"format": "custom24", "misclassified_pct": 0.0},
        ]
        (p,) = save_table1_figure(rows, tmp_path)
        assert p.name == "table1_misclassification.png"
        _assert_png(p)

    def test_cluster_figure(self, tmp_path):
        records = [
            {"frame": "f", "cluster": i, "size": s, "min_index": i}
            for i, s in enumerate([4, 4, 9, 30, 110])
        ]
        (p,) = save_cluster_figure(records, tmp_path)
        _assert_png(p)
        (empty,) = save_cluster_figure([], tmp_path, stem="none")
        _assert_png(empty)
