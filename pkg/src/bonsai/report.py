"""CSV emission and the figures rendered alongside it.

CSV is the machine boundary: fixed column order, floats at full
round-trip precision. Figures are derived views of the same records,
written next to the CSV as PNG files.
"""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from pathlib import Path

__all__ = [
    "BENCH_COLUMNS",
    "TABLE1_COLUMNS",
    "CLUSTER_COLUMNS",
    "metrics_csv",
    "write_metrics_csv",
    "save_bench_figures",
    "save_table1_figure",
    "save_cluster_figure",
]

BENCH_COLUMNS = (
    "frame",
    "n_points",
    "n_leaves",
    "leaves_compressed",
    "flag_x_freq",
    "flag_y_freq",
    "flag_z_freq",
    "any_flag_freq",
    "arena_bytes",
    "raw_bytes",
    "stored_ratio",
    "radius",
    "n_queries",
    "leaves_visited",
    "points_classified",
    "inconclusive_count",
    "inconclusive_rate",
    "fallback_recomputations",
    "bytes_fetched_compressed",
    "bytes_fetched_baseline_equivalent",
    "bytes_ratio",
)

TABLE1_COLUMNS = (
    "frame",
    "format",
    "sign_bits",
    "exponent_bits",
    "mantissa_bits",
    "classified",
    "mismatched",
    "misclassified_pct",
)

CLUSTER_COLUMNS = (
    "frame",
    "cluster",
    "size",
    "min_index",
)


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)  # shortest exact round-trip
    return str(value)


def metrics_csv(records, columns) -> str:
    """Records (dicts) to CSV text with a fixed header."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_cell(rec[c]) for c in columns])
    return out.getvalue()


def write_metrics_csv(records, columns, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(metrics_csv(records, columns), encoding="ascii")
    return path


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _fig_size(width: float = 7.5):
    golden = (1.0 + 5.0 ** 0.5) / 2.0
    return (width, width / golden)


def save_bench_figures(records, out_dir, stem: str = "bench") -> list[Path]:
    """Traffic, fallback and sharing charts for bench records."""
    plt = _plt()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frames = [str(r["frame"]) for r in records]
    x = range(len(frames))
    paths = []

    fig, ax = plt.subplots(figsize=_fig_size())
    ax.bar(x, [r["bytes_ratio"] for r in records], color="#4878cf")
    floor = float(Fraction(64, 180))
    ax.axhline(floor, color="#d65f5f", linestyle="--", linewidth=1,
               label=f"full-leaf floor {floor:.3f}")
    ax.set_xticks(list(x), frames, rotation=30, ha="right")
    ax.set_ylabel("bytes fetched / baseline equivalent")
    ax.set_title("Leaf traffic relative to uncompressed search")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    p = out_dir / f"{stem}_traffic.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=_fig_size())
    ax.bar(x, [100.0 * r["inconclusive_rate"] for r in records], color="#6acc65")
    ax.set_xticks(list(x), frames, rotation=30, ha="right")
    ax.set_ylabel("inconclusive classifications (%)")
    ax.set_title("Fallback rate")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    p = out_dir / f"{stem}_fallback.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=_fig_size())
    width = 0.27
    for k, (key, label) in enumerate(
        [("flag_x_freq", "x"), ("flag_y_freq", "y"), ("flag_z_freq", "z")]
    ):
        ax.bar([i + (k - 1) * width for i in x], [100.0 * r[key] for r in records],
               width=width, label=label)
    ax.set_xticks(list(x), frames, rotation=30, ha="right")
    ax.set_ylabel("leaves sharing sign/exponent (%)")
    ax.set_title("Coordinate sharing flags")
    ax.legend(title="coordinate")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    p = out_dir / f"{stem}_sharing.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)
    return paths


def save_table1_figure(rows, out_dir, stem: str = "table1") -> list[Path]:
    """Log-scale misclassification bars, one per format (aggregate rows)."""
    plt = _plt()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=_fig_size())
    names = [r["format"] for r in rows]
    pcts = [r["misclassified_pct"] for r in rows]
    shown = [max(p, 1e-7) for p in pcts]  # keep zero rows visible on log scale
    bars = ax.bar(range(len(names)), shown, color="#956cb4")
    ax.set_yscale("log")
    ax.set_xticks(range(len(names)), names)
    ax.set_ylabel("misclassified (%)")
    ax.set_title("Classification error by storage format")
    for bar, p in zip(bars, pcts):
        ax.annotate(f"{p:.4g}%", (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=8)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    p = out_dir / f"{stem}_misclassification.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    return [p]


def save_cluster_figure(records, out_dir, stem: str = "cluster") -> list[Path]:
    """Histogram of cluster sizes across frames."""
    plt = _plt()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sizes = [r["size"] for r in records]
    fig, ax = plt.subplots(figsize=_fig_size())
    if sizes:
        ax.hist(sizes, bins=min(40, max(5, len(set(sizes)))), color="#ee854a")
    ax.set_xlabel("cluster size (points)")
    ax.set_ylabel("clusters")
    ax.set_title("Cluster size distribution")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    p = out_dir / f"{stem}_sizes.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    return [p]
