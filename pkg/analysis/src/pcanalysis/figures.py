"""Figure regeneration from sweep CSVs.

Every figure produces two artifacts: the image and a companion CSV holding
exactly the plotted values, so a plot can be diffed as text.  Values taken
from the input keep their original string form; nothing is reformatted on
the way through.  Inputs are validated loudly: wrong schema version, empty
tables and missing columns are errors, and rows are only ever excluded by
the filters a spec declares.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

SOURCE_SCHEMA = "pcstream.metrics.v1"
TABLE_SCHEMA = "pcstream.analysis.v1"

FIGURE_IDS = ("adaptivity", "cache_hit", "delay", "throughput", "psnr")

# ladder order for segment bars; unknown labels sort after these
SEGMENT_ORDER = ("TopLayer", "30", "enhanced30-50", "enhanced50-75",
                 "enhanced75-100")

SWEEP_METRICS = {
    "cache_hit": ("cache_hit_rate", "Cache hit rate"),
    "delay": ("mean_gof_delay_ms", "Mean GoF delay (ms)"),
    "throughput": ("effective_throughput_mbps", "Effective throughput (Mbps)"),
}


class AnalysisError(RuntimeError):
    """Bad input table or figure spec."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render: where it reads, what it writes, how it groups."""

    figure: str
    source: str
    out_image: str
    out_table: str
    group_by: tuple[str, ...] = ()
    filters: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.figure not in FIGURE_IDS:
            raise AnalysisError(
                f"unknown figure id {self.figure!r}, expected one of "
                f"{', '.join(FIGURE_IDS)}")


def default_spec(figure: str, source: str, out_dir: str) -> FigureSpec:
    """The canonical spec for each figure id over the standard sweep files."""
    common = dict(source=source,
                  out_image=os.path.join(out_dir, f"{figure}.png"),
                  out_table=os.path.join(out_dir, f"{figure}_data.csv"))
    if figure in SWEEP_METRICS:
        return FigureSpec(figure=figure,
                          group_by=("bandwidth_mbps", "protocol"), **common)
    if figure == "adaptivity":
        # declared, not silent: adaptation is read off clean completed runs
        return FigureSpec(figure=figure, group_by=("bandwidth_mbps",),
                          filters=(("protocol", "inds"), ("loss_pct", "0.0"),
                                   ("status", "ok")),
                          **common)
    if figure == "psnr":
        return FigureSpec(figure=figure, group_by=("rung",), **common)
    raise AnalysisError(f"unknown figure id {figure!r}")


# ---------------------------------------------------------------------------
# Input tables
# ---------------------------------------------------------------------------


def read_rows(path: str) -> list[dict[str, str]]:
    """Schema-checked CSV load; empty tables are an error, not an empty plot."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise AnalysisError(f"{path}: {exc.strerror}") from exc
    with fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise AnalysisError(
                f"{path}: missing schema row, expected # schema={SOURCE_SCHEMA}")
        version = first[len("# schema="):]
        if version != SOURCE_SCHEMA:
            raise AnalysisError(
                f"{path}: schema {version!r}, expected {SOURCE_SCHEMA!r}")
        rows = list(csv.DictReader(fh))
    if not rows:
        raise AnalysisError(f"{path}: no data rows")
    return rows


def _require(rows: list[dict[str, str]], cols: tuple[str, ...], path: str) -> None:
    missing = [c for c in cols if c not in rows[0]]
    if missing:
        raise AnalysisError(f"{path}: missing columns: {', '.join(missing)}")


def _cell_match(cell: str, want: str) -> bool:
    # numeric columns round-trip through float formatting ("0.0" == "0.000000")
    try:
        return float(cell) == float(want)
    except ValueError:
        return cell == want


def _apply_filters(rows: list[dict[str, str]], spec: FigureSpec) -> list[dict[str, str]]:
    for col, _ in spec.filters:
        if col not in rows[0]:
            raise AnalysisError(f"{spec.source}: missing filter column: {col}")
    kept = [r for r in rows
            if all(_cell_match(r[col], want) for col, want in spec.filters)]
    if not kept:
        wanted = ", ".join(f"{c}={v}" for c, v in spec.filters)
        raise AnalysisError(f"{spec.source}: no rows match {wanted}")
    return kept


def _segment_rank(label: str):
    try:
        return (0, SEGMENT_ORDER.index(label))
    except ValueError:
        return (1, label)


def write_table(path: str, fieldnames: list[str], rows: list[dict[str, str]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={TABLE_SCHEMA}\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Renderers
# ---------------------------------------------------------------------------


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _sweep_lines(spec: FigureSpec, rows: list[dict[str, str]]):
    """Loss on x, one line per protocol, one panel per bandwidth."""
    metric, ylabel = SWEEP_METRICS[spec.figure]
    cols = ("bandwidth_mbps", "protocol", "loss_pct",
            f"{metric}_mean", f"{metric}_std")
    _require(rows, cols, spec.source)
    rows = _apply_filters(rows, spec)
    rows = sorted(rows, key=lambda r: (float(r["bandwidth_mbps"]),
                                       r["protocol"], float(r["loss_pct"])))
    # companion keeps the aggregate's own strings, column for column
    table = [{c: r[c] for c in cols} for r in rows]

    bandwidths = sorted({float(r["bandwidth_mbps"]) for r in rows})
    protocols = sorted({r["protocol"] for r in rows})
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(bandwidths), sharey=True,
                             figsize=(4.2 * len(bandwidths), 3.6))
    axes = [axes] if len(bandwidths) == 1 else list(axes)
    for ax, bw in zip(axes, bandwidths):
        for proto in protocols:
            pts = [r for r in rows
                   if float(r["bandwidth_mbps"]) == bw and r["protocol"] == proto]
            xs = [float(r["loss_pct"]) for r in pts]
            ys = [float(r[f"{metric}_mean"]) for r in pts]
            err = [float(r[f"{metric}_std"]) for r in pts]
            ax.errorbar(xs, ys, yerr=err, marker="o", capsize=2, label=proto)
        ax.set_title(f"{bw:g} Mbps")
        ax.set_xlabel("Loss (%)")
        ax.grid(True, alpha=0.3)
    axes[0].set_ylabel(ylabel)
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(spec.out_image, dpi=120)
    plt.close(fig)
    return list(cols), table


def _adaptivity(spec: FigureSpec, rows: list[dict[str, str]]):
    """Mean delivered packets per segment, grouped by bandwidth."""
    cols = ("bandwidth_mbps", "packets_by_segment")
    _require(rows, cols + tuple(c for c, _ in spec.filters), spec.source)
    rows = _apply_filters(rows, spec)

    groups: dict[float, list[dict[str, int]]] = {}
    for r in rows:
        try:
            counts = json.loads(r["packets_by_segment"])
        except json.JSONDecodeError as exc:
            raise AnalysisError(
                f"{spec.source}: bad packets_by_segment cell: {exc}") from exc
        groups.setdefault(float(r["bandwidth_mbps"]), []).append(counts)

    labels = sorted({lab for runs in groups.values() for c in runs for lab in c},
                    key=_segment_rank)
    table = []
    means: dict[float, dict[str, float]] = {}
    for bw in sorted(groups):
        runs = groups[bw]
        means[bw] = {}
        for lab in labels:
            mean = sum(c.get(lab, 0) for c in runs) / len(runs)
            means[bw][lab] = mean
            table.append({"bandwidth_mbps": f"{bw:g}", "segment": lab,
                          "mean_packets": f"{mean:.6f}"})

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    bws = sorted(groups)
    width = 0.8 / len(labels)
    for j, lab in enumerate(labels):
        xs = [i + (j - (len(labels) - 1) / 2) * width for i in range(len(bws))]
        ax.bar(xs, [means[bw][lab] for bw in bws], width=width, label=lab)
    ax.set_xticks(range(len(bws)))
    ax.set_xticklabels([f"{bw:g} Mbps" for bw in bws])
    ax.set_ylabel("Mean delivered packets per run")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.out_image, dpi=120)
    plt.close(fig)
    return ["bandwidth_mbps", "segment", "mean_packets"], table


def _psnr(spec: FigureSpec, rows: list[dict[str, str]]):
    """Per-cloud quality across rungs; exact rungs annotated, never dropped."""
    cols = ("cloud", "rung", "points", "psnr_db")
    _require(rows, cols, spec.source)
    rows = _apply_filters(rows, spec)
    # companion is the input, verbatim and in input order
    table = [{c: r[c] for c in cols} for r in rows]

    rungs = list(dict.fromkeys(r["rung"] for r in rows))
    clouds = list(dict.fromkeys(r["cloud"] for r in rows))
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    finite_max = 0.0
    for cloud in clouds:
        sel = {r["rung"]: float(r["psnr_db"]) for r in rows if r["cloud"] == cloud}
        xs = [rungs.index(rg) for rg in rungs if rg in sel and math.isfinite(sel[rg])]
        ys = [sel[rungs[x]] for x in xs]
        if ys:
            finite_max = max(finite_max, max(ys))
        ax.plot(xs, ys, marker="o", alpha=0.7)
    exact = [rg for rg in rungs
             if any(r["rung"] == rg and not math.isfinite(float(r["psnr_db"]))
                    for r in rows)]
    for rg in exact:
        ax.axvline(rungs.index(rg), color="gray", linestyle=":")
        ax.annotate("exact", (rungs.index(rg), finite_max or 1.0),
                    ha="center", fontsize=9)
    ax.set_xticks(range(len(rungs)))
    ax.set_xticklabels(rungs)
    ax.set_xlabel("Retention rung")
    ax.set_ylabel("Geometry PSNR (dB)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_image, dpi=120)
    plt.close(fig)
    return list(cols), table


_RENDERERS = {
    "cache_hit": _sweep_lines,
    "delay": _sweep_lines,
    "throughput": _sweep_lines,
    "adaptivity": _adaptivity,
    "psnr": _psnr,
}


def render(spec: FigureSpec) -> list[dict[str, str]]:
    """Render one figure: image plus companion table of the plotted values."""
    rows = read_rows(spec.source)
    fieldnames, table = _RENDERERS[spec.figure](spec, rows)
    write_table(spec.out_table, fieldnames, table)
    return table
