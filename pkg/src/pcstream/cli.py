"""Command-line front end.

Five subcommands: encode (dataset -> producer store), run (one scenario
-> metrics CSV, optional packet trace), sweep (scenario grid -> raw
CSV), report (raw CSV -> aggregate CSV + trend figures), psnr (rung
quality table).  Exit code 2 means a configuration problem and the
message names the offending key; 1 is a runtime failure.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys
from dataclasses import replace

from .codec import CodecError, coverage_quality, gen_synthetic, load_ply, voxelize
from .endpoints import build_catalog, encode_gof_content
from .layering import LayeringError, check_ratios, partition_indices, tier_subset
from .metrics import (
    SCHEMA_VERSION,
    MetricsError,
    TraceWriter,
    aggregate_rows,
    compute_metrics,
    metrics_row,
    read_csv,
    write_aggregate_csv,
    write_raw_csv,
)
from .scenario import (
    STORE_MANIFEST,
    ScenarioError,
    load_scenario,
    run_scenario,
)
from .sweep import (
    DEFAULT_BANDWIDTHS,
    DEFAULT_LOSSES,
    DEFAULT_SEEDS,
    SweepGrid,
    default_base,
    grid_configs,
    run_sweep,
)

RUNG_LABELS = ("/30", "/50", "/75", "/100")


def _synthetic_arg(text: str) -> tuple[str, int]:
    shape, sep, count = text.partition(":")
    if not sep or not count.isdigit() or int(count) < 1:
        raise ScenarioError("synthetic", f"expected SHAPE:NPOINTS, got {text!r}")
    return shape, int(count)


def _float_list(key: str, text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ScenarioError(key, f"expected comma-separated numbers, got {text!r}")


def _int_list(key: str, text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ScenarioError(key, f"expected comma-separated integers, got {text!r}")


# ---------------------------------------------------------------------------
# encode
# ---------------------------------------------------------------------------


def _load_frames(args) -> list:
    if args.ply is not None:
        paths = sorted(glob.glob(os.path.join(args.ply, "*.ply")))
        if not paths:
            raise ScenarioError("ply", f"no .ply files under {args.ply}")
        if args.frames is not None:
            paths = paths[: args.frames]
        return [voxelize(load_ply(p), args.depth) for p in paths]
    shape, n_points = _synthetic_arg(args.synthetic)
    n_frames = args.frames if args.frames is not None else 10 * args.gof
    return [
        voxelize(gen_synthetic(shape, n_points, seed=args.seed + i), args.depth)
        for i in range(n_frames)
    ]


def cmd_encode(args) -> int:
    if (args.synthetic is None) == (args.ply is None):
        raise ScenarioError(
            "synthetic", "exactly one of --synthetic or --ply is required")
    try:
        ratios = check_ratios(_float_list("ratios", args.ratios))
    except LayeringError as exc:
        raise ScenarioError("ratios", str(exc)) from None
    clouds = _load_frames(args)
    contents = encode_gof_content(clouds, args.gof, ratios)
    catalog = build_catalog(args.dataset, args.window, clouds[0].depth, contents)

    os.makedirs(args.out, exist_ok=True)
    for i, gof_content in enumerate(contents):
        gof_dir = os.path.join(args.out, f"GoF_{i + 1:04d}")
        os.makedirs(gof_dir, exist_ok=True)
        for label, payload in gof_content.items():
            with open(os.path.join(gof_dir, f"{label}.bin"), "wb") as fh:
                fh.write(payload)
    with open(os.path.join(args.out, STORE_MANIFEST), "wb") as fh:
        fh.write(catalog.to_json())

    total = sum(len(p) for c in contents for p in c.values())
    print(f"encoded {len(clouds)} frames into {len(contents)} GoFs "
          f"({total / 1e6:.2f} MB) under {args.out}")
    return 0


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    trace_path = args.trace if args.trace is not None else cfg.trace

    if trace_path is not None:
        with TraceWriter(trace_path) as tw:
            result = run_scenario(cfg, tracer=tw)
    else:
        result = run_scenario(cfg)
    m = compute_metrics(result)
    write_raw_csv([metrics_row(m)], args.out)

    delay = "-" if m.mean_gof_delay_ms is None else f"{m.mean_gof_delay_ms:.1f} ms"
    print(f"{m.scenario_id}: hit={m.cache_hit_rate:.3f} delay={delay} "
          f"thr={m.effective_throughput_mbps:.2f} Mbps "
          f"incomplete={m.incomplete_gof_fraction:.3f} -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    base = load_scenario(args.scenario) if args.scenario else default_base()
    grid = SweepGrid(
        protocols=(tuple(args.protocols.split(","))
                   if args.protocols else SweepGrid.protocols),
        bandwidths_mbps=(_float_list("bandwidths", args.bandwidths)
                         if args.bandwidths else DEFAULT_BANDWIDTHS),
        loss_pcts=(_float_list("losses", args.losses)
                   if args.losses else DEFAULT_LOSSES),
        seeds=_int_list("seeds", args.seeds) if args.seeds else DEFAULT_SEEDS,
    )
    for p in grid.protocols:
        if p not in ("inds", "dash_pc", "pcc_dash"):
            raise ScenarioError("protocols", f"unknown protocol {p!r}")

    configs = grid_configs(grid, base)

    def progress(done, total, row):
        if not args.quiet:
            print(f"[{done:4d}/{total}] {row['scenario_id']} {row['status']}",
                  file=sys.stderr)

    rows = run_sweep(configs, jobs=args.jobs, progress=progress)
    write_raw_csv(rows, args.out)
    failed = sum(1 for r in rows if r["status"] != "ok")
    print(f"{len(rows)} runs ({failed} failed) -> {args.out}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

FIGURES = (
    ("cache_hit_rate", "Cache hit rate", "cache_hit.png", (0.0, 1.0)),
    ("mean_gof_delay_ms", "Mean group delay (ms)", "delay.png", None),
    ("effective_throughput_mbps", "Effective throughput (Mbps)",
     "throughput.png", None),
)


def _render_figures(agg: list[dict[str, str]], out_dir: str) -> list[str]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    bandwidths = sorted({float(r["bandwidth_mbps"]) for r in agg})
    protocols = sorted({r["protocol"] for r in agg})
    written = []
    for metric, ylabel, filename, ylim in FIGURES:
        fig, axes = plt.subplots(
            1, len(bandwidths), figsize=(4.2 * len(bandwidths), 3.4),
            sharey=True, squeeze=False)
        for ax, bw in zip(axes[0], bandwidths):
            for proto in protocols:
                pts = [r for r in agg
                       if r["protocol"] == proto
                       and float(r["bandwidth_mbps"]) == bw
                       and r.get(f"{metric}_mean", "") != ""]
                pts.sort(key=lambda r: float(r["loss_pct"]))
                xs = [float(r["loss_pct"]) for r in pts]
                ys = [float(r[f"{metric}_mean"]) for r in pts]
                es = [float(r[f"{metric}_std"]) for r in pts]
                ax.errorbar(xs, ys, yerr=es, marker="o", markersize=3,
                            capsize=2, label=proto)
            ax.set_title(f"{bw:g} Mbps")
            ax.set_xlabel("loss (%)")
            ax.grid(True, alpha=0.3)
            if ylim is not None:
                ax.set_ylim(*ylim)
        axes[0][0].set_ylabel(ylabel)
        axes[0][-1].legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(out_dir, filename)
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def cmd_report(args) -> int:
    version, rows = read_csv(args.raw)
    if version != SCHEMA_VERSION:
        raise MetricsError(
            f"{args.raw}: schema {version!r}, expected {SCHEMA_VERSION!r}")
    if not rows:
        raise MetricsError(f"{args.raw}: no data rows")

    agg = aggregate_rows(rows)
    os.makedirs(args.out_dir, exist_ok=True)
    agg_path = os.path.join(args.out_dir, "aggregate.csv")
    write_aggregate_csv(agg, agg_path)
    figures = _render_figures(agg, args.out_dir)
    print(f"{len(agg)} aggregate rows -> {agg_path}")
    for path in figures:
        print(f"figure -> {path}")
    return 0


# ---------------------------------------------------------------------------
# psnr
# ---------------------------------------------------------------------------


def cmd_psnr(args) -> int:
    shape, n_points = _synthetic_arg(args.synthetic)
    rows = []
    for i in range(args.clouds):
        vc = voxelize(gen_synthetic(shape, n_points, seed=args.seed + i),
                      args.depth)
        part = partition_indices(len(vc))
        for k, label in enumerate(RUNG_LABELS):
            sub = tier_subset(vc, part.cumulative_indices(k))
            q = coverage_quality(vc, sub)
            rows.append({"cloud": str(i), "rung": label,
                         "points": str(len(sub)),
                         "psnr_db": f"{q.psnr_db:.6f}"})

    print(f"{'rung':>6} {'mean_points':>12} {'mean_psnr_db':>13} "
          f"{'min':>10} {'max':>10}")
    for label in RUNG_LABELS:
        vals = [float(r["psnr_db"]) for r in rows if r["rung"] == label]
        pts = [int(r["points"]) for r in rows if r["rung"] == label]
        mean = sum(vals) / len(vals)
        print(f"{label:>6} {sum(pts) / len(pts):>12.0f} {mean:>13.2f} "
              f"{min(vals):>10.2f} {max(vals):>10.2f}")

    if args.out:
        import csv as _csv
        with open(args.out, "w", newline="") as fh:
            fh.write(f"# schema={SCHEMA_VERSION}\n")
            writer = _csv.DictWriter(
                fh, fieldnames=["cloud", "rung", "points", "psnr_db"])
            writer.writeheader()
            writer.writerows(rows)
        print(f"per-cloud table -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcstream",
        description="layered point-cloud streaming simulator and tooling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode frames into a producer store")
    p.add_argument("--synthetic", metavar="SHAPE:NPOINTS",
                   help="generate frames, e.g. sphere_shell:50000")
    p.add_argument("--ply", metavar="DIR", help="directory of .ply frames")
    p.add_argument("--depth", type=int, default=7)
    p.add_argument("--frames", type=int, default=None,
                   help="frame count (default 10 GoFs worth)")
    p.add_argument("--gof", type=int, default=30, help="frames per GoF")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--ratios", default="0.3,0.5,0.75,1.0",
                   help="cumulative ladder ratios")
    p.add_argument("--dataset", default="synthetic")
    p.add_argument("--window", default="TimeWindow_19700101T000000")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("--scenario", required=True, metavar="FILE")
    p.add_argument("--seed", type=int, default=None, help="override seed")
    p.add_argument("--out", default="metrics.csv", metavar="CSV")
    p.add_argument("--trace", default=None, metavar="CSV",
                   help="write a per-packet trace")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the scenario grid")
    p.add_argument("--scenario", default=None, metavar="FILE",
                   help="base scenario (default: built-in synthetic)")
    p.add_argument("--out", default="sweep.csv", metavar="CSV")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: all cores)")
    p.add_argument("--protocols", default=None, help="comma-separated subset")
    p.add_argument("--bandwidths", default=None, help="Mbps list")
    p.add_argument("--losses", default=None, help="loss %% list")
    p.add_argument("--seeds", default=None, help="seed list")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate a sweep and render figures")
    p.add_argument("--raw", required=True, metavar="CSV")
    p.add_argument("--out-dir", default="report", metavar="DIR")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("psnr", help="per-rung geometry quality table")
    p.add_argument("--synthetic", default="sphere_shell:50000",
                   metavar="SHAPE:NPOINTS")
    p.add_argument("--depth", type=int, default=7)
    p.add_argument("--clouds", type=int, default=10)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default=None, metavar="CSV")
    p.set_defaults(func=cmd_psnr)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MetricsError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CodecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
