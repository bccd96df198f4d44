"""Command line front end: render figures from sweep CSVs."""

from __future__ import annotations

import argparse
import os
import sys

from .figures import FIGURE_IDS, AnalysisError, default_spec, render

# which input flag feeds which figure
SOURCE_FLAG = {
    "adaptivity": "raw",
    "cache_hit": "aggregate",
    "delay": "aggregate",
    "throughput": "aggregate",
    "psnr": "psnr",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcanalysis",
        description="Regenerate trend figures from pcstream sweep CSVs; each "
                    "figure writes an image plus a companion CSV of exactly "
                    "the plotted values.")
    parser.add_argument("--raw", help="raw sweep CSV (per-run rows)")
    parser.add_argument("--aggregate", help="aggregated sweep CSV (report output)")
    parser.add_argument("--psnr", help="per-cloud quality CSV")
    parser.add_argument("--out-dir", required=True, help="output directory")
    parser.add_argument("--figures",
                        help="comma list of figure ids (default: every figure "
                             "whose input flag was given); ids: "
                             + ", ".join(FIGURE_IDS))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sources = {"raw": args.raw, "aggregate": args.aggregate, "psnr": args.psnr}

    if args.figures:
        figures = [f.strip() for f in args.figures.split(",") if f.strip()]
        unknown = [f for f in figures if f not in FIGURE_IDS]
        if unknown:
            print(f"config error: unknown figure id: {', '.join(unknown)}",
                  file=sys.stderr)
            return 2
    else:
        figures = [f for f in FIGURE_IDS if sources[SOURCE_FLAG[f]]]
        if not figures:
            print("config error: no inputs given, pass --raw, --aggregate "
                  "or --psnr", file=sys.stderr)
            return 2

    for figure in figures:
        flag = SOURCE_FLAG[figure]
        if not sources[flag]:
            print(f"config error: figure {figure} needs --{flag}",
                  file=sys.stderr)
            return 2

    try:
        os.makedirs(args.out_dir, exist_ok=True)
        for figure in figures:
            spec = default_spec(figure, sources[SOURCE_FLAG[figure]], args.out_dir)
            rows = render(spec)
            print(f"{figure}: {spec.out_image} + {spec.out_table} "
                  f"({len(rows)} rows)")
    except AnalysisError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
