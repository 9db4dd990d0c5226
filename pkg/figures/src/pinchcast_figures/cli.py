"""Command-line interface: render one figure from a results CSV."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_PRESETS, FigureSpec, ValidationError, render_figure


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinchcast-figures",
        description="Render sweep-comparison figures from pinchcast CSV results")
    sub = parser.add_subparsers(dest="command", required=True)
    plot = sub.add_parser("plot", help="render one figure")
    plot.add_argument("--figure", required=True,
                      help=f"one of {', '.join(sorted(FIGURE_PRESETS))}")
    plot.add_argument("--in", dest="input_csv", required=True,
                      help="results CSV produced by `pinchcast run`")
    plot.add_argument("--out", required=True, help="output image path")
    plot.add_argument("--log-y", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(input_csv=args.input_csv, figure_id=args.figure,
                      output_path=args.out, log_y=args.log_y)
    try:
        data = render_figure(spec)
    except (OSError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {spec.output_path} with {len(data.series)} series")
    return 0


if __name__ == "__main__":
    sys.exit(main())
