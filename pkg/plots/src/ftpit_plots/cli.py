"""Command-line figure renderer for ftpit CSV outputs."""

import argparse
import sys

from .render import KINDS, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftpit-plot",
        description="Render figures from ftpit residual/heatmap/stress CSVs.")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="input", required=True,
                        help="input CSV file")
    parser.add_argument("--out", dest="output", required=True,
                        help="output image (png/svg/pdf by extension)")
    parser.add_argument("--block", type=int, default=0,
                        help="block index for residual figures")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = render(args.kind, args.input, args.output, block=args.block)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(report.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
