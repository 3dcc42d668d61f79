"""Command-line entry point: render --kind K --in CSV[,CSV...] --out PATH.

Exit codes: 0 success, 2 bad arguments or malformed input CSV.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, render
from .reader import CsvFormatError

EXIT_OK = 0
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpsplots", description="Render figures from simulator metric CSVs"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    p.add_argument(
        "--in",
        dest="inputs",
        required=True,
        metavar="CSV[,CSV...]",
        help="comma-separated input CSV paths",
    )
    p.add_argument("--out", required=True, metavar="PATH", help="output image path")
    p.add_argument("--title", default="", help="optional figure title")
    p.add_argument(
        "--labels",
        default="",
        metavar="L[,L...]",
        help="legend labels for pulse inputs (comma-separated)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    inputs = tuple(p.strip() for p in args.inputs.split(",") if p.strip())
    labels = tuple(l.strip() for l in args.labels.split(",") if l.strip())
    try:
        spec = FigureSpec(args.kind, inputs, args.out, title=args.title, labels=labels)
        written = render(spec)
    except (CsvFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in written:
        print(f"render: wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
