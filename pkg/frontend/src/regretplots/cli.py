"""Command line: plots <csv>... --out <path> [--kind simple|cumulative]"""

from __future__ import annotations

import argparse
import sys

from . import FigureSpec, SchemaMismatch, __version__, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render regret-sweep CSV reports into a figure with one "
        "line per policy and standard-error bands.",
    )
    parser.add_argument("csv", nargs="+", help="report CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--kind", choices=("simple", "cumulative"), default=None,
        help="regret kind to plot (default: the sole kind in the data)",
    )
    parser.add_argument("--title", default=None)
    parser.add_argument("--xlabel", default=None)
    parser.add_argument("--ylabel", default=None)
    parser.add_argument("--version", action="version", version=f"plots {__version__}")
    args = parser.parse_args(argv)
    spec = FigureSpec(
        inputs=tuple(args.csv),
        output=args.out,
        kind=args.kind,
        title=args.title,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
    )
    try:
        result = render(spec)
    except SchemaMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    print(f"wrote {result.path} ({len(result.series)} series, {result.kind} regret)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
