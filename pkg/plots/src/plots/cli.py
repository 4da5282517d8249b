"""Command-line wrapper: plots --input summary.csv --x K --out fig.png."""

import argparse
import sys
from pathlib import Path

from .core import DEFAULT_METRICS, PlotSpec, SchemaError, dump_series, render


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Line panels (one per metric, one line per method) from "
        "a simulation summary CSV.",
    )
    parser.add_argument("--input", required=True, help="summary CSV path")
    parser.add_argument(
        "--x", required=True, choices=["K", "card_A"], help="sweep column"
    )
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--format",
        choices=["png", "svg"],
        default=None,
        help="image format (default: from the --out suffix, else png)",
    )
    parser.add_argument(
        "--dump-series",
        default=None,
        metavar="PATH",
        help="also write the plotted numbers as JSON",
    )
    parser.add_argument(
        "--metrics",
        default=None,
        help="comma-separated metric columns "
        f"(default: {','.join(DEFAULT_METRICS)})",
    )
    args = parser.parse_args(argv)

    out = Path(args.out)
    fmt = args.format or (out.suffix.lstrip(".").lower() or "png")
    if fmt not in ("png", "svg"):
        print(f"unsupported output format {fmt!r}", file=sys.stderr)
        return 1
    metrics = (
        tuple(m for m in args.metrics.split(",") if m)
        if args.metrics
        else DEFAULT_METRICS
    )
    spec = PlotSpec(input=Path(args.input), x=args.x, out=out, fmt=fmt, metrics=metrics)

    try:
        series = render(spec)
    except OSError as exc:
        print(f"cannot read {args.input}: {exc}", file=sys.stderr)
        return 1
    except SchemaError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if args.dump_series:
        dump_series(series, args.dump_series)
    return 0


if __name__ == "__main__":
    sys.exit(main())
