"""Command-line figure renderer: plot --kind <k> --in <csv...> --out <img>."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapdyn-plot", description="Render figures from swapdyn run CSVs"
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        metavar="CSV", help="one or more trace CSVs (one panel each)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--x-scale", choices=("log", "linear"),
                        help="override the kind's default axis scale")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(inputs=tuple(args.inputs), kind=args.kind,
                        output=args.out, x_scale=args.x_scale)
        render(spec)
    except (SchemaError, ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
