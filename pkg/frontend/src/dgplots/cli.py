"""Command line: ``plots <kind> --in <csv...> --out <file>``.

Kinds: ``error`` (log-log L2 error per degree), ``rates`` (rate vs level),
``contour_exact`` / ``contour_dg`` (filled contour of a grid dump column).
The output format follows the file suffix; SVG is the intended default,
PNG works too.  Exit codes: 0 success, 2 bad input or schema mismatch.
"""

import argparse
import sys

from .figures import plot_contours, plot_errors, plot_rates
from .io import SchemaError

KINDS = ("error", "rates", "contour_exact", "contour_dg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from solver study CSVs"
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image (.svg or .png)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "error":
            job = plot_errors(args.inputs, args.out)
        elif args.kind == "rates":
            job = plot_rates(args.inputs, args.out)
        else:
            if len(args.inputs) != 1:
                raise SchemaError("contour plots take exactly one grid CSV")
            column = "u_exact" if args.kind == "contour_exact" else "u_h"
            job = plot_contours(args.inputs[0], args.out, column=column)
    except (SchemaError, OSError) as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return 2
    print(job.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
