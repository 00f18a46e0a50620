"""Command line entry point.

    ddsim-plot --figure fig2a --csv results.csv --out fig2a.png
    ddsim-plot --figure fig2b --csv scan.csv --out fig2b.png --summary
"""

from __future__ import annotations

import argparse
import math
import sys

from .csvio import read_result_csv
from .plots import FIGURE_IDS, FigureSpec, render
from .summary import extract_summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ddsim-plot",
                                     description="regenerate figures from ddsim CSVs")
    parser.add_argument("--figure", required=True, choices=FIGURE_IDS)
    parser.add_argument("--csv", required=True, nargs="+",
                        help="input CSV path(s) from ddsim run")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default="")
    parser.add_argument("--summary", action="store_true",
                        help="also print the crossing-time table")
    args = parser.parse_args(argv)

    spec = FigureSpec(figure_id=args.figure, csv_paths=list(args.csv),
                      out_path=args.out, title=args.title)
    path = render(spec)
    print(f"wrote {path}")

    if args.summary:
        for csv_path in args.csv:
            table = read_result_csv(csv_path)
            for row in extract_summary(table):
                val = "not reached" if math.isinf(row.crossing) else f"{row.crossing:.6g}"
                print(f"{row.point_id:24s} T{row.threshold:g} = {val}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
