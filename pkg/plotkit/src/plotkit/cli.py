"""Command line front end.

    plot --csv results.csv --kind rate-region|wsr --out figure.png
         [--title T] [--scheme S ...] [--csit C ...]

Exit codes: 0 success, 1 anything wrong (bad arguments, schema violation,
unwritable output).  No image file is written on failure.
"""

import argparse
import sys

from .figures import (
    RATE_REGION,
    WSR_CURVES,
    FigureSpec,
    plot_rate_region,
    plot_wsr_curves,
)
from .reader import SchemaError

_KIND_OF_FLAG = {"rate-region": RATE_REGION, "wsr": WSR_CURVES}
_BUILDER_OF_KIND = {RATE_REGION: plot_rate_region, WSR_CURVES: plot_wsr_curves}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 0/1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


def _build_parser():
    ap = _Parser(prog="plot",
                 description="Render experiment result CSVs into figures")
    ap.add_argument("--csv", required=True, help="input results file")
    ap.add_argument("--kind", required=True, choices=sorted(_KIND_OF_FLAG),
                    help="figure family: rate-region frontier or WSR-vs-SNR")
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--title", help="optional figure title")
    ap.add_argument("--scheme", action="append",
                    help="keep only this scheme (repeatable)")
    ap.add_argument("--csit", action="append",
                    help="keep only this CSIT label (repeatable)")
    return ap


def main(argv=None):
    args = _build_parser().parse_args(argv)
    kind = _KIND_OF_FLAG[args.kind]
    spec = FigureSpec(
        csv_path=args.csv,
        kind=kind,
        out_path=args.out,
        title=args.title,
        schemes=tuple(args.scheme) if args.scheme else None,
        csit_values=tuple(args.csit) if args.csit else None,
    )
    try:
        summary = _BUILDER_OF_KIND[kind](spec)
    except (OSError, SchemaError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 1
    print("wrote %s (%d series: %s)"
          % (summary.out_path, len(summary.series),
             ", ".join(s.label for s in summary.series)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
