"""Command line entry point.

    plots --bundle DIR [--bundle DIR ...] --fig <id|all> --out DIR

Bundle directories may be of any kind; nested twin and robustness arms
are discovered automatically, so pointing at a twin bundle is enough for
the figures that need both of its arms. Errors print a single
`error: ...` line to stderr and exit with status 2.
"""

from __future__ import annotations

import argparse
import os
import sys

from .bundles import PlotsError, discover
from .figures import FIGURES, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="render herdmarket figures from output bundles",
    )
    parser.add_argument(
        "--bundle", action="append", required=True, dest="bundles", metavar="DIR",
        help="bundle directory (repeatable)",
    )
    parser.add_argument(
        "--fig", default="all", metavar="ID|all",
        help=f"figure to render: one of {', '.join(FIGURES)}, or all",
    )
    parser.add_argument(
        "--out", required=True, metavar="DIR", help="output directory for PNGs",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        bundles = discover(args.bundles)
        if args.fig == "all":
            fig_ids = list(FIGURES)
        elif args.fig in FIGURES:
            fig_ids = [args.fig]
        else:
            valid = ", ".join(FIGURES)
            raise PlotsError(
                f"unknown figure id {args.fig!r}; choose from {valid}, or all"
            )
        os.makedirs(args.out, exist_ok=True)
        for fig_id in fig_ids:
            path = render(fig_id, bundles, args.out)
            print(f"wrote {path}")
    except (PlotsError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
