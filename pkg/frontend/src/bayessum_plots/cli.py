"""Command line entry point for figure rendering.

Exit codes: 0 success, 2 schema or configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .plots import KINDS, PlotJob, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayessum-plots", description="Render figures from bayessum CSV output"
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--input", required=True, help="benchmark or training-trace CSV")
    parser.add_argument("--output", required=True, help="image file (.png / .svg)")
    parser.add_argument(
        "--no-log", action="store_true", help="linear axes for convergence figures"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = PlotJob(
            input_csv=args.input, kind=args.kind, output=args.output, log_log=not args.no_log
        )
        out = render(job)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
