"""crop-scorer: score curated crops and emit the external-metrics CSV.

Exit codes mirror the pipeline convention: 0 success, 1 input/data error
(including model download failure), 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .backends import make_backend
from .scorer import ScorerError, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crop-scorer",
        description="Batch-score crops with CLIPIQA, MANIQA (pipal) and MUSIQ.",
        formatter_class=lambda prog: argparse.ArgumentDefaultsHelpFormatter(prog, width=100),
    )
    parser.add_argument("--crops", required=True, help="input file of crop_id<TAB>path lines")
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument(
        "--errors", default=None, help="sidecar error file (default: <out>.errors)"
    )
    parser.add_argument(
        "--backend",
        choices=("pyiqa", "proxy"),
        default="pyiqa",
        help="pyiqa = pretrained neural models; proxy = classical stand-in scores",
    )
    parser.add_argument("--batch-size", type=int, default=16, help="inference batch size")
    parser.add_argument("--device", default="cpu", help="inference device for the pyiqa backend")
    return parser


def dispatch(argv: list[str]) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.batch_size < 1:
        print("config error: --batch-size must be >= 1", file=sys.stderr)
        return 2
    try:
        backend = make_backend(args.backend, device=args.device)
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except RuntimeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        n_rows, n_errors = run(
            args.crops, args.out, backend, batch_size=args.batch_size, error_file=args.errors
        )
    except (ScorerError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {n_rows} rows to {args.out} ({n_errors} unreadable inputs)", file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
