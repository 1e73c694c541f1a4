"""plot <kind> --in PATH --out PATH [--bin-width F]"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .data import InputError
from .render import KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render figures from ccrsim output files.",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", required=True, action="append",
                        help="input file (CSV or region JSON)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--bin-width", type=float, default=0.005,
                        help="histogram bin width (default 0.005)")
    parser.add_argument("--xlabel")
    parser.add_argument("--ylabel")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=args.kind,
            inputs=tuple(args.inputs),
            output=args.out,
            bin_width=args.bin_width,
            xlabel=args.xlabel,
            ylabel=args.ylabel,
        )
        result = render(spec)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(result.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
