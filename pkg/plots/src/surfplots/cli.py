"""surf-plot: render simulator CSV/JSON outputs to figure files.

Exit codes: 0 success, 2 on input/schema errors (the message names the
offending column or field).
"""

import argparse
import sys

from .render import FIGURE_KINDS, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surf-plot",
        description="Render value-trace overlays and reach subgraphs "
                    "from simulator output files",
    )
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS,
                        help="figure type")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="FILE", help="input CSV/JSON files")
    parser.add_argument("--labels", nargs="*", default=[],
                        help="legend label per input file")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--format", default="", choices=["", "png", "svg"],
                        help="image format (default: from --out suffix)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(
            kind=args.kind,
            inputs=tuple(args.inputs),
            labels=tuple(args.labels),
            out_path=args.out,
            image_format=args.format,
        )
        path = render(spec)
    except SchemaError as e:
        print(f"surf-plot error: {e}", file=sys.stderr)
        return 2
    print(f"surf-plot: wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
