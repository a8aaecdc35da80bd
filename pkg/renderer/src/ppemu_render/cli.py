"""Batch rendering entry point.

    ppemu-render --kind <kind> --in report.json [--in more.json]
                 --out figure.png [--manifest manifest.json]
                 [--title ...] [--dpi N] [--no-timestamp]

Reads only the documented JSON artifacts, writes one image per invocation,
and optionally a JSON manifest describing the plotted elements.  With
--no-timestamp the output embeds no creation date, so identical inputs give
identical files.
"""

import argparse
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from . import FIGURE_KINDS, __version__
from .figures import render_figure
from .schema import RenderInputError


def build_parser():
    parser = argparse.ArgumentParser(prog="ppemu-render", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ppemu-render {__version__}")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="JSON", help="input artifact (repeatable)")
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    parser.add_argument("--manifest", help="write a debug manifest JSON here")
    parser.add_argument("--title", help="figure title override")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--no-timestamp", action="store_true",
                        help="suppress embedded dates for reproducible files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    if out.suffix.lower() not in (".png", ".svg"):
        print(f"error: unsupported output format {out.suffix!r} (png or svg)",
              file=sys.stderr)
        return 2

    style = {}
    if args.title:
        style["title"] = args.title

    # stable ids in svg output regardless of process state
    matplotlib.rcParams["svg.hashsalt"] = "ppemu-render"

    try:
        fig, elements = render_figure(args.kind, args.inputs, style)
    except RenderInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {}
    if args.no_timestamp:
        metadata = {"Date": None} if out.suffix.lower() == ".svg" else {}
    fig.savefig(out, dpi=args.dpi, bbox_inches="tight", metadata=metadata)
    plt.close(fig)

    if args.manifest:
        manifest = {
            "schema_version": "1.0",
            "kind": args.kind,
            "inputs": [str(p) for p in args.inputs],
            "out": str(out),
            "elements": elements,
        }
        Path(args.manifest).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
