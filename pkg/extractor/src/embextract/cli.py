"""Command-line front end.

One subcommand:

* extract: embed a list of objects and write an embedding table

Exit codes: 0 on success, 2 on validation or I/O errors.
"""

import argparse
import json
import sys

from . import __version__
from .encoders import POOLING_MODES, load_encoder
from .extraction import extract_to_file
from .templates import ATTRIBUTES, default_templates


def _read_objects(path: str):
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _cmd_extract(args) -> int:
    encoder = load_encoder(args.encoder)
    templates = None
    if args.template is not None:
        templates = default_templates({args.attribute: args.template})
    objects = _read_objects(args.objects)
    if not objects:
        raise ValueError(f"{args.objects}: no objects (file is empty)")
    summary = extract_to_file(objects, args.attribute, encoder, args.pooling,
                              args.out, templates)
    summary["out"] = args.out
    json.dump(summary, sys.stdout, indent=2)
    print()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embextract",
        description="Embed object names and write an embedding table file.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract",
                       help="embed objects and write an embedding table")
    p.add_argument("--objects", required=True,
                   help="text file with one object name per line")
    p.add_argument("--attribute", required=True, choices=list(ATTRIBUTES))
    p.add_argument("--encoder", required=True,
                   help="encoder spec: fake:<seed>[:<dim>] or wordvec:<path>")
    p.add_argument("--pooling", required=True, choices=list(POOLING_MODES))
    p.add_argument("--out", required=True, help="output table path")
    p.add_argument("--template", default=None,
                   help="override the carrier sentence for this attribute "
                        "(must contain exactly one 'X' slot)")
    p.set_defaults(func=_cmd_extract)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"embextract: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
