"""Command-line front end: export per manifest, or validate an ATNS file.

Exit codes: 0 success, 1 usage error, 2 data error (one
``ERROR <code>: <detail>`` line on stderr), matching the consuming
engine's conventions.
"""

from __future__ import annotations

import argparse
import sys

from .atns import read_records, summarize
from .errors import ExportError
from .export import export
from .manifest import parse_manifest

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="atns-export", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("export", help="convert arrays per a manifest file")
    sub.add_argument("--manifest", required=True)

    sub = commands.add_parser("validate", help="check a file and print its summary")
    sub.add_argument("--atns", required=True)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export":
            out_path, count = export(parse_manifest(args.manifest))
            print(f"{out_path} records={count}")
        else:
            token_count, records = read_records(args.atns)
            print(summarize(token_count, records))
        return 0
    except ExportError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
