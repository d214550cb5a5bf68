"""Shared helpers for the data-generation scripts."""
import argparse
import sys
from pathlib import Path

from twistlab.cli import main


def parse_outdir(description: str) -> Path:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--outdir", default="data", help="directory for the generated tables")
    parser.add_argument("--threads", default=None, help="worker threads passed to every command")
    args = parser.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out, args.threads


def run(argv: list[str], threads=None) -> None:
    if threads is not None:
        argv = [*argv, "--threads", str(threads)]
    code = main(argv)
    if code:
        sys.exit(code)
    print("wrote", argv[argv.index("-o") + 1])
