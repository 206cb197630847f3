#!/usr/bin/env python3
"""Prepend the license header to every C++ source file that lacks it."""

import argparse
import pathlib

SOURCE_DIRS = ("src", "include", "tests", "tools")
SUFFIXES = {".cpp", ".hpp", ".h", ".cc"}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("header", type=pathlib.Path)
    parser.add_argument("--root", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent)
    args = parser.parse_args()

    header = args.header.read_text().rstrip("\n") + "\n\n"
    first_line = header.splitlines()[0]
    changed = 0
    for d in SOURCE_DIRS:
        for path in sorted((args.root / d).rglob("*")):
            if path.suffix not in SUFFIXES or not path.is_file():
                continue
            text = path.read_text()
            if text.startswith(first_line):
                continue
            path.write_text(header + text)
            changed += 1
    print(f"added header to {changed} files")


if __name__ == "__main__":
    main()
