#!/usr/bin/env python3
"""Render publication-style figures from disscat CSV sweep output.

Usage:
    python figures/render.py --figure fig1c --data <csv-dir> --out fig1c.png
    python figures/render.py --list

The scripts only plot CSV columns; all physics lives in the CSVs.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from recipes import RECIPES, MissingColumn, render  # noqa: E402


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--figure", help="figure id (see --list)")
    parser.add_argument("--data", default="figures/sample_data",
                        help="directory holding the input CSVs")
    parser.add_argument("--out", help="output image path (.png or .svg)")
    parser.add_argument("--list", action="store_true", help="list known figure ids")
    args = parser.parse_args(argv)

    if args.list:
        for fid, recipe in sorted(RECIPES.items()):
            files = ", ".join(sorted(set(recipe.inputs.values())))
            print(f"{fid:7s} {recipe.title}  [{files}]")
        return 0
    if not args.figure or not args.out:
        parser.error("--figure and --out are required unless --list is given")
    try:
        path = render(args.figure, args.data, args.out)
    except (KeyError, FileNotFoundError, MissingColumn) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
