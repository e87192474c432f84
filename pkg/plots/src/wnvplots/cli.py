"""Command-line entry point: wnv-plots --in DIR --out DIR [--style {fig2,fig3,all}].

Exit codes: 0 ok, 1 missing/empty/mismatched inputs, 2 output I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from .figures import regen_figures
from .schema import PlotInputError, SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="wnv-plots", description=__doc__.splitlines()[0])
    parser.add_argument("--in", dest="results_dir", required=True,
                        help="directory with simulator outputs")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory for the image files")
    parser.add_argument("--style", choices=("fig2", "fig3", "all"), default="all")
    args = parser.parse_args(argv)
    try:
        manifest = regen_figures(args.results_dir, args.out_dir, args.style)
    except (PlotInputError, SchemaError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 2
    for path in manifest:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
