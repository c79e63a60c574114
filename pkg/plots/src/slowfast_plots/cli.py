"""Command line for figure rendering.

    slowfast-plot --kind convergence --in convergence.csv --out conv.png
    slowfast-plot --kind density --in density.csv --atoms atoms.csv --out d.png
    slowfast-plot --kind arrhenius --in spectra.csv --out arr.png

Exits 1 on schema violations (missing columns, empty files), 0 on success.
"""

import argparse
import sys

from .render import KINDS, PlotJob, SchemaError, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="slowfast-plot")
    ap.add_argument("--kind", required=True, choices=KINDS)
    ap.add_argument("--in", dest="inputs", required=True,
                    help="input CSV file")
    ap.add_argument("--atoms", help="atoms CSV (density kind only)")
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--linear-x", action="store_true")
    ap.add_argument("--linear-y", action="store_true")
    args = ap.parse_args(argv)
    inputs = (args.inputs,)
    if args.kind == "density":
        if not args.atoms:
            print("error: density kind needs --atoms", file=sys.stderr)
            return 1
        inputs = (args.inputs, args.atoms)
    try:
        job = PlotJob(kind=args.kind, inputs=inputs, output=args.out,
                      logx=not args.linear_x, logy=not args.linear_y)
        render(job)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
