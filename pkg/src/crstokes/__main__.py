"""Command-line driver: ``python -m crstokes --experiment eigs --element cr --levels 3..7``."""

import argparse
import json
import sys

from .experiments import ELEMENTS, EXPERIMENTS, REFERENCE_EIGS, RunConfig, run


def _levels(text):
    try:
        a, b = text.split("..")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must look like A..B, got {text!r}") from None


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="python -m crstokes", description=__doc__)
    p.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    p.add_argument("--element", default="cr", choices=ELEMENTS)
    p.add_argument("--levels", type=_levels, default=(3, 6), help="level range A..B")
    p.add_argument("--k", type=int, default=1, help="number of eigenvalues")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--ref-eigs", type=_floats, default=REFERENCE_EIGS)
    return p


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.experiment, args.element, args.levels, args.k, args.out, args.format, args.ref_eigs)
        text = run(cfg)
    except Exception as exc:  # report every failure in the requested format
        msg = f"{type(exc).__name__}: {exc}"
        if args.format == "json":
            _emit(json.dumps({"error": msg}) + "\n", args.out)
        print(msg, file=sys.stderr)
        return 1
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
