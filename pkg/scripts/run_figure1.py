#!/usr/bin/env python3
"""Run the three-degree circulant comparison (n=50, d in {10, 20, 30}).

Writes one trace CSV per degree plus a report with the fitted tail slopes,
and exits nonzero if the runs are not cleanly linear or the slopes are not
ordered by degree.
"""

import argparse
from pathlib import Path

from admmnet.cli import run_figure1


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figure1-out", help="output directory")
    args = ap.parse_args()
    return run_figure1(Path(args.out))


if __name__ == "__main__":
    raise SystemExit(main())
