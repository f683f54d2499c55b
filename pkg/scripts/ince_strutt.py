"""Stability chart of the damped Mathieu equation, written as CSV + SVG."""

import argparse
import sys

from stochmathieu.cli import main as cli

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/ince_strutt")
    ap.add_argument("--zeta", type=float, default=0.0)
    ap.add_argument("--n", type=int, default=120, help="grid points per axis")
    args = ap.parse_args()
    sys.exit(cli([
        "stability", "--svg", "--out", args.out,
        "--set", f"stability.zeta={args.zeta}",
        "--set", f"stability.n_delta={args.n}",
        "--set", f"stability.n_alpha={args.n}",
    ]))
