"""Nine-panel density comparison (three excitation levels x three correlation
lengths) at desk scale: 300 realizations, 2000 time units after burn-in.

Takes about a minute per panel on one core; pass --workers to spread the
realizations over processes (results do not depend on the worker count).
"""

import argparse
import sys

from stochmathieu.cli import main as cli

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/density_grid")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--full-scale", action="store_true", help="3000 realizations to t=5500 (slow)")
    args = ap.parse_args()
    argv = ["reproduce", "--svg", "--out", args.out, "--seed", str(args.seed), "--workers", str(args.workers)]
    if not args.full_scale:
        argv.append("--desk-scale")
    sys.exit(cli(argv))
