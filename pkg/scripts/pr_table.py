"""Print the decomposition scalars for the three excitation levels."""

import argparse

from stochmathieu import AcfSpec, SystemParams, build_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--zeta", type=float, default=0.1)
    ap.add_argument("--ell", type=float, default=10.0)
    ap.add_argument("--sigma", type=float, nargs="+", default=[0.178, 0.229, 0.267])
    args = ap.parse_args()
    cols = ("eta", "gamma_pos", "gamma_neg", "upsilon", "T_bar", "P_r", "rho")
    print("sigma_alpha " + " ".join(f"{c:>11}" for c in cols))
    for s in args.sigma:
        m = build_model(SystemParams(zeta=args.zeta, acf=AcfSpec(s, args.ell)))
        vals = m.summary()
        print(f"{s:11.4g} " + " ".join(f"{vals[c]:11.5g}" for c in cols))


if __name__ == "__main__":
    main()
