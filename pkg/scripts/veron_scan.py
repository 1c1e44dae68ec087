"""Scan c for Veron's problem and report which nodal classes appear.

The crossover should sit at c = -(n-2)/4.
"""
import argparse

import numpy as np

from spherebif import bifurcation as bif


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--cs", type=float, nargs="+", default=[-0.2, -0.4, -0.6, -1.0, -3.0, -6.0])
    ap.add_argument("--starts", type=int, default=20)
    args = ap.parse_args()
    print(f"n={args.n}: threshold c = {-(args.n - 2) / 4:g}")
    for c in args.cs:
        s = bif.veron_nonradial(args.n, c, n_starts=args.starts)
        norms = [pt.w.sup_norm() for pt in s.solutions]
        print(f"c={c:+.2f}  lambda={s.lam:.3f}  classes={s.nodal_classes}  "
              f"max|w|={max(norms) if norms else 0:.3g}  failures={len(s.failures)}")


if __name__ == "__main__":
    main()
