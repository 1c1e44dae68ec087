"""Shooting sweeps on both sides of the Hardy threshold and for the beta family.

Prints one line per sweep with the outcome counts; sweeps are seeded so
repeated runs give the same table.
"""
import argparse

from spherebif import shooting as sh


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--grid", type=int, default=20)
    args = ap.parse_args()
    shape = (args.grid, args.grid)
    hardy = sh.hardy_constant(args.n)
    cases = [("autonomous", c, 0.0) for c in (hardy - 0.1, hardy, hardy + 0.1)]
    cases += [("beta", 0.0, b) for b in (0.0, -0.5, 1.5)]
    print(f"n={args.n}  Hardy constant {hardy:g}  grid {shape}  seed {args.seed}")
    for family, c, beta in cases:
        res = sh.shooting_sweep(args.n, family, c=c, beta=beta, seed=args.seed, shape=shape,
                                flux=family == "beta" and beta <= 0)
        counts = {s: res.count(s) for s in sorted(set(res.statuses))}
        tag = f"c={c:+.3f}" if family == "autonomous" else f"beta={beta:+.2f}"
        flux = f"  flux ok {sum(res.flux_ok)}/{len(res.flux_ok)}" if res.flux_ok else ""
        print(f"{family:10s} {tag:12s} {counts}{flux}")


if __name__ == "__main__":
    main()
