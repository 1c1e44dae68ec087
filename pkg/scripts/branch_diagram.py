"""Follow the first few bifurcating branches and write a branch diagram as CSV.

    python3 scripts/branch_diagram.py --N 2 --p 3 --kmax 3 --lambda-max 8 --out out/diagram
"""
import argparse
import logging
from pathlib import Path

from spherebif import bifurcation as bif
from spherebif import io
from spherebif.errors import NoConvergence, StepCollapse, NodalChange
from spherebif.spectral import build_basis


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=2)
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--kmax", type=int, default=3)
    ap.add_argument("--lambda-max", dest="lambda_max", type=float, default=8.0)
    ap.add_argument("--K", type=int, default=64)
    ap.add_argument("--out", default="out/diagram")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    out = Path(args.out)
    basis = build_basis(args.N, args.K)
    lams = bif.bifurcation_points(args.N, args.p, args.kmax + 1)
    params = bif.ProblemParams(args.N, args.p, 1.0)
    rows = []
    for k in range(1, args.kmax + 1):
        if lams[k - 1] >= args.lambda_max:
            break
        seed_lam = lams[k - 1] + 1e-2 * (lams[k] - lams[k - 1])
        try:
            start = bif.branch_switch(k, params.at(seed_lam), 0.1, basis)
            br = bif.continue_branch(start, args.p, args.lambda_max)
        except (NoConvergence, StepCollapse, NodalChange) as exc:
            logging.warning("k=%d: %s", k, exc)
            continue
        io.write_branch(out, br, f"branch_k{k}")
        for row in io.branch_rows(br):
            rows.append((k, *row))
        logging.info("k=%d: %d points, lambda in [%.3f, %.3f], %s", k, len(br.points),
                     *br.lambda_coverage, br.stop_reason)
    io.write_csv(out / "diagram.csv", ["k"] + io.BRANCH_HEADER, rows)
    logging.info("wrote %s", out / "diagram.csv")


if __name__ == "__main__":
    main()
