"""Command-line front end.

    spherebif [--seed S] [--out DIR] [--config FILE] [--threads T] <command> [options]

Commands: eig, branch, shoot, kelvin, veron, verify.  Every run writes its data
files plus one manifest.json into --out.  Parameter values resolve as
command-line flag, then the JSON config (a per-command section wins over top-level
keys), then the built-in default.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from math import pi
from pathlib import Path

import numpy as np

from . import __version__
from . import bifurcation as bif
from . import geometry as geo
from . import io
from . import shooting as sh
from .errors import (BlowupDetected, ConstraintViolation, DomainError, EndpointZero,
                     NoConvergence, NodalChange, NodalMismatch, NonSimpleZero,
                     QuadratureError, ResolutionError, StepCollapse, ToleranceFailure)
from .spectral import build_basis, count_nodal_class
from .suites import SUITES, run_suites

log = logging.getLogger("spherebif")

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
NUMERICAL_ERRORS = (NoConvergence, StepCollapse, NodalChange, NodalMismatch, ConstraintViolation,
                    QuadratureError, ResolutionError, BlowupDetected, ToleranceFailure,
                    NonSimpleZero, EndpointZero)

DEFAULTS = {
    "seed": 0, "out": "out", "threads": 1,
    "eig": {"N": 2, "K": 16, "M": None},
    "branch": {"N": 2, "p": 3.0, "k": 1, "lambda_max": 6.0, "K": 64, "M": None,
               "delta": None, "s": 0.1},
    "shoot": {"n": 3, "c": None, "beta": None, "a": None, "b": 0.0, "T": sh.T_DEFAULT,
              "rtol": sh.RTOL, "atol": sh.ATOL, "grid": False},
    "kelvin": {"n": 3, "lam": pi / 3, "pole": "north", "profile": "linear", "K": 64,
               "points": 64},
    "veron": {"n": 4, "c": -1.0, "K": 64, "starts": 50},
    "verify": {"suite": ["all"]},
}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spherebif", description=__doc__.split("\n\n")[0])
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--config", default=None, help="JSON file with parameter values")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--version", action="version", version=f"spherebif {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eig", help="eigenvalues and nodal data of the axisymmetric basis")
    p.add_argument("--N", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--M", type=int)

    p = sub.add_parser("branch", help="follow the k-th bifurcating branch")
    p.add_argument("--N", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--lambda-max", dest="lambda_max", type=float)
    p.add_argument("--K", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--delta", type=float, help="seed offset above lambda_k")
    p.add_argument("--s", type=float, help="seed amplitude along phi_k")

    p = sub.add_parser("shoot", help="Emden-Fowler shooting")
    fam = p.add_mutually_exclusive_group()
    fam.add_argument("--c", type=float, help="autonomous family with Hardy coefficient c")
    fam.add_argument("--beta", type=float, help="beta family")
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--grid", action="store_true", default=None,
                   help="run the 20x20 (a, b) sweep instead of one trajectory")

    p = sub.add_parser("kelvin", help="Kelvin transform of a test profile and its identities")
    p.add_argument("--n", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--pole", choices=("north", "south"))
    p.add_argument("--profile", choices=("constant", "linear", "beta0"))
    p.add_argument("--K", type=int)
    p.add_argument("--points", type=int)

    p = sub.add_parser("veron", help="nonradial solutions of Veron's problem")
    p.add_argument("--n", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--K", type=int)
    p.add_argument("--starts", type=int)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", action="append", choices=sorted(SUITES) + ["all"])
    return ap


def resolve(args: argparse.Namespace, config: dict) -> dict:
    """Merge flag > config[command] > config top level > default."""
    cmd = args.command
    out = {}
    for key in ("seed", "out", "threads"):
        val = getattr(args, key)
        out[key] = val if val is not None else config.get(key, DEFAULTS[key])
    section = config.get(cmd, {})
    for key, default in DEFAULTS[cmd].items():
        val = getattr(args, key, None)
        if val is None:
            val = section.get(key, config.get(key, default))
        out[key] = val
    return out


# -- commands ---------------------------------------------------------------------------

def cmd_eig(cfg, man, out_dir):
    N, K, M = cfg["N"], cfg["K"], cfg["M"]
    if N < 2 or K < 2:
        raise UsageError("need N >= 2 and K >= 2")
    try:
        basis = build_basis(N, K, M)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    rows, zrows = [], []
    for k in range(K):
        if k == 0:
            rows.append((0, basis.eigenvalues[0], 0))
            continue
        nc = count_nodal_class(basis.mode(k))
        rows.append((k, basis.eigenvalues[k], nc.k))
        zrows.extend((k, i, z) for i, z in enumerate(nc.zero_locations))
    man.add(io.write_csv(out_dir / "eigenvalues.csv", ["k", "nu", "nodal_class"], rows))
    man.add(io.write_csv(out_dir / "zeros.csv", ["k", "index", "t"], zrows))
    for path in io.write_basis(out_dir, basis):
        man.add(path)
    man.tolerances.update(orthonormality=1e-10)
    ok = all(r[2] == r[0] for r in rows)
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_branch(cfg, man, out_dir):
    N, p, k = cfg["N"], cfg["p"], cfg["k"]
    if k < 1:
        raise UsageError("k must be >= 1")
    try:
        params = bif.ProblemParams(N, p, 1.0)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    lams = bif.bifurcation_points(N, p, k + 1)
    delta = cfg["delta"] if cfg["delta"] is not None else 1e-2 * (lams[k] - lams[k - 1])
    basis = build_basis(N, cfg["K"], cfg["M"])
    start = bif.branch_switch(k, params.at(lams[k - 1] + delta), cfg["s"], basis)
    br = bif.continue_branch(start, p, cfg["lambda_max"])
    for path in io.write_branch(out_dir, br, f"branch_k{k}"):
        man.add(path)
    man.params.update(lambda_k=float(lams[k - 1]), delta=delta,
                      lambda_coverage=list(br.lambda_coverage), stop_reason=br.stop_reason,
                      folds=br.folds)
    man.tolerances.update(newton_tol=bif.NEWTON_TOL, w_floor=bif.W_FLOOR)
    ok = all(pt.bounds_ok and pt.nodal_class == k for pt in br.points)
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_shoot(cfg, man, out_dir):
    n = cfg["n"]
    if cfg["c"] is not None and cfg["beta"] is not None:
        raise UsageError("give at most one of --c and --beta")
    family = "beta" if cfg["beta"] is not None else "autonomous"
    c = cfg["c"] if cfg["c"] is not None else 0.0
    beta = cfg["beta"] if cfg["beta"] is not None else 0.0
    man.tolerances.update(rtol=cfg["rtol"], atol=cfg["atol"])
    if cfg["grid"]:
        res = sh.shooting_sweep(n, family, c=c, beta=beta, T=cfg["T"], seed=man.seed,
                                rtol=cfg["rtol"], atol=cfg["atol"], flux=family == "beta")
        rows = []
        for i, ((a, b), st, tc) in enumerate(zip(res.starts, res.statuses, res.crossing_times)):
            rows.append((a, b, st, tc.get("forward"), tc.get("backward"),
                         res.flux_ok[i] if res.flux_ok else None))
        man.add(io.write_csv(out_dir / "sweep.csv",
                             ["a", "b", "status", "t_forward", "t_backward", "flux_ok"], rows))
        summary = {"params": res.params,
                   "outcomes": {s: res.count(s) for s in sorted(set(res.statuses))},
                   "all_cross_somewhere": res.all_cross_somewhere,
                   "all_cross_both": res.all_cross_both,
                   "flux_monotone": all(res.flux_ok) if res.flux_ok else None}
        man.add(io.write_json(out_dir / "sweep_summary.json", summary))
        return EXIT_OK if res.all_cross_somewhere else EXIT_VALIDATION
    if cfg["a"] is None:
        raise UsageError("--a is required unless --grid is given")
    try:
        sp = sh.ShootParams(n, family, cfg["a"], cfg["b"], c=c, beta=beta, T=cfg["T"],
                            rtol=cfg["rtol"], atol=cfg["atol"])
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    traj = sh.integrate(sp)
    for path in io.write_trajectory(out_dir, traj):
        man.add(path)
    report = {"status": traj.status, "w_min": float(traj.w.min()), "w_max": float(traj.w.max()),
              "events": [e.__dict__ for e in traj.events]}
    ok = True
    if family == "beta":
        cond = sh.check_shooting_condition(sp.a, sp.b, n, beta)
        report["condition"] = {"holds": cond.holds, "value": cond.value}
        if sp.c_beta >= 0:
            mon = sh.energy_estimate_monitor(traj)
            report["energy_estimate"] = {"bound": mon.bound, "max_violation": mon.max_violation}
            if cond.holds:
                ok = traj.status == "positive_on_interval" and mon.max_violation < 1e-8
    else:
        H = traj.hamiltonian()
        report["H0"] = float(H[0] if traj.t[0] == 0 else sh.hamiltonian_autonomous(sp.a, sp.b, n, c))
        report["H_drift"] = float(np.max(np.abs(H - sh.hamiltonian_autonomous(sp.a, sp.b, n, c))))
        report["regime"] = sh.classify_autonomous(n, c).__dict__
    man.add(io.write_json(out_dir / "report.json", report))
    return EXIT_OK if ok else EXIT_VALIDATION


def _kelvin_profile(name, n):
    if name == "constant":
        return lambda t: 1.0 + 0.0 * np.asarray(t)
    if name == "linear":
        return lambda t: 1.0 + 0.1 * np.asarray(t)
    return sh.singular_sphere_profile(n)


def cmd_kelvin(cfg, man, out_dir):
    n = cfg["n"]
    try:
        kp = geo.KelvinParams(cfg["pole"], cfg["lam"], n)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    if n < 3:
        raise UsageError("kelvin runs the power-form transform; n must be >= 3")
    f = _kelvin_profile(cfg["profile"], n)
    r = geo.chebyshev_grid(0.0, pi, cfg["points"])
    prof = geo.RadialProfile.from_function(lambda x: f(np.cos(x)), r, "geodesic_r")
    if cfg["profile"] == "beta0":
        r = r[np.cos(r) < 1 - 1e-6]
    kv = geo.kelvin_transform_axisym(prof, kp)
    rho = kp.pole_distance(np.cos(r))
    man.add(io.write_csv(out_dir / "kelvin.csv",
                         ["r", "t", "v", "v_kelvin", "jacobian"],
                         zip(r, np.cos(r), prof(r), kv(r), geo.jacobian_density(kp.lam, rho, n))))
    lam = np.linspace(0.05, pi - 0.05, 60)[:, None]
    rr = np.linspace(0.01, pi - 0.01, 61)[None, :]
    h = geo.reflect_radius(lam, rr)
    report = {
        "reflection_identity": float(np.max(np.abs(geo.reflection_identity_defect(lam, rr)))),
        "involution": float(np.max(np.abs(geo.reflect_radius(lam, h) - rr))),
        "jacobian_product": float(np.max(np.abs(geo.jacobian_density(lam, rr, n)
                                                * geo.jacobian_density(lam, h, n) - 1))),
        "clamped_points": kv.metadata.get("clamped", 0),
    }
    if cfg["profile"] != "beta0":
        report["invariance_residual"] = geo.conformal_invariance_residual(
            f, kp, build_basis(n, cfg["K"]))
    man.add(io.write_json(out_dir / "report.json", report))
    man.tolerances.update(identities=1e-12, invariance=1e-8)
    ok = (report["reflection_identity"] <= 1e-12 and report["involution"] <= 1e-12
          and report["jacobian_product"] <= 1e-12
          and report.get("invariance_residual", 0.0) <= 1e-8)
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_veron(cfg, man, out_dir):
    n, c = cfg["n"], cfg["c"]
    try:
        bif.veron_parameters(n, c)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    summ = bif.veron_nonradial(n, c, K=cfg["K"], seed=man.seed, n_starts=cfg["starts"])
    for br in summ.branches:
        for path in io.write_branch(out_dir, br, f"branch_k{br.origin_k}"):
            man.add(path)
    expected = summ.lam > summ.threshold_lam
    report = {"n": n, "c": c, "N": summ.N, "p": summ.p, "lambda": summ.lam,
              "threshold_c": summ.threshold_c, "threshold_lambda": summ.threshold_lam,
              "nodal_classes_found": summ.nodal_classes,
              "found_nonconstant": summ.found_nonconstant,
              "expected_nonconstant": bool(expected),
              "probe_trivial": summ.probe_trivial, "failures": summ.failures}
    man.add(io.write_json(out_dir / "veron.json", report))
    return EXIT_OK if summ.found_nonconstant == expected else EXIT_VALIDATION


def cmd_verify(cfg, man, out_dir):
    res = run_suites(cfg["suite"], seed=man.seed)
    report = {name: [c.to_dict() for c in checks] for name, checks in res.items()}
    ok = all(c.passed for checks in res.values() for c in checks)
    failed = [f"{s}:{c.name}" for s, checks in res.items() for c in checks if not c.passed]
    report["_summary"] = {"pass": ok, "failed": failed}
    man.add(io.write_json(out_dir / "verify_report.json", report))
    if failed:
        print(f"first failure: {failed[0]}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VALIDATION


COMMANDS = {"eig": cmd_eig, "branch": cmd_branch, "shoot": cmd_shoot, "kelvin": cmd_kelvin,
            "veron": cmd_veron, "verify": cmd_verify}


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = io.read_json(args.config) if args.config else {}
    except (OSError, ValueError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cfg = resolve(args, config)
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    params = {k: v for k, v in cfg.items() if k not in ("seed", "out")}
    man = io.RunManifest(command=args.command, params=params, seed=int(cfg["seed"]),
                         tolerances={}, tool_version=__version__)
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](cfg, man, out_dir)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_NUMERICAL
    except DomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    man.wall_time = time.perf_counter() - t0
    man.params["exit_code"] = code
    man.write(out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
