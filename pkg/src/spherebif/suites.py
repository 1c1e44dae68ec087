"""Named property suites behind ``spherebif verify``.

Each suite returns a list of Check records; a suite passes when every check
does.  Sample counts are kept at desk scale so ``--suite all`` runs in well
under a minute.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from math import pi

import numpy as np

from . import bifurcation as bif
from . import geometry as geo
from . import shooting as sh
from . import verify as ver
from .spectral import build_basis, collocation_operator, count_nodal_class, interlaces


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float

    def to_dict(self):
        return asdict(self)


def _le(name, value, tol):
    value = float(value)
    return Check(name, bool(value <= tol), value, tol)


def spectral_suite(seed=0):
    out = []
    for N in (2, 3, 4, 5):
        b = build_basis(N, 16, 32)
        A = collocation_operator(b)
        err = 0.0
        nodal_ok = True
        prev = None
        for k in range(11):
            phi = b.mode(k).node_values
            got = A @ phi
            nu = b.eigenvalues[k]
            err = max(err, np.max(np.abs(got - nu * phi)) / max(nu, 1.0) / np.max(np.abs(phi)))
            if k:
                nc = count_nodal_class(b.mode(k))
                nodal_ok &= nc.k == k and nc.valid
                if prev is not None:
                    nodal_ok &= interlaces(prev, nc.zero_locations)
                prev = nc.zero_locations
        out.append(_le(f"eigen_exactness_N{N}", err, 1e-10))
        out.append(Check(f"nodal_structure_N{N}", bool(nodal_ok), float(nodal_ok), 1.0))
        out.append(_le(f"orthonormality_N{N}", b.orthonormality_error(), 1e-12))
    return out


def kelvin_suite(seed=0):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.05, pi - 0.05, 4000)
    r = rng.uniform(0.01, pi - 0.01, 4000)
    h = geo.reflect_radius(lam, r)
    out = [
        _le("reflection_identity", np.max(np.abs(geo.reflection_identity_defect(lam, r))), 1e-12),
        _le("involution", np.max(np.abs(geo.reflect_radius(lam, h) - r)), 1e-12),
        _le("jacobian_product", np.max(np.abs(geo.jacobian_density(lam, r, 3)
                                               * geo.jacobian_density(lam, h, 3) - 1)), 1e-12),
        _le("mirror_case", np.max(np.abs(geo.reflect_radius(pi / 2, r) - (pi - r))), 1e-12),
    ]
    f = lambda t: 1 + 0.1 * t
    kp = geo.KelvinParams("north", pi / 3, 3)
    r64 = geo.conformal_invariance_residual(f, kp, build_basis(3, 64))
    r32 = geo.conformal_invariance_residual(f, kp, build_basis(3, 32), tail_tol=1.0)
    out.append(_le("conformal_invariance_K64", r64, 1e-8))
    out.append(Check("conformal_invariance_decreasing", bool(r64 <= r32), r64 / r32, 1.0))
    out.append(_le("s2_invariance", geo.s2_invariance_residual(
        lambda t: 0.3 * t + 0.1 * t**2, geo.KelvinParams("south", 1.0, 2), build_basis(2, 64)), 1e-8))
    return out


def bifurcation_suite(seed=0):
    b = build_basis(2, 64, 128)
    out = []
    rng = np.random.default_rng(seed)
    c = np.zeros(b.K)
    c[:6] = 0.1 * rng.standard_normal(6)
    h = np.zeros(b.K)
    h[:6] = rng.standard_normal(6)
    params = bif.ProblemParams(2, 3.0, 1.7)
    eps = 1e-6
    fd = (bif._residual_coeffs(b, c + eps * h, 1.7, 3.0)
          - bif._residual_coeffs(b, c - eps * h, 1.7, 3.0)) / (2 * eps)
    Jh = bif._jacobian(b, c, 1.7, 3.0) @ h
    out.append(_le("jacobian_consistency", np.linalg.norm(fd - Jh) / np.linalg.norm(Jh), 1e-6))
    out.append(_le("trivial_branch_exact",
                   np.linalg.norm(bif.residual(b.constant(0.0), params).coeffs), 0.0))
    pt = bif.branch_switch(1, params.at(1.2), 0.3, b)
    mu = 2 * 1.2 + 1
    out.append(_le("operator_form_agrees",
                   np.linalg.norm(bif.residual_operator_form(pt.w, mu, 3.0).coeffs),
                   10 * bif.NEWTON_TOL))
    out.append(Check("class1_at_1.2", pt.nodal_class == 1 and pt.bounds_ok,
                     float(pt.nodal_class or 0), 1.0))
    return out


def shooting_suite(seed=0):
    a = 3**0.25 / 2**0.5
    tr = sh.integrate(sh.ShootParams(3, "autonomous", a, 0.0, T=15, rtol=1e-13, atol=1e-15))
    ts = np.linspace(-15, 15, 3001)
    w, wp = tr.evaluate(ts)
    exact = 3**0.25 * (2 * np.cosh(ts)) ** -0.5
    out = [
        _le("homoclinic_H", np.max(np.abs(sh.hamiltonian_autonomous(w, wp, 3, 0.0))), 1e-8),
        _le("homoclinic_profile", np.max(np.abs(w - exact)), 1e-8),
    ]
    sp = sh.ShootParams(4, "beta", 0.8, 0.0, beta=1.5, T=30)
    tb = sh.integrate(sp)
    out.append(Check("beta_positive", tb.status == "positive_on_interval", float(tb.w.min()), 0.0))
    out.append(_le("energy_estimate", sh.energy_estimate_monitor(tb).max_violation, 1e-8))
    for n in (3, 4, 5):
        out.append(_le(f"beta0_residual_n{n}",
                       np.max(np.abs(sh.singular_solution_residual(n))), 1e-8))
    return out


def symmetry_suite(seed=0):
    bubble = lambda r: 3**0.25 * (1 + np.asarray(r) ** 2) ** -0.5
    ms = ver.moving_sphere_check_rn(bubble, 3, 10_000, seed=seed)
    ca = ver.condition_A_check(1.0, 3, 100_000, seed=seed)
    sph = ver.moving_sphere_check_sphere(sh.singular_sphere_profile(3), 3, "south", seed=seed)
    return [
        Check("moving_sphere_rn_bubble", ms.passed, ms.max_deficit, ms.slack),
        Check("condition_A", ca.passed, ca.max_deficit, ca.slack),
        _le("condition_A_identity", ca.extra["identity_max_rel_error"], 1e-12),
        Check("moving_sphere_beta0", sph.passed, sph.max_deficit, sph.slack),
    ]


SUITES = {
    "spectral": spectral_suite,
    "kelvin": kelvin_suite,
    "bifurcation": bifurcation_suite,
    "shooting": shooting_suite,
    "symmetry": symmetry_suite,
}


def run_suites(names, seed=0):
    if "all" in names:
        names = list(SUITES)
    return {name: SUITES[name](seed) for name in names}
