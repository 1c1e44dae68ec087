"""Sampling checks of the moving-sphere comparison and of the hypotheses it needs.

Every check draws its samples from ``numpy.random.default_rng(seed)`` so a
report is a deterministic function of (function, seed, budget).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np

from .errors import DomainError
from .geometry import POLE_EPS, KelvinParams, RadialProfile, jacobian_density, matukuma_g, reflect_radius
from .spectral import AxisymFn

SLACK = 1e-10
MAX_VIOLATIONS_KEPT = 50


@dataclass
class ComparisonReport:
    samples_tested: int
    violations: list
    max_deficit: float
    slack: float = SLACK
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_deficit <= self.slack

    def to_dict(self) -> dict:
        return {"samples_tested": self.samples_tested, "max_deficit": self.max_deficit,
                "slack": self.slack, "pass": self.passed,
                "violations": [list(map(_jsonable, v)) for v in self.violations],
                **{k: _jsonable(v) for k, v in self.extra.items()}}


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _radial(u):
    """Radial function handle: u(|z|) from a euclidean_r profile or a callable of r."""
    if isinstance(u, RadialProfile):
        if u.coordinate != "euclidean_r":
            raise DomainError("need a euclidean_r profile")
        return u
    return u


def _unit(rng, size, n):
    v = rng.standard_normal((size, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _report(deficit, points, lams, centers, slack):
    deficit = np.asarray(deficit, dtype=float)
    bad = np.nonzero(deficit > slack)[0]
    order = bad[np.argsort(-deficit[bad])][:MAX_VIOLATIONS_KEPT]
    viol = [(points[i], float(lams[i]), centers[i], float(deficit[i])) for i in order]
    return ComparisonReport(int(deficit.size), viol,
                            float(deficit.max()) if deficit.size else -np.inf, slack)


# -- R^n -------------------------------------------------------------------------

def kelvin_rn(u, y, lam, x):
    """u_{y,lam}(x) = (lam / |x - y|)^{n-2} u(y + lam^2 (x - y) / |x - y|^2) for radial u."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[-1]
    d = x - y
    d2 = np.sum(d * d, axis=-1)
    if np.any(d2 == 0):
        raise DomainError("x coincides with the centre y")
    lam = np.asarray(lam, dtype=float)
    img = y + (lam**2 / d2)[..., None] * d
    rho = np.linalg.norm(img, axis=-1)
    if np.any(rho == 0):
        raise DomainError("reflected point hits the origin")
    out = (lam / np.sqrt(d2)) ** (n - 2) * _radial(u)(rho)
    return float(out) if np.ndim(out) == 0 else out


def moving_sphere_check_rn(u, n: int, budget=10_000, seed=0, slack=SLACK, r_max=5.0):
    """Sample 0 < lam < |y|, |x - y| >= lam and test u_{y,lam}(x) <= u(x)."""
    rng = np.random.default_rng(seed)
    y = _unit(rng, budget, n) * rng.uniform(0.05, r_max, budget)[:, None]
    ny = np.linalg.norm(y, axis=1)
    lam = ny * rng.uniform(0.01, 0.99, budget)
    # distance from y: lam times a factor in [1, 20], log-uniform
    dist = lam * np.exp(rng.uniform(0.0, np.log(20.0), budget))
    x = y + _unit(rng, budget, n) * dist[:, None]
    x[np.linalg.norm(x, axis=1) == 0] += 1e-3
    uf = _radial(u)
    deficit = kelvin_rn(uf, y, lam, x) - uf(np.linalg.norm(x, axis=1))
    return _report(deficit, x, lam, y, slack)


def condition_A_check(c: float, n: int = 3, budget=100_000, seed=0, slack=SLACK,
                      identity_tol=1e-12):
    """Check (lam/|z|)^4 a(x + lam^2 z/|z|^2) < a(x + z) for a(x) = c/|x|^2.

    Samples have 0 < lam < |x| and |z| > lam.  The cross-multiplied gap
    lam^4 |x+z|^2 - |z|^4 |x + lam^2 z/|z|^2|^2 is compared with its closed
    factorization (lam^2 - |z|^2)((lam^2 + |z|^2)|x|^2 + 2 lam^2 <x, z>).
    """
    if not c > 0:
        raise DomainError("condition (A) is checked for c > 0")
    rng = np.random.default_rng(seed)
    nx = rng.uniform(0.05, 5.0, budget)
    x = _unit(rng, budget, n) * nx[:, None]
    lam = nx * rng.uniform(0.01, 0.99, budget)
    nz = lam * np.exp(rng.uniform(1e-3, np.log(50.0), budget))
    z = _unit(rng, budget, n) * nz[:, None]
    z2 = nz**2
    shifted = x + (lam**2 / z2)[:, None] * z
    xz = x + z
    s2 = np.sum(shifted**2, axis=1)
    xz2 = np.sum(xz**2, axis=1)
    lhs = (lam**2 / z2) ** 2 * c / s2
    rhs = c / xz2
    deficit = (lhs - rhs) / rhs
    rep = _report(deficit, x, lam, z, slack)
    t1 = lam**4 * xz2
    t2 = z2**2 * s2
    fact = (lam**2 - z2) * ((lam**2 + z2) * nx**2 + 2 * lam**2 * np.sum(x * z, axis=1))
    ident = np.abs((t1 - t2) - fact) / np.maximum(np.abs(t1), np.abs(t2))
    rep.extra = {"identity_max_rel_error": float(ident.max()),
                 "identity_ok": bool(ident.max() <= identity_tol),
                 "strict": bool(np.all(lhs < rhs))}
    return rep


def condition_A_terms(x, z, lam):
    """(lam^4 |x+z|^2, |z|^4 |x + lam^2 z/|z|^2|^2, factorized difference) for one sample."""
    x = np.asarray(x, float)
    z = np.asarray(z, float)
    z2 = z @ z
    t1 = lam**4 * np.sum((x + z) ** 2)
    t2 = z2**2 * np.sum((x + lam**2 * z / z2) ** 2)
    fact = (lam**2 - z2) * ((lam**2 + z2) * (x @ x) + 2 * lam**2 * (x @ z))
    return float(t1), float(t2), float(fact)


# -- S^n ---------------------------------------------------------------------------

def _sphere_callable(v):
    if isinstance(v, AxisymFn):
        return lambda t: v(np.clip(t, -1.0, 1.0))
    if isinstance(v, RadialProfile):
        pt = v.in_t()
        return lambda t: pt(t)
    return v


def moving_sphere_check_sphere(v, n: int, pole="south", lambda_grid=None, samples=400,
                               seed=0, slack=SLACK):
    """Test v_{p,lam} <= v on Sigma_{p,lam} for each lam in the grid (default up to pi/2)."""
    if n < 3:
        raise DomainError("the power-form comparison needs n >= 3")
    if lambda_grid is None:
        lambda_grid = np.linspace(0.05, pi / 2, 32)
    rng = np.random.default_rng(seed)
    f = _sphere_callable(v)
    expo = (n - 2) / (2 * n)
    deficits, pts, lams, cents = [], [], [], []
    for lam in lambda_grid:
        kp = KelvinParams(pole, float(lam), n)
        r = rng.uniform(lam, pi - POLE_EPS, samples)
        r = r[(r > lam) & (r > POLE_EPS)]
        h = reflect_radius(lam, r)
        t = kp.t_from_distance(r)
        t_img = kp.t_from_distance(h)
        vk = jacobian_density(lam, r, n) ** expo * f(t_img)
        deficits.append(vk - f(t))
        pts.append(t)
        lams.append(np.full(r.size, lam))
        cents.append(np.full(r.size, pole, dtype=object))
    return _report(np.concatenate(deficits), np.concatenate(pts), np.concatenate(lams),
                   np.concatenate(cents), slack)


# -- (g) conditions ------------------------------------------------------------------

G_CONDITIONS = ("g1", "g2", "g3", "g4", "g5", "g6")


def g_family(family: str, n: int, p: float | None = None, beta: float | None = None):
    """g(t, s) for the built-in families."""
    if n < 3:
        raise DomainError("n must be >= 3")
    if family == "matukuma":
        if p is None:
            raise DomainError("matukuma needs p")
        return lambda t, s: matukuma_g(t, s, n, p)
    if family == "power_linear":
        if beta is None:
            raise DomainError("power_linear needs beta")
        q = (n + 2) / (n - 2)
        kappa = n * (n - 2) / 4 - beta
        return lambda t, s: s**q + kappa * s + 0.0 * t
    raise DomainError(f"unknown family {family!r}")


@dataclass
class GConditionReport:
    family: str
    params: dict
    holds: dict
    strict: dict
    boundary: dict

    def to_dict(self):
        return {"family": self.family, "params": self.params, "holds": self.holds,
                "strict": self.strict, "boundary": self.boundary}


def g_condition_check(family: str, n: int, p: float | None = None, beta: float | None = None,
                      conditions=G_CONDITIONS, t_points=201, s_points=201, rel_tol=1e-12):
    """Sampled monotonicity checks of (g1)-(g6) on t in (-1, 1), s in [1e-3, 1e3]."""
    unknown = set(conditions) - set(G_CONDITIONS)
    if unknown:
        raise DomainError(f"unknown conditions {sorted(unknown)}")
    g = g_family(family, n, p, beta)
    q = (n + 2) / (n - 2)
    t = np.linspace(-1 + 1e-3, 1 - 1e-3, t_points)
    s = np.geomspace(1e-3, 1e3, s_points)
    G = g(t[:, None], s[None, :])
    scale = rel_tol * np.abs(G).max()
    dt = np.diff(G, axis=0)
    Gq = s[None, :] ** (-q) * G
    ds_q = np.diff(Gq, axis=1)
    ds = np.diff(G, axis=1)
    tol_q = rel_tol * np.abs(Gq).max()
    upper = t[1:] > 0
    lower = t[:-1] < 0
    up_mid = upper & (t[:-1] > 0)
    lo_mid = lower & (t[1:] < 0)
    holds, strict = {}, {}
    # both families depend on theta only through theta_{n+1}
    holds["g1"] = strict["g1"] = True
    strict["g2"] = bool(np.all(dt > 0))
    holds["g2"] = strict["g2"]
    holds["g3"] = bool(np.all(ds_q <= tol_q))
    strict["g3"] = bool(np.all(ds_q < 0))
    holds["g4"] = bool(np.all(ds >= -scale))
    strict["g4"] = bool(np.all(ds > 0))
    holds["g5"] = bool(np.all(dt[up_mid] >= -scale) and np.all(dt[lo_mid] <= scale))
    strict["g5"] = bool(np.all(dt[up_mid] > 0) and np.all(dt[lo_mid] < 0))
    holds["g6"] = strict["g6"] = bool(strict["g5"] or strict["g3"])
    if family == "matukuma":
        boundary = {"g2_iff_p_below": n / (n - 2), "g5_equality_at_p": n / (n - 2),
                    "theta_exponent": (n - 2) / 2 * (p - n / (n - 2))}
        params = {"n": n, "p": p}
    else:
        boundary = {"g3_iff_beta_at_most": n * (n - 2) / 4}
        params = {"n": n, "beta": beta}
    return GConditionReport(family, params,
                            {k: holds[k] for k in conditions},
                            {k: strict[k] for k in conditions}, boundary)
