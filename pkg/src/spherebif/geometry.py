"""Conformal reflections of S^n and the substitutions that move problems onto it.

All profiles are axisymmetric.  The reflection phi_{p,lam} about a pole p keeps
the geodesic direction and sends the distance r from p to h_lam(r), where

    cos h = (2 cos lam - (1 + cos^2 lam) cos r) / (1 + cos^2 lam - 2 cos lam cos r).

Coordinates: ``t_cosine`` is t = theta_{n+1}; ``geodesic_r`` is the distance
from the north pole (t = cos r); ``euclidean_r`` is |x| on R^n.  Distances from
the south pole are pi - r.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi
from typing import Callable

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .errors import DomainError, ResolutionError
from .spectral import AxisymFn, GegenbauerBasis

POLE_EPS = 1e-6
COORDINATES = ("euclidean_r", "geodesic_r", "t_cosine")
_RANGES = {"euclidean_r": (0.0, np.inf), "geodesic_r": (0.0, pi), "t_cosine": (-1.0, 1.0)}


def _open_interval(name, x, lo, hi):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= lo) or np.any(x >= hi):
        raise DomainError(f"{name} must lie in the open interval ({lo:g}, {hi:g})")
    return x


def _scalar_or_array(x, ref):
    return float(x) if np.ndim(ref) == 0 else x


def _half_angle_terms(lam, r):
    # with a = cos^2(lam/2) sin(r/2), b = sin^2(lam/2) cos(r/2) the reflection is
    # tan(h/2) = b / a, i.e. an inversion in stereographic coordinates; this
    # form stays accurate next to the poles where arccos does not
    a = np.cos(lam / 2) ** 2 * np.sin(r / 2)
    b = np.sin(lam / 2) ** 2 * np.cos(r / 2)
    return a, b


def reflect_radius(lam, r):
    """h_lam(r): image of the geodesic distance r under the reflection of radius lam."""
    lam_a = _open_interval("lambda", lam, 0.0, pi)
    r_a = _open_interval("r", r, 0.0, pi)
    a, b = _half_angle_terms(lam_a, r_a)
    return _scalar_or_array(2 * np.arctan2(b, a), np.broadcast(lam, r))


def jacobian_density(lam, r, n):
    """|J_{phi_{p,lam}}| = (sin^2 lam / (1 + cos^2 lam - 2 cos lam cos r))^n on S^n."""
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    lam_a = _open_interval("lambda", lam, 0.0, pi)
    r_a = _open_interval("r", r, 0.0, pi)
    a, b = _half_angle_terms(lam_a, r_a)
    # the denominator equals 4 (a^2 + b^2)
    base = (np.sin(lam_a / 2) * np.cos(lam_a / 2)) ** 2 / (a**2 + b**2)
    return _scalar_or_array(base**n, np.broadcast(lam, r))


def _chord_form(lam, x):
    """1 + cos^2 lam - 2 cos lam cos x, written as a sum of nonnegative terms.

    With cos lam >= 0 this is 4 sin^4(lam/2) + 4 cos lam sin^2(x/2); otherwise
    4 cos^4(lam/2) - 4 cos lam cos^2(x/2).  Neither branch cancels.
    """
    lam, x = np.broadcast_arrays(np.asarray(lam, float), np.asarray(x, float))
    cl = np.cos(lam)
    pos = 4 * np.sin(lam / 2) ** 4 + 4 * cl * np.sin(x / 2) ** 2
    neg = 4 * np.cos(lam / 2) ** 4 - 4 * cl * np.cos(x / 2) ** 2
    return np.where(cl >= 0, pos, neg)


def reflection_identity_defect(lam, r):
    """1 + cos^2 lam - 2 cos lam cos h_lam(r) - sin^4 lam / (1 + cos^2 lam - 2 cos lam cos r)."""
    h = reflect_radius(lam, r)
    return _chord_form(lam, h) - np.sin(lam) ** 4 / _chord_form(lam, r)


@dataclass(frozen=True)
class KelvinParams:
    pole: str
    lam: float
    n: int

    def __post_init__(self):
        if self.pole not in ("north", "south"):
            raise DomainError(f"pole must be 'north' or 'south', got {self.pole!r}")
        if not 0 < self.lam < pi:
            raise DomainError(f"lambda must lie in (0, pi), got {self.lam}")
        if self.n < 2:
            raise DomainError(f"n must be >= 2, got {self.n}")

    def pole_distance(self, t):
        """Geodesic distance from the pole of the point with theta_{n+1} = t."""
        t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
        return np.arccos(t) if self.pole == "north" else np.arccos(-t)

    def t_from_distance(self, rho):
        c = np.cos(rho)
        return c if self.pole == "north" else -c

    def map_t(self, t):
        """theta_{n+1} of phi_{p,lam}(theta), for axisymmetric points."""
        return self.t_from_distance(reflect_radius(self.lam, self.pole_distance(t)))

    def jacobian_at_t(self, t, n=None):
        return jacobian_density(self.lam, self.pole_distance(t), self.n if n is None else n)


def chebyshev_grid(a: float, b: float, m: int) -> np.ndarray:
    """m Chebyshev points of the first kind on (a, b), increasing; endpoints excluded."""
    j = np.arange(m)
    x = -np.cos((2 * j + 1) * pi / (2 * m))
    return 0.5 * (a + b) + 0.5 * (b - a) * x


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples of an axisymmetric function in one of three radial coordinates.

    If ``func`` is given it is the exact profile and is used for evaluation;
    otherwise values are interpolated barycentrically through the grid, which
    should be Chebyshev-distributed for spectral accuracy.
    """
    grid: np.ndarray
    values: np.ndarray
    coordinate: str
    func: Callable | None = None
    signed: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.coordinate not in COORDINATES:
            raise DomainError(f"unknown coordinate {self.coordinate!r}")
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise DomainError("grid and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("grid must be strictly increasing")
        lo, hi = _RANGES[self.coordinate]
        if grid[0] < lo or grid[-1] > hi:
            raise DomainError(f"{self.coordinate} grid must lie in [{lo:g}, {hi:g}]")
        if not np.all(np.isfinite(values)):
            raise DomainError("profile values must be finite")
        if not self.signed and np.any(values <= 0):
            raise DomainError("profile values must be positive")

    @classmethod
    def from_function(cls, func, grid, coordinate, signed=False, **metadata):
        grid = np.asarray(grid, dtype=float)
        return cls(grid, func(grid), coordinate, func=func, signed=signed, metadata=metadata)

    def __call__(self, x, extrapolate=False):
        x = np.asarray(x, dtype=float)
        if self.func is not None:
            return self.func(x)
        span = self.grid[-1] - self.grid[0]
        slack = 1e-12 * span
        if not extrapolate and (np.any(x < self.grid[0] - slack) or np.any(x > self.grid[-1] + slack)):
            raise DomainError(
                f"evaluation outside the sampled range [{self.grid[0]:.6g}, {self.grid[-1]:.6g}]")
        return BarycentricInterpolator(self.grid, self.values)(x)

    def in_t(self) -> "RadialProfile":
        """Same function with t = theta_{n+1} as coordinate (sphere profiles only)."""
        if self.coordinate == "t_cosine":
            return self
        if self.coordinate != "geodesic_r":
            raise DomainError("only sphere profiles have a t coordinate")
        order = np.argsort(np.cos(self.grid))
        return RadialProfile(np.cos(self.grid)[order], self.values[order], "t_cosine",
                             func=None if self.func is None else (lambda t: self.func(np.arccos(t))),
                             signed=self.signed, metadata=dict(self.metadata))


def _to_t(x, coordinate):
    return np.cos(x) if coordinate == "geodesic_r" else np.asarray(x, dtype=float)


def _from_t(t, coordinate):
    return np.arccos(np.clip(t, -1.0, 1.0)) if coordinate == "geodesic_r" else t


def _clamped_t(kp: KelvinParams, t):
    """Map t through phi and clamp images within POLE_EPS of a pole."""
    rho = kp.pole_distance(t)
    rho_c = np.clip(rho, POLE_EPS, pi - POLE_EPS)
    clamped = rho_c != rho
    h = reflect_radius(kp.lam, rho_c)
    h_c = np.clip(h, POLE_EPS, pi - POLE_EPS)
    clamped |= h_c != h
    return rho_c, kp.t_from_distance(h_c), clamped


def _sphere_profile(v: RadialProfile):
    if v.coordinate == "euclidean_r":
        raise DomainError("Kelvin transforms on S^n need a geodesic_r or t_cosine profile")


def kelvin_transform_axisym(v: RadialProfile, kp: KelvinParams, extrapolate=False) -> RadialProfile:
    """v_{p,lam} = |J|^{(n-2)/(2n)} (v o phi_{p,lam}), sampled on v's grid.

    Points whose distance from a pole falls below POLE_EPS are clamped; the
    count is stored in ``metadata['clamped']``.
    """
    if kp.n < 3:
        raise DomainError("the power-form Kelvin transform needs n >= 3; use kelvin_transform_s2")
    _sphere_profile(v)
    expo = (kp.n - 2) / (2 * kp.n)

    def transformed(x):
        rho, t_img, _ = _clamped_t(kp, _to_t(x, v.coordinate))
        return (jacobian_density(kp.lam, rho, kp.n) ** expo
                * v(_from_t(t_img, v.coordinate), extrapolate=extrapolate))

    _, _, clamped = _clamped_t(kp, _to_t(v.grid, v.coordinate))
    values = transformed(v.grid)
    meta = dict(v.metadata, clamped=int(clamped.sum()), kelvin=(kp.pole, kp.lam, kp.n))
    return RadialProfile(v.grid, values, v.coordinate,
                         func=transformed if v.func is not None else None,
                         signed=v.signed, metadata=meta)


def kelvin_transform_s2(v: RadialProfile, kp: KelvinParams, extrapolate=False) -> RadialProfile:
    """Logarithmic Kelvin transform on S^2: v o phi + (1/2) log |J|."""
    if kp.n != 2:
        raise DomainError("the logarithmic Kelvin transform is defined on S^2 only")
    _sphere_profile(v)

    def transformed(x):
        rho, t_img, _ = _clamped_t(kp, _to_t(x, v.coordinate))
        vv = v(_from_t(t_img, v.coordinate), extrapolate=extrapolate)
        return vv + 0.5 * np.log(jacobian_density(kp.lam, rho, 2))

    _, _, clamped = _clamped_t(kp, _to_t(v.grid, v.coordinate))
    meta = dict(v.metadata, clamped=int(clamped.sum()), kelvin=(kp.pole, kp.lam, 2))
    return RadialProfile(v.grid, transformed(v.grid), v.coordinate,
                         func=transformed if v.func is not None else None,
                         signed=True, metadata=meta)


# -- conformal invariance checks -------------------------------------------------

def _profile_in_t(v):
    if isinstance(v, AxisymFn):
        return v.__call__
    if isinstance(v, RadialProfile):
        _sphere_profile(v)
        if v.coordinate == "geodesic_r":
            return lambda t: v(np.arccos(np.clip(t, -1, 1)))
        return lambda t: v(t)
    return v


CHOP_REL = 3e-15


def _resolved(basis: GegenbauerBasis, func, what, tail_tol):
    f = AxisymFn.from_function(basis, func)
    if f.tail() > tail_tol:
        raise ResolutionError(f"{what}: spectral tail {f.tail():.2e} exceeds {tail_tol:.0e}")
    # drop the trailing rounding noise; -Lap would amplify it by nu_K ~ K^2
    c = f.coeffs.copy()
    big = np.nonzero(np.abs(c) > CHOP_REL * np.abs(c).max())[0]
    if big.size:
        c[big[-1] + 1:] = 0.0
    return AxisymFn.from_coeffs(basis, c)


def conformal_invariance_residual(v, kp: KelvinParams, basis: GegenbauerBasis,
                                  tail_tol=1e-8) -> float:
    """sup over nodes of |-L v_{p,lam} - |J|^{(n+2)/(2n)} (-L v) o phi|, L = Lap - n(n-2)/4.

    ``v`` may be a RadialProfile on the sphere, an AxisymFn or a callable of t.
    Both v and its transform must be resolved by ``basis`` (tail below
    ``tail_tol``), otherwise ResolutionError is raised.
    """
    n = kp.n
    if n < 3:
        raise DomainError("power-form invariance needs n >= 3")
    if basis.N != n:
        raise DomainError(f"basis is on S^{basis.N}, transform on S^{n}")
    vt = _profile_in_t(v)
    shift = n * (n - 2) / 4
    expo = (n - 2) / (2 * n)
    v_fn = _resolved(basis, vt, "v", tail_tol)
    vk_fn = _resolved(basis, lambda t: kp.jacobian_at_t(t) ** expo * v_fn(kp.map_t(t)),
                      "Kelvin transform of v", tail_tol)
    x = basis.nodes
    lhs = basis.synthesize((basis.eigenvalues + shift) * vk_fn.coeffs)
    Lv = AxisymFn.from_coeffs(basis, (basis.eigenvalues + shift) * v_fn.coeffs)
    rhs = kp.jacobian_at_t(x) ** ((n + 2) / (2 * n)) * Lv(kp.map_t(x))
    return float(np.max(np.abs(lhs - rhs)))


def s2_invariance_residual(v, kp: KelvinParams, basis: GegenbauerBasis, tail_tol=1e-8) -> float:
    """sup over nodes of |(-Lap v_{p,lam} + 1) - |J| ((-Lap v) o phi + 1)| on S^2."""
    if kp.n != 2 or basis.N != 2:
        raise DomainError("the logarithmic invariance lives on S^2")
    vt = _profile_in_t(v)
    v_fn = _resolved(basis, vt, "v", tail_tol)
    vk_fn = _resolved(basis, lambda t: v_fn(kp.map_t(t)) + 0.5 * np.log(kp.jacobian_at_t(t)),
                      "Kelvin transform of v", tail_tol)
    x = basis.nodes
    lhs = basis.synthesize(basis.eigenvalues * vk_fn.coeffs) + 1.0
    Lv = AxisymFn.from_coeffs(basis, basis.eigenvalues * v_fn.coeffs)
    rhs = kp.jacobian_at_t(x) * (Lv(kp.map_t(x)) + 1.0)
    return float(np.max(np.abs(lhs - rhs)))


# -- R^n <-> S^n -----------------------------------------------------------------

def xi(r, n):
    """Conformal factor (2 / (1 + r^2))^{(n-2)/2} of inverse stereographic projection."""
    r = np.asarray(r, dtype=float)
    return (2.0 / (1.0 + r**2)) ** ((n - 2) / 2)


def t_of_r(r):
    r = np.asarray(r, dtype=float)
    return (r**2 - 1.0) / (r**2 + 1.0)


def r_of_t(t):
    t = np.asarray(t, dtype=float)
    return np.sqrt((1.0 + t) / (1.0 - t))


def stereographic_transfer(u: RadialProfile, n: int) -> RadialProfile:
    """v = u / xi carried to S^n, as a t_cosine profile on the image of u's grid."""
    if n < 3:
        raise DomainError("stereographic transfer needs n >= 3")
    if u.coordinate != "euclidean_r":
        raise DomainError("stereographic transfer takes a euclidean_r profile")
    if np.any(u.values <= 0):
        raise DomainError("u must be positive")
    if u.grid[0] <= 0:
        raise DomainError("r grid must be positive")
    t = t_of_r(u.grid)
    vals = u.values / xi(u.grid, n)
    func = None
    if u.func is not None:
        func = lambda s: u.func(r_of_t(s)) / xi(r_of_t(s), n)
    return RadialProfile(t, vals, "t_cosine", func=func, metadata=dict(u.metadata, n=n))


def stereographic_inverse(v: RadialProfile, n: int) -> RadialProfile:
    """u = xi * (v o pi^{-1}) on R^n, as a euclidean_r profile."""
    if n < 3:
        raise DomainError("stereographic transfer needs n >= 3")
    v = v.in_t()
    if np.any(v.grid >= 1.0) or np.any(v.grid <= -1.0):
        raise DomainError("t grid must avoid the poles")
    r = r_of_t(v.grid)
    vals = xi(r, n) * v.values
    func = None
    if v.func is not None:
        func = lambda s: xi(s, n) * v.func(t_of_r(s))
    return RadialProfile(r, vals, "euclidean_r", func=func, metadata=dict(v.metadata, n=n))


# -- transferred nonlinearities -----------------------------------------------------

def matukuma_exponent(n: int, p: float) -> float:
    return (n - 2) / 2 * (p - n / (n - 2))


def matukuma_g(t, s, n: int, p: float):
    """g(theta, s) = (1/2) (1 - theta_{n+1})^{((n-2)/2)(p - n/(n-2))} s^p."""
    if n < 3:
        raise DomainError("Matukuma transfer needs n >= 3")
    if p < 0:
        raise DomainError("p must be nonnegative")
    t_a = np.asarray(t, dtype=float)
    s_a = np.asarray(s, dtype=float)
    if np.any(t_a < -1) or np.any(t_a > 1):
        raise DomainError("t must lie in [-1, 1]")
    if np.any(s_a < 0):
        raise DomainError("s must be nonnegative")
    e = matukuma_exponent(n, p)
    if e < 0 and np.any(t_a == 1.0):
        raise DomainError("g is singular at the north pole for p < n/(n-2)")
    out = 0.5 * (1.0 - t_a) ** e * s_a**p
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class MeanFieldForm:
    """Coefficients K, f of -Lap v + 1 = K e^{2v} + f on S^2 after the mean-field change."""
    alpha: float
    gamma: float

    def K(self, theta):
        """K = exp(-gamma <s, theta>); ``theta`` is a 3-vector or the scalar theta_3."""
        theta = np.asarray(theta, dtype=float)
        s_dot = -theta[..., 2] if theta.ndim and theta.shape[-1] == 3 else -theta
        return np.exp(-self.gamma * s_dot)

    def f(self, theta=None):
        val = 1.0 - self.alpha / (8 * pi)
        if theta is None:
            return val
        theta = np.asarray(theta, dtype=float)
        shape = theta.shape[:-1] if theta.ndim and theta.shape[-1] == 3 else theta.shape
        return np.full(shape, val)


def meanfield_substitution(alpha: float, gamma: float) -> MeanFieldForm:
    if alpha < 0 or gamma < 0:
        raise DomainError("alpha and gamma must be nonnegative")
    return MeanFieldForm(float(alpha), float(gamma))
