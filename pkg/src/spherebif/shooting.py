"""Radial reductions on R^n: Emden-Fowler shooting and the explicit checks around it.

Under w(t) = e^{-(n-2)t/2} u(e^{-t}) a radial solution of

    u'' + (n-1)/r u' + c u / r^2 + u^q = 0,   q = (n+2)/(n-2),

becomes the autonomous oscillator w'' + (c - (n-2)^2/4) w + w^q = 0, and the
sphere problem with a linear term (beta family) becomes

    w'' - ((n-2)/2)^2 w + w^q + c_beta w / (4 cosh^2 t) = 0,   c_beta = n(n-2) - 4 beta.

Trajectories are shot from t = 0 in both directions and stopped at the first
zero of w.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import cosh, isfinite

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BlowupDetected, DomainError, ToleranceFailure
from .geometry import RadialProfile

RTOL = 1e-10
ATOL = 1e-12
T_DEFAULT = 30.0
OVERFLOW_GUARD = 1e8
SWEEP_SHAPE = (20, 20)
SWEEP_BOX = ((0.0, 3.0), (-3.0, 3.0))


def exponent(n: int) -> float:
    return (n + 2) / (n - 2)


def hardy_constant(n: int) -> float:
    return (n - 2) ** 2 / 4


def c_beta(n: int, beta: float) -> float:
    return n * (n - 2) - 4 * beta


def beta0(n: int) -> float:
    return (n - 2) * (3 * n - 2) / 16


def decay_constant(n: int) -> float:
    """C_* = (n (n-2) / 2)^{(n-2)/4}."""
    return (n * (n - 2) / 2) ** ((n - 2) / 4)


def _check_n(n):
    if n < 3:
        raise DomainError(f"n must be >= 3, got {n}")


# -- transforms and energies -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class EmdenFowlerProfile:
    """w sampled on an increasing t grid, t = -log r."""
    t: np.ndarray
    w: np.ndarray
    n: int
    func: object = None

    def __call__(self, t):
        if self.func is not None:
            return self.func(np.asarray(t, dtype=float))
        return np.interp(t, self.t, self.w)


def emden_fowler_transform(u: RadialProfile, n: int) -> EmdenFowlerProfile:
    _check_n(n)
    if u.coordinate != "euclidean_r":
        raise DomainError("the Emden-Fowler variable is defined for euclidean_r profiles")
    if u.grid[0] <= 0:
        raise DomainError("r must be positive")
    r = u.grid[::-1]
    t = -np.log(r)
    w = r ** ((n - 2) / 2) * u.values[::-1]
    func = None
    if u.func is not None:
        func = lambda s: np.exp(-(n - 2) / 2 * s) * u.func(np.exp(-s))
    return EmdenFowlerProfile(t, w, n, func)


def emden_fowler_inverse(w: EmdenFowlerProfile) -> RadialProfile:
    n = w.n
    r = np.exp(-w.t[::-1])
    vals = r ** (-(n - 2) / 2) * w.w[::-1]
    func = None
    if w.func is not None:
        func = lambda s: s ** (-(n - 2) / 2) * w.func(-np.log(s))
    return RadialProfile(r, vals, "euclidean_r", func=func, metadata={"n": n})


def energy_h(a, b, n: int):
    """h(a, b) = b^2 - ((n-2)/2)^2 a^2 + ((n-2)/n) a^{2n/(n-2)}."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = b**2 - ((n - 2) / 2) ** 2 * a**2 + (n - 2) / n * np.abs(a) ** (2 * n / (n - 2))
    return float(out) if out.ndim == 0 else out


def hamiltonian_autonomous(w, wp, n: int, c: float):
    """H = w'^2/2 - ((n-2)^2/4 - c) w^2/2 + (n-2)/(2n) w^{2n/(n-2)}; conserved along the c-equation."""
    w = np.asarray(w, dtype=float)
    wp = np.asarray(wp, dtype=float)
    k = hardy_constant(n) - c
    out = 0.5 * wp**2 - 0.5 * k * w**2 + (n - 2) / (2 * n) * np.abs(w) ** (2 * n / (n - 2))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ShootingCondition:
    holds: bool
    value: float


def check_shooting_condition(a, b, n: int, beta: float) -> ShootingCondition:
    """h(a, b) + c_beta a^2 / 4 < 0 guarantees a trajectory positive for all t."""
    if not a > 0:
        raise DomainError("a must be positive")
    val = energy_h(a, b, n) + 0.25 * c_beta(n, beta) * a * a
    return ShootingCondition(bool(val < 0), float(val))


# -- integration -----------------------------------------------------------------

@dataclass(frozen=True)
class ShootParams:
    n: int
    family: str
    a: float
    b: float = 0.0
    c: float = 0.0
    beta: float = 0.0
    T: float = T_DEFAULT
    rtol: float = RTOL
    atol: float = ATOL

    def __post_init__(self):
        _check_n(self.n)
        if self.family not in ("autonomous", "beta"):
            raise DomainError(f"family must be 'autonomous' or 'beta', got {self.family!r}")
        if not self.a > 0:
            raise DomainError("a must be positive")
        if not self.T > 0:
            raise DomainError("T must be positive")
        if not all(isfinite(x) for x in (self.a, self.b, self.c, self.beta)):
            raise DomainError("parameters must be finite")

    @property
    def c_beta(self) -> float:
        return c_beta(self.n, self.beta)


def rhs_factory(sp: ShootParams):
    q = exponent(sp.n)
    if sp.family == "autonomous":
        k = hardy_constant(sp.n) - sp.c

        def rhs(t, y):
            w, wp = y.tolist()
            # odd extension so trial stages past w = 0 stay finite
            return [wp, k * w - abs(w) ** (q - 1) * w]
    else:
        k = hardy_constant(sp.n)
        cb = sp.c_beta

        def rhs(t, y):
            w, wp = y.tolist()
            ch = cosh(t) if abs(t) < 350 else float("inf")
            return [wp, k * w - abs(w) ** (q - 1) * w - cb * w / (4 * ch * ch)]
    return rhs


@dataclass(frozen=True)
class ZeroCrossing:
    t: float
    direction: str
    bracket: tuple
    w_at_event: float


@dataclass(eq=False)
class Trajectory:
    params: ShootParams
    t: np.ndarray
    w: np.ndarray
    wp: np.ndarray
    energy: np.ndarray
    events: list
    status: str
    dense: dict = field(default_factory=dict, repr=False)

    @property
    def crossed_forward(self) -> bool:
        return any(e.direction == "forward" for e in self.events)

    @property
    def crossed_backward(self) -> bool:
        return any(e.direction == "backward" for e in self.events)

    @property
    def span(self) -> tuple:
        return float(self.t[0]), float(self.t[-1])

    def evaluate(self, t):
        """(w, w') at t from the dense output."""
        if not self.dense:
            raise DomainError("trajectory was integrated without dense output")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.span
        if np.any(t < lo) or np.any(t > hi):
            raise DomainError(f"t outside the integrated span [{lo:g}, {hi:g}]")
        out = np.empty((2, t.size))
        fwd = t >= 0
        if np.any(fwd):
            out[:, fwd] = self.dense["forward"](t[fwd])
        if np.any(~fwd):
            out[:, ~fwd] = self.dense["backward"](t[~fwd])
        return out

    def hamiltonian(self):
        if self.params.family != "autonomous":
            raise DomainError("H is conserved only for the autonomous family")
        return hamiltonian_autonomous(self.w, self.wp, self.params.n, self.params.c)


def _zero_event(t, y):
    return y[0]


_zero_event.terminal = True
_zero_event.direction = -1


def _blowup_event(t, y):
    return OVERFLOW_GUARD - max(abs(y[0]), abs(y[1]))


_blowup_event.terminal = True


def _half(sp: ShootParams, rhs, t_end, dense):
    sol = solve_ivp(rhs, (0.0, t_end), [sp.a, sp.b], method="DOP853", rtol=sp.rtol,
                    atol=sp.atol, events=(_zero_event, _blowup_event), dense_output=dense)
    if sol.status == -1:
        raise ToleranceFailure(sol.message)
    return sol


def integrate(sp: ShootParams, dense=True) -> Trajectory:
    """Shoot from (w, w')(0) = (a, b) to +T and -T, stopping at the first zero of w each way.

    Event times come from root finding on the step interpolant either way;
    ``dense=False`` only skips keeping the interpolant for later evaluation.
    """
    rhs = rhs_factory(sp)
    parts = {}
    events = []
    for name, t_end in (("forward", sp.T), ("backward", -sp.T)):
        sol = _half(sp, rhs, t_end, dense)
        if sol.t_events[1].size:
            raise BlowupDetected(f"|w| or |w'| exceeded {OVERFLOW_GUARD:g} at t={sol.t_events[1][0]:g}")
        if sol.t_events[0].size:
            te = float(sol.t_events[0][0])
            we = float(sol.y_events[0][0][0])
            # the last accepted step brackets the event
            events.append(ZeroCrossing(te, name, (float(sol.t[-2]), float(sol.t[-1])), we))
        parts[name] = sol
    fwd, bwd = parts["forward"], parts["backward"]
    t = np.concatenate([bwd.t[:0:-1], fwd.t])
    y = np.concatenate([bwd.y[:, :0:-1], fwd.y], axis=1)
    cf = any(e.direction == "forward" for e in events)
    cb = any(e.direction == "backward" for e in events)
    status = ("hit_zero_both" if cf and cb else "hit_zero_forward" if cf
              else "hit_zero_backward" if cb else "positive_on_interval")
    return Trajectory(params=sp, t=t, w=y[0], wp=y[1], energy=energy_h(y[0], y[1], sp.n),
                      events=events, status=status,
                      dense={"forward": fwd.sol, "backward": bwd.sol} if dense else {})


# -- checks on trajectories -----------------------------------------------------------

@dataclass(frozen=True)
class EnergyMonitor:
    bound: float
    max_violation: float
    samples: int


def energy_estimate_monitor(traj: Trajectory, n_dense=4001) -> EnergyMonitor:
    """max over t >= 0 of h(w, w')(t) - (h(a, b) + c_beta a^2 / 4).

    Uses the accepted steps plus a uniform dense-output grid on the forward
    half.  For the autonomous family H is conserved, so the monitor reports
    the drift of H instead.
    """
    sp = traj.params
    hi = traj.span[1]
    ts = np.union1d(traj.t[traj.t >= 0], np.linspace(0.0, hi, n_dense))
    w, wp = traj.evaluate(ts)
    if sp.family == "autonomous":
        H = hamiltonian_autonomous(w, wp, sp.n, sp.c)
        H0 = hamiltonian_autonomous(sp.a, sp.b, sp.n, sp.c)
        return EnergyMonitor(H0, float(np.max(np.abs(H - H0))), ts.size)
    if sp.c_beta < 0:
        raise DomainError("the estimate needs c_beta >= 0, i.e. beta <= n(n-2)/4")
    bound = check_shooting_condition(sp.a, sp.b, sp.n, sp.beta).value
    return EnergyMonitor(bound, float(np.max(energy_h(w, wp, sp.n) - bound)), ts.size)


@dataclass(frozen=True)
class AutonomousRegime:
    n: int
    c: float
    regime: str
    equilibrium: float | None
    homoclinic_max: float | None


def classify_autonomous(n: int, c: float) -> AutonomousRegime:
    """Nonexistence for c >= (n-2)^2/4, otherwise a center at w* = ((n-2)^2/4 - c)^{(n-2)/4}."""
    _check_n(n)
    k = hardy_constant(n) - c
    if k <= 0:
        return AutonomousRegime(n, c, "nonexistence", None, None)
    return AutonomousRegime(n, c, "oscillatory", k ** ((n - 2) / 4),
                            (n * k / (n - 2)) ** ((n - 2) / 4))


@dataclass(frozen=True)
class OrbitReport:
    kind: str
    period: float | None
    return_error: float | None
    max_w: float


def orbit_type(n: int, c: float, a: float, b: float = 0.0, T=400.0, rtol=1e-11,
               atol=1e-13) -> OrbitReport:
    """Follow the c-equation forward from (a, b) for one revolution.

    ``periodic`` if the orbit comes back to the section w' = 0 on the starting
    side (Poincare return) before w vanishes; ``crossing`` if w hits zero.
    """
    sp = ShootParams(n, "autonomous", a, b, c=c, T=T, rtol=rtol, atol=atol)
    rhs = rhs_factory(sp)
    reg = classify_autonomous(n, c)
    side = np.sign(a - reg.equilibrium) if reg.equilibrium is not None else 1.0

    def section(t, y):
        return y[1]

    section.direction = -side if side != 0 else -1
    sol = solve_ivp(rhs, (0.0, T), [a, b], method="DOP853", rtol=rtol, atol=atol,
                    events=(_zero_event, section), dense_output=True)
    if sol.status == -1:
        raise ToleranceFailure(sol.message)
    max_w = float(np.max(sol.y[0]))
    if sol.t_events[0].size:
        return OrbitReport("crossing", None, None, max_w)
    # first section hit after leaving the start counts as the return
    hits = [(t, y) for t, y in zip(sol.t_events[1], sol.y_events[1]) if t > 1e-9]
    if not hits:
        return OrbitReport("undetermined", None, None, max_w)
    t_ret, y_ret = hits[0]
    ref = a if b == 0 else float(sol.sol(t_ret)[0])
    # with b != 0 the start is not on the section; compare H instead
    err = (abs(y_ret[0] - a) if b == 0 else
           abs(hamiltonian_autonomous(y_ret[0], y_ret[1], n, c)
               - hamiltonian_autonomous(a, b, n, c)))
    tt = np.linspace(0.0, t_ret, 2001)
    max_w = max(max_w, float(np.max(sol.sol(tt)[0])), ref)
    return OrbitReport("periodic", float(t_ret), float(err), max_w)


def periodic_orbit_sup(n: int, c: float, tol=1e-8, max_iter=200, rtol=1e-10, atol=1e-12) -> float:
    """Supremum of max w over periodic orbits, by bisection on the turning point a.

    Starts (a, 0) with a above the equilibrium are periodic up to the
    homoclinic turning point and cross zero beyond it; the boundary is found
    without using the closed form.
    """
    reg = classify_autonomous(n, c)
    if reg.regime != "oscillatory":
        raise DomainError("no periodic orbits for c >= (n-2)^2/4")
    lo = reg.equilibrium
    hi = 2 * lo
    while orbit_type(n, c, hi, rtol=rtol, atol=atol).kind != "crossing":
        lo, hi = hi, 2 * hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if orbit_type(n, c, mid, rtol=rtol, atol=atol).kind == "periodic":
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return lo


@dataclass(frozen=True)
class DecayReport:
    C_star: float
    max_w: float
    ok: bool


def decay_bound_check(data, n: int) -> DecayReport:
    """sup w <= C_*, for a Trajectory, an EmdenFowlerProfile, a euclidean_r profile or raw values."""
    if isinstance(data, Trajectory):
        w = data.w
    elif isinstance(data, EmdenFowlerProfile):
        w = data.w
    elif isinstance(data, RadialProfile):
        w = emden_fowler_transform(data, n).w
    else:
        w = np.asarray(data, dtype=float)
    C = decay_constant(n)
    m = float(np.max(w))
    return DecayReport(C, m, bool(m <= C))


# -- explicit singular solution and the phi flux ---------------------------------------

def singular_constant(n: int, stated: bool = False) -> float:
    """Amplitude of the beta_0 singular solution.

    The closed form in the literature is ((n-2)/2)^{(n-2)/2}; substituting it
    leaves an O(1) residual.  Matching the r^0 and r^2 terms of the radial
    equation instead gives ((n-2)^2/8)^{(n-2)/4}, which is the default here.
    """
    if stated:
        return ((n - 2) / 2) ** ((n - 2) / 2)
    return ((n - 2) ** 2 / 8) ** ((n - 2) / 4)


def singular_profile(n: int, constant: float | None = None):
    """u, u', u'' of u(r) = C (2 / (1 + r^2))^{(n-2)/4}."""
    C = singular_constant(n) if constant is None else constant
    A = C * 2 ** ((n - 2) / 4)
    m = (n - 2) / 4

    def derivs(r):
        r = np.asarray(r, dtype=float)
        s = 1 + r**2
        u = A * s ** (-m)
        up = -2 * m * A * r * s ** (-m - 1)
        upp = -2 * m * A * (s ** (-m - 1) - 2 * (m + 1) * r**2 * s ** (-m - 2))
        return u, up, upp

    return derivs


def singular_sphere_profile(n: int, constant: float | None = None):
    """v(t) = C (1 - t)^{-(n-2)/4} on S^n, singular at the north pole."""
    C = singular_constant(n) if constant is None else constant
    return lambda t: C * (1.0 - np.asarray(t, dtype=float)) ** (-(n - 2) / 4)


def radial_residual(u, up, upp, r, n: int, beta: float):
    """u'' + (n-1)/r u' + (n(n-2) - 4 beta) u / (1 + r^2)^2 + u^q."""
    r = np.asarray(r, dtype=float)
    return upp + (n - 1) / r * up + c_beta(n, beta) * u / (1 + r**2) ** 2 + u ** exponent(n)


def singular_solution_residual(n: int, r=None, beta=None, constant=None) -> np.ndarray:
    """Pointwise residual of the beta_0 singular profile in the radial equation, r in [0.1, 10]."""
    _check_n(n)
    if r is None:
        r = np.geomspace(0.1, 10.0, 1001)
    u, up, upp = singular_profile(n, constant)(r)
    return radial_residual(u, up, upp, r, n, beta0(n) if beta is None else beta)


@dataclass(frozen=True, eq=False)
class PhiFlux:
    r: np.ndarray
    phi: np.ndarray
    flux: np.ndarray

    def max_increase(self) -> float:
        """Largest increase of the flux between consecutive increasing-r samples."""
        return float(np.max(np.diff(self.flux))) if self.flux.size > 1 else -np.inf


def phi_substitution(r, u, up, n: int) -> PhiFlux:
    """phi = (1 + r^2)^{(n-2)/2} u and the flux r^{n-1} (1 + r^2)^{2-n} phi'."""
    r = np.asarray(r, dtype=float)
    order = np.argsort(r)
    r, u, up = r[order], np.asarray(u, float)[order], np.asarray(up, float)[order]
    s = 1 + r**2
    phi = s ** ((n - 2) / 2) * u
    dphi = (n - 2) * r * s ** ((n - 4) / 2) * u + s ** ((n - 2) / 2) * up
    return PhiFlux(r, phi, r ** (n - 1) * s ** (2 - n) * dphi)


def trajectory_to_radial(traj: Trajectory):
    """(r, u, u') from a shooting trajectory, positive samples only."""
    n = traj.params.n
    keep = traj.w > 0
    t, w, wp = traj.t[keep], traj.w[keep], traj.wp[keep]
    r = np.exp(-t)
    g = np.exp((n - 2) / 2 * t)
    u = g * w
    up = -(g / r) * ((n - 2) / 2 * w + wp)
    return r, u, up


def flux_check(traj: Trajectory, slack=1e-10) -> tuple[bool, PhiFlux]:
    """Strict decrease of the phi flux in r along the positive part of a trajectory."""
    r, u, up = trajectory_to_radial(traj)
    pf = phi_substitution(r, u, up, traj.params.n)
    scale = float(np.max(np.abs(pf.flux))) if pf.flux.size else 0.0
    return pf.max_increase() <= slack * max(scale, 1.0), pf


# -- sweeps -------------------------------------------------------------------------

def jittered_grid(shape=SWEEP_SHAPE, box=SWEEP_BOX, seed=0, jitter=0.25):
    """Cell-centred (a, b) grid with seeded uniform jitter of +-jitter cells."""
    rng = np.random.default_rng(seed)
    (a0, a1), (b0, b1) = box
    na, nb = shape
    ia, ib = np.meshgrid(np.arange(na), np.arange(nb), indexing="ij")
    da, db = (a1 - a0) / na, (b1 - b0) / nb
    a = a0 + (ia + 0.5 + rng.uniform(-jitter, jitter, ia.shape)) * da
    b = b0 + (ib + 0.5 + rng.uniform(-jitter, jitter, ib.shape)) * db
    return np.column_stack([a.ravel(), b.ravel()])


@dataclass
class SweepResult:
    params: dict
    starts: np.ndarray
    statuses: list
    crossing_times: list
    flux_ok: list = field(default_factory=list)

    def count(self, status) -> int:
        return sum(s == status for s in self.statuses)

    @property
    def all_cross_somewhere(self) -> bool:
        return all(s != "positive_on_interval" for s in self.statuses)

    @property
    def all_cross_both(self) -> bool:
        return all(s == "hit_zero_both" for s in self.statuses)


def shooting_sweep(n: int, family: str, c=0.0, beta=0.0, T=T_DEFAULT, seed=0,
                   shape=SWEEP_SHAPE, box=SWEEP_BOX, rtol=RTOL, atol=ATOL,
                   flux=False) -> SweepResult:
    """Shoot from a jittered (a, b) grid; optionally check the phi flux on each trajectory."""
    starts = jittered_grid(shape, box, seed)
    res = SweepResult({"n": n, "family": family, "c": c, "beta": beta, "T": T, "seed": seed,
                       "shape": list(shape), "box": [list(x) for x in box]}, starts, [], [])
    for a, b in starts:
        traj = integrate(ShootParams(n, family, float(a), float(b), c=c, beta=beta, T=T,
                                     rtol=rtol, atol=atol), dense=False)
        res.statuses.append(traj.status)
        res.crossing_times.append({e.direction: e.t for e in traj.events})
        if flux:
            res.flux_ok.append(flux_check(traj)[0])
    return res
