"""Nonconstant solutions of -Lap v = v^p - lam v on S^N and their global branches.

With v = lam^{1/(p-1)} (w + 1) the problem becomes

    -Lap w = lam ((w + 1)^p - w - 1),   w > -1,

whose trivial branch w = 0 loses stability at lam_k = k (k + N - 1) / (p - 1).
Unknowns are the Gegenbauer coefficients of w; the nonlinearity is evaluated at
the quadrature nodes and projected back.  The linear part
(nu_k - lam (p - 1)) c_k is kept exact in coefficient space and only the
remainder (1 + w)^p - 1 - p w is sampled, so the residual carries no O(eps)
noise floor near w = 0.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from math import inf

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import (ConstraintViolation, DomainError, EndpointZero, NoConvergence,
                     NodalChange, NodalMismatch, NonSimpleZero, StepCollapse)
from .spectral import AxisymFn, GegenbauerBasis, NodalClass, build_basis, count_nodal_class

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-11
MAX_ITER = 50
W_FLOOR = 1e-10
TRIVIAL_NORM = 1e-8


def critical_exponent(N: int) -> float:
    return inf if N == 2 else (N + 2) / (N - 2)


@dataclass(frozen=True)
class ProblemParams:
    N: int
    p: float
    lam: float

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"N must be >= 2, got {self.N}")
        if not 1 < self.p < critical_exponent(self.N):
            raise DomainError(
                f"need 1 < p < N* = {critical_exponent(self.N)}, got p={self.p}")
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam}")

    def at(self, lam: float) -> "ProblemParams":
        return ProblemParams(self.N, self.p, lam)

    @property
    def constant_solution(self) -> float:
        return self.lam ** (1.0 / (self.p - 1))


@dataclass(frozen=True, eq=False)
class BranchPoint:
    lam: float
    p: float
    w: AxisymFn
    nodal: NodalClass | None
    residual_norm: float
    bounds_ok: bool
    min_w_plus_1: float
    iterations: int = 0

    @property
    def is_trivial(self) -> bool:
        return self.w.sup_norm() < TRIVIAL_NORM

    @property
    def nodal_class(self) -> int | None:
        return None if self.nodal is None else self.nodal.k


@dataclass
class Branch:
    origin_k: int
    points: list = field(default_factory=list)
    lambda_coverage: tuple = (np.nan, np.nan)
    stop_reason: str = ""
    folds: int = 0
    steps: list = field(default_factory=list)

    def _update_coverage(self):
        lams = [pt.lam for pt in self.points]
        self.lambda_coverage = (min(lams), max(lams))


# -- nonlinearity ---------------------------------------------------------

_SERIES_CUTOFF = 0.125
_SERIES_TERMS = 22


def remainder(w, p):
    """(1 + w)^p - 1 - p w without cancellation for small |w|."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    small = np.abs(w) < _SERIES_CUTOFF
    ws = w[small]
    acc = np.zeros_like(ws)
    coef = p * (p - 1) / 2
    power = ws * ws
    for j in range(2, _SERIES_TERMS):
        acc += coef * power
        coef *= (p - j) / (j + 1)
        power = power * ws
    out[small] = acc
    wl = w[~small]
    out[~small] = np.power(1.0 + wl, p) - 1.0 - p * wl
    return out


def remainder_prime(w, p):
    """p ((1 + w)^{p-1} - 1)."""
    w = np.asarray(w, dtype=float)
    return p * np.expm1((p - 1) * np.log1p(w))


def _check_constraint(values):
    m = float(np.min(values)) + 1.0
    if not m > 0:
        raise ConstraintViolation(f"min(w + 1) = {m:.3g} <= 0 at the quadrature nodes")
    return m


def _residual_coeffs(basis: GegenbauerBasis, c, lam, p):
    vals = basis.synthesize(c)
    _check_constraint(vals)
    lin = basis.eigenvalues - lam * (p - 1)
    return lin * c - lam * basis.analyze(remainder(vals, p))


def _jacobian(basis: GegenbauerBasis, c, lam, p):
    vals = basis.synthesize(c)
    B = basis.basis_matrix
    inner = B.T @ ((basis.weights * remainder_prime(vals, p))[:, None] * B)
    return np.diag(basis.eigenvalues - lam * (p - 1)) - lam * inner


def _dF_dlam(basis: GegenbauerBasis, c, p):
    vals = basis.synthesize(c)
    return -(p - 1) * c - basis.analyze(remainder(vals, p))


def residual(w: AxisymFn, params: ProblemParams) -> AxisymFn:
    """F(w, lam) = -Lap w - lam ((w + 1)^p - w - 1)."""
    return AxisymFn.from_coeffs(w.basis, _residual_coeffs(w.basis, w.coeffs, params.lam, params.p))


def jacobian(w: AxisymFn, params: ProblemParams) -> np.ndarray:
    return _jacobian(w.basis, w.coeffs, params.lam, params.p)


def residual_operator_form(w: AxisymFn, mu: float, p: float) -> AxisymFn:
    """f(w, mu) = w - mu T w - g(w, mu) with T = (-Lap + I)^{-1} and mu = (p-1) lam + 1."""
    basis = w.basis
    vals = basis.synthesize(w.coeffs)
    _check_constraint(vals)
    T = 1.0 / (basis.eigenvalues + 1.0)
    g = (mu - 1) / (p - 1) * T * basis.analyze(remainder(vals, p))
    return AxisymFn.from_coeffs(basis, w.coeffs - mu * T * w.coeffs - g)


def bifurcation_points(N: int, p: float, k_max: int) -> np.ndarray:
    k = np.arange(1, k_max + 1, dtype=float)
    return k * (k + N - 1) / (p - 1)


# -- Newton ----------------------------------------------------------------

def _classify(w: AxisymFn):
    if w.sup_norm() < TRIVIAL_NORM:
        return None
    try:
        return count_nodal_class(w)
    except (NonSimpleZero, EndpointZero, DomainError):
        return None


def make_point(w: AxisymFn, params: ProblemParams, iterations=0, Lambda_cap=None) -> BranchPoint:
    res = float(np.linalg.norm(_residual_coeffs(w.basis, w.coeffs, params.lam, params.p)))
    pt = BranchPoint(lam=params.lam, p=params.p, w=w, nodal=_classify(w), residual_norm=res,
                     bounds_ok=True, min_w_plus_1=float(np.min(w.node_values)) + 1.0,
                     iterations=iterations)
    report = validate_solution(pt, Lambda_cap)
    return replace(pt, bounds_ok=report.passed)


def newton_solve(w0: AxisymFn, params: ProblemParams, max_iter=MAX_ITER, tol=NEWTON_TOL,
                 step_tol=None) -> BranchPoint:
    """Damped Newton on the coefficients at fixed lambda.

    Converged when ||F|| < tol and, if ``step_tol`` is given, the last two
    Newton steps are shorter than ``step_tol`` as well (needed at singular
    points where the residual is small long before the iterate is).
    """
    basis = w0.basis
    p, lam = params.p, params.lam
    c = np.array(w0.coeffs, dtype=float)
    _check_constraint(basis.synthesize(c))
    F = _residual_coeffs(basis, c, lam, p)
    fn = np.linalg.norm(F)
    short_steps = 0
    for it in range(max_iter + 1):
        # near a singular root one short step can be an accident of the
        # slaved modes lagging; ask for two in a row
        if fn < tol and (step_tol is None or short_steps >= 2 or fn == 0.0):
            return make_point(AxisymFn.from_coeffs(basis, c), params, iterations=it)
        if it == max_iter:
            break
        J = _jacobian(basis, c, lam, p)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            lu = lu_factor(J)
        delta = lu_solve(lu, -F)
        dn = np.linalg.norm(delta)
        t = 1.0
        while True:
            trial = c + t * delta
            vals = basis.synthesize(trial)
            if np.min(vals) + 1.0 > W_FLOOR:
                F_new = _residual_coeffs(basis, trial, lam, p)
                fn_new = np.linalg.norm(F_new)
                # accept on residual decrease or on natural monotonicity (the
                # simplified correction shrinks); the latter keeps full steps
                # near singular Jacobians where ||F|| is not monotone
                if (fn_new < tol or fn_new <= (1 - 1e-4 * t) * fn
                        or np.linalg.norm(lu_solve(lu, -F_new)) <= (1 - t / 4) * dn):
                    break
            t *= 0.5
            if t < 1e-10:
                if np.min(vals) + 1.0 <= W_FLOOR:
                    raise ConstraintViolation("no admissible Newton step keeps w + 1 > 0")
                raise NoConvergence("damping failed", iterations=it, residual=fn)
        short_steps = short_steps + 1 if step_tol is not None and dn < step_tol else 0
        c, F, fn = trial, F_new, fn_new
    raise NoConvergence(f"Newton did not converge in {max_iter} iterations (||F||={fn:.2e})",
                        iterations=max_iter, residual=fn)


def multistart_probe(params: ProblemParams, basis: GegenbauerBasis, n_starts=50, seed=0,
                     amp_range=(1e-3, 0.5), modes=8, max_iter=400, step_tol=1e-11):
    """Run Newton from seeded random starts; returns a list of (amplitude, point or error)."""
    rng = np.random.default_rng(seed)
    t_fine = np.linspace(-1, 1, 1025)
    tab = basis.table(t_fine)
    out = []
    for _ in range(n_starts):
        amp = float(np.exp(rng.uniform(np.log(amp_range[0]), np.log(amp_range[1]))))
        c = np.zeros(basis.K)
        m = min(modes, basis.K)
        c[:m] = rng.standard_normal(m) / (1.0 + np.arange(m))
        c *= amp / np.max(np.abs(tab @ c))
        w0 = AxisymFn.from_coeffs(basis, c)
        try:
            out.append((amp, newton_solve(w0, params, max_iter=max_iter, step_tol=step_tol)))
        except (NoConvergence, ConstraintViolation) as exc:
            out.append((amp, exc))
    return out


def branch_switch(k: int, params: ProblemParams, s: float, basis: GegenbauerBasis | None = None,
                  try_opposite=True, tol=NEWTON_TOL, max_iter=MAX_ITER) -> BranchPoint:
    """Newton from s * phi_k at fixed lambda slightly above lambda_k.

    Tries -s as well when the first sign fails or lands on the trivial branch.
    A converged nontrivial solution outside the k-th nodal class raises
    NodalMismatch.
    """
    if s == 0:
        raise DomainError("branch switching needs a nonzero amplitude")
    if basis is None:
        basis = build_basis(params.N, 64, 128)
    mismatch = None
    failure = None
    for sign in ((1, -1) if try_opposite else (1,)):
        w0 = AxisymFn.from_coeffs(basis, sign * s * basis.mode(k).coeffs)
        try:
            pt = newton_solve(w0, params, max_iter=max_iter, tol=tol)
        except (NoConvergence, ConstraintViolation) as exc:
            pt = None
            failure = exc
        if pt is None or pt.is_trivial:
            # the fixed-lambda basin shrinks near a pitchfork; walk out along
            # the local curve w = s phi_k + O(s^2) instead
            pt = _seed_by_amplitude(k, params, sign * s, basis, tol)
            if pt is None:
                failure = NoConvergence(
                    f"s={sign * s:+g}: no nontrivial solution reached at lambda={params.lam}")
                continue
        if pt.nodal_class != k:
            mismatch = NodalMismatch(k, pt.nodal_class, pt)
            continue
        return pt
    if mismatch is not None:
        raise mismatch
    raise failure if isinstance(failure, NoConvergence) else NoConvergence(str(failure))


def _amplitude_correct(basis, k, s, c, lam, p, tol, max_iter=30):
    """Solve F(c, lam) = 0 with the k-th coefficient pinned to s; lam is free."""
    K = basis.K
    c = c.copy()
    c[k] = s
    for _ in range(max_iter):
        if np.min(basis.synthesize(c)) + 1.0 <= W_FLOOR or lam <= 0:
            return None
        F = _residual_coeffs(basis, c, lam, p)
        if np.linalg.norm(F) < tol:
            return c, lam
        A = np.zeros((K + 1, K + 1))
        A[:K, :K] = _jacobian(basis, c, lam, p)
        A[:K, K] = _dF_dlam(basis, c, p)
        A[K, k] = 1.0
        try:
            d = np.linalg.solve(A, -np.concatenate([F, [0.0]]))
        except np.linalg.LinAlgError:
            return None
        c = c + d[:K]
        lam = lam + d[K]
    return None


def _seed_by_amplitude(k, params: ProblemParams, s0, basis, tol, s_max=2.0):
    """March the pinned amplitude outward from zero until lambda(s) passes params.lam.

    The k-th coefficient can turn back (a fold in s) well before lambda does;
    when the pinned corrector stalls there, the last point is handed to
    pseudo-arclength continuation instead.
    """
    p, target = params.p, params.lam
    lam_k = k * (k + params.N - 1) / (p - 1)
    side = np.sign(target - lam_k)
    s = 1e-3 * np.sign(s0)
    c = s * basis.mode(k).coeffs
    prev = None
    while abs(s) <= s_max:
        guess_c, guess_lam = (c, lam_k) if prev is None else prev
        sol = _amplitude_correct(basis, k, s, guess_c, guess_lam, p, tol)
        if sol is None:
            if prev is None or side <= 0:
                return None
            return _continue_to(prev, k, params, basis, tol)
        c, lam = sol
        if prev is not None and side * (lam - target) >= 0 > side * (prev[1] - target):
            frac = (target - prev[1]) / (lam - prev[1])
            guess = AxisymFn.from_coeffs(basis, prev[0] + frac * (c - prev[0]))
            try:
                pt = newton_solve(guess, params, tol=tol)
            except (NoConvergence, ConstraintViolation):
                return None
            return None if pt.is_trivial else pt
        if prev is not None and side * (lam - prev[1]) < 0 and abs(s) > 0.05:
            # moving away from the target side
            return None
        prev = (c, lam)
        s *= 1.25
    return None


def _continue_to(state, k, params: ProblemParams, basis, tol):
    c, lam = state
    start = make_point(AxisymFn.from_coeffs(basis, c), params.at(lam))
    if start.nodal_class != k:
        return None
    try:
        br = continue_branch(start, params.p, params.lam, StepControl(tol=tol))
    except (StepCollapse, NodalChange, NoConvergence, ConstraintViolation):
        return None
    end = br.points[-1]
    return end if br.stop_reason == "target_reached" and not end.is_trivial else None


# -- continuation ------------------------------------------------------------

@dataclass
class StepControl:
    ds: float = 0.05
    ds_min: float = 1e-6
    ds_max: float = 0.5
    max_steps: int = 2000
    max_folds: int = 4
    corrector_iter: int = 12
    tol: float = NEWTON_TOL


def _tangent(basis, c, lam, p, prefer_increasing=True):
    J = _jacobian(basis, c, lam, p)
    Fl = _dF_dlam(basis, c, p)
    tc = -np.linalg.solve(J, Fl)
    tau = np.concatenate([tc, [1.0]])
    tau /= np.linalg.norm(tau)
    if prefer_increasing and tau[-1] < 0:
        tau = -tau
    return tau


def _correct(basis, x_pred, tau, p, ctrl: StepControl):
    x = x_pred.copy()
    K = basis.K
    for it in range(ctrl.corrector_iter):
        c, lam = x[:K], x[K]
        if np.min(basis.synthesize(c)) + 1.0 <= W_FLOOR or lam <= 0:
            return None, it
        F = _residual_coeffs(basis, c, lam, p)
        g = tau @ (x - x_pred)
        if np.linalg.norm(F) < ctrl.tol and abs(g) < 1e-12:
            return x, it
        A = np.empty((K + 1, K + 1))
        A[:K, :K] = _jacobian(basis, c, lam, p)
        A[:K, K] = _dF_dlam(basis, c, p)
        A[K] = tau
        try:
            x = x - np.linalg.solve(A, np.concatenate([F, [g]]))
        except np.linalg.LinAlgError:
            return None, it
    c, lam = x[:K], x[K]
    if lam > 0 and np.min(basis.synthesize(c)) + 1.0 > W_FLOOR:
        if np.linalg.norm(_residual_coeffs(basis, c, lam, p)) < ctrl.tol:
            return x, ctrl.corrector_iter
    return None, ctrl.corrector_iter


def continue_branch(start: BranchPoint, p: float, lambda_target: float,
                    ctrl: StepControl | None = None, Lambda_cap=None) -> Branch:
    """Pseudo-arclength continuation in (coefficients, lambda) from a converged point.

    The branch is followed through folds (up to ``ctrl.max_folds``) and the
    run ends on the first point whose lambda reaches ``lambda_target``; that
    last point is re-solved at exactly lambda_target.  Every accepted point is
    checked for nodal class; a change raises NodalChange with the partial
    branch attached.
    """
    ctrl = ctrl or StepControl()
    basis = start.w.basis
    N = basis.N
    K = basis.K
    k = start.nodal_class
    branch = Branch(origin_k=k, points=[start])
    branch._update_coverage()
    if lambda_target <= start.lam:
        branch.stop_reason = "target_not_ahead"
        return branch

    x = np.concatenate([start.w.coeffs, [start.lam]])
    tau = _tangent(basis, x[:K], x[K], p)
    ds = ctrl.ds
    for step in range(ctrl.max_steps):
        x_new = None
        while x_new is None:
            x_new, iters = _correct(basis, x + ds * tau, tau, p, ctrl)
            if x_new is None:
                ds *= 0.5
                if ds < ctrl.ds_min:
                    branch.stop_reason = "step_collapse"
                    raise StepCollapse(f"arclength step fell below {ctrl.ds_min} "
                                       f"at lambda={x[K]:.6g}", branch)
        if x_new[K] >= lambda_target:
            # land exactly on the target by a fixed-lambda solve from the chord
            frac = (lambda_target - x[K]) / (x_new[K] - x[K])
            guess = AxisymFn.from_coeffs(basis, x[:K] + frac * (x_new[:K] - x[:K]))
            pt = newton_solve(guess, ProblemParams(N, p, lambda_target), tol=ctrl.tol)
            _accept(branch, pt, k, Lambda_cap)
            branch.steps.append(ds)
            branch.stop_reason = "target_reached"
            return branch
        secant = x_new - x
        new_tau = secant / np.linalg.norm(secant)
        if np.sign(new_tau[-1]) != np.sign(tau[-1]) and tau[-1] != 0:
            branch.folds += 1
            log.info("fold detected near lambda=%.6g", x_new[K])
        pt = make_point(AxisymFn.from_coeffs(basis, x_new[:K]), ProblemParams(N, p, x_new[K]),
                        iterations=iters, Lambda_cap=Lambda_cap)
        _accept(branch, pt, k, Lambda_cap)
        branch.steps.append(ds)
        x, tau = x_new, new_tau
        if branch.folds > ctrl.max_folds:
            branch.stop_reason = "fold_budget"
            return branch
        if iters <= 3:
            ds = min(ds * 1.5, ctrl.ds_max)
        elif iters > 6:
            ds = max(ds * 0.7, ctrl.ds_min)
    branch.stop_reason = "max_steps"
    return branch


def _accept(branch: Branch, pt: BranchPoint, k, Lambda_cap):
    if pt.nodal_class != k:
        branch.stop_reason = "nodal_change"
        branch._update_coverage()
        raise NodalChange(k, pt.nodal_class, branch)
    branch.points.append(pt)
    branch._update_coverage()


# -- a priori checks -----------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    lam: float
    v_min: float
    v_max: float
    v_ratio: float
    min_w_plus_1: float
    positive: bool
    eps_floor_ok: bool
    endpoints_ok: bool
    zeros_simple: bool
    max_point_ok: bool
    within_cap: bool
    nodal_class: int | None

    @property
    def passed(self) -> bool:
        return (self.positive and self.eps_floor_ok and self.endpoints_ok
                and self.zeros_simple and self.max_point_ok)


def validate_solution(pt: BranchPoint, Lambda_cap=None, eps_floor=W_FLOOR,
                      grid_size=4096) -> ValidationReport:
    """Check a solution against the a priori bounds and the maximum-point inequality."""
    w = pt.w
    basis = w.basis
    p = pt.p
    t = np.linspace(-1, 1, grid_size)
    wv = np.concatenate([basis.table(t) @ w.coeffs, w.node_values])
    scale = pt.lam ** (1.0 / (p - 1))
    v = scale * (wv + 1.0)
    vmin, vmax = float(v.min()), float(v.max())
    trivial = float(np.max(np.abs(wv))) < TRIVIAL_NORM
    endpoints_ok = zeros_simple = True
    nodal = None
    if not trivial:
        try:
            nodal = count_nodal_class(w).k
        except EndpointZero:
            endpoints_ok = False
        except NonSimpleZero:
            zeros_simple = False
    return ValidationReport(
        lam=pt.lam, v_min=vmin, v_max=vmax,
        v_ratio=vmax / vmin if vmin > 0 else inf,
        min_w_plus_1=float(wv.min()) + 1.0,
        positive=vmin > 0,
        eps_floor_ok=float(wv.min()) + 1.0 >= eps_floor,
        endpoints_ok=endpoints_ok, zeros_simple=zeros_simple,
        max_point_ok=vmax >= scale,
        within_cap=Lambda_cap is None or pt.lam <= Lambda_cap,
        nodal_class=nodal,
    )



# -- Veron's problem -------------------------------------------------------------

@dataclass
class VeronSummary:
    n: int
    c: float
    N: int
    p: float
    lam: float
    threshold_c: float
    threshold_lam: float
    solutions: list = field(default_factory=list)
    branches: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    probe_trivial: int = 0

    @property
    def nodal_classes(self) -> list:
        return sorted({pt.nodal_class for pt in self.solutions})

    @property
    def found_nonconstant(self) -> bool:
        return bool(self.solutions)


def veron_parameters(n: int, c: float) -> ProblemParams:
    """Cylinder reduction of -Lap u = u^{(n+2)/(n-2)} + c u / |x|^2 to the sphere S^{n-1}."""
    if n < 3:
        raise DomainError(f"n must be >= 3, got {n}")
    return ProblemParams(n - 1, (n + 2) / (n - 2), (n - 2) ** 2 / 4 - c)


def veron_nonradial(n: int, c: float, K=64, M=None, seed=0, n_starts=50,
                    delta_frac=1e-2, ctrl: StepControl | None = None) -> VeronSummary:
    """Search for nonradial solutions of Veron's problem at a given c.

    Every branch with lam_k < lam is launched at lam_k + delta and continued to
    lam.  If no lam_k lies below lam the seeded multistart probe is run instead,
    and whatever nontrivial roots it finds are reported.
    """
    params = veron_parameters(n, c)
    N, p, lam = params.N, params.p, params.lam
    basis = build_basis(N, K, M)
    summary = VeronSummary(n=n, c=c, N=N, p=p, lam=lam, threshold_c=-(n - 2) / 4,
                           threshold_lam=N / (p - 1))
    lams = bifurcation_points(N, p, 64)
    below = [k for k, lk in enumerate(lams, start=1) if lk < lam]
    for k in below:
        gap = lams[k] - lams[k - 1]
        seed_lam = min(lams[k - 1] + delta_frac * gap, 0.5 * (lams[k - 1] + lam))
        try:
            pt = branch_switch(k, params.at(seed_lam), 0.1, basis)
            br = continue_branch(pt, p, lam, ctrl)
        except (NoConvergence, NodalMismatch, StepCollapse, NodalChange,
                ConstraintViolation) as exc:
            summary.failures.append((k, repr(exc)))
            continue
        summary.branches.append(br)
        if br.stop_reason == "target_reached":
            summary.solutions.append(br.points[-1])
    if not below:
        for _, res in multistart_probe(params, basis, n_starts=n_starts, seed=seed):
            if isinstance(res, BranchPoint):
                if res.is_trivial:
                    summary.probe_trivial += 1
                else:
                    summary.solutions.append(res)
            else:
                summary.failures.append((None, repr(res)))
    return summary
