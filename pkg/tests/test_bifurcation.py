import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spherebif import bifurcation as bif
from spherebif.errors import ConstraintViolation, DomainError
from spherebif.spectral import AxisymFn, build_basis


@pytest.fixture(scope="module")
def basis():
    return build_basis(2, 48, 96)


@given(st.floats(min_value=-0.9, max_value=2.0), st.floats(min_value=1.1, max_value=6.0))
def test_remainder_matches_high_precision(w, p):
    # the remainder is O(w^2) while its terms are O(1): carry enough digits to cancel exactly
    digits = 40 + (int(-2 * np.log10(abs(w))) if w else 0)
    with mp.workdps(digits):
        ref = float((1 + mp.mpf(w)) ** mp.mpf(p) - 1 - mp.mpf(p) * mp.mpf(w))
    got = float(bif.remainder(np.array([w]), p)[0])
    assert got == pytest.approx(ref, rel=1e-12, abs=0.0)


@given(st.floats(min_value=-0.9, max_value=2.0), st.floats(min_value=1.1, max_value=6.0))
def test_remainder_prime_is_derivative(w, p):
    eps = 1e-6
    fd = (bif.remainder(np.array([w + eps]), p) - bif.remainder(np.array([w - eps]), p)) / (2 * eps)
    assert bif.remainder_prime(np.array([w]), p)[0] == pytest.approx(fd[0], rel=1e-6, abs=1e-9)


def test_params_validation():
    with pytest.raises(DomainError):
        bif.ProblemParams(1, 2.0, 1.0)
    with pytest.raises(DomainError):
        bif.ProblemParams(3, 5.0, 1.0)  # p must be below (N+2)/(N-2) = 5
    with pytest.raises(DomainError):
        bif.ProblemParams(2, 3.0, 0.0)
    bif.ProblemParams(2, 50.0, 1.0)  # no upper bound on S^2


def test_bifurcation_points_formula():
    np.testing.assert_array_equal(bif.bifurcation_points(3, 2.0, 4), [3.0, 8.0, 15.0, 24.0])
    # lambda_1 = N / (p - 1) in every dimension
    for N in (2, 3, 4, 5):
        assert bif.bifurcation_points(N, 1.5, 1)[0] == pytest.approx(2 * N)


def test_trivial_solution_has_zero_residual(basis):
    params = bif.ProblemParams(2, 3.0, 2.3)
    assert np.linalg.norm(bif.residual(basis.constant(0.0), params).coeffs) == 0.0


def test_jacobian_by_finite_differences(basis):
    rng = np.random.default_rng(3)
    c = np.zeros(basis.K)
    c[:5] = 0.1 * rng.standard_normal(5)
    w = AxisymFn.from_coeffs(basis, c)
    params = bif.ProblemParams(2, 2.5, 1.3)
    J = bif.jacobian(w, params)
    h = np.zeros(basis.K)
    h[:5] = rng.standard_normal(5)
    eps = 1e-6
    Fp = bif.residual(AxisymFn.from_coeffs(basis, c + eps * h), params).coeffs
    Fm = bif.residual(AxisymFn.from_coeffs(basis, c - eps * h), params).coeffs
    np.testing.assert_allclose((Fp - Fm) / (2 * eps), J @ h, atol=1e-8)


def test_constraint_violation(basis):
    w = AxisymFn.from_function(basis, lambda t: -1.5 + 0 * t)
    with pytest.raises(ConstraintViolation):
        bif.residual(w, bif.ProblemParams(2, 3.0, 1.0))


def test_newton_recovers_known_solution(basis):
    params = bif.ProblemParams(2, 3.0, 2.0)
    sol = bif.branch_switch(1, params, 0.3, basis)
    noisy = AxisymFn.from_coeffs(basis, sol.w.coeffs + 1e-3 * basis.mode(2).coeffs)
    again = bif.newton_solve(noisy, params)
    assert again.residual_norm < bif.NEWTON_TOL
    np.testing.assert_allclose(again.w.coeffs, sol.w.coeffs, atol=1e-9)


def test_operator_form_has_the_same_zeros(basis):
    params = bif.ProblemParams(2, 3.0, 1.5)
    sol = bif.branch_switch(1, params, 0.3, basis)
    mu = (params.p - 1) * params.lam + 1
    assert np.linalg.norm(bif.residual_operator_form(sol.w, mu, params.p).coeffs) < 1e-11


def test_odd_modes_give_reflected_pairs(basis):
    params = bif.ProblemParams(2, 3.0, 1.5)
    plus = bif.branch_switch(1, params, 0.3, basis, try_opposite=False)
    minus = bif.branch_switch(1, params, -0.3, basis, try_opposite=False)
    t = np.linspace(-1, 1, 65)
    np.testing.assert_allclose(plus.w(t), minus.w(-t), atol=1e-9)


def test_pitchfork_amplitude_scales_like_sqrt(basis):
    # for odd k the quadratic coefficient of the reduced equation vanishes, so |w| ~ sqrt(lam - lam_k)
    params = bif.ProblemParams(2, 3.0, 1.0)
    amps = []
    for d in (1e-2, 4e-2):
        pt = bif.branch_switch(1, params.at(1.0 + d), 0.05, basis)
        amps.append(pt.w.sup_norm())
    assert amps[1] / amps[0] == pytest.approx(2.0, rel=0.05)


def test_continuation_keeps_nodal_class(basis):
    params = bif.ProblemParams(2, 3.0, 3.05)
    start = bif.branch_switch(2, params, 0.1, basis)
    br = bif.continue_branch(start, 3.0, 4.0)
    assert br.stop_reason == "target_reached"
    assert br.points[-1].lam == 4.0
    assert all(pt.nodal_class == 2 for pt in br.points)
    assert br.lambda_coverage == (pytest.approx(3.05), 4.0)


def test_validation_report(basis):
    params = bif.ProblemParams(2, 3.0, 2.0)
    pt = bif.branch_switch(1, params, 0.3, basis)
    rep = bif.validate_solution(pt)
    assert rep.passed and rep.positive and rep.nodal_class == 1
    # maximum-point inequality: v_max >= lam^{1/(p-1)}
    assert rep.v_max >= params.lam ** 0.5


@given(st.integers(min_value=3, max_value=8), st.floats(min_value=-10, max_value=0.2))
def test_veron_mapping(n, c):
    P = bif.veron_parameters(n, c)
    assert P.N == n - 1
    assert P.p == pytest.approx((n + 2) / (n - 2))
    assert P.lam == pytest.approx((n - 2) ** 2 / 4 - c)
    # the mapped threshold lam = N/(p-1) corresponds to c = -(n-2)/4
    thr = bif.veron_parameters(n, -(n - 2) / 4)
    assert thr.lam == pytest.approx(thr.N / (thr.p - 1), rel=1e-15)


def test_veron_rejects_low_dimension():
    with pytest.raises(DomainError):
        bif.veron_parameters(2, -1.0)


def test_branch_switch_far_from_bifurcation(basis):
    # the phi_1 coefficient folds near lam = 1.4 on this branch; seeding must get past it
    pt = bif.branch_switch(1, bif.ProblemParams(2, 3.0, 2.9), 0.3, basis, try_opposite=False)
    assert pt.nodal_class == 1 and pt.residual_norm < bif.NEWTON_TOL and pt.lam == 2.9
