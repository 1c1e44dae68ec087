from math import pi

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spherebif import shooting as sh
from spherebif import verify as ver
from spherebif.errors import DomainError

bubble3 = lambda r: 3**0.25 * (1 + np.asarray(r) ** 2) ** -0.5


def _unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


vectors = st.lists(st.floats(-3, 3), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 0.1)


@given(vectors, vectors, st.floats(0.1, 2.0))
def test_kelvin_fixes_the_reflection_sphere(y, d, lam):
    x = np.array(y) + lam * _unit(d)
    assert ver.kelvin_rn(bubble3, y, lam, x) == pytest.approx(bubble3(np.linalg.norm(x)), rel=1e-12)


@given(vectors, st.floats(0.1, 3.0), st.integers(3, 6))
def test_fundamental_solution_maps_to_a_constant(x, lam, n):
    x = np.resize(np.array(x), n)
    u = lambda r: np.asarray(r) ** (2 - n)
    got = ver.kelvin_rn(u, np.zeros(n), lam, x)
    assert got == pytest.approx(lam ** (2 - n), rel=1e-12)


@given(vectors, st.floats(0.1, 3.0), st.integers(3, 6))
def test_half_power_is_invariant(x, lam, n):
    # |x|^{-(n-2)/2} is the profile fixed by every reflection centred at the origin
    x = np.resize(np.array(x), n)
    u = lambda r: np.asarray(r) ** (-(n - 2) / 2)
    got = ver.kelvin_rn(u, np.zeros(n), lam, x)
    assert got == pytest.approx(np.linalg.norm(x) ** (-(n - 2) / 2), rel=1e-12)


def test_kelvin_rn_domain_errors():
    u = lambda r: 1.0 / np.asarray(r)
    with pytest.raises(DomainError):
        ver.kelvin_rn(u, [1.0, 0, 0], 0.5, [1.0, 0, 0])
    with pytest.raises(DomainError):
        # y + lam^2 (x - y)/|x - y|^2 = 0 for y = (1,0,0), lam = 1, x = (0,0,0)
        ver.kelvin_rn(u, [1.0, 0, 0], 1.0, [0.0, 0, 0])


def test_bubble_example_point():
    val = ver.kelvin_rn(bubble3, [2.0, 0, 0], 1.0, [5.0, 0, 0])
    assert val < bubble3(5.0)


def test_bubble_passes_and_is_deterministic():
    r1 = ver.moving_sphere_check_rn(bubble3, 3, budget=2000, seed=5)
    r2 = ver.moving_sphere_check_rn(bubble3, 3, budget=2000, seed=5)
    assert r1.passed and r1.max_deficit == r2.max_deficit
    assert r1.samples_tested == 2000


def test_increasing_profile_fails():
    rep = ver.moving_sphere_check_rn(lambda r: 1 + np.asarray(r), 3, budget=2000, seed=1)
    assert not rep.passed and rep.violations
    assert len(rep.violations) <= ver.MAX_VIOLATIONS_KEPT
    # violations are sorted by decreasing deficit
    d = [v[-1] for v in rep.violations]
    assert d == sorted(d, reverse=True)


def test_condition_A_example():
    lhs, rhs, fact = ver.condition_A_terms([1, 0, 0], [0, 2, 0], 0.5)
    assert (lhs, rhs, fact) == (0.3125, 16.25, -15.9375)
    assert fact == lhs - rhs


def test_condition_A_sweep():
    rep = ver.condition_A_check(2.0, 3, budget=20_000, seed=2)
    assert rep.passed and rep.extra["strict"] and rep.extra["identity_ok"]
    with pytest.raises(DomainError):
        ver.condition_A_check(0.0)


def test_sphere_constant_passes():
    rep = ver.moving_sphere_check_sphere(lambda t: 1.0 + 0 * np.asarray(t), 3, seed=0)
    # |J| < 1 on Sigma for lam < pi/2 and |J| = 1 at the mirror radius
    assert rep.passed and rep.max_deficit <= 0


@pytest.mark.parametrize("n", [3, 4, 5])
def test_sphere_beta0_solution_passes(n):
    rep = ver.moving_sphere_check_sphere(sh.singular_sphere_profile(n), n, "south", seed=n)
    assert rep.passed


def test_sphere_bump_fails():
    # a bump inside the ball around the pole is carried into Sigma by the reflection
    bump = lambda t: 1.0 + 5.0 * np.exp(-((np.asarray(t) - 0.9) ** 2) / 0.005)
    rep = ver.moving_sphere_check_sphere(bump, 3, "north", seed=0)
    assert not rep.passed


def test_sphere_check_needs_n3():
    with pytest.raises(DomainError):
        ver.moving_sphere_check_sphere(lambda t: 1.0 + 0 * t, 2)


def test_matukuma_conditions():
    low = ver.g_condition_check("matukuma", 3, p=2.0)
    assert all(low.holds[g] for g in ("g1", "g2", "g3", "g4"))
    assert low.strict["g2"]
    eq = ver.g_condition_check("matukuma", 3, p=3.0)
    assert not eq.holds["g2"] and eq.holds["g5"] and not eq.strict["g5"]
    assert eq.holds["g3"] and eq.holds["g6"]
    assert eq.boundary["g2_iff_p_below"] == 3.0


def test_power_linear_conditions():
    ok = ver.g_condition_check("power_linear", 4, beta=1.0)
    assert ok.holds["g3"] and ok.strict["g3"]
    bad = ver.g_condition_check("power_linear", 4, beta=3.0)
    assert not bad.holds["g3"] and not bad.holds["g4"]
    assert bad.boundary["g3_iff_beta_at_most"] == 2.0


def test_unknown_condition_or_family():
    with pytest.raises(DomainError):
        ver.g_condition_check("matukuma", 3, p=2.0, conditions=("g9",))
    with pytest.raises(DomainError):
        ver.g_condition_check("exponential", 3)
