import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cylas import ode
from cylas.params import (BallParams, CylinderParams, Regime, TransformRangeError,
                          check_admissible, check_ball_admissible, classify_regime,
                          inverse_transform_point, pushforward_radial, to_ball, to_cylinder,
                          transform_point)


# admissible cylinder tuples built from integers so every value is exact:
# b = B/4, b^2 - 4a = (n-2)^2 - A/8 with A >= 0, p in (1, critical]
@st.composite
def admissible_cylinder(draw):
    n = draw(st.integers(3, 8))
    m = n - 2
    b = Fraction(draw(st.integers(0, 40)), 4)
    gap = Fraction(draw(st.integers(0, 200)), 8)
    a = (b * b - m * m + gap) / 4
    crit = (n + b + 2) / (n + b - 2)
    frac = Fraction(draw(st.integers(1, 64)), 64)
    p = 1 + (crit - 1) * frac
    return CylinderParams(a, b, p, n)


@st.composite
def any_cylinder(draw):
    n = draw(st.integers(3, 8))
    a = Fraction(draw(st.integers(-80, 40)), 8)
    b = Fraction(draw(st.integers(0, 40)), 8)
    p = Fraction(draw(st.integers(9, 80)), 8)
    return CylinderParams(a, b, p, n)


# -- chart maps ---------------------------------------------------------------

def test_to_ball_yamabe_case():
    bp = to_ball(CylinderParams(Fraction(-1, 4), 0, 5, 3))
    assert (bp.c, bp.sigma, bp.p, bp.n) == (0, 0, 5, 3)


@pytest.mark.parametrize("n", [3, 4, 5, 7])
@pytest.mark.parametrize("p", [Fraction(3, 2), 2, Fraction(7, 3)])
def test_to_ball_with_b_equal_n_minus_two(n, p):
    bp = to_ball(CylinderParams(0, n - 2, p, n))
    assert bp.c == 0
    assert bp.sigma == 2 - (p - 1) * (n - 2)


def test_to_ball_zero_a_zero_b():
    # sigma follows the formula 2 - (p-1)(b+n-2)/2 = 1 here
    bp = to_ball(CylinderParams(0, 0, 2, 4))
    assert bp.c == 1
    assert bp.sigma == 1


def test_to_cylinder_inverts_yamabe_case():
    cp = to_cylinder(BallParams(0, 0, 5, 3))
    assert cp.a == Fraction(-1, 4) and cp.b == 0


@pytest.mark.parametrize("n", [3, 4, 5, 6, 10])
def test_to_cylinder_critical_exponent(n):
    cp = to_cylinder(BallParams(0, 0, Fraction(n + 2, n - 2), n))
    assert cp.b == 0
    assert cp.a == Fraction(-(n - 2) ** 2, 4)


def test_string_inputs_are_exact():
    cp = CylinderParams("-1/4", "0", "5", 3)
    assert isinstance(cp.a, Fraction)
    assert check_admissible(cp).passed


def test_float_inputs_use_float_formulas():
    bp = to_ball(CylinderParams(-0.25, 0.0, 5.0, 3))
    assert isinstance(bp.c, float)
    assert bp.c == 0.0 and bp.sigma == 0.0


@given(admissible_cylinder())
def test_round_trip_is_exact_on_rationals(cp):
    back = to_cylinder(to_ball(cp))
    assert (back.a, back.b, back.p, back.n) == (cp.a, cp.b, cp.p, cp.n)


@given(admissible_cylinder())
def test_round_trip_in_floats(cp):
    fl = CylinderParams(float(cp.a), float(cp.b), float(cp.p), cp.n)
    back = to_cylinder(to_ball(fl))
    for x, y in ((back.a, fl.a), (back.b, fl.b)):
        # conditioning of sigma -> b grows like 1/(p-1)
        assert abs(x - y) <= 1e-13 * max(1.0, abs(y)) / min(1.0, fl.p - 1)


# -- admissibility ------------------------------------------------------------

def test_admissibility_flags_discriminant_clause():
    rep = check_admissible(CylinderParams(-1, 1, 2, 4))
    assert not rep.passed
    assert rep.failed() == ["b^2 - 4a <= (n-2)^2"]


def test_admissibility_boundary_case_passes():
    rep = check_admissible(CylinderParams(Fraction(-1, 4), 0, 5, 3))
    assert rep.passed and rep.ball_passed
    assert len(rep.clauses) == 3 and len(rep.ball_clauses) == 3


def test_admissibility_rejects_p_one():
    rep = check_admissible(CylinderParams(0, 0, 1, 3))
    assert not rep.passed
    assert any("p" in name for name in rep.failed())


def test_report_lines_are_readable():
    lines = check_admissible(CylinderParams(-1, 1, 2, 4)).lines()
    assert any("FAIL" in ln and "5 <= 4" in ln for ln in lines)


def test_decimal_inputs_compare_exactly():
    # 1.1 is read as the decimal 11/10, so p = 1.1 sits exactly on the critical value
    n, b = 3, Fraction(39)
    crit = (n + b + 2) / (n + b - 2)
    assert crit == Fraction(11, 10)
    assert Fraction(1.1) > crit  # the binary double lies above the decimal
    assert check_admissible(CylinderParams(-1, 39, 1.1, 3)).clauses[2].passed


@given(admissible_cylinder())
def test_admissible_tuples_map_to_admissible_ball(cp):
    rep = check_admissible(cp)
    assert rep.passed
    assert rep.ball_passed
    assert check_ball_admissible(to_ball(cp)).passed


@given(any_cylinder())
def test_cylinder_and_ball_conditions_agree(cp):
    rep = check_admissible(cp)
    assert rep.passed == rep.ball_passed == check_ball_admissible(to_ball(cp)).passed


# -- regimes ------------------------------------------------------------------

@pytest.mark.parametrize("args, regime", [
    ((-1, 0, 3, 5), Regime.I),
    ((-1, 1, 2, 6), Regime.II),
    ((0, 2, 2, 5), Regime.III),
])
def test_regime_tags(args, regime):
    assert classify_regime(CylinderParams(*args)) is regime


def test_strict_regime_rejects_inadmissible():
    with pytest.raises(ValueError, match="inadmissible"):
        classify_regime(CylinderParams(-1, 0, 3, 5), strict=True)


def test_negative_b_has_no_regime():
    with pytest.raises(ValueError):
        classify_regime(CylinderParams(-1, -1, 2, 5))


@given(admissible_cylinder())
def test_regimes_exclusive_and_exhaustive(cp):
    tag = classify_regime(cp, strict=True)
    a, b = cp.a, cp.b
    hits = [b == 0 and a < 0, b > 0 and a < 0, a >= 0]
    assert sum(hits) == 1
    assert tag is (Regime.I, Regime.II, Regime.III)[hits.index(True)]


# -- pointwise transform ------------------------------------------------------

def test_transform_at_t_zero_is_identity():
    theta = np.array([0.0, 0.6, 0.8])
    v, x = transform_point(1.0, theta, 0.0, CylinderParams(-1, 0, 3, 5))
    assert v == 1.0
    assert np.linalg.norm(x) == pytest.approx(1.0, abs=1e-15)


def test_transform_at_log_two():
    theta = np.array([1.0, 0.0, 0.0, 0.0])
    v, x = transform_point(1.0, theta, math.log(2), CylinderParams(-1, 0, 2, 4))
    assert v == pytest.approx(2.0, rel=1e-15)
    assert np.linalg.norm(x) == pytest.approx(0.5, rel=1e-15)


def test_transform_round_trip_many_points(rng):
    cp = CylinderParams(-1, 1, 2, 5)
    worst = 0.0
    for u, t in zip(10 ** rng.uniform(-3, 3, 1000), rng.uniform(-20, 20, 1000)):
        theta = rng.standard_normal(5)
        theta /= np.linalg.norm(theta)
        v, x = transform_point(u, theta, t, cp)
        u2, th2, t2 = inverse_transform_point(v, x, cp)
        worst = max(worst, abs(u2 - u) / u)
        assert np.allclose(th2, theta, atol=1e-14)
    assert worst <= 1e-14


def test_transform_range_guard():
    cp = CylinderParams(-1, 0, 3, 5)  # k = 3/2
    with pytest.raises(TransformRangeError):
        transform_point(1.0, np.array([1.0, 0, 0, 0, 0]), 500.0, cp)


def test_transform_needs_positive_value():
    with pytest.raises(ValueError):
        transform_point(0.0, np.array([1.0, 0, 0]), 0.0, CylinderParams(-1, 0, 3, 3))


@pytest.mark.parametrize("args", [(-1, 0, 3, 4), (-1, 2, 3, 3), (Fraction(-1, 4), 0, 5, 3)])
def test_pushforward_solves_ball_equation(args):
    cp = CylinderParams(*args)
    traj = ode.integrate(ode.PhaseState(0.9 * cp.c0, 0.05), (0.0, 6.0), cp, tol=1e-12)
    r, v, vr, vrr = pushforward_radial(traj.times, traj.psi, traj.dpsi, cp)
    bp = to_ball(cp)
    c, sigma, p, n = bp.floats()
    res = vrr + (n - 1) * vr / r + c * v / r ** 2 + v ** p / r ** sigma
    scale = np.abs(vrr) + np.abs(v ** p / r ** sigma) + 1.0
    assert np.max(np.abs(res) / scale) <= 1e-6
