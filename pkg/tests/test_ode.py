import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from cylas import ode
from cylas.ode import PhaseState
from cylas.params import CylinderParams

CUBIC = CylinderParams(-1, 0, 3, 4)


# -- vector field and energy --------------------------------------------------

def test_rhs_vanishes_at_equilibrium():
    cp = CylinderParams(-2.5, 0.7, 2.4, 5)
    d1, d2 = ode.rhs(PhaseState(cp.c0, 0.0), cp)
    assert d1 == 0.0 and abs(d2) <= 1e-14


def test_rhs_cubic_unit_state():
    assert ode.rhs(PhaseState(1.0, 0.0), CUBIC) == (0.0, 0.0)


def test_rhs_damped_arithmetic():
    assert ode.rhs(PhaseState(2.0, 1.0), CylinderParams(-1, 2, 3, 3)) == (1.0, -8.0)


def test_hamiltonian_values():
    cp = CylinderParams(-1, 0, 3, 3)
    assert ode.hamiltonian(PhaseState(0.0, 0.0), cp) == 0.0
    assert ode.hamiltonian(PhaseState(1.0, 0.0), cp) == pytest.approx(-0.5, abs=1e-15)
    assert ode.hamiltonian(PhaseState(0.0, 1.0), cp) == 1.0
    assert ode.h_min(cp) == pytest.approx(-0.5, abs=1e-15)


def test_h_min_quadratic_case():
    assert ode.h_min(CylinderParams(-4, 0, 2, 3)) == pytest.approx(-64 / 3, rel=1e-14)


def test_h_min_rejects_nonnegative_a():
    with pytest.raises(ValueError):
        ode.h_min(CylinderParams(0, 1, 2, 3))


def test_h_min_attained_at_equilibrium(rng):
    for a, p in zip(-10 ** rng.uniform(-1, 1, 100), rng.uniform(1.05, 6, 100)):
        cp = CylinderParams(float(a), 0.0, float(p), 3)
        h = ode.hamiltonian(PhaseState(cp.c0, 0.0), cp)
        assert h == pytest.approx(ode.h_min(cp), rel=1e-12)


@pytest.mark.parametrize("args", [(-1, 0, 3, 3), (-2, 1, 2, 4), (1, 1, 2, 3), (0, 2, 1.5, 5)])
def test_equilibria_are_the_only_zeros(args):
    cp = CylinderParams(*args)
    eq = ode.equilibria(cp)
    top = 10 * (cp.c0 if float(cp.a) < 0 else 1.0)
    beta = np.linspace(0.0, top, 200001)
    a, _, p, _ = cp.floats()
    g = -a * beta - beta ** p
    sg = np.sign(g)
    crossings = beta[1:][sg[1:] * sg[:-1] < 0]
    found = sorted(float(x) for x in np.concatenate([beta[sg == 0], crossings]))
    assert len(found) == len(eq)
    for x, e in zip(found, eq):
        assert x == pytest.approx(e, abs=top / 1e5)
    for e in eq:
        assert ode.rhs(PhaseState(e, 0.0), cp) == (0.0, pytest.approx(0.0, abs=1e-14))


# -- integrator ---------------------------------------------------------------

def test_equilibrium_trajectory_stays_put():
    cp = CylinderParams(-2, 0.5, 3, 3)
    tr = ode.integrate(PhaseState(cp.c0, 0.0), (0.0, 100.0), cp)
    assert tr.termination == "reached_t_end"
    assert np.max(np.abs(tr.psi - cp.c0)) <= 1e-10


def test_sech_solution():
    t = np.linspace(0, 10, 101)
    tr = ode.integrate(PhaseState(math.sqrt(2), 0.0), (0.0, 10.0), CUBIC, tol=1e-12, t_eval=t)
    psi, _ = tr.at(t)
    assert np.max(np.abs(psi - math.sqrt(2) / np.cosh(t))) <= 1e-6


@pytest.mark.parametrize("args, s0", [((-1, 0, 3, 4), (1.2, 0.0)), ((-1, 2, 3, 3), (1.5, 0.0)),
                                      ((-3, 0.4, 2.5, 5), (0.3, 1.0))])
def test_integrator_against_solve_ivp(args, s0):
    cp = CylinderParams(*args)
    a, b, p, _ = cp.floats()
    t = np.linspace(0, 15, 61)
    tr = ode.integrate(PhaseState(*s0), (0.0, 15.0), cp, tol=1e-12, t_eval=t)
    ref = solve_ivp(lambda _, y: [y[1], -b * y[1] - a * y[0] - y[0] ** p], (0, 15), s0,
                    method="DOP853", t_eval=t, rtol=1e-13, atol=1e-13)
    psi, dpsi = tr.at(t)
    assert np.max(np.abs(psi - ref.y[0])) <= 1e-8
    assert np.max(np.abs(dpsi - ref.y[1])) <= 1e-8


def test_escaping_orbit_hits_zero():
    # positive energy with a < 0: the orbit leaves the positive cone
    tr = ode.integrate(PhaseState(0.5, -1.0), (0.0, 50.0), CUBIC)
    assert tr.termination == "psi_hit_zero"
    assert abs(tr.psi[-1]) <= 1e-12


def test_regime_three_solution_turns_negative():
    tr = ode.integrate(PhaseState(1.0, 0.0), (0.0, 100.0), CylinderParams(1, 2, 2, 3))
    assert tr.termination == "psi_hit_zero"


def test_events_are_zeros_of_dpsi():
    tr = ode.integrate(PhaseState(0.7, 0.0), (0.0, 40.0), CUBIC)
    assert len(tr.event_times) >= 6
    assert np.max(np.abs(tr.event_dpsi)) <= 1e-9


def test_tolerance_range_is_enforced():
    with pytest.raises(ValueError):
        ode.integrate(PhaseState(1.0, 0.0), (0.0, 1.0), CUBIC, tol=1e-14)


def test_phase_state_rejects_negative_psi():
    with pytest.raises(ValueError):
        PhaseState(-1e-3, 0.0)


def test_continuous_dependence_bound():
    cp = CylinderParams(-1, 0, 3, 4)
    t = np.linspace(0, 5, 201)
    delta = 1e-8
    t1 = ode.integrate(PhaseState(1.1, 0.0), (0.0, 5.0), cp, tol=1e-13, t_eval=t)
    t2 = ode.integrate(PhaseState(1.1 + delta, 0.0), (0.0, 5.0), cp, tol=1e-13, t_eval=t)
    p1, d1 = t1.at(t)
    p2, d2 = t2.at(t)
    # A(t) = p ψ^{p-1} along the reference orbit
    c0_bound = float(np.max(np.abs(1.0 - 3 * p1 ** 2))) + 1.0
    gap = np.abs(p1 - p2) + np.abs(d1 - d2)
    assert np.all(gap <= delta * np.exp(c0_bound * t) * 1.01 + 1e-12)


# -- energy structure ---------------------------------------------------------

def test_energy_conserved_without_damping():
    tr = ode.integrate(PhaseState(0.6, 0.2), (0.0, 100.0), CUBIC, tol=1e-10)
    _, h = ode.energy_along(tr)
    assert np.max(np.abs(h - h[0])) <= 1e-8


def test_energy_dissipation_identity():
    cp = CylinderParams(-1, 2, 3, 3)
    tr = ode.integrate(PhaseState(1.5, 0.0), (0.0, 30.0), cp, tol=1e-11)
    _, h = ode.energy_along(tr)
    assert np.all(np.diff(h) <= 100 * tr.tol)
    drop = h[-1] - h[0]
    assert drop == pytest.approx(ode.dissipation_integral(tr), rel=1e-6)
    # cross-check with plain trapezoid quadrature on a dense sample
    t = np.linspace(0, 30, 30001)
    dense = ode.integrate(PhaseState(1.5, 0.0), (0.0, 30.0), cp, tol=1e-11, t_eval=t)
    _, dp = dense.at(t)
    assert drop == pytest.approx(-4 * np.trapezoid(dp ** 2, t), rel=1e-6)


def test_equilibrium_energy_is_h_min():
    tr = ode.integrate(PhaseState(1.0, 0.0), (0.0, 10.0), CUBIC)
    _, h = ode.energy_along(tr)
    assert np.allclose(h, -0.5, atol=1e-14)


@settings(max_examples=15)
@given(h_frac=st.floats(0.05, 0.95), a=st.floats(-3, -0.3), p=st.floats(1.5, 5))
def test_periodic_orbits_stay_on_level(h_frac, a, p):
    cp = CylinderParams(a, 0.0, p, 3)
    h0 = h_frac * ode.h_min(cp)
    lo, hi = ode.turning_points(h0, cp)
    tr = ode.integrate(PhaseState(lo, 0.0), (0.0, 40.0), cp, tol=1e-10)
    _, h = ode.energy_along(tr)
    assert np.max(np.abs(h - h0)) <= 100 * tr.tol * max(1.0, abs(h0))
    assert tr.psi.min() >= lo - 1e-8 and tr.psi.max() <= hi + 1e-8


# -- level sets, turning points, periods --------------------------------------

def test_level_classes():
    assert ode.classify_level(-0.5, CUBIC) == ode.OrbitClass.EQUILIBRIUM
    assert ode.classify_level(0.0, CUBIC) == ode.OrbitClass.HOMOCLINIC
    assert ode.classify_level(-0.25, CUBIC) == ode.OrbitClass.PERIODIC
    assert ode.classify_level(0.3, CUBIC) == ode.OrbitClass.LEAVES_POSITIVE_CONE
    with pytest.raises(ValueError):
        ode.classify_level(-0.6, CUBIC)


def test_level_classes_need_regime_one():
    with pytest.raises(ValueError):
        ode.classify_level(-0.1, CylinderParams(-1, 1, 3, 3))


def test_turning_points_quartic():
    lo, hi = ode.turning_points(-0.25, CUBIC)
    assert lo ** 2 == pytest.approx(1 - math.sqrt(0.5), abs=1e-12)
    assert hi ** 2 == pytest.approx(1 + math.sqrt(0.5), abs=1e-12)
    for beta in (lo, hi):
        assert ode.hamiltonian(PhaseState(beta, 0.0), CUBIC) == pytest.approx(-0.25, abs=1e-12)


def test_turning_points_limits():
    lo, hi = ode.turning_points(-0.5 + 1e-10, CUBIC)
    assert lo == pytest.approx(1.0, abs=1e-4) and hi == pytest.approx(1.0, abs=1e-4)
    lo, hi = ode.turning_points(-1e-10, CUBIC)
    assert lo < 1e-4 and hi == pytest.approx(math.sqrt(2), abs=1e-9)


def test_turning_points_reject_out_of_range():
    for h0 in (-0.6, 0.0, 0.1):
        with pytest.raises(ValueError):
            ode.turning_points(h0, CUBIC)


def test_small_amplitude_period():
    orb = ode.orbit_period(-0.5 + 1e-8, CUBIC)
    assert orb.period == pytest.approx(2 * math.pi / math.sqrt(2), rel=1e-3)
    assert orb.period == pytest.approx(4.442883, rel=1e-2)


def test_period_diverges_near_homoclinic():
    assert ode.orbit_period(-1e-3, CUBIC).period > ode.orbit_period(-1e-1, CUBIC).period
    with pytest.raises(ode.PeriodDivergence):
        ode.orbit_period(-1e-300, CUBIC, max_nodes=1 << 12)


def test_period_against_return_time():
    orb = ode.orbit_period(-0.4, CUBIC)
    tr = ode.integrate(PhaseState(orb.beta_minus, 0.0), (0.0, 3.5 * orb.period), CUBIC, tol=1e-12)
    # minima are every other ψ' = 0 event
    mins = tr.event_times[tr.event_psi < 1.0]
    assert np.diff(mins).mean() == pytest.approx(orb.period, rel=1e-6)


def test_period_against_scipy_quad():
    from scipy.integrate import quad
    h0 = -0.3
    lo, hi = ode.turning_points(h0, CUBIC)
    ref, _ = quad(lambda b: 2 / math.sqrt(h0 + b * b - b ** 4 / 2), lo, hi, limit=200,
                  epsabs=1e-13, epsrel=1e-12)
    assert ode.orbit_period(h0, CUBIC).period == pytest.approx(ref, rel=1e-8)


# -- homoclinic profile -------------------------------------------------------

def test_homoclinic_is_sech():
    t = np.linspace(-10, 10, 401)
    psi = ode.homoclinic_profile(t, 1.0, CUBIC)
    assert psi[200] == pytest.approx(math.sqrt(2), abs=1e-15)
    assert np.max(np.abs(psi - math.sqrt(2) / np.cosh(t))) <= 1e-12


def test_homoclinic_tail_constants():
    cp = CylinderParams(-2, 0, 2.5, 3)
    lam = 0.7
    s = math.sqrt(2)
    d = math.sqrt(-2 * -2 * 3.5)
    t = np.array([20.0, 25.0])
    forward = ode.homoclinic_profile(t, lam, cp) * np.exp(s * t)
    backward = ode.homoclinic_profile(-t, lam, cp) * np.exp(s * t)
    assert forward == pytest.approx([(d / lam) ** (2 / 1.5)] * 2, rel=1e-9)
    assert backward == pytest.approx([(d * lam) ** (2 / 1.5)] * 2, rel=1e-9)


@settings(max_examples=50)
@given(a=st.floats(-4, -0.1), p=st.floats(1.1, 5), lam=st.floats(0.1, 10))
def test_homoclinic_residual_and_energy(a, p, lam):
    cp = CylinderParams(a, 0.0, p, 3)
    t = np.linspace(-10, 10, 201)
    psi, dpsi, ddpsi = ode.homoclinic_derivatives(t, lam, cp)
    scale = np.maximum.reduce([np.ones_like(psi), np.abs(ddpsi), np.abs(a * psi), psi ** p])
    assert np.max(np.abs(ddpsi + a * psi + psi ** p) / scale) <= 1e-9
    h = ode.hamiltonian((psi, dpsi), cp)
    assert np.max(np.abs(h) / np.maximum(1.0, dpsi ** 2)) <= 1e-9


def test_homoclinic_derivative_by_differences():
    t = np.linspace(-3, 3, 61)
    h = 1e-5
    _, dpsi, _ = ode.homoclinic_derivatives(t, 1.3, CUBIC)
    fd = (ode.homoclinic_profile(t + h, 1.3, CUBIC) - ode.homoclinic_profile(t - h, 1.3, CUBIC)) / (2 * h)
    assert np.max(np.abs(fd - dpsi)) <= 1e-8


# -- linearization ------------------------------------------------------------

def test_char_roots_examples():
    r = ode.char_roots(CylinderParams(-1, 0, 3, 3))
    assert (r.lambda1, r.lambda2) == (-1, 1)
    r = ode.char_roots(CylinderParams(-1, 1, 3, 3))
    assert r.lambda1.real == pytest.approx((-1 - math.sqrt(5)) / 2, abs=1e-15)
    assert r.lambda2.real == pytest.approx((-1 + math.sqrt(5)) / 2, abs=1e-15)
    r = ode.char_roots(CylinderParams(1, 2, 3, 3))
    assert r.double_root and r.lambda1 == r.lambda2 == -1


def test_roots_at_c0_log_resonance():
    r = ode.linearized_roots_at_c0(CylinderParams(-1, 3, 3, 3))
    assert (r.lambda1, r.lambda2) == (-2, -1)
    assert r.alpha0 == 1.0 and r.log_resonance


def test_roots_at_c0_double_root():
    r = ode.linearized_roots_at_c0(CylinderParams(-1, 2 * math.sqrt(2), 3, 3))
    assert r.double_root
    assert r.lambda1.real == pytest.approx(-math.sqrt(2), abs=1e-7)


def test_roots_at_c0_complex_pair():
    r = ode.linearized_roots_at_c0(CylinderParams(-1, 0.5, 2, 3))
    assert r.lambda1.imag != 0
    assert r.mu1 == r.mu2 == pytest.approx(-0.25)
    assert r.alpha0 == pytest.approx(0.25)


def test_roots_at_c0_need_negative_a():
    with pytest.raises(ValueError):
        ode.linearized_roots_at_c0(CylinderParams(0.5, 1, 2, 3))


@given(b=st.floats(0, 10), q=st.floats(-10, 10))
def test_roots_solve_quadratic(b, q):
    r = ode._roots(b, q)
    for lam in (r.lambda1, r.lambda2):
        assert abs(lam * lam + b * lam + q) <= 1e-9 * max(1.0, b * b, abs(q))
    assert r.mu1 <= r.mu2


# -- variation of parameters --------------------------------------------------

def _direct(b, q, forcing, ic, t):
    sol = solve_ivp(lambda s, y: [y[1], forcing(s) - b * y[1] - q * y[0]], (t[0], t[-1]), ic,
                    method="DOP853", t_eval=t, rtol=1e-13, atol=1e-14)
    return sol.y[0]


def test_vop_homogeneous_eigendirection():
    roots = ode._roots(5.0, 6.0)  # -3, -2
    t = np.linspace(0, 5, 11)
    xi, dxi = ode.variation_of_parameters(lambda s: 0 * s, roots, (1.0, -3.0), t)
    assert np.allclose(xi, np.exp(-3 * t), atol=1e-14)


def test_vop_undetermined_coefficients():
    roots = ode._roots(5.0, 6.0)
    t = np.array([0.0, 1.0, 2.0, 5.0])
    xi, _ = ode.variation_of_parameters(lambda s: np.exp(-s), roots, (0.0, 0.0), t, substeps=20)
    # ξ = e^{-t}/(1 - 5 + 6) + C2 e^{-2t} + C3 e^{-3t} with ξ(0) = ξ'(0) = 0
    part = np.exp(-t) / 2
    c2, c3 = np.linalg.solve([[1, 1], [-2, -3]], [-0.5, 0.5])
    exact = part + c2 * np.exp(-2 * t) + c3 * np.exp(-3 * t)
    assert np.max(np.abs(xi - exact)) <= 1e-10


def test_vop_double_root_against_direct():
    b = 2 * math.sqrt(2)
    roots = ode.linearized_roots_at_c0(CylinderParams(-1, b, 3, 3))
    t = np.linspace(0, 10, 41)
    xi, _ = ode.variation_of_parameters(lambda s: np.exp(-s), roots, (0.3, -0.1), t, substeps=10)
    assert np.max(np.abs(xi - _direct(b, 2.0, lambda s: math.exp(-s), (0.3, -0.1), t))) <= 1e-7


def test_vop_complex_roots_against_direct():
    roots = ode.linearized_roots_at_c0(CylinderParams(-1, 0.5, 2, 3))
    t = np.linspace(0, 12, 49)
    f = lambda s: np.cos(2 * s) * np.exp(-0.1 * s)
    xi, _ = ode.variation_of_parameters(f, roots, (1.0, 0.0), t, substeps=10)
    assert np.max(np.abs(xi - _direct(0.5, 1.0, f, (1.0, 0.0), t))) <= 1e-7


# -- predicted rates ----------------------------------------------------------

def test_predicted_rates():
    assert ode.predicted_decay("I-decay", CylinderParams(-1, 0, 3, 3)).rate == 1.0
    assert ode.predicted_decay("II-decay", CylinderParams(-1, 1, 3, 3)).rate == pytest.approx(
        (1 + math.sqrt(5)) / 2, abs=1e-15)
    pred = ode.predicted_decay("II-converge", CylinderParams(-1, 3, 3, 3))
    assert pred.rate == 1.0 and pred.power == 1


def test_predicted_rate_regime_three_bracket():
    pred = ode.predicted_decay("III", CylinderParams(1, 3, 2, 3))
    lo, hi = pred.bracket
    assert pred.barrier == 2.0
    assert lo == pytest.approx((3 - math.sqrt(5)) / 2) and hi == pytest.approx((3 + math.sqrt(5)) / 2)


def test_predicted_rate_errors():
    with pytest.raises(ValueError):
        ode.predicted_decay("IV", CUBIC)
    with pytest.raises(ValueError):
        ode.predicted_decay("II-decay", CUBIC)


def test_decaying_start_lands_near_origin():
    cp = CylinderParams(-1, 1, 3, 3)
    s0, duration = ode.decaying_start(cp, amplitude=1e-6)
    tr = ode.integrate(s0, (0.0, duration), cp, tol=1e-12)
    assert tr.psi[-1] == pytest.approx(1e-6, rel=1e-3)
