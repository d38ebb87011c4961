"""Jitted Dormand-Prince 5(4) core for  ψ'' + b ψ' + a ψ + ψ^p = 0.

The state is two scalars, so everything is written with plain floats; numba
keeps the inner loop free of array allocation.
"""
import numpy as np
from numba import njit

REACHED_T_END = 0
PSI_HIT_ZERO = 1
BLOW_UP = 2
STEP_UNDERFLOW = 3
MAX_STEPS = 4

BLOW_UP_LIMIT = 1e12
H_MIN = 1e-14
EVENT_TOL = 1e-12
# h * spectral radius bound; keeps steps inside the stability region when the
# error estimate is blind, as for orbits resting on an equilibrium
STABILITY = 2.0

# Dormand-Prince tableau
C2, C3, C4, C5 = 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9
A21 = 1.0 / 5
A31, A32 = 3.0 / 40, 9.0 / 40
A41, A42, A43 = 44.0 / 45, -56.0 / 15, 32.0 / 9
A51, A52, A53, A54 = 19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729
A61, A62, A63, A64, A65 = 9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656
B1, B3, B4, B5, B6 = 35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84
E1, E3, E4, E5, E6, E7 = (71.0 / 57600, -71.0 / 16695, 71.0 / 1920,
                          -17253.0 / 339200, 22.0 / 525, -1.0 / 40)


@njit(cache=True)
def _power(x, p):
    # odd extension keeps trial stages finite once ψ dips below zero
    if x > 0.0:
        return x ** p
    if x < 0.0:
        return -((-x) ** p)
    return 0.0


@njit(cache=True)
def _f(y0, y1, a, b, p):
    return y1, -b * y1 - a * y0 - _power(y0, p)


@njit(cache=True)
def _radius(y0, a, b, p):
    """Upper bound on |λ| for the local Jacobian λ² + bλ + a + p|ψ|^{p-1} = 0."""
    q = a + p * abs(y0) ** (p - 1.0)
    return 0.5 * abs(b) + np.sqrt(abs(0.25 * b * b - q))


@njit(cache=True)
def _step(y0, y1, k10, k11, h, a, b, p):
    """One DP step from (y0, y1) with first stage (k10, k11); returns y_new, err, k7."""
    k20, k21 = _f(y0 + h * A21 * k10, y1 + h * A21 * k11, a, b, p)
    k30, k31 = _f(y0 + h * (A31 * k10 + A32 * k20),
                  y1 + h * (A31 * k11 + A32 * k21), a, b, p)
    k40, k41 = _f(y0 + h * (A41 * k10 + A42 * k20 + A43 * k30),
                  y1 + h * (A41 * k11 + A42 * k21 + A43 * k31), a, b, p)
    k50, k51 = _f(y0 + h * (A51 * k10 + A52 * k20 + A53 * k30 + A54 * k40),
                  y1 + h * (A51 * k11 + A52 * k21 + A53 * k31 + A54 * k41), a, b, p)
    k60, k61 = _f(y0 + h * (A61 * k10 + A62 * k20 + A63 * k30 + A64 * k40 + A65 * k50),
                  y1 + h * (A61 * k11 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51),
                  a, b, p)
    n0 = y0 + h * (B1 * k10 + B3 * k30 + B4 * k40 + B5 * k50 + B6 * k60)
    n1 = y1 + h * (B1 * k11 + B3 * k31 + B4 * k41 + B5 * k51 + B6 * k61)
    k70, k71 = _f(n0, n1, a, b, p)
    e0 = h * (E1 * k10 + E3 * k30 + E4 * k40 + E5 * k50 + E6 * k60 + E7 * k70)
    e1 = h * (E1 * k11 + E3 * k31 + E4 * k41 + E5 * k51 + E6 * k61 + E7 * k71)
    return n0, n1, e0, e1, k70, k71


@njit(cache=True)
def _locate(y0, y1, k10, k11, h, a, b, p, comp, hi_frac):
    """Bisect the sub-step length in (0, hi_frac*h] for a sign change of component comp."""
    lo = 0.0
    hi = hi_frac
    g_lo = y0 if comp == 0 else y1
    m0, m1 = y0, y1
    while (hi - lo) * abs(h) > EVENT_TOL:
        mid = 0.5 * (lo + hi)
        m0, m1, _, _, _, _ = _step(y0, y1, k10, k11, mid * h, a, b, p)
        g = m0 if comp == 0 else m1
        if g == 0.0:
            lo = mid
            hi = mid
            break
        if (g > 0.0) == (g_lo > 0.0):
            lo = mid
        else:
            hi = mid
    mid = hi
    m0, m1, _, _, _, _ = _step(y0, y1, k10, k11, mid * h, a, b, p)
    return mid, m0, m1


@njit(cache=True)
def _grow(arr, n):
    out = np.empty(2 * arr.shape[0], dtype=arr.dtype)
    out[:n] = arr[:n]
    return out


@njit(cache=True)
def integrate_core(y0, y1, t0, t1, tol, a, b, p, h_init, max_step, t_eval, max_steps):
    """Adaptive integration on [t0, t1] (t1 > t0).

    Error control is per unit step: the embedded estimate must satisfy
    |err_i| <= tol * (1 + |y_i|) * h.  Steps are clipped so every entry of
    the sorted array ``t_eval`` is landed on exactly.
    """
    cap = 1024
    ts = np.empty(cap)
    ps = np.empty(cap)
    ds = np.empty(cap)
    ecap = 64
    ev_t = np.empty(ecap)
    ev_p = np.empty(ecap)
    ev_d = np.empty(ecap)
    n = 0
    ne = 0
    ts[0] = t0
    ps[0] = y0
    ds[0] = y1
    n = 1
    t = t0
    term = REACHED_T_END
    k10, k11 = _f(y0, y1, a, b, p)
    h = h_init
    if h <= 0.0:
        h = min(1e-2, (t1 - t0) * 1e-3)
    err_prev = 1e-4
    ie = 0
    while ie < t_eval.shape[0] and t_eval[ie] <= t0:
        ie += 1
    steps = 0
    while t < t1:
        if steps >= max_steps:
            term = MAX_STEPS
            break
        if h > max_step:
            h = max_step
        rho = _radius(y0, a, b, p)
        if h * rho > STABILITY:
            h = STABILITY / rho
        target = t1
        if ie < t_eval.shape[0] and t_eval[ie] < t1:
            target = t_eval[ie]
        hs = h
        landing = False
        if t + hs >= target:
            hs = target - t
            landing = True
        if hs <= 0.0:
            # already sitting on the output time
            ie += 1
            continue
        n0, n1, e0, e1, k70, k71 = _step(y0, y1, k10, k11, hs, a, b, p)
        sc0 = tol * (1.0 + max(abs(y0), abs(n0))) * hs
        sc1 = tol * (1.0 + max(abs(y1), abs(n1))) * hs
        err = max(abs(e0) / sc0, abs(e1) / sc1)
        if not (err == err):
            err = 1e10
        steps += 1
        if err > 1.0:
            h = hs * max(0.2, 0.9 * err ** (-1.0 / 4.0))
            if h < H_MIN:
                term = STEP_UNDERFLOW
                break
            continue
        # terminal event psi = 0
        zf = -1.0
        z1 = 0.0
        if n0 <= 0.0 < y0:
            zf, _, z1 = _locate(y0, y1, k10, k11, hs, a, b, p, 0, 1.0)
        # recorded event psi' = 0, searched only before the terminal one
        d_end = n1 if zf < 0.0 else z1
        d_hi = 1.0 if zf < 0.0 else zf
        if y1 != 0.0 and (d_end == 0.0 or (d_end > 0.0) != (y1 > 0.0)):
            fr, m0, m1 = _locate(y0, y1, k10, k11, hs, a, b, p, 1, d_hi)
            if ne >= ev_t.shape[0]:
                ev_t = _grow(ev_t, ne)
                ev_p = _grow(ev_p, ne)
                ev_d = _grow(ev_d, ne)
            ev_t[ne] = t + fr * hs
            ev_p[ne] = m0
            ev_d[ne] = m1
            ne += 1
        if n >= ts.shape[0]:
            ts = _grow(ts, n)
            ps = _grow(ps, n)
            ds = _grow(ds, n)
        if zf >= 0.0:
            ts[n] = t + zf * hs
            ps[n] = 0.0
            ds[n] = z1
            n += 1
            term = PSI_HIT_ZERO
            break
        if landing:
            t = target
            if ie < t_eval.shape[0] and target == t_eval[ie]:
                ie += 1
        else:
            t = t + hs
        y0, y1 = n0, n1
        k10, k11 = k70, k71
        ts[n] = t
        ps[n] = y0
        ds[n] = y1
        n += 1
        if abs(y0) > BLOW_UP_LIMIT or abs(y1) > BLOW_UP_LIMIT:
            term = BLOW_UP
            break
        # PI controller; exponents for an order-4 per-unit-step estimate
        e = max(err, 1e-10)
        fac = min(5.0, max(0.2, 0.9 * e ** (-0.7 / 4.0) * err_prev ** (0.4 / 4.0)))
        err_prev = e
        h_next = hs * fac
        if landing:
            h_next = max(h_next, h)
        h = h_next
        if h < H_MIN:
            term = STEP_UNDERFLOW
            break
    return ts[:n], ps[:n], ds[:n], ev_t[:ne], ev_p[:ne], ev_d[:ne], term
