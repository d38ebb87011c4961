"""Asymptotic classification of sampled trajectories.

Tags mirror the three-way taxonomy of positive solutions: decay to zero at
an exponential rate, convergence to a periodic orbit, convergence to the
constant c0, and the regime-III two-sided bracket.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ode
from .params import CylinderParams, Regime, classify_regime

__all__ = [
    "AsymptoticClass",
    "ClassifierConfig",
    "FitError",
    "PeriodEstimate",
    "RateFit",
    "classify_asymptotics",
    "detect_period",
    "fit_rate",
]

MIN_SAMPLES = 10
MIN_PEAKS = 3


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of  |value - target| ≈ c t^power e^{-gamma t}."""

    gamma: float
    c: float
    r2: float
    window: tuple[float, float]
    envelope: bool = False
    power: float = 0.0
    npoints: int = 0
    exact: bool = False


def _peaks(r: np.ndarray) -> np.ndarray:
    inner = (r[1:-1] >= r[:-2]) & (r[1:-1] > r[2:])
    return np.flatnonzero(inner) + 1


def fit_rate(t, values, target: float = 0.0, window: tuple[float, float] | None = None,
             envelope: bool | str = "auto", power: float = 0.0) -> RateFit:
    """Fit an exponential rate to the distance between ``values`` and ``target``.

    Regression of  log|v - target| - power·log t  on t. With ``envelope``
    (or ``"auto"`` and at least two sign changes of v - target inside the
    window) only the local maxima of |v - target| enter the regression, which
    removes the log|cos| spikes of an oscillating approach.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, v = t[sel], v[sel]
    if len(t) < MIN_SAMPLES:
        raise FitError(f"degenerate window: {len(t)} samples, need {MIN_SAMPLES}")
    r = v - target
    if envelope == "auto":
        signs = np.sign(r[r != 0])
        envelope = bool(np.count_nonzero(np.diff(signs)) >= 2)
    absr = np.abs(r)
    if envelope:
        idx = _peaks(absr)
        if len(idx) < MIN_PEAKS:
            raise FitError(f"only {len(idx)} envelope peaks in the window, need {MIN_PEAKS}")
        tf, rf = t[idx], absr[idx]
    else:
        if np.any(absr == 0):
            raise FitError("zero distance to target inside the window")
        tf, rf = t, absr
    if power and np.any(tf <= 0):
        raise FitError("a power correction needs t > 0")
    y = np.log(rf) - (power * np.log(tf) if power else 0.0)
    A = np.column_stack([np.ones_like(tf), -tf])
    (logc, gamma), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([logc, gamma])
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(gamma), float(math.exp(logc)), r2, (float(t[0]), float(t[-1])),
                   bool(envelope), power, len(tf))


@dataclass(frozen=True)
class PeriodEstimate:
    period: float
    beta_minus: float
    beta_plus: float
    last_min_time: float


def detect_period(traj: ode.Trajectory, rtol: float = 1e-6, atol_extrema: float = 1e-8
                  ) -> PeriodEstimate | None:
    """Period from the ψ' = 0 events, or None when the orbit is not periodic.

    Periodic means: at least four events, every gap between alternate events
    within ``rtol`` of their mean, and every minimum (maximum) within
    ``atol_extrema`` of the others.
    """
    et, ep = traj.event_times, traj.event_psi
    if len(et) < 4:
        return None
    gaps = et[2:] - et[:-2]
    T = float(np.mean(gaps))
    if T <= 0 or np.max(np.abs(gaps - T)) > rtol * T:
        return None
    even, odd = ep[0::2], ep[1::2]
    if np.ptp(even) > atol_extrema or np.ptp(odd) > atol_extrema:
        return None
    lo_set, hi_set = (even, odd) if even.mean() < odd.mean() else (odd, even)
    if lo_set.mean() >= hi_set.mean():
        return None
    mins_t = et[0::2] if even.mean() < odd.mean() else et[1::2]
    return PeriodEstimate(T, float(lo_set.mean()), float(hi_set.mean()), float(mins_t[-1]))


@dataclass(frozen=True)
class ClassifierConfig:
    tail_fraction: float = 0.4
    floor: float = 1e-8
    constancy: float = 1e-6
    bracket_slack: float = 0.05
    period_rtol: float = 1e-6
    extrema_atol: float = 1e-8
    noise_factor: float = 100.0
    fallback_skip: float = 0.2
    # t^k corrections come from forcing (PDE averages), not the bare ODE
    polynomial_correction: bool = False


class Tag:
    FAST_DECAY = "FastDecay"
    PERIODIC = "PeriodicLimit"
    CONSTANT = "ConstantLimit"
    REGIME_III = "RegimeIIIDecay"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class AsymptoticClass:
    tag: str
    regime: Regime | None = None
    rate: RateFit | None = None
    predicted: ode.DecayPrediction | None = None
    period: PeriodEstimate | None = None
    orbit: ode.PeriodicOrbit | None = None
    phase_shift: float | None = None
    c0: float | None = None
    bracket_ok: bool | None = None
    reason: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def rate_error(self) -> float | None:
        if self.rate is None or self.predicted is None or self.predicted.rate == 0:
            return None
        return abs(self.rate.gamma - self.predicted.rate) / self.predicted.rate


def _tail(traj: ode.Trajectory, frac: float) -> tuple[float, float]:
    t0, t1 = float(traj.times[0]), float(traj.times[-1])
    return t1 - frac * (t1 - t0), t1


def _above_noise(t, r, floor):
    keep = np.abs(r) > floor
    return t[keep], r[keep]


def classify_asymptotics(traj: ode.Trajectory, cp: CylinderParams,
                         config: ClassifierConfig = ClassifierConfig()) -> AsymptoticClass:
    """Decision tree over the tail (last ``tail_fraction`` of the horizon).

    1. tail decreasing to below ``floor`` at the horizon -> FastDecay
       (RegimeIIIDecay for a >= 0, where any monotone decreasing tail
       counts), rate fitted against 0 and compared with the predicted exponent;
    2. periodic events -> PeriodicLimit;
    3. tail within ``constancy`` of c0 -> ConstantLimit with a rate fit;
    4. anything else -> Undetermined.

    Rate fits use the tail samples whose distance to the target exceeds
    ``noise_factor * traj.tol``; when fewer than ten survive, the window is
    widened to everything after the first ``fallback_skip`` of the horizon.
    """
    regime = classify_regime(cp)
    if traj.termination != "reached_t_end":
        return AsymptoticClass(Tag.UNDETERMINED, regime,
                               reason=f"integration ended with {traj.termination} at t = {traj.t_end:.6g}")
    if len(traj) < MIN_SAMPLES:
        return AsymptoticClass(Tag.UNDETERMINED, regime, reason="too few samples")
    w0, w1 = _tail(traj, config.tail_fraction)
    sel = traj.times >= w0
    tt, pp = traj.times[sel], traj.psi[sel]
    # rate fits drop samples swamped by integration error
    noise = config.noise_factor * traj.tol

    def windows():
        yield tt, pp
        # fallback when the tail is already at the noise level
        keep = traj.times >= traj.times[0] + config.fallback_skip * (w1 - traj.times[0])
        yield traj.times[keep], traj.psi[keep]

    def fit(target, power, envelope):
        err = None
        for wt, wp in windows():
            ft, fp = _above_noise(wt, wp - target, noise)
            try:
                return fit_rate(ft, fp + target, target, power=power, envelope=envelope)
            except FitError as exc:
                err = exc
        raise err

    decaying = pp[-1] < pp[0] and bool(np.all(np.diff(pp) < 0))
    if (pp[-1] <= config.floor and decaying) or (regime is Regime.III and decaying):
        if regime is Regime.III:
            pred = ode.predicted_decay("III", cp)
            rate = fit(0.0, pred.power if config.polynomial_correction else 0.0, False)
            lo, hi = pred.bracket
            ok = (1 - config.bracket_slack) * lo <= rate.gamma <= (1 + config.bracket_slack) * hi
            return AsymptoticClass(Tag.REGIME_III, regime, rate, pred, bracket_ok=ok)
        pred = ode.predicted_decay("I-decay" if regime is Regime.I else "II-decay", cp)
        return AsymptoticClass(Tag.FAST_DECAY, regime, fit(0.0, 0.0, False), pred)

    per = detect_period(traj.since(w0), config.period_rtol, config.extrema_atol)
    if per is not None:
        orbit = None
        if regime is Regime.I:
            h0 = float(np.mean(ode.hamiltonian((pp, traj.dpsi[sel]), cp)))
            try:
                orbit = ode.orbit_period(h0, cp)
            except (ValueError, ode.PeriodDivergence):
                orbit = None
        # phase aligned at a minimum, as in "translate so that ψ(0) = m"
        shift = per.last_min_time % per.period
        return AsymptoticClass(Tag.PERIODIC, regime, period=per, orbit=orbit, phase_shift=shift)

    if regime is not Regime.III:
        c0 = cp.c0
        if abs(pp[-1] - c0) <= config.constancy:
            if np.all(pp == c0):
                return AsymptoticClass(Tag.CONSTANT, regime, c0=c0, reason="exact equilibrium")
            pred = ode.predicted_decay("II-converge", cp) if regime is Regime.II else None
            try:
                power = pred.power if pred and config.polynomial_correction else 0.0
                rate = fit(c0, power, "auto")
            except FitError as exc:
                return AsymptoticClass(Tag.CONSTANT, regime, c0=c0, predicted=pred,
                                       reason=f"rate not resolved: {exc}")
            return AsymptoticClass(Tag.CONSTANT, regime, rate, pred, c0=c0)

    return AsymptoticClass(Tag.UNDETERMINED, regime, reason="no criterion matched the tail")
