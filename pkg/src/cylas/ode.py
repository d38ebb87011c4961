"""Radial ODE  ψ'' + b ψ' + a ψ + ψ^p = 0: integration, energy, orbits, linearization."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import _dopri
from .params import CylinderParams, Regime, classify_regime, exact

__all__ = [
    "DecayPrediction",
    "EnergyLevel",
    "LinearizedRoots",
    "OrbitClass",
    "PeriodDivergence",
    "PeriodicOrbit",
    "PhaseState",
    "Trajectory",
    "char_roots",
    "classify_level",
    "decaying_start",
    "dissipation_integral",
    "energy_along",
    "equilibria",
    "h_min",
    "hamiltonian",
    "homoclinic_derivatives",
    "homoclinic_profile",
    "integrate",
    "linearized_roots_at_c0",
    "orbit_period",
    "predicted_decay",
    "rhs",
    "turning_points",
    "variation_of_parameters",
]

TERMINATIONS = {
    _dopri.REACHED_T_END: "reached_t_end",
    _dopri.PSI_HIT_ZERO: "psi_hit_zero",
    _dopri.BLOW_UP: "blow_up",
    _dopri.STEP_UNDERFLOW: "step_underflow",
    _dopri.MAX_STEPS: "max_steps",
}

DEFAULT_TOL = 1e-10
QUAD_TOL = 1e-12
LEVEL_TOL = 1e-12


@dataclass(frozen=True)
class PhaseState:
    psi: float
    dpsi: float

    def __post_init__(self):
        if not (math.isfinite(self.psi) and math.isfinite(self.dpsi)):
            raise ValueError("phase state components must be finite")
        if self.psi < 0:
            raise ValueError(f"psi must be >= 0, got {self.psi}")


@dataclass(frozen=True)
class Trajectory:
    """Accepted integrator steps plus the located ψ' = 0 events."""

    times: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    params: CylinderParams
    termination: str
    event_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    event_psi: np.ndarray = field(default_factory=lambda: np.empty(0))
    event_dpsi: np.ndarray = field(default_factory=lambda: np.empty(0))
    tol: float = DEFAULT_TOL

    def __len__(self) -> int:
        return len(self.times)

    @property
    def states(self) -> list[PhaseState]:
        return [PhaseState(float(max(p, 0.0)), float(d)) for p, d in zip(self.psi, self.dpsi)]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def at(self, t) -> tuple[np.ndarray, np.ndarray]:
        """(ψ, ψ') at times that were passed as ``t_eval`` (exact matches only)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.searchsorted(self.times, t)
        idx = np.clip(idx, 0, len(self.times) - 1)
        if not np.all(self.times[idx] == t):
            raise KeyError("requested times are not sample times of this trajectory")
        return self.psi[idx], self.dpsi[idx]

    def since(self, t0: float) -> "Trajectory":
        """Tail of the trajectory starting at the first sample >= t0."""
        i = int(np.searchsorted(self.times, t0))
        j = np.searchsorted(self.event_times, self.times[i])
        return replace(self, times=self.times[i:], psi=self.psi[i:], dpsi=self.dpsi[i:],
                       event_times=self.event_times[j:], event_psi=self.event_psi[j:],
                       event_dpsi=self.event_dpsi[j:])

    def shifted(self, delta: float) -> "Trajectory":
        return replace(self, times=self.times + delta, event_times=self.event_times + delta)


@dataclass(frozen=True)
class EnergyLevel:
    h0: float
    h_min: float


@dataclass(frozen=True)
class PeriodicOrbit:
    h0: EnergyLevel
    beta_minus: float
    beta_plus: float
    period: float


@dataclass(frozen=True)
class LinearizedRoots:
    lambda1: complex
    lambda2: complex
    c0: float = math.nan

    @property
    def mu1(self) -> float:
        return self.lambda1.real

    @property
    def mu2(self) -> float:
        return self.lambda2.real

    @property
    def alpha0(self) -> float:
        return min(-self.mu2, 1.0)

    @property
    def damping(self) -> float:
        """b in  λ^2 + b λ + q = 0."""
        return -(self.lambda1 + self.lambda2).real

    @property
    def stiffness(self) -> float:
        """q in  λ^2 + b λ + q = 0."""
        return (self.lambda1 * self.lambda2).real

    @property
    def double_root(self) -> bool:
        scale = max(abs(self.lambda1), abs(self.lambda2), 1.0)
        return abs(self.lambda2 - self.lambda1) <= 1e-7 * scale

    @property
    def log_resonance(self) -> bool:
        return abs(self.mu2 + 1.0) <= 1e-12


class PeriodDivergence(ArithmeticError):
    """The period quadrature did not settle, as at the homoclinic level."""


def rhs(s: PhaseState, cp: CylinderParams) -> tuple[float, float]:
    a, b, p, _ = cp.floats()
    return s.dpsi, -b * s.dpsi - a * s.psi - s.psi ** p


def integrate(s0: PhaseState, t_span: tuple[float, float], cp: CylinderParams,
              tol: float = DEFAULT_TOL, t_eval=None, max_step: float = math.inf,
              max_steps: int = 50_000_000) -> Trajectory:
    """Integrate forward from ``s0`` over ``t_span``.

    Stops at the first ψ = 0 crossing (termination ``psi_hit_zero``), when
    |state| exceeds 1e12 (``blow_up``) or when the step falls below 1e-14
    (``step_underflow``). Every ψ' = 0 crossing is located by bisection to
    1e-12 in t and stored on the trajectory.
    """
    t0, t1 = map(float, t_span)
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 <= t0:
        raise ValueError(f"t_span must be a finite increasing interval, got {t_span}")
    if not (1e-13 <= tol <= 1e-3):
        raise ValueError(f"tol must lie in [1e-13, 1e-3], got {tol}")
    a, b, p, _ = cp.floats()
    te = np.empty(0) if t_eval is None else np.sort(np.asarray(t_eval, dtype=float))
    out = _dopri.integrate_core(float(s0.psi), float(s0.dpsi), t0, t1, float(tol), a, b, p,
                                0.0, float(min(max_step, t1 - t0)), te, int(max_steps))
    ts, ps, ds, et, ep, ed, term = out
    return Trajectory(ts, ps, ds, cp, TERMINATIONS[int(term)], et, ep, ed, tol)


def decaying_start(cp: CylinderParams, amplitude: float = 1e-6, level: float | None = None,
                   tol: float = 1e-13) -> tuple[PhaseState, float]:
    """Initial state whose forward orbit decays to 0 along the stable direction.

    Starts at ``amplitude * (1, λ₁)`` on the decaying eigendirection of the
    origin and runs time backwards until the linear growth predicts ψ ≈
    ``level`` (default c0/2). Returns the state and the duration; integrating
    forward from it over ``[0, duration]`` ends near ``amplitude``.
    """
    a, b, p, _ = cp.floats()
    if a >= 0:
        raise ValueError("the origin has a stable direction only for a < 0")
    lam1 = (-b - math.sqrt(b * b - 4 * a)) / 2
    level = 0.5 * cp.c0 if level is None else level
    duration = math.log(level / amplitude) / -lam1
    # reversed time: ψ(-s) solves the same ODE with b -> -b and ψ' -> -ψ'
    out = _dopri.integrate_core(amplitude, -lam1 * amplitude, 0.0, duration, tol,
                                a, -b, p, 0.0, duration, np.empty(0), 50_000_000)
    ts, ps, ds, *_, term = out
    if term != _dopri.REACHED_T_END:
        raise ValueError(f"backward run ended early ({TERMINATIONS[int(term)]})")
    return PhaseState(float(ps[-1]), -float(ds[-1])), duration


def hamiltonian(s: PhaseState | tuple, cp: CylinderParams):
    """H(ψ', ψ) = ψ'^2 + a ψ^2 + 2/(p+1) ψ^{p+1}. Accepts states or (psi, dpsi) arrays."""
    a, _, p, _ = cp.floats()
    if isinstance(s, PhaseState):
        psi, dpsi = s.psi, s.dpsi
    else:
        psi, dpsi = (np.asarray(v, dtype=float) for v in s)
    return dpsi ** 2 + a * psi ** 2 + 2.0 / (p + 1.0) * np.abs(psi) ** (p + 1.0)


def _potential(beta, a, p):
    return a * beta ** 2 + 2.0 / (p + 1.0) * beta ** (p + 1.0)


def energy_along(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return traj.times, hamiltonian((traj.psi, traj.dpsi), traj.params)


def dissipation_integral(traj: Trajectory) -> float:
    """-2b ∫ ψ'^2 dt over the trajectory.

    Trapezoid rule with the endpoint-derivative (Hermite) correction, using
    d/dt ψ'^2 = 2 ψ' ψ'' from the ODE; fourth order on the step mesh.
    """
    a, b, p, _ = traj.params.floats()
    t, psi, dpsi = traj.times, traj.psi, traj.dpsi
    f = dpsi ** 2
    ddpsi = -b * dpsi - a * psi - np.sign(psi) * np.abs(psi) ** p
    df = 2 * dpsi * ddpsi
    h = np.diff(t)
    integral = np.sum(h / 2 * (f[:-1] + f[1:]) + h ** 2 / 12 * (df[:-1] - df[1:]))
    return -2.0 * b * float(integral)


def h_min(cp: CylinderParams) -> float:
    a, _, p, _ = cp.floats()
    if a >= 0:
        raise ValueError("h_min is defined for a < 0 only")
    return -(p - 1.0) / (p + 1.0) * (-a) ** ((p + 1.0) / (p - 1.0))


def equilibria(cp: CylinderParams) -> list[float]:
    """Nonnegative constant solutions: {0, c0} for a < 0, {0} otherwise."""
    a = float(cp.a)
    return [0.0, cp.c0] if a < 0 else [0.0]


class OrbitClass:
    EQUILIBRIUM = "equilibrium"
    HOMOCLINIC = "homoclinic"
    PERIODIC = "periodic"
    LEAVES_POSITIVE_CONE = "leaves-positive-cone"


def _require_regime_one(cp: CylinderParams) -> None:
    if classify_regime(cp) is not Regime.I:
        raise ValueError("this operation needs regime I (b = 0, a < 0)")


def classify_level(h0: float, cp: CylinderParams, tol: float = LEVEL_TOL) -> str:
    _require_regime_one(cp)
    hm = h_min(cp)
    if h0 < hm - tol:
        raise ValueError(f"no orbit below h_min = {hm} (h0 = {h0})")
    if abs(h0 - hm) <= tol:
        return OrbitClass.EQUILIBRIUM
    if abs(h0) <= tol:
        return OrbitClass.HOMOCLINIC
    if h0 < 0:
        return OrbitClass.PERIODIC
    return OrbitClass.LEAVES_POSITIVE_CONE


def homoclinic_derivatives(t, lam: float, cp: CylinderParams):
    """(ψ, ψ', ψ'') of the zero-energy orbit, evaluated in log space.

    ψ = [ (e^{-(p-1)s t} + λ²) e^{(p-1)s t/2} / (λ √(-2a(p+1))) ]^{-2/(p-1)},  s = √(-a).
    ψ'/ψ = -s (1 - 2w) with w = 1 / (1 + λ² e^{(p-1)s t}).
    """
    _require_regime_one(cp)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    a, _, p, _ = cp.floats()
    s = math.sqrt(-a)
    q = p - 1.0
    t = np.asarray(t, dtype=float)
    x = q * s * t
    log_base = (np.logaddexp(-x, 2 * math.log(lam)) + x / 2
                - math.log(lam * math.sqrt(-2 * a * (p + 1))))
    psi = np.exp(-2.0 / q * log_base)
    # w = expit(-(x + 2 log λ))
    z = x + 2 * math.log(lam)
    w = np.where(z >= 0, np.exp(-np.abs(z)) / (1 + np.exp(-np.abs(z))),
                 1 / (1 + np.exp(-np.abs(z))))
    g = -s * (1 - 2 * w)
    dg = -2 * q * s * s * w * (1 - w)
    return psi, psi * g, psi * (dg + g * g)


def homoclinic_profile(t, lam: float, cp: CylinderParams):
    return homoclinic_derivatives(t, lam, cp)[0]


def _bisect(f: Callable[[float], float], lo: float, hi: float, xtol: float) -> float:
    f_lo = f(lo)
    for _ in range(200):
        if hi - lo <= xtol * max(1.0, abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (f_lo > 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def turning_points(h0: float, cp: CylinderParams, xtol: float = 1e-15) -> tuple[float, float]:
    """The two roots of a β² + 2/(p+1) β^{p+1} = h0 that bracket c0."""
    _require_regime_one(cp)
    hm = h_min(cp)
    if not (hm < h0 < 0):
        raise ValueError(f"h0 must lie in (h_min, 0) = ({hm}, 0), got {h0}")
    a, _, p, _ = cp.floats()
    c0 = cp.c0
    top = ((p + 1) / 2 * (-a)) ** (1 / (p - 1))
    g = lambda beta: _potential(beta, a, p) - h0
    lo = _bisect(g, 0.0, c0, xtol)
    hi = _bisect(g, c0, top, xtol)
    return lo, hi


def _gap(beta_ref: float, delta, a: float, p: float):
    """V(β_ref) - V(β_ref + δ) without cancellation."""
    beta = beta_ref + delta
    quad = -a * delta * (2 * beta_ref + delta)
    # β_ref^{p+1} - β^{p+1} = -β_ref^{p+1} expm1((p+1) log1p(δ/β_ref))
    powr = -(beta_ref ** (p + 1)) * np.expm1((p + 1) * np.log1p(delta / beta_ref))
    return quad + 2 / (p + 1) * powr


def orbit_period(h0: float, cp: CylinderParams, rtol: float = QUAD_TOL,
                 max_nodes: int = 1 << 15) -> PeriodicOrbit:
    """Minimal period 2 ∫ dβ / √(h0 - V(β)) between the turning points.

    With β = β₋ + (β₊ - β₋) sin² s both inverse-square-root endpoint
    singularities cancel and the integrand is smooth and even about both ends
    of [0, π/2], so the midpoint rule converges spectrally. Nodes are doubled
    until successive estimates agree to ``rtol``.
    """
    lo, hi = turning_points(h0, cp)
    a, _, p, _ = cp.floats()
    width = hi - lo

    def estimate(m: int) -> float:
        s = (np.arange(m) + 0.5) * (np.pi / 2) / m
        sin2, cos2 = np.sin(s) ** 2, np.cos(s) ** 2
        left = s < np.pi / 4
        # h0 - V(β) = (β - β₋)(β₊ - β) G(β)
        num = np.where(left, _gap(lo, width * sin2, a, p), _gap(hi, -width * cos2, a, p))
        G = num / (width * width * sin2 * cos2)
        return 2.0 * float(np.sum(2.0 / np.sqrt(G))) * (np.pi / 2) / m

    m = 16
    prev = estimate(m)
    while True:
        m *= 2
        cur = estimate(m)
        if abs(cur - prev) <= rtol * abs(cur):
            return PeriodicOrbit(EnergyLevel(h0, h_min(cp)), lo, hi, cur)
        if m >= max_nodes:
            raise PeriodDivergence(
                f"period quadrature not converged at h0 = {h0} with {m} nodes "
                f"(last change {abs(cur - prev) / abs(cur):.3e}); the level is too close to the homoclinic h0 = 0")
        prev = cur


def _roots(b: float, q: float, c0: float = math.nan) -> LinearizedRoots:
    disc = cmath.sqrt(complex(b * b - 4 * q))
    l1 = (-b - disc) / 2
    l2 = (-b + disc) / 2
    if l1.real > l2.real:
        l1, l2 = l2, l1
    return LinearizedRoots(complex(l1), complex(l2), c0)


def char_roots(cp: CylinderParams) -> LinearizedRoots:
    """Roots of λ² + b λ + a = 0 (linearization about ψ = 0)."""
    a, b, _, _ = cp.floats()
    return _roots(b, a, cp.c0)


def linearized_roots_at_c0(cp: CylinderParams) -> LinearizedRoots:
    """Roots of λ² + b λ + (p-1) c0^{p-1} = 0, using c0^{p-1} = -a."""
    a, b, p, _ = cp.floats()
    if a >= 0:
        raise ValueError("c0 exists only for a < 0")
    return _roots(b, (p - 1) * (-a), cp.c0)


def _gauss_cumulative(f, t: np.ndarray, order: int = 12) -> np.ndarray:
    """Cumulative ∫_{t[0]}^{t[k]} f via composite Gauss-Legendre per interval."""
    x, w = np.polynomial.legendre.leggauss(order)
    left, right = t[:-1], t[1:]
    half = (right - left) / 2
    mid = (right + left) / 2
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = f(nodes)
    pieces = np.sum(vals * w[None, :], axis=1) * half
    return np.concatenate([[0.0], np.cumsum(pieces)])


def variation_of_parameters(forcing: Callable, roots: LinearizedRoots, ic: tuple[float, float],
                            t_eval, substeps: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Solve ξ'' + b ξ' + q ξ = F(t) by the Wronskian formula.

    ``roots`` fixes b and q; ``ic`` = (ξ(t0), ξ'(t0)) at t0 = t_eval[0].
    Distinct roots use φ_i = e^{λ_i t} with W = (λ₂ - λ₁) e^{(λ₁+λ₂) t};
    a double root uses φ₁ = e^{-bt/2}, φ₂ = t e^{-bt/2}, W = e^{-bt}.
    Returns (ξ, ξ') at t_eval.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    t0 = t_eval[0]
    # refine the quadrature mesh between output times
    mesh = np.concatenate([np.linspace(t_eval[i], t_eval[i + 1], substeps + 1)[:-1]
                           for i in range(len(t_eval) - 1)] + [t_eval[-1:]])
    out_idx = np.arange(0, len(mesh), substeps)
    F = lambda s: np.asarray(forcing(s), dtype=float)
    if roots.double_root:
        b = roots.damping
        m = -b / 2
        phi1 = lambda s: np.exp(m * (s - t0))
        phi2 = lambda s: (s - t0) * np.exp(m * (s - t0))
        dphi1 = lambda s: m * phi1(s)
        dphi2 = lambda s: (1 + m * (s - t0)) * np.exp(m * (s - t0))
        wr = lambda s: np.exp(2 * m * (s - t0))
    else:
        l1, l2 = roots.lambda1, roots.lambda2
        phi1 = lambda s: np.exp(l1 * (s - t0))
        phi2 = lambda s: np.exp(l2 * (s - t0))
        dphi1 = lambda s: l1 * phi1(s)
        dphi2 = lambda s: l2 * phi2(s)
        wr = lambda s: (l2 - l1) * np.exp((l1 + l2) * (s - t0))
    # ξ_p = -φ₁ ∫ φ₂ F / W + φ₂ ∫ φ₁ F / W, vanishing with its derivative at t0
    I1 = _gauss_cumulative(lambda s: phi2(s) * F(s) / wr(s), mesh)
    I2 = _gauss_cumulative(lambda s: phi1(s) * F(s) / wr(s), mesh)
    xp = -phi1(mesh) * I1 + phi2(mesh) * I2
    dxp = -dphi1(mesh) * I1 + dphi2(mesh) * I2
    # homogeneous part: φ(t0) = (1, 1) or (1, 0); solve for C4, C5
    A = np.array([[phi1(np.array(t0)), phi2(np.array(t0))],
                  [dphi1(np.array(t0)), dphi2(np.array(t0))]], dtype=complex)
    C4, C5 = np.linalg.solve(A, np.array(ic, dtype=complex))
    xi = C4 * phi1(mesh) + C5 * phi2(mesh) + xp
    dxi = C4 * dphi1(mesh) + C5 * dphi2(mesh) + dxp
    return np.real(xi[out_idx]), np.real(dxi[out_idx])


@dataclass(frozen=True)
class DecayPrediction:
    """Predicted exponential rate, with t^power corrections and a bracket for regime III."""

    branch: str
    rate: float
    power: int = 0
    bracket: tuple[float, float] | None = None
    barrier: float | None = None
    note: str = ""


BRANCHES = ("I-decay", "II-decay", "II-converge", "III")


def predicted_decay(branch: str, cp: CylinderParams) -> DecayPrediction:
    a, b, p, n = cp.floats()
    regime = classify_regime(cp)
    if branch == "I-decay":
        if regime is not Regime.I:
            raise ValueError("I-decay needs b = 0, a < 0")
        return DecayPrediction(branch, math.sqrt(-a))
    if branch == "II-decay":
        if regime is not Regime.II:
            raise ValueError("II-decay needs b > 0, a < 0")
        return DecayPrediction(branch, (b + math.sqrt(b * b - 4 * a)) / 2)
    if branch == "II-converge":
        if regime is not Regime.II:
            raise ValueError("II-converge needs b > 0, a < 0")
        r = linearized_roots_at_c0(cp)
        if r.double_root:
            # the double root sits at -b/2; the t^2 case is b = 2
            power = 2 if exact(cp.b) == 2 else 1
            return DecayPrediction(branch, r.alpha0, power, note="double root")
        if r.log_resonance:
            return DecayPrediction(branch, r.alpha0, 1, note="mu2 = -1")
        return DecayPrediction(branch, r.alpha0)
    if branch == "III":
        if regime is not Regime.III:
            raise ValueError("III needs a >= 0")
        barrier = (n + b - 2) / 2
        r = char_roots(cp)
        rates = [-r.mu1, -r.mu2]
        lo, hi = min(rates + [barrier]), max(rates + [barrier])
        if a == 0 or b == 0:
            # a root on the imaginary axis: only u = o(1) is known
            return DecayPrediction(branch, 0.0, 0, (0.0, hi), barrier, note="o(1) only")
        power = 1 if r.double_root else 0
        return DecayPrediction(branch, -r.mu2, power, (lo, hi), barrier)
    raise ValueError(f"unknown branch {branch!r}; expected one of {BRANCHES}")
