"""Removability of the origin for positive solutions on the punctured ball.

Given the asymptotic class of u on the cylinder, v = |x|^{-k} u with
k = (n+b-2)/2 either extends smoothly, lies in H^1_loc while blowing up like
a power, or blows up at the rate |x|^{-(2-σ)/(p-1)}. Also here: the Kelvin
transform, the standard bubble and a randomized check of the inequality
that forces radial symmetry of global solutions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fitter import AsymptoticClass, Tag
from .params import BallParams, CylinderParams, Regime, check_admissible, classify_regime, to_ball

__all__ = [
    "KelvinSpec",
    "SingularityVerdict",
    "SymmetryCheck",
    "UnsupportedSingularityCase",
    "bubble",
    "check_symmetry_condition",
    "classify_singularity",
    "h1loc_exponent_test",
    "kelvin",
    "upper_bound_exponent",
]

REMOVABLE = "removable-smooth"
H1_UNBOUNDED = "H1-unbounded"
NON_REMOVABLE = "non-removable-rate"
# regime III only gives a one-sided bound
UPPER_BOUND = "upper-bound"


class UnsupportedSingularityCase(ValueError):
    pass


@dataclass(frozen=True)
class KelvinSpec:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("Kelvin radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


def kelvin(w: Callable[[np.ndarray], float], spec: KelvinSpec, x, n: int | None = None) -> float:
    """(λ/|x-x0|)^{n-2} w(x0 + λ^2 (x-x0)/|x-x0|^2); n defaults to len(x)."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(spec.center, dtype=float)
    if x.shape != x0.shape:
        raise ValueError("point and center dimensions differ")
    n = x.size if n is None else n
    d = x - x0
    r2 = float(d @ d)
    if r2 == 0.0:
        raise ValueError("Kelvin transform undefined at its center")
    lam = spec.radius
    return (lam / math.sqrt(r2)) ** (n - 2) * w(x0 + lam * lam * d / r2)


def bubble(y, n: int):
    """Standard bubble (n(n-2) / (n(n-2) + |y|^2))^{(n-2)/2}; y may be (..., n) or radii."""
    if n < 3:
        raise ValueError("n must be >= 3")
    y = np.asarray(y, dtype=float)
    r2 = y * y if y.ndim == 0 else np.sum(y * y, axis=-1)
    m = n * (n - 2)
    return (m / (m + r2)) ** ((n - 2) / 2)


def h1loc_exponent_test(q: float, n: int) -> bool:
    """Whether |x|^{-q} and its gradient are locally square integrable in R^n."""
    return q <= 0 or q < (n - 2) / 2


@dataclass(frozen=True)
class SingularityVerdict:
    cls: str
    exponent: float     # v ≍ |x|^{-exponent}; an upper bound only for UPPER_BOUND
    h1loc: bool
    two_sided: bool
    log_factor: bool = False
    note: str = ""


def _tag(cls: AsymptoticClass | str) -> str:
    return cls.tag if isinstance(cls, AsymptoticClass) else str(cls)


def upper_bound_exponent(cp: CylinderParams) -> tuple[float, bool]:
    """q with v <= C|x|^{-q} (times |log|x|| when the flag is set) for a, b > 0."""
    a, b, p, n = cp.floats()
    disc = b * b - 4 * a
    k = (2 - float(to_ball(cp).sigma)) / (p - 1)
    if disc > 0:
        return -((b - math.sqrt(disc)) / 2 - k), False
    return -(b / 2 - k), disc == 0


def _sqrt_gap(n: int, c: float) -> float:
    return math.sqrt((n - 2) ** 2 - 4 * c)


def _hypotheses(bp: BallParams) -> tuple[str, bool]:
    c, sigma, p, n = bp.floats()
    crit = (n + 2 - 2 * sigma) / (n - 2)
    if c == 0:
        return "c = 0", (n - sigma) / (n - 2) < p <= crit and 0 <= sigma < 2
    if 0 < c < (n - 2) ** 2 / 4:
        s = _sqrt_gap(n, c)
        lo = (n + 2 + s - 2 * sigma) / (n - 2 + s)
        return "0 < c < (n-2)^2/4", lo < p <= crit and 0 <= sigma < 2
    return "c >= (n-2)^2/4", False


def classify_singularity(cp: CylinderParams, cls: AsymptoticClass | str) -> SingularityVerdict:
    """Removability verdict for v at the origin from the class of u.

    ``cls`` is an AsymptoticClass or its tag. Decay to zero in regimes I/II
    gives a removable point when c = 0 and an H^1_loc but unbounded point
    when 0 < c < (n-2)^2/4; convergence to c0 or to a periodic orbit gives
    the rate (2-σ)/(p-1). Regime III with a, b > 0 yields only an upper
    bound, reported as its own class.
    """
    rep = check_admissible(cp)
    if not rep.passed:
        raise ValueError(f"inadmissible parameters: {', '.join(rep.failed())}")
    regime = classify_regime(cp)
    tag = _tag(cls)
    bp = to_ball(cp)
    a, b, p, n = cp.floats()
    c = float(bp.c)
    rate_exp = (2 - float(bp.sigma)) / (p - 1)

    if regime is Regime.III:
        if tag not in (Tag.REGIME_III, Tag.FAST_DECAY):
            raise UnsupportedSingularityCase(f"class {tag} cannot occur for a >= 0")
        if not (a > 0 and b > 0):
            raise UnsupportedSingularityCase(
                "a >= 0 with a = 0 or b = 0: only u = o(1) is known, no exponent")
        q, log = upper_bound_exponent(cp)
        return SingularityVerdict(UPPER_BOUND, q, h1loc_exponent_test(q, n), False, log,
                                  "one-sided bound; H^1_loc membership not guaranteed")

    if tag in (Tag.CONSTANT, Tag.PERIODIC):
        return SingularityVerdict(NON_REMOVABLE, rate_exp, h1loc_exponent_test(rate_exp, n), True)
    if tag != Tag.FAST_DECAY:
        raise UnsupportedSingularityCase(f"no verdict for class {tag}")
    which, ok = _hypotheses(bp)
    if not ok:
        raise UnsupportedSingularityCase(f"{which}: hypotheses of the removability result fail")
    if c == 0:
        return SingularityVerdict(REMOVABLE, 0.0, True, True)
    q = ((n - 2) - math.sqrt(b * b - 4 * a)) / 2
    return SingularityVerdict(H1_UNBOUNDED, q, h1loc_exponent_test(q, n), True)


@dataclass(frozen=True)
class SymmetryCheck:
    passed: bool
    samples: int
    max_ratio: float           # max over samples of lhs / rhs
    witness: dict | None = None


def _f(c, sigma, p, x, t):
    r = np.linalg.norm(x, axis=-1)
    return c * t / r ** 2 + t ** p / r ** sigma


def check_symmetry_condition(bp: BallParams, samples: int = 10_000, seed: int = 0,
                             rtol: float = 1e-12, require_admissible: bool = True) -> SymmetryCheck:
    """Randomized check of

        (λ/|z|)^{n+2} f(x + λ^2 z/|z|^2, (|z|/λ)^{n-2} s) <= f(x + z, t)

    for f(x, t) = c t/|x|^2 + t^p/|x|^σ over x != 0, 0 < λ < |x|, |z| > λ and
    0 <= s <= t. Returns the first violating sample if any.
    """
    if require_admissible and not bp.admissible:
        raise ValueError("ball parameters are not admissible")
    c, sigma, p, n = bp.floats()
    rng = np.random.default_rng(seed)
    m = samples

    def direction():
        g = rng.standard_normal((m, n))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    rx = 10.0 ** rng.uniform(-2, 2, m)
    x = direction() * rx[:, None]
    lam = rx * rng.uniform(1e-3, 1.0, m)
    rz = lam * 10.0 ** rng.uniform(1e-6, 2, m)
    z = direction() * rz[:, None]
    t = 10.0 ** rng.uniform(-3, 1, m)
    s = t * rng.uniform(0.0, 1.0, m)
    mu = lam / rz
    y = x + (mu ** 2)[:, None] * z
    lhs = mu ** (n + 2) * _f(c, sigma, p, y, s / mu ** (n - 2))
    rhs = _f(c, sigma, p, x + z, t)
    ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 0, np.inf, 0.0))
    bad = np.flatnonzero(lhs > rhs * (1 + rtol))
    witness = None
    if bad.size:
        i = int(bad[0])
        witness = {"x": x[i].tolist(), "lambda": float(lam[i]), "z": z[i].tolist(),
                   "s": float(s[i]), "t": float(t[i]), "lhs": float(lhs[i]), "rhs": float(rhs[i])}
    return SymmetryCheck(bad.size == 0, m, float(np.max(ratio)), witness)
