"""Parameter charts for the cylinder and punctured-ball forms of the equation.

The cylinder chart carries ``(a, b, p, n)`` for

    u_tt + Δ_S u + b u_t + a u + u^p = 0        on S^{n-1} x (0, ∞),

and the ball chart carries ``(c, sigma, p, n)`` for

    Δv + c v / |x|^2 + v^p / |x|^sigma = 0      in B_1 \\ {0}.

The two are linked by ``v(x) = e^{k t} u(θ, t)``, ``x = e^{-t} θ`` with
``k = (n + b - 2) / 2``.

Admissibility is decided with exact rational arithmetic on the decimal that
was handed in: floats are read through their shortest round-trip ``repr``,
strings such as ``"7/3"`` are parsed by :class:`fractions.Fraction`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

Real = Union[float, int, Fraction]

__all__ = [
    "AdmissibilityReport",
    "BallParams",
    "Clause",
    "CylinderParams",
    "Regime",
    "TransformRangeError",
    "check_admissible",
    "check_ball_admissible",
    "classify_regime",
    "exact",
    "inverse_transform_point",
    "pushforward_radial",
    "to_ball",
    "to_ball_exact",
    "to_cylinder",
    "transform_point",
]

# e^x overflows a double just above 709.78
EXP_LIMIT = 700.0


def exact(x: Real | str) -> Fraction:
    """Exact rational value of a user-supplied number."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(repr(float(x)))


def _num(x: Real | str) -> Real:
    # keep Fractions exact so the chart maps stay exact on rational input
    if type(x) is str:
        return Fraction(x.strip())
    return x


@dataclass(frozen=True)
class CylinderParams:
    a: Real
    b: Real
    p: Real
    n: int

    def __post_init__(self):
        object.__setattr__(self, "a", _num(self.a))
        object.__setattr__(self, "b", _num(self.b))
        object.__setattr__(self, "p", _num(self.p))
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"n must be an integer >= 3, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def admissible(self) -> bool:
        return check_admissible(self).passed

    @property
    def c0(self) -> float:
        """Positive equilibrium (-a)^{1/(p-1)}; nan when a >= 0."""
        a, p = float(self.a), float(self.p)
        return (-a) ** (1.0 / (p - 1.0)) if a < 0 else math.nan

    @property
    def k(self) -> float:
        """Weight exponent (n + b - 2)/2 of the Emden-Fowler transform."""
        return (self.n + float(self.b) - 2.0) / 2.0

    def floats(self) -> tuple[float, float, float, int]:
        return float(self.a), float(self.b), float(self.p), self.n


@dataclass(frozen=True)
class BallParams:
    c: Real
    sigma: Real
    p: Real
    n: int

    def __post_init__(self):
        object.__setattr__(self, "c", _num(self.c))
        object.__setattr__(self, "sigma", _num(self.sigma))
        object.__setattr__(self, "p", _num(self.p))
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"n must be an integer >= 3, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def admissible(self) -> bool:
        return check_ball_admissible(self).passed

    def floats(self) -> tuple[float, float, float, int]:
        return float(self.c), float(self.sigma), float(self.p), self.n


class Regime(enum.Enum):
    I = "I"      # b = 0, a < 0
    II = "II"    # b > 0, a < 0
    III = "III"  # a >= 0


@dataclass(frozen=True)
class Clause:
    name: str
    passed: bool
    template: str = ""
    values: tuple = ()

    @property
    def detail(self) -> str:
        # formatted on demand; building strings dominated bulk checks
        return self.template.format(*(float(v() if callable(v) else v) for v in self.values))


@dataclass(frozen=True)
class AdmissibilityReport:
    clauses: tuple[Clause, ...]
    ball_clauses: tuple[Clause, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    @property
    def ball_passed(self) -> bool:
        return all(c.passed for c in self.ball_clauses)

    def failed(self) -> list[str]:
        return [c.name for c in self.clauses if not c.passed]

    def lines(self) -> list[str]:
        out = []
        for c in self.clauses:
            out.append(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        if self.ball_clauses:
            out.append("  ball chart:")
            for c in self.ball_clauses:
                out.append(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        return out


def _pair(x) -> tuple[int, int] | None:
    t = type(x)
    if t is float:
        return None
    if t is Fraction or t is int or isinstance(x, (Fraction, np.integer)):
        return int(x.numerator), int(x.denominator)
    return None


def to_ball(cp: CylinderParams) -> BallParams:
    a, b, p, n = cp.a, cp.b, cp.p, cp.n
    m = n - 2
    pa, pb, pp = _pair(a), _pair(b), _pair(p)
    if pa and pb and pp:
        # rational input: one normalization per output instead of per operation
        (an, ad), (bn, bd), (pn, pd) = pa, pb, pp
        c = Fraction((m * m * bd * bd - bn * bn) * ad + 4 * an * bd * bd, 4 * bd * bd * ad)
        sigma = Fraction(4 * pd * bd - (pn - pd) * (bn + m * bd), 2 * pd * bd)
        return BallParams(c=c, sigma=sigma, p=p, n=n)
    # (m - b)(m + b) keeps the cancellation in one factor
    c = ((m - b) * (m + b) + 4 * a) / 4
    sigma = 2 - (p - 1) * (b + m) / 2
    return BallParams(c=c, sigma=sigma, p=p, n=n)


def to_cylinder(bp: BallParams) -> CylinderParams:
    c, sigma, p, n = bp.c, bp.sigma, bp.p, bp.n
    m = n - 2
    pc, ps, pp = _pair(c), _pair(sigma), _pair(p)
    if pc and ps and pp:
        (cn, cd), (sn, sd), (pn, pd) = pc, ps, pp
        bn, bd = 2 * (2 * sd - sn) * pd - m * sd * (pn - pd), sd * (pn - pd)
        b = Fraction(bn, bd)
        bn, bd = b.numerator, b.denominator
        a = Fraction((bn - m * bd) * (bn + m * bd) * cd + 4 * cn * bd * bd, 4 * bd * bd * cd)
        return CylinderParams(a=a, b=b, p=p, n=n)
    b = 2 * (2 - sigma) / (p - 1) - m
    a = (b - m) * (b + m) / 4 + c
    return CylinderParams(a=a, b=b, p=p, n=n)


def _ball_image(a: Fraction, b: Fraction, p: Fraction, n: int) -> tuple[Fraction, Fraction]:
    m = n - 2
    return ((m - b) * (m + b) + 4 * a) / 4, 2 - (p - 1) * (b + m) / 2


def to_ball_exact(cp: CylinderParams) -> BallParams:
    """Ball image computed on the exact rational values of the input."""
    a, b, p = exact(cp.a), exact(cp.b), exact(cp.p)
    c, sigma = _ball_image(a, b, p, cp.n)
    return BallParams(c, sigma, p, cp.n)


_P_CYL = "1 < p <= (n+b+2)/(n+b-2)"
_P_BALL = "1 < p <= (n+2-2 sigma)/(n-2)"

# Clauses are decided on integer numerator/denominator pairs (denominators
# positive) so bulk checks avoid Fraction normalization; detail values are
# thunks evaluated only when a report is printed.


def _cyl_clauses(a: Fraction, b: Fraction, p: Fraction, n: int) -> tuple[Clause, ...]:
    m = n - 2
    an, ad = a.numerator, a.denominator
    bn, bd = b.numerator, b.denominator
    pn, pd = p.numerator, p.denominator
    disc_ok = bn * bn * ad - 4 * an * bd * bd <= m * m * bd * bd * ad
    first = Clause("b >= 0", bn >= 0, "b = {:.17g}", (b,))
    second = Clause("b^2 - 4a <= (n-2)^2", disc_ok, "{:.17g} <= {:.17g}",
                    (lambda: b * b - 4 * a, m * m))
    if pn <= pd:
        third = Clause(_P_CYL, False, "p = {:.17g} is not > 1", (p,))
    elif m * bd + bn <= 0:
        third = Clause(_P_CYL, False, "n + b - 2 <= 0")
    else:
        third = Clause(_P_CYL, pn * (m * bd + bn) <= pd * ((m + 4) * bd + bn), "{:.17g} <= {:.17g}",
                       (p, lambda: (m + 4 + b) / (m + b)))
    return first, second, third


def _ball_pair_clauses(cn: int, cd: int, sn: int, sd: int, p: Fraction, n: int,
                       c=None, sigma=None) -> tuple[Clause, ...]:
    pn, pd = p.numerator, p.denominator
    cv = c if c is not None else (lambda: Fraction(cn, cd))
    sv = sigma if sigma is not None else (lambda: Fraction(sn, sd))
    crit = lambda: (n + 2 - 2 * Fraction(sn, sd)) / (n - 2)  # noqa: E731
    return (
        Clause("c >= 0", cn >= 0, "c = {:.17g}", (cv,)),
        Clause("0 <= sigma < 2", 0 <= sn < 2 * sd, "sigma = {:.17g}", (sv,)),
        Clause(_P_BALL, pn > pd and pn * (n - 2) * sd <= pd * ((n + 2) * sd - 2 * sn),
               "{:.17g} in (1, {:.17g}]", (p, crit)),
    )


def _ball_clauses(c: Fraction, sigma: Fraction, p: Fraction, n: int) -> tuple[Clause, ...]:
    return _ball_pair_clauses(c.numerator, c.denominator, sigma.numerator, sigma.denominator,
                              p, n, c, sigma)


def check_ball_admissible(bp: BallParams) -> AdmissibilityReport:
    return AdmissibilityReport(
        _ball_clauses(exact(bp.c), exact(bp.sigma), exact(bp.p), bp.n))


def check_admissible(cp: CylinderParams) -> AdmissibilityReport:
    """Clause-by-clause check of the cylinder conditions and their ball-chart twins.

    The ball clauses are evaluated on the exact image of the cylinder values,
    so the two verdicts can be compared without rounding in between.
    """
    a, b, p = exact(cp.a), exact(cp.b), exact(cp.p)
    n, m = cp.n, cp.n - 2
    an, ad = a.numerator, a.denominator
    bn, bd = b.numerator, b.denominator
    pn, pd = p.numerator, p.denominator
    # c = ((m - b)(m + b) + 4a)/4 and sigma = 2 - (p - 1)(b + m)/2, unreduced
    cn = (m * m * bd * bd - bn * bn) * ad + 4 * an * bd * bd
    cd = 4 * bd * bd * ad
    sn = 4 * pd * bd - (pn - pd) * (bn + m * bd)
    sd = 2 * pd * bd
    return AdmissibilityReport(_cyl_clauses(a, b, p, n), _ball_pair_clauses(cn, cd, sn, sd, p, n))


def classify_regime(cp: CylinderParams, strict: bool = False) -> Regime:
    """Regime tag from the signs of a and b.

    Only ``b < 0`` leaves the tag undefined. With ``strict=True`` the full
    admissibility conditions are enforced as well.
    """
    a, b = exact(cp.a), exact(cp.b)
    if b < 0:
        raise ValueError(f"regime undefined for b < 0 (b = {float(b)})")
    if strict:
        rep = check_admissible(cp)
        if not rep.passed:
            raise ValueError(f"inadmissible parameters: {', '.join(rep.failed())}")
    if a >= 0:
        return Regime.III
    return Regime.I if b == 0 else Regime.II


class TransformRangeError(OverflowError):
    pass


def _guard(t: float, k: float) -> None:
    if abs(t) > EXP_LIMIT or abs(k * t) > EXP_LIMIT:
        raise TransformRangeError(
            f"t = {t} outside the representable range of the transform (|k t| <= {EXP_LIMIT})")


def transform_point(u_val: float, theta, t: float, cp: CylinderParams):
    """Map a cylinder sample u(θ, t) to (v(x), x) on the punctured ball."""
    if not u_val > 0:
        raise ValueError("u_val must be positive")
    k = cp.k
    _guard(t, k)
    theta = np.asarray(theta, dtype=float)
    r = math.exp(-t)
    return math.exp(k * t) * u_val, r * theta


def inverse_transform_point(v_val: float, x, cp: CylinderParams):
    """Inverse of :func:`transform_point`: returns (u_val, θ, t)."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ValueError("x must differ from the origin")
    t = -math.log(r)
    k = cp.k
    _guard(t, k)
    return math.exp(-k * t) * v_val, x / r, t


def pushforward_radial(t, psi, dpsi, cp: CylinderParams):
    """Radial ball profile v(r) and its r-derivatives from a cylinder profile.

    Given ψ, ψ' at times t, returns ``(r, v, v_r, v_rr)`` by the chain rule
    with ψ'' taken from the ODE itself. Used to check that radial solutions
    solve the ball equation.
    """
    a, b, p, n = cp.floats()
    t = np.asarray(t, dtype=float)
    psi = np.asarray(psi, dtype=float)
    dpsi = np.asarray(dpsi, dtype=float)
    k = cp.k
    ddpsi = -b * dpsi - a * psi - psi ** p
    r = np.exp(-t)
    e = np.exp(k * t)
    v = e * psi
    # d/dr = -(1/r) d/dt
    vt = e * (k * psi + dpsi)
    vtt = e * (k * k * psi + 2 * k * dpsi + ddpsi)
    v_r = -vt / r
    v_rr = (vtt + vt) / (r * r)
    return r, v, v_r, v_rr
