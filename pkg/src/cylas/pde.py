"""Axisymmetric cylinder equation as a two-point boundary value problem in t.

    u_tt + Δ_S u + b u_t + a u + u^p = 0,   (θ, t) ∈ [0, π] x [0, T]

with Dirichlet data at t = 0 and a Robin condition u_t + ρ(u - target) = 0
at t = T. The sphere Laplacian is reduced to the polar angle,

    Δ_S u = sin^{2-n}θ ∂_θ(sin^{n-2}θ ∂_θ u),

and discretised in flux form on a uniform grid that includes both poles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import RectBivariateSpline

from .fitter import FitError, RateFit, fit_rate
from .params import CylinderParams

__all__ = [
    "AveragedProfile",
    "CylGrid",
    "CylinderField",
    "FarCondition",
    "NewtonReport",
    "assemble_residual",
    "averaged_residual",
    "cross_operator_residual",
    "laplace_beltrami_axisym",
    "lb_matrix",
    "newton_solve",
    "read_field",
    "spherical_average",
    "symmetry_rate",
    "write_field",
]

MIN_THETA = 16
MIN_T = 64


@dataclass(frozen=True)
class CylGrid:
    """Uniform grid; θ nodes include the poles, t nodes include both ends."""

    theta_intervals: int
    t_intervals: int
    t_max: float = 20.0
    n: int = 3

    def __post_init__(self):
        if self.theta_intervals < MIN_THETA:
            raise ValueError(f"need at least {MIN_THETA} theta intervals")
        if self.t_intervals < MIN_T:
            raise ValueError(f"need at least {MIN_T} t intervals")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.n < 3:
            raise ValueError("n must be >= 3")

    @property
    def h(self) -> float:
        return math.pi / self.theta_intervals

    @property
    def k(self) -> float:
        return self.t_max / self.t_intervals

    @property
    def theta(self) -> np.ndarray:
        return self.h * np.arange(self.theta_intervals + 1)

    @property
    def t(self) -> np.ndarray:
        return self.k * np.arange(self.t_intervals + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return self.t_intervals + 1, self.theta_intervals + 1

    def refined(self) -> "CylGrid":
        return CylGrid(2 * self.theta_intervals, 2 * self.t_intervals, self.t_max, self.n)

    def volumes(self) -> np.ndarray:
        """Cell measures ∫ sin^{n-2}θ dθ / h over the dual cells.

        Interior node i owns [θ_i - h/2, θ_i + h/2]; a pole owns the half
        cell, where the leading-order value sin^{n-2}(h/2) / (2(n-1)) is used
        so that the pole row matches the stencil 2(n-1)(u_1 - u_0)/h^2.
        """
        h, n, M = self.h, self.n, self.theta_intervals
        x, wq = np.polynomial.legendre.leggauss(8)
        lo = self.theta[1:-1] - h / 2
        nodes = lo[:, None] + (x[None, :] + 1) * (h / 2)
        vol = np.empty(M + 1)
        vol[1:-1] = (np.sin(nodes) ** (n - 2)) @ wq / 2
        vol[0] = vol[-1] = math.sin(h / 2) ** (n - 2) / (2 * (n - 1))
        return vol

    def weights(self) -> np.ndarray:
        """Quadrature weights for ∫ f sin^{n-2}θ dθ.

        With these the discrete mean of the discrete Laplacian vanishes
        identically (the flux differences telescope).
        """
        return self.volumes() * self.h


@dataclass(frozen=True)
class FarCondition:
    """Robin condition u_t + rho (u - target) = 0 at t = T."""

    rho: float
    target: float


def lb_matrix(grid: CylGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tridiagonal (lower, diag, upper) of the discrete axisymmetric Laplacian."""
    M, h, n = grid.theta_intervals, grid.h, grid.n
    th = grid.theta
    # finite volume: plain sin^{n-2}(θ_i) in the denominator loses
    # consistency next to the poles once n > 3
    w = grid.volumes()
    wh = np.sin(th[:-1] + h / 2) ** (n - 2)  # w_{i+1/2}, i = 0..M-1
    lo = np.zeros(M + 1)
    up = np.zeros(M + 1)
    dg = np.zeros(M + 1)
    inner = slice(1, M)
    up[inner] = wh[1:] / (w[inner] * h * h)
    lo[inner] = wh[:-1] / (w[inner] * h * h)
    dg[inner] = -(up[inner] + lo[inner])
    # pole stencil: Δu -> (n-1) u'' with the even reflection u_{-1} = u_1
    pole = 2.0 * (n - 1) / (h * h)
    up[0], dg[0] = pole, -pole
    lo[M], dg[M] = pole, -pole
    return lo, dg, up


def _apply_lb(u: np.ndarray, lo, dg, up) -> np.ndarray:
    out = dg * u
    out[..., :-1] += up[:-1] * u[..., 1:]
    out[..., 1:] += lo[1:] * u[..., :-1]
    return out


def laplace_beltrami_axisym(row, grid: CylGrid) -> np.ndarray:
    """Discrete Δ_S applied to a row (or stack of rows) of nodal values."""
    row = np.asarray(row, dtype=float)
    return _apply_lb(row, *lb_matrix(grid))


@dataclass(frozen=True)
class CylinderField:
    values: np.ndarray  # shape (t nodes, theta nodes)
    grid: CylGrid
    params: CylinderParams

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite values")
        if not np.all(v > 0):
            raise ValueError("field must be strictly positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def radial(cls, profile, grid: CylGrid, params: CylinderParams) -> "CylinderField":
        prof = np.asarray(profile, dtype=float)
        return cls(np.repeat(prof[:, None], grid.theta_intervals + 1, axis=1), grid, params)


def _power(u, p):
    return np.power(u, p)


def _ghost(u_last, u_prev, grid: CylGrid, far: FarCondition):
    return u_prev - 2.0 * grid.k * far.rho * (u_last - far.target)


def _interior(U: np.ndarray, grid: CylGrid, cp: CylinderParams, lb, ghost_row) -> np.ndarray:
    """PDE rows j = 1..N given the full array U (rows 0..N) and the ghost row."""
    a, b, p, _ = cp.floats()
    k = grid.k
    ext = np.vstack([U, ghost_row[None, :]])
    um, uc, up_ = ext[:-2], ext[1:-1], ext[2:]
    return ((up_ - 2.0 * uc + um) / (k * k) + b * (up_ - um) / (2.0 * k)
            + _apply_lb(uc, *lb) + a * uc + _power(uc, p))


def assemble_residual(f: CylinderField, boundary: np.ndarray | None = None,
                      far: FarCondition | None = None) -> np.ndarray:
    """Residual matrix of the discrete problem, same shape as the field.

    Row 0 carries u - boundary (zero when no boundary data is given), rows
    1..N-1 the PDE, and row N the PDE with the Robin ghost node (or, without
    a far condition, zeros: only rows 1..N-1 are then meaningful).
    """
    U = f.values
    g = U[0] if boundary is None else np.asarray(boundary, dtype=float)
    lb = lb_matrix(f.grid)
    R = np.empty_like(U)
    R[0] = U[0] - g
    if far is None:
        R[1:-1] = _interior(U[:-1], f.grid, f.params, lb, U[-1])
        R[-1] = 0.0
    else:
        R[1:] = _interior(U, f.grid, f.params, lb, _ghost(U[-1], U[-2], f.grid, far))
    return R


@dataclass(frozen=True)
class NewtonReport:
    iterations: int
    residual: float
    damping: tuple[float, ...]
    converged: bool
    message: str = ""
    history: tuple[float, ...] = field(default=())


class SingularJacobian(np.linalg.LinAlgError):
    pass


def _block_solve(sub, diag_blocks, sup, rhs):
    """Block-tridiagonal elimination with diagonal off-diagonal blocks.

    Row j reads  sub[j] * x[j-1] + D[j] x[j] + sup[j] * x[j+1] = rhs[j].
    """
    N = len(diag_blocks)
    G = []  # S_j^{-1} diag(sup_j)
    y = []  # S_j^{-1} (rhs_j - sub_j * y_{j-1})
    S_prev_G = None
    for j in range(N):
        S = diag_blocks[j]
        r = rhs[j]
        if j > 0:
            S = S - sub[j][:, None] * S_prev_G
            r = r - sub[j] * y[-1]
        try:
            lu = sla.lu_factor(S, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SingularJacobian(str(exc)) from exc
        if np.any(np.diag(lu[0]) == 0):
            raise SingularJacobian(f"zero pivot in block {j}")
        S_prev_G = sla.lu_solve(lu, np.diag(sup[j]), check_finite=False) if j < N - 1 else None
        G.append(S_prev_G)
        y.append(sla.lu_solve(lu, r, check_finite=False))
    x = np.empty_like(np.asarray(rhs))
    x[-1] = y[-1]
    for j in range(N - 2, -1, -1):
        x[j] = y[j] - G[j] @ x[j + 1]
    return x


def _newton_step(U, grid, cp, lb, far):
    """Newton correction for rows 1..N (row 0 is fixed Dirichlet data)."""
    a, b, p, _ = cp.floats()
    k = grid.k
    lo, dg, up = lb
    R = _interior(U, grid, cp, lb, _ghost(U[-1], U[-2], grid, far))
    cm = 1.0 / (k * k) - b / (2.0 * k)
    cp_ = 1.0 / (k * k) + b / (2.0 * k)
    N, m = U.shape[0] - 1, U.shape[1]
    base = np.diag(dg) + np.diag(up[:-1], 1) + np.diag(lo[1:], -1)
    blocks = []
    for j in range(1, N + 1):
        d = -2.0 / (k * k) + a + p * np.power(U[j], p - 1.0)
        if j == N:
            d = d - 2.0 * k * far.rho * cp_
        blocks.append(base + np.diag(d))
    sub = np.full((N, m), cm)
    sub[-1] += cp_  # ghost folds u_{N+1} onto u_{N-1}
    sup = np.full((N, m), cp_)
    return _block_solve(sub, blocks, sup, -R), float(np.max(np.abs(R)))


GUESSES = ("exponential", "linear")


def initial_guess(boundary, far: FarCondition, grid: CylGrid, kind: str = "exponential",
                  floor: float = 1e-6) -> np.ndarray:
    """Blend from the boundary data to the far target, floored.

    ``linear`` interpolates linearly in t. ``exponential`` relaxes at the
    Robin rate, target + (g - target) e^{-rho t}; it is the default because
    when both linearised radial modes decay, the far condition only sees
    e^{-T}-sized differences and a guess whose residual does not decay drives
    Newton corrections of size e^{T}.
    """
    g = np.asarray(boundary, dtype=float)[None, :]
    if kind == "linear":
        s = (grid.t / grid.t_max)[:, None]
        blend = 1.0 - s
    elif kind == "exponential":
        blend = np.exp(-max(far.rho, 0.0) * grid.t)[:, None]
    else:
        raise ValueError(f"unknown guess {kind!r}; choose from {GUESSES}")
    return np.maximum(blend * g + (1.0 - blend) * far.target, floor)


def newton_solve(boundary, far: FarCondition, grid: CylGrid, params: CylinderParams,
                 guess: np.ndarray | str = "exponential", tol: float = 1e-10, max_iter: int = 50,
                 max_halvings: int = 20) -> tuple[CylinderField | None, NewtonReport]:
    """Damped Newton for the discrete problem.

    Each correction is halved until the iterate stays positive and the
    residual max-norm decreases. Returns (field, report); the field is None
    only when the Jacobian is singular at the first iterate.
    """
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError(f"tol = {tol} outside [1e-12, 1e-6]")
    if float(params.b) < 0:
        raise ValueError("b < 0 is not supported")
    g = np.asarray(boundary, dtype=float)
    if g.shape != (grid.theta_intervals + 1,) or not np.all(g > 0):
        raise ValueError("boundary data must be a positive row on the theta grid")
    U = (initial_guess(g, far, grid, guess) if isinstance(guess, str)
         else np.array(guess, dtype=float))
    if U.shape != grid.shape:
        raise ValueError("guess has the wrong shape")
    if not np.all(U > 0):
        raise ValueError("initial guess must be strictly positive")
    U[0] = g
    lb = lb_matrix(grid)

    def resnorm(V):
        return float(np.max(np.abs(_interior(V, grid, params, lb, _ghost(V[-1], V[-2], grid, far)))))

    res = resnorm(U)
    damping: list[float] = []
    history = [res]
    it = 0
    msg = ""
    while res > tol and it < max_iter:
        try:
            dU, _ = _newton_step(U, grid, params, lb, far)
        except SingularJacobian as exc:
            msg = f"singular Jacobian: {exc}"
            break
        lam = 1.0
        accepted = False
        for _ in range(max_halvings + 1):
            V = U.copy()
            V[1:] += lam * dU
            if np.all(V > 0):
                r_new = resnorm(V)
                if r_new < res:
                    accepted = True
                    break
            lam *= 0.5
        it += 1
        if not accepted:
            msg = "line search failed"
            break
        U, res = V, r_new
        damping.append(lam)
        history.append(res)
    converged = res <= tol
    if not converged and not msg:
        msg = f"no convergence after {it} iterations"
    report = NewtonReport(it, res, tuple(damping), converged, msg, tuple(history))
    return CylinderField(U, grid, params), report


@dataclass(frozen=True)
class AveragedProfile:
    t: np.ndarray
    ubar: np.ndarray
    defect: np.ndarray


def spherical_average(f: CylinderField) -> AveragedProfile:
    q = f.grid.weights()
    ubar = f.values @ q / q.sum()
    defect = np.max(np.abs(f.values / ubar[:, None] - 1.0), axis=1)
    return AveragedProfile(f.grid.t, ubar, defect)


@dataclass(frozen=True)
class AveragedIdentity:
    """Both sides of the averaged equation at interior t nodes."""

    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    envelope: RateFit | None

    @property
    def mismatch(self) -> float:
        return float(np.max(np.abs(self.lhs - self.rhs)))


def averaged_residual(prof: AveragedProfile, f: CylinderField, floor: float = 1e-13,
                      t_skip: float = 1.0) -> AveragedIdentity:
    """ū'' + bū' + aū + ū^p against the spherical mean of -(u^p - ū^p).

    Differences are the same centred stencils the solver uses, so on a
    converged field the two sides agree up to the mean of the discrete
    residual (the discrete Laplacian has zero mean exactly). The envelope is
    a rate fit of |rhs| / ū^p over samples above ``floor``.
    """
    a, b, p, _ = f.params.floats()
    g = f.grid
    if len(prof.ubar) != g.shape[0]:
        raise ValueError("profile and field grids differ")
    k = g.k
    ub = prof.ubar
    lhs = ((ub[2:] - 2 * ub[1:-1] + ub[:-2]) / (k * k) + b * (ub[2:] - ub[:-2]) / (2 * k)
           + a * ub[1:-1] + ub[1:-1] ** p)
    q = g.weights()
    up = f.values[1:-1] ** p
    rhs = -((up @ q) / q.sum() - ub[1:-1] ** p)
    t = g.t[1:-1]
    ratio = np.abs(rhs) / ub[1:-1] ** p
    keep = (ratio > floor) & (t >= t_skip)
    env = None
    try:
        env = fit_rate(t[keep], ratio[keep], 0.0, envelope=False)
    except FitError:
        env = None
    return AveragedIdentity(t, lhs, rhs, env)


def symmetry_rate(prof: AveragedProfile, floor: float = 1e-10, t_skip: float = 1.0,
                  exact_tol: float = 1e-12) -> RateFit:
    """Exponential rate of the symmetry defect.

    Radial data (defect below ``exact_tol`` everywhere) gives an exact
    outcome with infinite rate. Otherwise the fit uses every node past
    ``t_skip`` whose defect is above ``floor``; smaller defects are at the
    level of the solver tolerance and carry no rate information.
    """
    d = prof.defect
    if np.max(d) <= exact_tol:
        return RateFit(math.inf, 0.0, 1.0, (float(prof.t[0]), float(prof.t[-1])), exact=True)
    keep = (d > floor) & (prof.t >= t_skip)
    return fit_rate(prof.t[keep], d[keep], 0.0, envelope=False)


def _spline(f: CylinderField, pad: int = 3) -> RectBivariateSpline:
    # even reflection across both poles keeps the interpolant pole-regular
    th = f.grid.theta
    h = f.grid.h
    V = f.values
    th_ext = np.concatenate([-th[pad:0:-1], th, 2 * math.pi - th[-2:-pad - 2:-1]])
    V_ext = np.hstack([V[:, pad:0:-1], V, V[:, -2:-pad - 2:-1]])
    assert np.allclose(np.diff(th_ext), h)
    return RectBivariateSpline(f.grid.t, th_ext, V_ext, kx=3, ky=3, s=0)


def cross_operator_residual(f: CylinderField, far: FarCondition) -> float:
    """Max-norm residual of ``f`` interpolated onto the refined grid.

    The field is carried to the grid with half the spacing in both
    directions by bicubic interpolation and the refined discrete operator
    is applied at rows 1..N. For a second-order scheme the value drops by
    about 4 when ``f`` itself comes from a grid twice as fine.
    """
    fine = f.grid.refined()
    s = _spline(f)
    V = s(fine.t, fine.theta)
    # boundary row is data, not a degree of freedom
    V[0] = s(np.zeros(1), fine.theta)[0]
    ff = CylinderField(V, fine, f.params)
    R = assemble_residual(ff, far=far)
    return float(np.max(np.abs(R[1:])))


def _fmt(x) -> str:
    return str(x) if not isinstance(x, float) else repr(x)


def write_field(path, f: CylinderField) -> None:
    """CSV: grid line, parameter line, then one row per t node: t, u(θ_0..θ_M)."""
    g, cp = f.grid, f.params
    with open(path, "w", newline="\n") as fh:
        fh.write(f"#grid,theta_intervals={g.theta_intervals},t_intervals={g.t_intervals},"
                 f"t_max={g.t_max!r},n={g.n}\n")
        fh.write(f"#params,a={_fmt(cp.a)},b={_fmt(cp.b)},p={_fmt(cp.p)},n={cp.n}\n")
        data = np.column_stack([g.t, f.values])
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def _kv(line: str, tag: str) -> dict[str, str]:
    parts = line.strip().split(",")
    if parts[0] != f"#{tag}":
        raise ValueError(f"expected a #{tag} header, got {line!r}")
    return dict(s.split("=", 1) for s in parts[1:])


def read_field(path) -> CylinderField:
    with open(path) as fh:
        gl = _kv(fh.readline(), "grid")
        pl = _kv(fh.readline(), "params")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    grid = CylGrid(int(gl["theta_intervals"]), int(gl["t_intervals"]), float(gl["t_max"]), int(gl["n"]))

    def num(s: str):
        return s if "/" in s else float(s)

    cp = CylinderParams(num(pl["a"]), num(pl["b"]), num(pl["p"]), int(pl["n"]))
    return CylinderField(data[:, 1:], grid, cp)
