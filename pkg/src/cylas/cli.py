"""Command line driver: ``cylas <command> [flags]``.

Settings come from three layers: built-in defaults, a flat ``key = value``
file given with ``--config``, then command-line flags. Each run writes into
``<out>/<command>/`` (``--out``, else ``$CYLAS_OUT``, else ``./cylas_out``) a
``manifest.txt`` plus CSV tables and SVG plots. Exit codes: 0 success,
1 failed run or unmet check, 2 usage error or inadmissible parameters.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import platform
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, acceptance, fitter, ode, pde, singularity
from .contour import contour_lines
from .params import (CylinderParams, BallParams, Regime, check_admissible, classify_regime, to_ball,
                     to_cylinder)
from .svg import PALETTE, Plot

__all__ = ["RunConfig", "UsageError", "main", "read_config"]

COMMANDS = ("classify", "portrait", "integrate", "period", "fit", "pde", "singularity", "verify")


class UsageError(ValueError):
    pass


class Inadmissible(ValueError):
    pass


def _exact_str(s: str) -> str:
    s = str(s).strip()
    try:
        Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    return s


def _number(s: str) -> float:
    return float(Fraction(_exact_str(s)))


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def _numbers(s: str) -> tuple[float, ...]:
    return tuple(_number(x) for x in str(s).replace(";", ",").split(",") if x.strip())


@dataclass(frozen=True)
class Opt:
    flag: str
    type: Callable
    default: object
    help: str
    flag_only: bool = False  # store_true switches

    @property
    def dest(self) -> str:
        return self.flag.lstrip("-").replace("-", "_")


CHART = [
    Opt("--a", _exact_str, None, "cylinder chart: coefficient a"),
    Opt("--b", _exact_str, None, "cylinder chart: damping b (default 0)"),
    Opt("--c", _exact_str, None, "ball chart: Hardy coefficient c"),
    Opt("--sigma", _exact_str, None, "ball chart: weight exponent sigma"),
    Opt("--p", _exact_str, None, "nonlinearity exponent p (both charts)"),
    Opt("--n", int, 3, "dimension n >= 3"),
]

COMMON = [
    Opt("--seed", int, 0, "random seed"),
    Opt("--timestamp", _bool, False, "add a generation-time comment to SVG files", True),
]

OPTIONS: dict[str, list[Opt]] = {
    "classify": CHART,
    "portrait": CHART + [
        Opt("--levels", _numbers, (), "comma-separated energy levels h0"),
        Opt("--grid", int, 121, "grid points per axis for the H table"),
        Opt("--samples", int, 400, "samples per orbit"),
        Opt("--tol", float, 1e-10, "integrator tolerance"),
    ],
    "integrate": CHART + [
        Opt("--psi0", _number, None, "initial psi"),
        Opt("--dpsi0", _number, 0.0, "initial psi'"),
        Opt("--t-max", float, 20.0, "end of the time interval"),
        Opt("--tol", float, ode.DEFAULT_TOL, "integrator tolerance"),
        Opt("--samples", int, 0, "uniform output samples (0: integrator steps)"),
    ],
    "period": CHART + [
        Opt("--h0", _number, None, "energy level in (h_min, 0)"),
        Opt("--cycles", int, 3, "periods integrated for the return map"),
        Opt("--tol", float, 1e-12, "integrator tolerance"),
        Opt("--rtol", float, 1e-6, "allowed relative gap between the two periods"),
    ],
    "fit": [
        Opt("--input", str, None, "CSV file with t and value columns"),
        Opt("--t-column", int, 0, "zero-based column of t"),
        Opt("--column", int, 1, "zero-based column of the values"),
        Opt("--target", _number, 0.0, "limit the values approach"),
        Opt("--window", _numbers, (), "t0,t1 of the fit window"),
        Opt("--envelope", str, "auto", "auto, on or off"),
        Opt("--power", _number, 0.0, "power k in c t^k e^{-gamma t}"),
    ],
    "pde": CHART + [
        Opt("--perturb", _number, 0.1, "boundary data c0 (1 + perturb cos(mode theta))"),
        Opt("--mode", int, 1, "angular mode of the boundary perturbation"),
        Opt("--t-max", float, 20.0, "length of the truncated cylinder"),
        Opt("--theta-intervals", int, 64, "intervals in theta"),
        Opt("--t-intervals", int, 400, "intervals in t"),
        Opt("--rho", _number, None, "far Robin rate (default alpha0)"),
        Opt("--target", _number, None, "far target value (default c0)"),
        Opt("--guess", str, "exponential", "initial guess: exponential or linear"),
        Opt("--newton-tol", float, 1e-10, "Newton residual tolerance"),
        Opt("--max-iter", int, 50, "Newton iteration cap"),
    ],
    "singularity": CHART + [
        Opt("--class", str, None, "asymptotic class of u (default: all)"),
        Opt("--samples", int, 10_000, "samples for the symmetry inequality"),
    ],
    "verify": [
        Opt("--only", str, None, "criteria numbers or module names, comma-separated"),
        Opt("--tol", float, ode.DEFAULT_TOL, "integrator tolerance for the ODE criteria"),
        Opt("--no-timing", _bool, False, "skip runtime budgets", True),
    ],
}

# command-specific default overrides of COMMON options
SEED_DEFAULT = {"verify": acceptance.VerifyConfig().seed}

HELP = {
    "classify": "regime, admissibility clauses, both charts and predicted rates",
    "portrait": "level sets of H over (psi', psi) for b = 0",
    "integrate": "integrate the radial ODE from one initial state",
    "period": "period of a closed orbit by quadrature and by return map",
    "fit": "fit an exponential rate to a CSV column",
    "pde": "solve the axisymmetric cylinder problem and measure symmetrization",
    "singularity": "removability verdicts and the symmetry inequality",
    "verify": "run the acceptance criteria",
}


def _options(cmd: str) -> list[Opt]:
    return OPTIONS[cmd] + COMMON


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cylas", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cylas {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, help=HELP[cmd], description=HELP[cmd])
        sp.add_argument("--config", default=argparse.SUPPRESS, help="key = value settings file")
        sp.add_argument("--out", default=argparse.SUPPRESS, help="output root")
        sp.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="print nothing on success")
        for o in _options(cmd):
            if o.flag_only:
                sp.add_argument(o.flag, dest=o.dest, action="store_true", default=argparse.SUPPRESS,
                                help=o.help)
            else:
                sp.add_argument(o.flag, dest=o.dest, type=o.type, default=argparse.SUPPRESS,
                                help=f"{o.help} (default {o.default!r})" if o.default not in (None, ())
                                else o.help)
    return parser


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys may use - or _."""
    out = {}
    with open(path) as fh:
        for no, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{no}: expected key = value, got {raw.strip()!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


@dataclass
class RunConfig:
    command: str
    settings: dict
    out_dir: Path
    quiet: bool = False
    params: CylinderParams | None = None
    chart: str = ""
    files: list[str] = field(default_factory=list)

    def __getitem__(self, key):
        return self.settings[key]

    def say(self, *lines: str) -> None:
        if not self.quiet:
            for s in lines:
                print(s)

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out_dir / name

    def metadata(self) -> dict:
        meta = {"command": self.command}
        meta.update({k: _show(v) for k, v in sorted(self.settings.items()) if v is not None and v != ()})
        return meta


def _show(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_show(x) for x in v)
    return str(v)


def _resolve_chart(s: dict) -> tuple[CylinderParams, str]:
    cyl = s.get("a") is not None or s.get("b") is not None
    ball = s.get("c") is not None or s.get("sigma") is not None
    if cyl and ball:
        raise UsageError("give either the cylinder chart (--a, --b) or the ball chart (--c, --sigma), not both")
    if s.get("p") is None:
        raise UsageError("missing --p")
    if ball:
        if s.get("c") is None or s.get("sigma") is None:
            raise UsageError("the ball chart needs both --c and --sigma")
        if Fraction(s["p"]) == 1:
            raise UsageError("p = 1 has no cylinder chart")
        return to_cylinder(BallParams(s["c"], s["sigma"], s["p"], s["n"])), "ball"
    if s.get("a") is None:
        raise UsageError("missing --a (or --c and --sigma)")
    return CylinderParams(s["a"], s.get("b") or "0", s["p"], s["n"]), "cylinder"


def build_config(cmd: str, cli: dict) -> RunConfig:
    opts = {o.dest: o for o in _options(cmd)}
    settings = {d: o.default for d, o in opts.items()}
    if cmd in SEED_DEFAULT:
        settings["seed"] = SEED_DEFAULT[cmd]
    if "config" in cli:
        for k, v in read_config(cli["config"]).items():
            if k in ("out", "quiet"):
                cli.setdefault(k, v if k == "out" else _bool(v))
                continue
            if k not in opts:
                raise UsageError(f"unknown setting {k!r} for {cmd}")
            try:
                settings[k] = opts[k].type(v)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"setting {k}: {exc}") from None
    settings.update({k: v for k, v in cli.items() if k in opts})
    root = Path(cli.get("out") or os.environ.get("CYLAS_OUT") or "cylas_out")
    rc = RunConfig(cmd, settings, root / cmd, bool(cli.get("quiet", False)))
    if "a" in opts:
        try:
            rc.params, rc.chart = _resolve_chart(settings)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(str(exc)) from None
    return rc


# ------------------------------------------------------------------ output

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def write_csv(path, header: list[str], rows) -> None:
    """Comma-separated, LF line ends, header names of the form ``name (unit)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def _versions() -> dict[str, str]:
    import numba
    import scipy
    return {"cylas": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def write_manifest(rc: RunConfig, status: int, seconds: float) -> None:
    lines = ["# cylas run manifest; the uncommented lines work as a --config file",
             f"# command = {rc.command}"]
    lines += [f"{k} = {_show(v)}" for k, v in sorted(rc.settings.items()) if v is not None and v != ()]
    lines.append("# run")
    if rc.params is not None:
        cp = rc.params
        lines.append(f"# cylinder chart = a {cp.a}, b {cp.b}, p {cp.p}, n {cp.n} (given in {rc.chart} chart)")
    for k, v in _versions().items():
        lines.append(f"# version {k} = {v}")
    lines.append(f"# exit status = {status}")
    lines.append(f"# wall time = {seconds:.3f} s")
    lines.append(f"# files = {', '.join(rc.files)}")
    (rc.out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _plot(rc: RunConfig, **kw) -> Plot:
    return Plot(metadata=rc.metadata(), **kw)


def _save(rc: RunConfig, plot: Plot, name: str) -> None:
    stamp = time.strftime("%Y-%m-%dT%H:%M:%S") if rc["timestamp"] else None
    plot.save(rc.path(name), stamp)


def _regime_name(cp: CylinderParams) -> str:
    try:
        return classify_regime(cp).value
    except ValueError:
        return "undefined (b < 0)"


def _require_admissible(rc: RunConfig) -> None:
    rep = check_admissible(rc.params)
    if not rep.passed:
        raise Inadmissible("inadmissible parameters: " + ", ".join(rep.failed()))


# ---------------------------------------------------------------- commands

def cmd_classify(rc: RunConfig) -> int:
    cp = rc.params
    bp = to_ball(cp)
    rep = check_admissible(cp)
    a, b, p, n = cp.floats()
    rc.say(f"parameters (given in the {rc.chart} chart)",
           f"  cylinder: a = {cp.a}, b = {cp.b}, p = {cp.p}, n = {n}",
           f"  ball:     c = {bp.c}, sigma = {bp.sigma}  ({float(bp.c):.12g}, {float(bp.sigma):.12g})",
           f"  k = (n+b-2)/2 = {cp.k:.12g}",
           f"regime: {_regime_name(cp)}",
           f"admissible: {'yes' if rep.passed else 'no'}")
    rc.say(*rep.lines())
    rows = [(c.name, "cylinder", c.passed, c.detail) for c in rep.clauses]
    rows += [(c.name, "ball", c.passed, c.detail) for c in rep.ball_clauses]
    write_csv(rc.path("clauses.csv"), ["clause (text)", "chart (text)", "passed (bool)", "detail (text)"], rows)

    if a < 0:
        rc.say(f"equilibria: 0, c0 = {cp.c0:.12g}; h_min = {ode.h_min(cp):.12g}")
    pred_rows = []
    rc.say("predicted exponents:")
    for br in ode.BRANCHES:
        try:
            d = ode.predicted_decay(br, cp)
        except ValueError as exc:
            rc.say(f"  {br}: not applicable ({exc})")
            pred_rows.append((br, False, None, None, None, None, None, str(exc)))
            continue
        lo, hi = d.bracket if d.bracket else (None, None)
        extra = f", t^{d.power} correction" if d.power else ""
        extra += f", bracket [{lo:.6g}, {hi:.6g}]" if d.bracket else ""
        extra += f" ({d.note})" if d.note else ""
        label = {"I-decay": "homoclinic decay rate", "II-decay": "decay rate to 0",
                 "II-converge": "convergence rate to c0 (alpha0)", "III": "decay rate"}[br]
        rc.say(f"  {br}: {label} {d.rate:.12g}{extra}")
        pred_rows.append((br, True, d.rate, d.power, lo, hi, d.barrier, d.note))
    if b == 0 and a < 0:
        small = 2 * math.pi / math.sqrt(-a * (p - 1))
        rc.say(f"  I-periodic: periods from {small:.12g} (small amplitude) up to infinity (homoclinic)")
        pred_rows.append(("I-periodic", True, None, None, small, math.inf, None, "period range"))
    write_csv(rc.path("predictions.csv"),
              ["branch (text)", "applicable (bool)", "rate (1/t)", "power (1)", "bracket_lo (1/t)",
               "bracket_hi (1/t)", "barrier (1/t)", "note (text)"], pred_rows)
    return 0 if rep.passed else 2


def _potential(beta, a, p):
    return a * beta * beta + 2.0 / (p + 1) * np.abs(beta) ** (p + 1)


def _outer_root(h: float, a: float, p: float) -> float:
    """Largest beta > 0 with V(beta) = h (V increasing past its minimum)."""
    from scipy.optimize import brentq
    lo = (-a) ** (1 / (p - 1)) if a < 0 else 0.0
    hi = max(1.0, 2 * lo)
    while _potential(hi, a, p) < h:
        hi *= 2
    if _potential(lo, a, p) >= h:
        return lo
    return brentq(lambda x: _potential(x, a, p) - h, lo, hi, xtol=1e-15, rtol=1e-15)


def _escaping_orbit(h: float, cp: CylinderParams, tol: float, samples: int):
    a, _, p, _ = cp.floats()
    top = _outer_root(h, a, p)
    tr = ode.integrate(ode.PhaseState(top, 0.0), (0.0, 100.0), cp, tol=tol)
    # step mesh thinned to about samples/2 points
    every = max(1, len(tr) // max(1, samples // 2))
    t, psi, dpsi = tr.times[::every], tr.psi[::every], tr.dpsi[::every]
    # b = 0 is time-reversible: the other half is the mirror image
    return (np.concatenate([-t[:0:-1], t]), np.concatenate([psi[:0:-1], psi]),
            np.concatenate([-dpsi[:0:-1], dpsi]))


def cmd_portrait(rc: RunConfig) -> int:
    cp = rc.params
    a, b, p, n = cp.floats()
    if b != 0:
        print(f"regime mismatch: portrait needs b = 0 (the energy is conserved only then), got b = {cp.b}",
              file=sys.stderr)
        return 1
    levels = list(rc["levels"])
    if not levels:
        levels = [ode.h_min(cp), ode.h_min(cp) / 2, 0.0] if a < 0 else [0.25, 0.5, 1.0]
    floor = ode.h_min(cp) if a < 0 else 0.0
    usable = []
    for h in levels:
        if h < floor - 1e-12 or (a >= 0 and h <= 0):
            print(f"warning: level {h:g} is empty for these parameters; skipped", file=sys.stderr)
            continue
        usable.append(h)
    if not usable:
        print("no non-empty level to draw", file=sys.stderr)
        return 1

    psi_hi = 1.15 * max(_outer_root(max(h, floor), a, p) for h in usable + [0.0])
    dpsi_hi = 1.15 * math.sqrt(max(max(usable) - floor, 1e-12))
    m = rc["grid"]
    psi = np.linspace(0.0, psi_hi, m)
    dpsi = np.linspace(-dpsi_hi, dpsi_hi, m)
    Hgrid = dpsi[None, :] ** 2 + _potential(psi, a, p)[:, None]   # rows psi, columns psi'
    write_csv(rc.path("levels.csv"), ["dpsi (1)", "psi (1)", "H (1)"],
              ((dpsi[j], psi[i], Hgrid[i, j]) for i in range(m) for j in range(m)))

    plot = _plot(rc, title=f"H(psi', psi), a = {cp.a}, p = {cp.p}", xlabel="psi'", ylabel="psi")
    crows, orows = [], []
    for k, h in enumerate(usable):
        color = PALETTE[k % len(PALETTE)]
        label = f"h0 = {h:.6g}"
        kind = ode.classify_level(h, cp) if a < 0 else ode.OrbitClass.LEAVES_POSITIVE_CONE
        if kind == ode.OrbitClass.EQUILIBRIUM:
            # the minimum level is the single point (0, c0)
            plot.point(0.0, cp.c0, color, label + " (equilibrium)")
            crows.append((h, 0, 0.0, cp.c0))
            orows.append((h, kind, 0.0, cp.c0, 0.0, h))
            continue
        for li, line in enumerate(contour_lines(dpsi, psi, Hgrid, h)):
            plot.line(line[:, 0], line[:, 1], color, label)
            crows.extend((h, li, x, y) for x, y in line)
        if kind == ode.OrbitClass.PERIODIC:
            orb = ode.orbit_period(h, cp)
            t = np.linspace(0.0, orb.period, rc["samples"] + 1)
            tr = ode.integrate(ode.PhaseState(orb.beta_minus, 0.0), (0.0, orb.period), cp,
                               tol=rc["tol"], t_eval=t)
            ps, ds = tr.at(t)
        elif kind == ode.OrbitClass.HOMOCLINIC:
            L = 12.0 / math.sqrt(-a)
            t = np.linspace(-L, L, rc["samples"] + 1)
            ps, ds, _ = ode.homoclinic_derivatives(t, 1.0, cp)
            plot.point(0.0, 0.0, color)
        else:
            t, ps, ds = _escaping_orbit(h, cp, rc["tol"], rc["samples"])
        H = ode.hamiltonian((ps, ds), cp)
        orows.extend((h, kind, tt, a_, b_, hh) for tt, a_, b_, hh in zip(t, ps, ds, H))
    write_csv(rc.path("contours.csv"), ["level (1)", "line (index)", "dpsi (1)", "psi (1)"], crows)
    write_csv(rc.path("orbits.csv"), ["level (1)", "kind (text)", "t (1)", "psi (1)", "dpsi (1)", "H (1)"],
              orows)
    _save(rc, plot, "portrait.svg")
    rc.say(f"{len(usable)} levels, {len(crows)} contour points, {len(orows)} orbit samples -> {rc.out_dir}")
    return 0


def cmd_integrate(rc: RunConfig) -> int:
    cp = rc.params
    if rc["psi0"] is None:
        raise UsageError("missing --psi0")
    t_max = rc["t_max"]
    t_eval = np.linspace(0.0, t_max, rc["samples"]) if rc["samples"] > 0 else None
    tr = ode.integrate(ode.PhaseState(rc["psi0"], rc["dpsi0"]), (0.0, t_max), cp, tol=rc["tol"],
                       t_eval=t_eval)
    _, H = ode.energy_along(tr)
    if t_eval is None:
        table = (tr.times, tr.psi, tr.dpsi, H)
    else:
        te = t_eval[t_eval <= tr.t_end]
        ps, ds = tr.at(te)
        table = (te, ps, ds, ode.hamiltonian((ps, ds), cp))
    write_csv(rc.path("trajectory.csv"), ["t (1)", "psi (1)", "dpsi (1)", "H (1)"], zip(*table))
    a, b, p, _ = cp.floats()
    kinds = ["min" if -b * d - a * s - s ** p > 0 else "max" for s, d in zip(tr.event_psi, tr.event_dpsi)]
    write_csv(rc.path("events.csv"), ["t (1)", "psi (1)", "dpsi (1)", "kind (text)"],
              zip(tr.event_times, tr.event_psi, tr.event_dpsi, kinds))
    lines = [f"termination = {tr.termination}", f"t_end = {tr.t_end!r}", f"samples = {len(tr)}",
             f"events = {len(tr.event_times)}", f"H(0) = {float(H[0])!r}", f"H(end) = {float(H[-1])!r}"]
    try:
        cls = fitter.classify_asymptotics(tr, cp)
        lines.append(f"class = {cls.tag}")
        if cls.rate is not None:
            lines.append(f"fitted rate = {cls.rate.gamma!r} (r2 {cls.rate.r2:.6f})")
        if cls.predicted is not None:
            lines.append(f"predicted rate = {cls.predicted.rate!r} ({cls.predicted.branch})")
        if cls.period is not None:
            lines.append(f"period = {cls.period.period!r}")
        if cls.reason:
            lines.append(f"note = {cls.reason}")
    except ValueError as exc:
        lines.append(f"class = not available ({exc})")
    rc.path("report.txt").write_text("\n".join(lines) + "\n")
    plot = _plot(rc, title=f"psi(t) from ({rc['psi0']:g}, {rc['dpsi0']:g})", xlabel="t", ylabel="value")
    plot.line(tr.times, tr.psi, PALETTE[0], "psi")
    plot.line(tr.times, tr.dpsi, PALETTE[1], "psi'", dash=True)
    _save(rc, plot, "trajectory.svg")
    rc.say(*lines)
    return 0


def cmd_period(rc: RunConfig) -> int:
    cp = rc.params
    try:
        regime = classify_regime(cp)
    except ValueError:
        regime = None
    if regime is not Regime.I:
        print("regime mismatch: closed orbits exist only for b = 0, a < 0", file=sys.stderr)
        return 1
    if rc["h0"] is None:
        raise UsageError("missing --h0")
    h0 = rc["h0"]
    orb = ode.orbit_period(h0, cp)
    cycles = max(1, rc["cycles"])
    tr = ode.integrate(ode.PhaseState(orb.beta_minus, 0.0), (0.0, (cycles + 0.5) * orb.period), cp,
                       tol=rc["tol"])
    mins = tr.event_times[tr.event_psi < cp.c0]
    returns = np.diff(np.concatenate([[0.0], mins]))
    T_ret = float(np.mean(returns))
    gap = abs(T_ret - orb.period) / orb.period
    rows = [("quadrature", orb.period, 0.0), ("return-map", T_ret, gap)]
    rows += [(f"return-{k + 1}", r, abs(r - orb.period) / orb.period) for k, r in enumerate(returns)]
    write_csv(rc.path("period.csv"), ["method (text)", "period (1)", "rel_gap (1)"], rows)
    rc.say(f"h0 = {h0!r}: turning points {orb.beta_minus:.12g}, {orb.beta_plus:.12g}",
           f"quadrature period = {orb.period!r}",
           f"return-map period = {T_ret!r} over {len(returns)} returns",
           f"relative gap = {gap:.3e} (allowed {rc['rtol']:g})")
    return 0 if gap <= rc["rtol"] else 1


def _read_table(path, tcol: int, vcol: int) -> tuple[np.ndarray, np.ndarray]:
    t, v = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                tt, vv = float(row[tcol]), float(row[vcol])
            except (ValueError, IndexError):
                continue  # header or malformed row
            t.append(tt)
            v.append(vv)
    return np.array(t), np.array(v)


def cmd_fit(rc: RunConfig) -> int:
    if not rc["input"]:
        raise UsageError("missing --input")
    t, v = _read_table(rc["input"], rc["t_column"], rc["column"])
    window = rc["window"]
    if window and len(window) != 2:
        raise UsageError("--window takes two numbers t0,t1")
    env = {"auto": "auto", "on": True, "off": False}.get(rc["envelope"])
    if env is None:
        raise UsageError("--envelope must be auto, on or off")
    fit = fitter.fit_rate(t, v, rc["target"], tuple(window) or None, env, rc["power"])
    write_csv(rc.path("fit.csv"),
              ["gamma (1/t)", "c (1)", "r2 (1)", "t_lo (t)", "t_hi (t)", "envelope (bool)", "power (1)",
               "points (count)"],
              [(fit.gamma, fit.c, fit.r2, fit.window[0], fit.window[1], fit.envelope, fit.power, fit.npoints)])
    plot = _plot(rc, title=f"rate fit: gamma = {fit.gamma:.6g}", xlabel="t", ylabel="|value - target|", logy=True)
    plot.line(t, np.abs(v - rc["target"]), PALETTE[0], "data")
    tf = np.linspace(*fit.window, 200)
    plot.line(tf, fit.c * tf ** fit.power * np.exp(-fit.gamma * tf), PALETTE[1], "fit", dash=True)
    _save(rc, plot, "fit.svg")
    rc.say(f"gamma = {fit.gamma!r}", f"c = {fit.c!r}", f"r2 = {fit.r2:.9f}",
           f"window = [{fit.window[0]:g}, {fit.window[1]:g}], points = {fit.npoints}, envelope = {fit.envelope}")
    return 0


def cmd_pde(rc: RunConfig) -> int:
    cp = rc.params
    a, b, p, n = cp.floats()
    if a >= 0 and (rc["rho"] is None or rc["target"] is None):
        raise UsageError("a >= 0 has no c0: give --rho and --target for the far condition")
    target = rc["target"] if rc["target"] is not None else cp.c0
    rho = rc["rho"] if rc["rho"] is not None else ode.linearized_roots_at_c0(cp).alpha0
    eps = rc["perturb"]
    if not 0 <= eps < 1:
        raise UsageError("--perturb must lie in [0, 1) to keep the boundary data positive")
    grid = pde.CylGrid(rc["theta_intervals"], rc["t_intervals"], rc["t_max"], n)
    far = pde.FarCondition(rho, target)
    g = target * (1 + eps * np.cos(rc["mode"] * grid.theta))
    f, rep = pde.newton_solve(g, far, grid, cp, guess=rc["guess"], tol=rc["newton_tol"],
                              max_iter=rc["max_iter"])
    lines = [f"grid = {grid.theta_intervals} x {grid.t_intervals}, t_max = {grid.t_max!r}, n = {n}",
             f"far condition: rho = {rho!r}, target = {target!r}",
             f"newton: converged = {rep.converged}, iterations = {rep.iterations}, "
             f"residual = {rep.residual:.3e}, "
             f"min damping = {min(rep.damping, default=1.0):g}"]
    if rep.message:
        lines.append(f"newton message: {rep.message}")
    status = 0
    if f is None or not rep.converged:
        rc.path("report.txt").write_text("\n".join(lines) + "\n")
        print("\n".join(lines), file=sys.stderr)
        return 1
    pde.write_field(rc.path("field.csv"), f)
    prof = pde.spherical_average(f)
    write_csv(rc.path("defect.csv"), ["t (1)", "ubar (1)", "defect (1)"], zip(prof.t, prof.ubar, prof.defect))
    ident = pde.averaged_residual(prof, f)
    write_csv(rc.path("averaged.csv"), ["t (1)", "lhs (1)", "rhs (1)"], zip(ident.t, ident.lhs, ident.rhs))
    try:
        rate = pde.symmetry_rate(prof)
        lines.append(f"symmetry rate = {rate.gamma!r} (r2 {rate.r2:.6f}, {rate.npoints} points)"
                     if not rate.exact else "symmetry rate = inf (radial data, defect at round-off)")
    except fitter.FitError as exc:
        lines.append(f"symmetry rate = not resolved ({exc})")
        status = 1
    lines.append(f"averaged identity mismatch = {ident.mismatch:.3e}")
    if ident.envelope is not None:
        lines.append(f"forcing envelope rate = {ident.envelope.gamma!r}")
    lines.append(f"cross-operator residual = {pde.cross_operator_residual(f, far):.6e}")
    rc.path("report.txt").write_text("\n".join(lines) + "\n")
    plot = _plot(rc, title="symmetry defect max|u/ubar - 1|", xlabel="t", ylabel="defect", logy=True)
    plot.line(prof.t, prof.defect, PALETTE[0], "defect")
    _save(rc, plot, "defect.svg")
    rc.say(*lines)
    return status


TAGS = (fitter.Tag.FAST_DECAY, fitter.Tag.CONSTANT, fitter.Tag.PERIODIC, fitter.Tag.REGIME_III)


def cmd_singularity(rc: RunConfig) -> int:
    cp = rc.params
    _require_admissible(rc)
    tags = [rc["class"]] if rc["class"] else list(TAGS)
    for t in tags:
        if t not in TAGS:
            raise UsageError(f"unknown class {t!r}; choose from {', '.join(TAGS)}")
    rows, status = [], 0
    for tag in tags:
        try:
            v = singularity.classify_singularity(cp, tag)
        except singularity.UnsupportedSingularityCase as exc:
            rc.say(f"{tag}: no verdict ({exc})")
            rows.append((tag, "unsupported", None, None, None, None, str(exc)))
            status = 1 if rc["class"] else status
            continue
        bound = "at most " if not v.two_sided else ""
        log = " times |log|x||" if v.log_factor else ""
        rc.say(f"{tag}: {v.cls}, v ~ |x|^-{bound}{v.exponent:.12g}{log}, "
               f"H1_loc {'yes' if v.h1loc else 'no'}" + (f" ({v.note})" if v.note else ""))
        rows.append((tag, v.cls, v.exponent, v.h1loc, v.two_sided, v.log_factor, v.note))
    write_csv(rc.path("verdicts.csv"), ["class (text)", "verdict (text)", "exponent (1)", "h1loc (bool)",
                                        "two_sided (bool)", "log_factor (bool)", "note (text)"], rows)
    chk = singularity.check_symmetry_condition(to_ball(cp), rc["samples"], rc["seed"])
    write_csv(rc.path("symmetry.csv"), ["samples (count)", "seed (1)", "passed (bool)", "max_ratio (1)"],
              [(chk.samples, rc["seed"], chk.passed, chk.max_ratio)])
    rc.say(f"symmetry inequality: {'holds' if chk.passed else 'violated'} on {chk.samples} samples, "
           f"max lhs/rhs = {chk.max_ratio:.6f}")
    if chk.witness:
        rc.say(f"  witness: {chk.witness}")
    return status


def cmd_verify(rc: RunConfig) -> int:
    try:
        crit = acceptance.select(rc["only"].split(",") if rc["only"] else None)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg = acceptance.VerifyConfig(seed=rc["seed"], tol=rc["tol"], timing=not rc["no_timing"])
    outcomes = acceptance.run_criteria(crit, cfg, on_result=lambda r: rc.say(r.line()))
    for o in outcomes:
        header = ["passed (bool)"] + [f"{name} ({unit})" for name, _, unit in o.rows]
        write_csv(rc.path(f"criterion_{o.key:02d}.csv"), header, [[o.passed] + [v for _, v, _ in o.rows]])
    write_csv(rc.path("summary.csv"), ["criterion (index)", "title (text)", "passed (bool)"],
              [(o.key, o.title, o.passed) for o in outcomes])
    # timings vary run to run, so they stay out of the CSVs
    rc.path("timings.txt").write_text("".join(o.line() + "\n" for o in outcomes))
    failed = [o.key for o in outcomes if not o.passed]
    rc.say(f"{len(outcomes) - len(failed)}/{len(outcomes)} criteria passed")
    return 1 if failed else 0


RUNNERS = {
    "classify": cmd_classify, "portrait": cmd_portrait, "integrate": cmd_integrate,
    "period": cmd_period, "fit": cmd_fit, "pde": cmd_pde, "singularity": cmd_singularity,
    "verify": cmd_verify,
}


_NEGATIVE = re.compile(r"^-(\d|\.\d)")
OUTPUT_SUFFIXES = (".csv", ".svg", ".txt")


def _join_negative_values(argv: list[str]) -> list[str]:
    # argparse reads "-1/4" as an option; bind it to the flag before it
    out: list[str] = []
    for tok in argv:
        if _NEGATIVE.match(tok) and out and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def _clear_outputs(d: Path) -> None:
    # stale tables from an earlier run with other settings must not linger
    for f in d.iterdir():
        if f.is_file() and f.suffix in OUTPUT_SUFFIXES:
            f.unlink()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cli = vars(ns)
    cmd = cli.pop("command")
    try:
        rc = build_config(cmd, cli)
    except (UsageError, OSError) as exc:
        print(f"cylas {cmd}: usage error: {exc}", file=sys.stderr)
        return 2
    rc.out_dir.mkdir(parents=True, exist_ok=True)
    _clear_outputs(rc.out_dir)
    t0 = time.perf_counter()
    try:
        status = RUNNERS[cmd](rc)
    except UsageError as exc:
        print(f"cylas {cmd}: usage error: {exc}", file=sys.stderr)
        status = 2
    except Inadmissible as exc:
        print(f"cylas {cmd}: {exc}", file=sys.stderr)
        status = 2
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, OSError) as exc:
        print(f"cylas {cmd}: error: {exc}", file=sys.stderr)
        status = 1
    write_manifest(rc, status, time.perf_counter() - t0)
    return status


if __name__ == "__main__":
    sys.exit(main())
