"""Command-line front end.

Problems are described in a JSON file with the sections ``problem``,
``weight``, ``signals``, ``contour``, ``grid``, ``outputs`` and the optional
``compare``.  Weights and signals are given as breakpoint/coefficient lists
(local power basis on each piece, see :class:`nonlocal_heat.piecewise.PiecewisePolynomial`)::

    {
      "problem": {"horizon_T": 0.1},
      "weight": {"breakpoints": [0, 0.2, 1], "coeffs": [[1.0], [0.0]]},
      "signals": {
        "q0": {"breakpoints": [0, 0.25, 0.75, 1], "coeffs": [[0], [1], [0]]},
        "g0": {"breakpoints": [0, 0.1], "coeffs": [[0]]},
        "g1": {"breakpoints": [0, 0.1], "coeffs": [[0]]}
      },
      "contour": null,
      "grid": {"xs": {"linspace": [0.1, 0.9, 9]}, "ts": [0.02, 0.05, 0.1]},
      "outputs": {"csv": null, "tolerance": 1e-6},
      "compare": {"fd_n_space": 800, "fd_dt": 1e-4, "m_list": [10, 20, 40], "j_list": [10, 20, 50]}
    }

Missing signals default to zero and ``contour: null`` selects the contour
automatically.  Every command prints a small table and, with ``--out``,
writes it as CSV; ``solve`` writes the columns ``x,t,re_q,im_q,trunc_est``.

Exit codes: 0 success, 2 hypothesis violation, 3 tolerance failure,
4 config parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from . import transforms as tr
from .contours import ContourSpec, count_zeros
from .multipoint import dirichlet_limit_weight, evaluate_m, from_weight
from .oracle import FdConfig, OracleConfigError, fd_solve, series_solve_dirichlet
from .piecewise import SpaceSignal, TimeSignal
from .solver import HeatProblem, NonlocalModel, PoleRiskError, evaluate_grid, residuals
from .weights import HypothesisViolation, UnsupportedOperation, Weight, zero_bound

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_TOLERANCE = 3
EXIT_CONFIG = 4

SWEEP_SLOPE_MAX = -0.8
DECAY_SLOPE_MINUS = -0.9
DECAY_SLOPE_PLUS = 0.1
CENSUS_HALF_WIDTH = 40.0
CENSUS_HEIGHT = 20.0
DEFAULT_MAX_LAMBDA = 1e4

Axis = Union[list, dict]


class ConfigError(ValueError):
    pass


# -- configuration -----------------------------------------------------------

def _axis_values(spec: Axis, name: str) -> np.ndarray:
    if isinstance(spec, dict):
        if set(spec) != {"linspace"} or len(spec["linspace"]) != 3:
            raise ConfigError(f"grid.{name}: expected a list or {{'linspace': [start, stop, n]}}")
        a, b, n = spec["linspace"]
        if int(n) != n or n < 1:
            raise ConfigError(f"grid.{name}: linspace count must be a positive integer")
        return np.linspace(float(a), float(b), int(n))
    vals = np.asarray(spec, dtype=float)
    if vals.ndim != 1 or vals.size == 0:
        raise ConfigError(f"grid.{name}: need a nonempty list")
    return vals


@dataclass(frozen=True)
class GridSpec:
    xs: Axis
    ts: Axis

    def values(self) -> tuple[np.ndarray, np.ndarray]:
        return _axis_values(self.xs, "xs"), _axis_values(self.ts, "ts")


@dataclass(frozen=True)
class OutputSpec:
    csv: Optional[str] = None
    tolerance: float = 1e-6


@dataclass(frozen=True)
class CompareSpec:
    fd_n_space: int = 800
    fd_dt: float = 1e-4
    m_list: tuple[int, ...] = (10, 20, 40)
    j_list: tuple[int, ...] = (10, 20, 50)


@dataclass(frozen=True)
class RunConfig:
    horizon_T: float
    weight: Weight
    q0: SpaceSignal
    g0: TimeSignal
    g1: TimeSignal
    grid: GridSpec
    contour: Optional[ContourSpec] = None
    outputs: OutputSpec = field(default_factory=OutputSpec)
    compare: CompareSpec = field(default_factory=CompareSpec)

    def problem(self) -> HeatProblem:
        """Raises :class:`HypothesisViolation` if the weight is inadmissible."""
        return HeatProblem(self.q0, self.g0, self.g1, self.weight, self.horizon_T)

    def to_dict(self) -> dict:
        return {
            "problem": {"horizon_T": self.horizon_T},
            "weight": self.weight.to_dict(),
            "signals": {"q0": self.q0.to_dict(), "g0": self.g0.to_dict(), "g1": self.g1.to_dict()},
            "contour": None if self.contour is None else self.contour.to_dict(),
            "grid": {"xs": self.grid.xs, "ts": self.grid.ts},
            "outputs": {"csv": self.outputs.csv, "tolerance": self.outputs.tolerance},
            "compare": {
                "fd_n_space": self.compare.fd_n_space,
                "fd_dt": self.compare.fd_dt,
                "m_list": list(self.compare.m_list),
                "j_list": list(self.compare.j_list),
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            unknown = set(d) - {"problem", "weight", "signals", "contour", "grid", "outputs", "compare"}
            if unknown:
                raise ConfigError(f"unknown sections: {sorted(unknown)}")
            T = float(d["problem"]["horizon_T"])
            sig = d.get("signals", {})
            q0 = SpaceSignal.from_dict(sig["q0"]) if "q0" in sig else SpaceSignal.zero()
            g0 = TimeSignal.from_dict(sig["g0"], T) if "g0" in sig else TimeSignal.zero(T)
            g1 = TimeSignal.from_dict(sig["g1"], T) if "g1" in sig else TimeSignal.zero(T)
            contour = d.get("contour")
            out = d.get("outputs", {})
            cmp_ = d.get("compare", {})
            grid = GridSpec(d["grid"]["xs"], d["grid"]["ts"])
            grid.values()
            cfg = cls(
                horizon_T=T,
                weight=Weight.from_dict(d["weight"]),
                q0=q0,
                g0=g0,
                g1=g1,
                grid=grid,
                contour=None if contour is None else ContourSpec.from_dict(contour),
                outputs=OutputSpec(out.get("csv"), float(out.get("tolerance", OutputSpec.tolerance))),
                compare=CompareSpec(
                    int(cmp_.get("fd_n_space", CompareSpec.fd_n_space)),
                    float(cmp_.get("fd_dt", CompareSpec.fd_dt)),
                    tuple(int(m) for m in cmp_.get("m_list", CompareSpec.m_list)),
                    tuple(int(j) for j in cmp_.get("j_list", CompareSpec.j_list)),
                ),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, UnsupportedOperation) as exc:
            raise ConfigError(f"bad config: {exc!r}") from exc
        return cfg

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("top level must be an object")
        return cls.from_dict(d)


# -- reports -----------------------------------------------------------------

@dataclass
class Report:
    """Rows of one command's output plus its pass/fail state."""

    title: str
    header: tuple[str, ...]
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def add(self, *row):
        self.rows.append(row)

    def text(self) -> str:
        lines = [self.title]
        cells = [self.header] + [tuple(_fmt(v) for v in r) for r in self.rows]
        widths = [max(len(c[i]) for c in cells) for i in range(len(self.header))]
        for c in cells:
            lines.append("  ".join(s.ljust(w) for s, w in zip(c, widths)).rstrip())
        lines += self.notes
        lines += [f"FAIL: {f}" for f in self.failures]
        return "\n".join(lines)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    ys = np.asarray(ys, dtype=float)
    if np.all(ys == 0):
        return -math.inf
    if np.any(ys <= 0):
        return math.nan
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# -- commands ----------------------------------------------------------------

def cmd_bound(cfg: RunConfig) -> Report:
    """Zero bound of the weight and an argument-principle census around the strip."""
    p = cfg.problem()
    zb = zero_bound(p.K)
    rep = Report("zero bound", ("quantity", "value"))
    for name in ("support_a", "support_b", "k_at_b", "total_variation", "delta0", "M", "R"):
        rep.add(name, getattr(zb, name))
    model = NonlocalModel(p)
    X = CENSUS_HALF_WIDTH
    M = zb.M
    outside = 0
    for upper in (True, False):
        f = model.census_f(upper)
        rect = (complex(-X, M), complex(X, M + CENSUS_HEIGHT)) if upper else (complex(-X, -M - CENSUS_HEIGHT), complex(X, -M))
        outside += count_zeros(f, rect)
    rep.add("zeros_outside_strip", outside)
    inside = count_zeros(model.census_f(True), (complex(-X + 0.37, -M), complex(X + 0.37, M)))
    rep.add("zeros_inside_strip", inside)
    rep.notes.append(f"census over |Re lam| <= {X:g}; outside band height {CENSUS_HEIGHT:g}")
    if outside:
        rep.failures.append(f"{outside} zeros found outside |Im lam| < M")
    return rep


def cmd_solve(cfg: RunConfig) -> tuple[Report, str]:
    p = cfg.problem()
    xs, ts = cfg.grid.values()
    f = evaluate_grid(p, xs, ts, spec=cfg.contour)
    rep = Report("solution", ("x", "t", "re_q", "im_q", "trunc_est"))
    for i, x in enumerate(xs):
        for j, t in enumerate(ts):
            v = f.values[i, j]
            rep.add(float(x), float(t), float(v.real), float(v.imag), float(f.trunc_est[i, j]))
    worst = float(np.max(f.trunc_est)) if f.trunc_est.size else 0.0
    rep.notes.append(f"max trunc_est {worst:.3e}")
    if worst > cfg.outputs.tolerance:
        rep.failures.append(f"truncation estimate {worst:.3e} exceeds tolerance {cfg.outputs.tolerance:.3e}")
    return rep, rep.csv()


def _decay_slopes(p: HeatProblem) -> dict:
    """Log-log slopes of |zeta-/Delta| on the lower rays and |zeta+/Delta| on the upper rays."""
    R = zero_bound(p.K).R
    r = R * 2.0 ** np.arange(1, 9)
    out = {}
    for ang, name, fn in (
        (-math.pi / 4, "decay_minus_right", tr.zeta_minus),
        (-3 * math.pi / 4, "decay_minus_left", tr.zeta_minus),
        (math.pi / 4, "growth_plus_right", tr.zeta_plus),
        (3 * math.pi / 4, "growth_plus_left", tr.zeta_plus),
    ):
        lam = r * np.exp(1j * ang)
        ratio = np.abs(fn(p.K, p.q0, lam, True) / tr.delta(p.K, lam, True))
        out[name] = _slope(r, ratio)
    return out


def _cancellation_checks(p: HeatProblem) -> list[float]:
    """Identity residuals relative to the largest term at fixed sample points."""
    lams = [0.5, 3.0, -7.5, 20.0, 2.0 - 1.0j, -4.0 - 6.0j, 10.0 - 15.0j, 1.0 + 2.0j, -3.0 + 5.0j]
    res = []
    for lam in lams:
        zp = tr.zeta_plus(p.K, p.q0, lam)
        ezm = tr.shifted_zeta_minus(p.K, p.q0, lam)
        dq = tr.delta(p.K, lam) * tr.fourier_q0(p.q0, lam)
        res.append(abs(zp - ezm - dq) / (1 + max(abs(zp), abs(ezm), abs(dq))))
    return res


def cmd_verify(cfg: RunConfig) -> Report:
    """Residuals, truncation estimate, decay slopes and cancellation spot checks."""
    p = cfg.problem()
    tol = cfg.outputs.tolerance
    xs, ts = cfg.grid.values()
    spec = cfg.contour
    f = evaluate_grid(p, xs, ts, spec=spec)
    rep = Report("verification", ("check", "value", "limit", "ok"))
    trunc = float(np.max(f.trunc_est))
    rep.add("trunc_est", trunc, tol, trunc <= tol)
    if trunc > tol:
        rep.failures.append(
            f"truncation diagnostic: estimated tail {trunc:.3e} > {tol:.3e}; raise max_abs_lambda or use contour: null"
        )
    for name, v in residuals(p, f, spec).as_dict().items():
        rep.add(name, v, tol, v <= tol)
        if not v <= tol:
            rep.failures.append(f"{name} = {v:.3e} exceeds {tol:.3e}")
    if p.q0.is_zero():
        rep.notes.append("decay slopes skipped: q0 is zero")
    else:
        for name, s in _decay_slopes(p).items():
            limit = DECAY_SLOPE_MINUS if "minus" in name else DECAY_SLOPE_PLUS
            ok = s <= limit
            rep.add(name, s, limit, ok)
            if not ok:
                rep.failures.append(f"{name} slope {s:.3f} above {limit}")
    canc = max(_cancellation_checks(p))
    rep.add("cancellation_identity", canc, 1e-12, canc <= 1e-12)
    if canc > 1e-12:
        rep.failures.append(f"cancellation identity residual {canc:.3e}")
    return rep


def _sup_on_grid(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def _fd_at(fd, xs: np.ndarray) -> np.ndarray:
    cols = [np.interp(xs, fd.xs, fd.values[:, j].real) + 1j * np.interp(xs, fd.xs, fd.values[:, j].imag) for j in range(fd.ts.size)]
    return np.array(cols).T


def _compare_oracle(cfg: RunConfig, p: HeatProblem, xs, ts, ref) -> Report:
    c = cfg.compare
    rep = Report("contour vs finite differences", ("n_space", "dt", "sup_diff", "self_diff"))
    coarse = fd_solve(p, FdConfig(c.fd_n_space, c.fd_dt), ts)
    fine = fd_solve(p, FdConfig(2 * c.fd_n_space, c.fd_dt / 4), ts)
    qc, qf = _fd_at(coarse, xs), _fd_at(fine, xs)
    self_diff = _sup_on_grid(qc, qf)
    rep.add(c.fd_n_space, c.fd_dt, _sup_on_grid(qc, ref), math.nan)
    rep.add(2 * c.fd_n_space, c.fd_dt / 4, _sup_on_grid(qf, ref), self_diff)
    diff = _sup_on_grid(qf, ref)
    if diff > cfg.outputs.tolerance:
        rep.failures.append(f"sup difference {diff:.3e} exceeds {cfg.outputs.tolerance:.3e}")
    return rep


def _sweep_verdict(rep: Report, params, diffs):
    s = _slope(params, diffs)
    rep.notes.append(f"fitted slope {s:.3f}")
    if math.isnan(s) or s > SWEEP_SLOPE_MAX:
        rep.failures.append(f"slope {s:.3f} above {SWEEP_SLOPE_MAX}")
    elif any(b > a for a, b in zip(diffs, diffs[1:])):
        rep.failures.append("differences do not decrease")


def _compare_multipoint(cfg: RunConfig, p: HeatProblem, xs, ts, ref) -> Report:
    rep = Report("multipoint vs nonlocal", ("m", "sup_diff"))
    diffs = []
    for m in cfg.compare.m_list:
        w = from_weight(p.K, m)
        vals = np.array([evaluate_m(w, p.q0, p.g0, p.g1, xs, t, spec=cfg.contour) for t in ts]).T
        diffs.append(_sup_on_grid(vals, ref))
        rep.add(m, diffs[-1])
    _sweep_verdict(rep, cfg.compare.m_list, diffs)
    return rep


def _compare_dirichlet(cfg: RunConfig, p: HeatProblem, xs, ts) -> Report:
    rep = Report("concentrating weights vs Dirichlet series", ("j", "sup_diff"))
    rep.notes.append("the configured weight is replaced by j on [0, 1/j]; g0 is the Dirichlet datum")
    series = series_solve_dirichlet(p.q0, p.g0, p.g1, xs, ts).values
    diffs = []
    for j in cfg.compare.j_list:
        pj = HeatProblem(p.q0, p.g0, p.g1, dirichlet_limit_weight(j), p.horizon_T)
        diffs.append(_sup_on_grid(evaluate_grid(pj, xs, ts, spec=cfg.contour).values, series))
        rep.add(j, diffs[-1])
    _sweep_verdict(rep, cfg.compare.j_list, diffs)
    return rep


def cmd_compare(cfg: RunConfig, mode: str = "oracle") -> Report:
    p = cfg.problem()
    xs, ts = cfg.grid.values()
    if mode == "dirichlet-limit":
        return _compare_dirichlet(cfg, p, xs, ts)
    ref = evaluate_grid(p, xs, ts, spec=cfg.contour).values
    if mode == "oracle":
        return _compare_oracle(cfg, p, xs, ts, ref)
    if mode == "multipoint":
        return _compare_multipoint(cfg, p, xs, ts, ref)
    raise ConfigError(f"unknown mode {mode!r}")


# -- argument handling -------------------------------------------------------

def _int_list(s: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in s.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nonlocal-heat", description="Heat equation with a nonlocal boundary condition.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("bound", "zero bound and zero census for the weight"),
        ("solve", "evaluate the solution on the configured grid"),
        ("verify", "residuals, decay slopes and identity checks"),
        ("compare", "compare against reference solvers"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--out", metavar="PATH", help="CSV destination (default: outputs.csv or none)")
        sp.add_argument("--tol", type=float, metavar="X", help="override outputs.tolerance")
        sp.add_argument("--max-lambda", type=float, metavar="X", help="truncate contours at |lam| = X")
        sp.add_argument("--panels", type=int, metavar="N", help="minimum Gauss panels per unit length")
        if name == "compare":
            sp.add_argument("--mode", choices=("oracle", "multipoint", "dirichlet-limit"), default="oracle")
            sp.add_argument("--m-list", type=_int_list, metavar="M1,M2,...")
            sp.add_argument("--j-list", type=_int_list, metavar="J1,J2,...")
    return ap


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.tol is not None:
        cfg = replace(cfg, outputs=replace(cfg.outputs, tolerance=args.tol))
    if args.max_lambda is not None or args.panels is not None:
        spec = cfg.contour
        if spec is None:
            # same radius rule as the automatic contour; the engine certifies it
            t_max = float(np.max(cfg.grid.values()[1]))
            R = min(NonlocalModel(cfg.problem()).bound_R, max(math.sqrt(9.0 / t_max), 0.5))
            spec = ContourSpec(R, max(R, DEFAULT_MAX_LAMBDA))
        if args.max_lambda is not None:
            spec = spec.with_(max_abs_lambda=args.max_lambda)
        if args.panels is not None:
            spec = spec.with_(panels_per_unit=args.panels)
        cfg = replace(cfg, contour=spec)
    cmp_ = cfg.compare
    if getattr(args, "m_list", None):
        cmp_ = replace(cmp_, m_list=args.m_list)
    if getattr(args, "j_list", None):
        cmp_ = replace(cmp_, j_list=args.j_list)
    return replace(cfg, compare=cmp_)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = RunConfig.loads(fh.read())
        cfg = apply_overrides(cfg, args)
    except HypothesisViolation as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "bound":
            rep = cmd_bound(cfg)
        elif args.command == "solve":
            rep, _ = cmd_solve(cfg)
        elif args.command == "verify":
            rep = cmd_verify(cfg)
        else:
            rep = cmd_compare(cfg, args.mode)
    except HypothesisViolation as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except PoleRiskError as exc:
        print(f"pole risk: {exc} (suggested radius {exc.suggested_R:.6g})", file=sys.stderr)
        return EXIT_TOLERANCE
    except (ConfigError, OracleConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out or cfg.outputs.csv
    if args.command == "solve" and out is None:
        sys.stdout.write(rep.csv())
    else:
        print(rep.text())
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(rep.csv())
    if rep.failures:
        if args.command == "solve":
            for f in rep.failures:
                print(f"FAIL: {f}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
