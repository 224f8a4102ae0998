"""Contour-integral evaluation of the nonlocal heat problem and its diagnostics.

The solution is

    q = (1/2pi) [ int_R     e^{i lam x - lam^2 t} q0hat                dlam
                - int_{D+}  e^{i lam x - lam^2 t} (zeta+ + H) / Delta           dlam
                - int_{D-}  e^{i lam x - lam^2 t} (e^{-i lam} zeta- + H) / Delta dlam ].

Evaluation is organised in *plans*.  A plan fixes a dyadic window of times, a
dyadic bound on the distance of ``x`` from each end of the interval and the
choice of ``tau``; it owns the contours and every data-dependent factor at
the nodes, so a point value costs a few dot products.

Two devices keep the integrals cheap and well conditioned:

* When ``tau = t`` the rays are tilted toward the real axis (see
  :mod:`nonlocal_heat.contours`).  The slowly decaying local part
  ``sum_k (-1)^k g^(k)(t) / lam^(2k+2)`` of ``e^{-lam^2 t} int_0^t e^{lam^2 s} g``
  is subtracted at the nodes: multiplied by the contour factors it is analytic
  and decaying inside ``D_R^+-``, so its contour integral vanishes.  What is
  left decays like a Gaussian along the tilted rays.
* The lower-contour factors are stored multiplied by ``e^{i lam}`` and paired
  with ``e^{i lam (x - 1)}``, so no intermediate quantity overflows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import transforms as tr
from .contours import (
    PHASE_PER_PANEL,
    ContourSpec,
    ContourThroughZeroError,
    QuadContour,
    build_dminus,
    build_dplus,
    build_realline,
    count_zeros,
    ray_length,
)
from .piecewise import SpaceSignal, TimeSignal
from .weights import HypothesisViolation, Weight, zero_bound

AUTO_TILTS = (math.pi / 4, math.pi / 5, math.pi / 6, math.pi / 8, math.pi / 12, math.pi / 16)
# Largest R^2 t tolerated on the arc, where |exp(-lam^2 t)| reaches exp(R^2 t).
ARC_GROWTH_BUDGET = 9.0
MAX_LAMBDA_CAP = 1.0e4
DEFAULT_TOL = 1e-13
EPS = np.finfo(float).eps


class PoleRiskError(ValueError):
    """The requested radius could leave zeros of Delta between the contours."""

    def __init__(self, msg: str, suggested_R: float):
        super().__init__(f"{msg}; use radius_R >= {suggested_R:.6g}")
        self.suggested_R = suggested_R


class AccuracyWarning(UserWarning):
    pass


# -- problem ---------------------------------------------------------------

@dataclass(frozen=True)
class HeatProblem:
    """``q_t = q_xx`` on ``(0,1) x (0,T)``, ``q(x,0) = q0``, ``q_x(1,t) = g1``,
    ``int_0^1 K q dx = g0``."""

    q0: SpaceSignal
    g0: TimeSignal
    g1: TimeSignal
    K: Weight
    horizon_T: float

    def __post_init__(self):
        if not self.horizon_T > 0:
            raise ValueError("horizon_T must be positive")
        for name in ("g0", "g1"):
            if not math.isclose(getattr(self, name).horizon, self.horizon_T, rel_tol=1e-12):
                raise ValueError(f"{name} must be defined on [0, horizon_T]")
        if self.K.has_atoms:
            raise HypothesisViolation("the nonlocal solver needs an atom-free weight")
        if self.K(0.0) == 0.0 or self.bound.support_b < 1.0 - 1e-12:
            raise HypothesisViolation("K must not vanish at x = 0")

    @property
    def bound(self):
        return _zero_bound_cached(self.K)

    @classmethod
    def build(cls, K, q0=None, g0=None, g1=None, T: float = 0.1):
        """Convenience constructor; omitted data are zero, numbers are constants."""

        def sig(v):
            if v is None:
                return TimeSignal.zero(T)
            if isinstance(v, (int, float)):
                return TimeSignal.constant(float(v), T)
            return v

        if q0 is None:
            q0 = SpaceSignal.zero()
        elif isinstance(q0, (int, float)):
            q0 = SpaceSignal.constant(float(q0))
        return cls(q0, sig(g0), sig(g1), K, T)

    def scaled(self, c: float) -> "HeatProblem":
        return HeatProblem(self.q0.scaled(c), self.g0.scaled(c), self.g1.scaled(c), self.K, self.horizon_T)

    def __add__(self, other: "HeatProblem") -> "HeatProblem":
        if other.K != self.K or other.horizon_T != self.horizon_T:
            raise ValueError("problems must share K and T")
        return HeatProblem(self.q0 + other.q0, self.g0 + other.g0, self.g1 + other.g1, self.K, self.horizon_T)


@lru_cache(maxsize=64)
def _zero_bound_cached(K):
    return zero_bound(K)


@dataclass
class SolutionField:
    """Complex ``q`` on a grid; ``values[i, j] = q(xs[i], ts[j])``."""

    xs: np.ndarray
    ts: np.ndarray
    values: np.ndarray
    tau_used: np.ndarray
    contour_spec: Optional[ContourSpec]
    trunc_est: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ts = np.asarray(self.ts, dtype=float)
        if self.values.shape != (self.xs.size, self.ts.size):
            raise ValueError("values must have shape (len(xs), len(ts))")
        if self.trunc_est is None:
            self.trunc_est = np.zeros(self.values.shape)

    @property
    def max_imag(self) -> float:
        return float(np.max(np.abs(self.values.imag))) if self.values.size else 0.0


@dataclass(frozen=True)
class ResidualReport:
    pde_residual_sup: float
    ic_residual_sup: float
    bc_residual_sup: float
    nc_residual_sup: float
    tau_independence: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    def worst(self) -> float:
        return max(self.as_dict().values())


# -- spectral models ---------------------------------------------------------

class SpectralModel:
    """Data-dependent factors of the integrands, all scaled by ``exp(-|Im lam|)``.

    Subclasses provide ``delta_s``, ``zeta_plus_s``, ``zeta_minus_s``,
    ``kmom_s`` (``int K e^{-i lam y}``), ``kmom_refl_s`` (``e^{i lam}`` times
    that), ``q0hat`` on the real line, the strip half-width ``M`` containing
    every zero of Delta, and the data ``g0, g1, T``.
    """

    g0: TimeSignal
    g1: TimeSignal
    horizon_T: float
    M: float

    @property
    def bound_R(self) -> float:
        return math.sqrt(2.0) * self.M

    def census_f(self, upper: bool):
        """Analytic, bounded version of Delta in one half plane."""
        if upper:
            return lambda z: np.exp(1j * z.real) * self.delta_s(z)
        return lambda z: np.exp(-1j * z.real) * self.delta_s(z)


class NonlocalModel(SpectralModel):
    def __init__(self, p: HeatProblem):
        self.p = p
        self.g0, self.g1, self.horizon_T = p.g0, p.g1, p.horizon_T
        self.M = p.bound.M

    def delta_s(self, z):
        return tr.delta(self.p.K, z, True)

    def zeta_plus_s(self, z):
        return tr.zeta_plus(self.p.K, self.p.q0, z, True)

    def zeta_minus_s(self, z):
        return tr.zeta_minus(self.p.K, self.p.q0, z, True)

    def kmom_s(self, z):
        return tr.k_moment(self.p.K, z, True)

    def kmom_refl_s(self, z):
        return tr.reflected_k_moment(self.p.K, z, True)

    def q0hat(self, z):
        return tr.fourier_q0(self.p.q0, z)

    def q0(self, x):
        return self.p.q0(x)


# -- plans -------------------------------------------------------------------

def _local_part(g: TimeSignal, t: float, mu: np.ndarray) -> np.ndarray:
    """``sum_k (-1)^k g^(k)(t-) / mu^(k+1)``."""
    i = int(g.piece_index(t))
    c = np.asarray(g.coeffs[i])
    s = t - g.breakpoints[i]
    out = np.zeros(mu.shape, dtype=complex)
    deriv = c.copy()
    inv = 1.0 / mu
    pw = inv.copy()
    for k in range(len(c)):
        val = np.polynomial.polynomial.polyval(s, deriv) if deriv.size else 0.0
        out += (-1) ** k * val * pw
        deriv = np.polynomial.polynomial.polyder(deriv) if deriv.size > 1 else np.zeros(0)
        pw = pw * inv
    return out


def _panel_estimate(spec: ContourSpec, rate) -> float:
    """Approximate panel count of both sector contours, without building them."""
    L = ray_length(spec.radius_R, math.pi / 4, spec.ray_angle, spec.max_abs_lambda)
    s = np.linspace(0.0, L, 257)
    z = spec.radius_R * np.exp(1j * math.pi / 4) + s * np.exp(1j * spec.ray_angle)
    dens = np.maximum(spec.panels_per_unit, rate(z) / PHASE_PER_PANEL)
    per_ray = float(np.sum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s)))
    return 4 * per_ray + 2 * spec.radius_R * math.pi / 2 * float(rate(np.array([spec.radius_R]))[0]) / PHASE_PER_PANEL


@dataclass(frozen=True)
class _PlanKey:
    tb: int
    xb0: int
    xb1: int
    deriv: int
    tau: object  # "t", "double" or a float


@dataclass
class _Side:
    contour: QuadContour
    main: np.ndarray  # zeta ratio
    a0: np.ndarray  # multiplies the g0 time transform
    a1: np.ndarray  # multiplies the g1 time transform
    decay_end: tuple  # (index, start, direction) of open ends


@dataclass
class _Plan:
    key: _PlanKey
    spec: ContourSpec
    upper: _Side
    lower: _Side
    real: QuadContour
    qhat: np.ndarray
    t_lo: float
    t_hi: float


class Engine:
    """Caches plans for one spectral model and one contour policy.

    ``spec=None`` selects radius, tilt and truncation automatically; an
    explicit spec is honoured (its ``max_abs_lambda`` caps the truncation).
    """

    def __init__(self, model: SpectralModel, spec: Optional[ContourSpec] = None):
        self.model = model
        self.spec = spec
        self.auto = spec is None
        self.tol = DEFAULT_TOL if spec is None else spec.tail_tolerance
        self._plans: dict = {}
        self._census: dict = {}

    # -- radius ----------------------------------------------------------
    def certify(self, R: float, phi: float) -> bool:
        """Argument-principle check that no zero of Delta lies between the
        contour of radius ``R`` and the zero-free half planes ``|Im| >= M``."""
        key = (round(R, 12), round(phi, 12))
        if key in self._census:
            return self._census[key]
        M = self.model.M
        y_lo = 0.9 * R / math.sqrt(2.0)
        ok = True
        if y_lo < M:
            y_hi = M + 0.5
            X = max(self.model.bound_R, R / math.sqrt(2.0) + (y_hi - R / math.sqrt(2.0)) / math.tan(phi)) + 1.0
            per_side = int(min(8192, max(256, 8 * (2 * X + y_hi))))
            try:
                up = count_zeros(self.model.census_f(True), (complex(-X, y_lo), complex(X, y_hi)), per_side)
                lo = count_zeros(self.model.census_f(False), (complex(-X, -y_hi), complex(X, -y_lo)), per_side)
                ok = up == 0 and lo == 0
            except (ContourThroughZeroError, ArithmeticError):
                ok = False
        self._census[key] = ok
        return ok

    def radius_for(self, t_hi: float, phi: float) -> float:
        RL = self.model.bound_R
        if not self.auto:
            R = self.spec.radius_R
            if R < RL * (1 - 1e-12) and not self.certify(R, phi):
                raise PoleRiskError(f"radius {R:.6g} is below the zero-exclusion bound and not certified", RL)
            return R
        if RL * RL * t_hi <= ARC_GROWTH_BUDGET:
            return RL
        R = max(math.sqrt(ARC_GROWTH_BUDGET / t_hi), 0.5)
        while R < RL:
            if self.certify(R, phi):
                return R
            R *= 1.5
        return RL

    # -- plan construction -------------------------------------------------
    def _key(self, t: float, x_min: float, x_max: float, deriv: int, tau) -> _PlanKey:
        tb = math.floor(math.log2(t))
        xb0 = math.floor(math.log2(max(x_min, 1e-300)))
        xb1 = math.floor(math.log2(max(1.0 - x_max, 1e-300)))
        return _PlanKey(tb, min(xb0, 0), min(xb1, 0), deriv, tau)

    def plan(self, key: _PlanKey) -> _Plan:
        if key not in self._plans:
            self._plans[key] = self._build(key)
        return self._plans[key]

    def _truncation(self, start: complex, d: complex, x_eff: float, t_lo: float, deriv: int, cap: float) -> float:
        """Arclength beyond which the integrand bound drops below ``tol``."""
        target = math.log(1.0 / self.tol)

        def decay(s):
            z = start + s * d
            return x_eff * abs(z.imag) + t_lo * (z * z).real - deriv * math.log(max(abs(z), 1.0))

        s = 1.0
        while decay(s) < target:
            s *= 1.5
            if abs(start + s * d) > cap:
                return None
        lo, hi = s / 1.5, s
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if decay(mid) < target else (lo, mid)
        return hi

    def _build(self, key: _PlanKey) -> _Plan:
        m = self.model
        T = m.horizon_T
        t_lo, t_hi = 2.0**key.tb, min(2.0 ** (key.tb + 1), T)
        x_lo, y_lo = 2.0**key.xb0, 2.0**key.xb1  # bounds on x and 1 - x
        if key.tau == "t":
            tau_span = t_hi
        elif key.tau == "double":
            tau_span = t_hi
        else:
            tau_span = max(t_hi, float(key.tau) - t_lo)
        tilt_ok = key.tau == "t"
        if self.auto:
            cap = MAX_LAMBDA_CAP
            phis = AUTO_TILTS if tilt_ok else (math.pi / 4,)
        else:
            cap = self.spec.max_abs_lambda
            if self.spec.ray_angle < math.pi / 4 - 1e-12 and not tilt_ok:
                raise ValueError("tilted rays require tau = t")
            phis = (self.spec.ray_angle,)

        def rate(z):
            return 4.0 + 2.0 * np.abs(z) * tau_span

        best = None
        for phi in phis:
            R = self.radius_for(t_hi, phi) if (len(phis) == 1 or not self.auto) else min(
                m.bound_R, max(math.sqrt(ARC_GROWTH_BUDGET / t_hi), 0.5)
            )
            t_dec = t_lo if tilt_ok else 0.0
            lens = []
            for upper in (True, False):
                x_eff = x_lo if upper else y_lo
                a = math.pi / 4 if upper else -math.pi / 4
                d = np.exp(1j * (phi if upper else -phi))
                s = self._truncation(R * np.exp(1j * a), d, x_eff, t_dec, key.deriv, cap)
                lens.append(s)
            if any(s is None for s in lens):
                r_max = cap
            else:
                r_max = min(cap, max(abs(R * np.exp(1j * math.pi / 4) + s * np.exp(1j * phi)) for s in lens))
            r_max = max(r_max, R)
            spec = ContourSpec(
                R,
                r_max,
                1 if self.auto else self.spec.panels_per_unit,
                16 if self.auto else self.spec.panel_order,
                self.tol,
                phi,
            )
            cost = _panel_estimate(spec, rate)
            if best is None or cost < best[0]:
                best = (cost, spec)
        spec = best[1]
        if self.auto and spec.radius_R < m.bound_R:
            R = self.radius_for(t_hi, spec.ray_angle)
            if R != spec.radius_R:
                spec = spec.with_(radius_R=R, max_abs_lambda=max(spec.max_abs_lambda, R))
        up, lo = build_dplus(spec, rate), build_dminus(spec, rate)

        # real line: Gaussian truncation
        target = math.log(1.0 / self.tol) + math.log(max(1.0, float(np.sum(np.abs(m.q0(np.linspace(0, 1, 65)))) / 65)))
        L = 1.0
        while t_lo * L * L - key.deriv * math.log(L) < target:
            L *= 1.2
        L = min(L, cap)
        real = build_realline(ContourSpec(1.0, max(L, 1.0), spec.panels_per_unit, spec.panel_order, self.tol), lambda z: 2.0 + 2.0 * np.abs(z) * t_hi)

        upper = self._side(up, True, spec)
        lower = self._side(lo, False, spec)
        return _Plan(key, spec, upper, lower, real, m.q0hat(real.nodes), t_lo, t_hi)

    def _side(self, c: QuadContour, upper: bool, spec: ContourSpec) -> _Side:
        m = self.model
        z = c.nodes
        S = np.abs(z.imag)
        d = m.delta_s(z)
        if upper:
            main = m.zeta_plus_s(z) / d
            a0 = 1j * z * np.exp(-1j * z - S) / d
            a1 = m.kmom_s(z) / d
        else:
            main = m.zeta_minus_s(z) / d
            a0 = 1j * z * np.exp(-S) / d
            a1 = m.kmom_refl_s(z) / d
        return _Side(c, main, a0, a1, (0, len(z) - 1))

    # -- evaluation --------------------------------------------------------
    def _integrand(self, side: _Side, t: float, tau: float, subtract: bool, deriv: int):
        m = self.model
        z = side.contour.nodes
        mu = z * z
        f = np.exp(-mu * t) * side.main
        for g, a in ((m.g0, side.a0), (m.g1, side.a1)):
            if g.is_zero():
                continue
            G = tr.time_transform(g, mu, tau, t)
            if subtract:
                G = G - _local_part(g, t, mu)
            f = f + a * G
        if deriv:
            f = f * (1j * z) ** deriv
        return f

    def values(self, xs: Sequence[float], t: float, tau, deriv: int = 0):
        """``d^deriv q / dx^deriv`` at ``(xs, t)``; returns values and error estimates."""
        xs = np.asarray(xs, dtype=float)
        T = self.model.horizon_T
        if not 0 < t <= T * (1 + 1e-12):
            raise ValueError("t must lie in (0, T]")
        if np.any((xs <= 0) | (xs >= 1)):
            raise ValueError("x must lie in (0, 1); use boundary_value_gamma / flux_at_one at the ends")
        if tau == "t":
            tau_val = t
        elif tau == "double":
            tau_val = min(2 * t, T)
        else:
            tau_val = float(tau)
            if not t - 1e-14 <= tau_val <= T * (1 + 1e-12):
                raise ValueError("tau must lie in [t, T]")
        key = self._key(t, xs.min(), xs.max(), deriv, tau)
        pl = self.plan(key)
        subtract = tau == "t"
        out = np.zeros(xs.size, dtype=complex)
        err = np.zeros(xs.size)
        # real line
        zr = pl.real.nodes
        fr = np.exp(-zr * zr * t) * pl.qhat * (1j * zr) ** deriv
        terms = pl.real.weights[:, None] * fr[:, None] * np.exp(1j * np.outer(zr, xs))
        out += terms.sum(axis=0)
        err += EPS * np.abs(terms).sum(axis=0)
        err += (np.abs(terms[0]) + np.abs(terms[-1])) / np.maximum(np.abs(pl.real.weights[0]), 1e-300) / max(
            2 * abs(zr[-1]) * t, 1e-300
        )
        for side, shift in ((pl.upper, 0.0), (pl.lower, -1.0)):
            z = side.contour.nodes
            f = self._integrand(side, t, tau_val, subtract, deriv)
            terms = side.contour.weights[:, None] * f[:, None] * np.exp(1j * np.outer(z, xs + shift))
            out -= terms.sum(axis=0)
            err += EPS * np.abs(terms).sum(axis=0)
            for k in side.decay_end:
                zk = z[k]
                xe = xs if shift == 0.0 else 1.0 - xs
                rate_k = xe * math.sin(pl.spec.ray_angle) + 2 * abs(zk) * t * math.cos(2 * pl.spec.ray_angle)
                err += np.abs(terms[k]) / abs(side.contour.weights[k]) / np.maximum(rate_k, 1e-300)
        return out / (2 * math.pi), err / (2 * math.pi), pl.spec


@lru_cache(maxsize=32)
def _engine(p: HeatProblem, spec: Optional[ContourSpec]) -> Engine:
    return Engine(NonlocalModel(p), spec)


def engine_for(p: HeatProblem, spec: Optional[ContourSpec] = None) -> Engine:
    return _engine(p, spec)


# -- public operations -------------------------------------------------------

def evaluate(p: HeatProblem, x: float, t: float, tau=None, spec: Optional[ContourSpec] = None) -> complex:
    """``q(x, t)`` for ``x`` in ``(0, 1)``.

    ``tau`` defaults to ``t``; ``"double"`` selects ``min(2t, T)``.  At
    ``t = 0`` the initial datum is returned.
    """
    if t == 0:
        return complex(p.q0(x))
    vals, _, _ = engine_for(p, spec).values([x], t, _tau_arg(tau, t))
    return complex(vals[0])


def _tau_arg(tau, t):
    if tau is None:
        return "t"
    if isinstance(tau, str):
        if tau not in ("t", "double"):
            raise ValueError("tau must be a number, 't' or 'double'")
        return tau
    return "t" if abs(float(tau) - t) <= 1e-15 * max(1.0, t) else float(tau)


def evaluate_grid(p: HeatProblem, xs, ts, spec: Optional[ContourSpec] = None, tau=None) -> SolutionField:
    """``q`` on ``xs x ts``.  ``tau`` as in :func:`evaluate`, or one number for all ``ts``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    eng = engine_for(p, spec)
    vals = np.zeros((xs.size, ts.size), dtype=complex)
    errs = np.zeros(vals.shape)
    taus = np.zeros(ts.size)
    used = None
    for j, t in enumerate(ts):
        if t == 0:
            vals[:, j] = p.q0(xs)
            continue
        ta = _tau_arg(tau, t)
        taus[j] = t if ta == "t" else (min(2 * t, p.horizon_T) if ta == "double" else ta)
        vals[:, j], errs[:, j], used = eng.values(xs, t, ta)
    return SolutionField(xs, ts, vals, taus, used, errs)


RICHARDSON_EPS = (1e-2, 5e-3, 2.5e-3)
GAMMA_XS = (0.02, 0.01, 0.005)


def _richardson(hs, vals):
    """Quadratic extrapolation to ``h = 0`` from three samples."""
    hs = np.asarray(hs, dtype=float)
    V = np.vander(hs, 3, increasing=True)
    coef = np.linalg.solve(V, np.asarray(vals, dtype=complex))
    return coef[0]


def flux_at_one(p: HeatProblem, t: float, tau=None, spec: Optional[ContourSpec] = None) -> complex:
    """``q_x(1, t)`` from differentiated integrands at ``x = 1 - eps``, extrapolated to ``eps = 0``."""
    xs = 1.0 - np.asarray(RICHARDSON_EPS)
    vals, _, _ = engine_for(p, spec).values(xs, t, _tau_arg(tau, t), deriv=1)
    return complex(_richardson(RICHARDSON_EPS, vals))


@dataclass(frozen=True)
class BoundaryValue:
    value: complex
    estimates: tuple
    converged: bool


def boundary_value_gamma(p: HeatProblem, t: float, spec: Optional[ContourSpec] = None, tau=None) -> BoundaryValue:
    """``q(0+, t)`` by quadratic extrapolation from ``x = 0.02, 0.01, 0.005``."""
    xs = np.asarray(GAMMA_XS)
    vals, _, _ = engine_for(p, spec).values(xs, t, _tau_arg(tau, t))
    lin1 = 2 * vals[1] - vals[0]
    lin2 = 2 * vals[2] - vals[1]
    value = _richardson(xs, vals)
    converged = abs(lin2 - value) <= abs(lin1 - value) + 1e-12
    if not converged:
        warnings.warn("boundary extrapolation did not converge monotonically", AccuracyWarning, stacklevel=2)
    return BoundaryValue(complex(value), tuple(complex(v) for v in (lin1, lin2)), bool(converged))


# -- residuals ---------------------------------------------------------------

PDE_HX = 0.005
PDE_HT_MAX = 2.5e-4
IC_TS = (1e-4, 5e-5, 2.5e-5)
NC_NODES = 24
_FD5 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FD5_2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _nc_integral(p: HeatProblem, eng: Engine, t: float, tau) -> complex:
    x, w = np.polynomial.legendre.leggauss(NC_NODES)
    total = 0.0j
    for a, b, c in p.K.pieces():
        if not np.any(c):
            continue
        xs = 0.5 * (b - a) * x + 0.5 * (a + b)
        vals, _, _ = eng.values(xs, t, tau)
        total += np.sum(0.5 * (b - a) * w * np.polynomial.polynomial.polyval(xs - a, c) * vals)
    return total


def residuals(p: HeatProblem, field: SolutionField, spec: Optional[ContourSpec] = None) -> ResidualReport:
    """Sup-norm checks of the PDE, the three side conditions and tau-independence.

    The PDE residual uses fourth-order centred differences with steps
    ``h_x = 0.005`` and ``h_t = min(2.5e-4, t/8)`` around every interior grid
    node; the initial residual extrapolates ``q(x, t)`` from small ``t``; the
    boundary residual uses :func:`flux_at_one`; the nonlocal residual
    integrates ``K q`` with Gauss-Legendre on the pieces of ``K``.
    """
    eng = engine_for(p, spec)
    xs, ts = field.xs, field.ts[field.ts > 0]
    xi = xs[(xs > PDE_HX * 2.5) & (xs < 1 - PDE_HX * 2.5)]
    T = p.horizon_T
    pde = 0.0
    for t in ts:
        ht = min(PDE_HT_MAX, t / 8)
        if t + 2 * ht > T:
            ht = min(ht, (T - t) / 2) if T - t > 1e-12 else ht
        # x-derivative stencil
        qx = np.zeros(xi.size, dtype=complex)
        for c, k in zip(_FD5_2, range(-2, 3)):
            qx += c * eng.values(xi + k * PDE_HX, t, "t")[0]
        qxx = qx / PDE_HX**2
        if t + 2 * ht <= T * (1 + 1e-12):
            qt = np.zeros(xi.size, dtype=complex)
            for c, k in zip(_FD5, range(-2, 3)):
                if c:
                    qt += c * eng.values(xi, t + k * ht, "t")[0]
            qt /= ht
        else:
            # one-sided fourth-order stencil at the horizon
            cs = np.array([25.0, -48.0, 36.0, -16.0, 3.0]) / 12.0
            qt = np.zeros(xi.size, dtype=complex)
            for c, k in zip(cs, range(5)):
                qt += c * eng.values(xi, t - k * ht, "t")[0]
            qt /= ht
        pde = max(pde, float(np.max(np.abs(qt - qxx))) if xi.size else 0.0)

    xin = xs[(xs > 0) & (xs < 1)]
    ic_vals = [eng.values(xin, s, "t")[0] for s in IC_TS]
    q_init = _richardson_vec(IC_TS, ic_vals)
    ic = float(np.max(np.abs(q_init - p.q0(xin)))) if xin.size else 0.0

    bc = 0.0
    nc = 0.0
    tau_ind = 0.0
    for t in ts:
        bc = max(bc, abs(flux_at_one(p, t, None, spec) - p.g1(t)))
        nc = max(nc, abs(_nc_integral(p, eng, t, "t") - p.g0(t)))
        if t < T:
            a = eng.values(xin, t, "t")[0]
            b = eng.values(xin, t, "double")[0]
            tau_ind = max(tau_ind, float(np.max(np.abs(a - b))))
    return ResidualReport(pde, ic, float(bc), float(nc), tau_ind)


def _richardson_vec(hs, rows):
    hs = np.asarray(hs, dtype=float)
    V = np.vander(hs, len(hs), increasing=True)
    coef = np.linalg.solve(V, np.vstack(rows))
    return coef[0]
