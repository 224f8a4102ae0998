"""Multipoint constraints ``sum_j b_j q(j/m, t) = g0(t)`` and their limits.

The weight ``K_m = (1/(m+1)) sum_j K(j/m) delta_{j/m}`` turns the nonlocal
condition into a multipoint one.  The integrands keep the structure of the
nonlocal solution with every ``int K(y) ... dy`` replaced by the finite sum,
so evaluation reuses :class:`nonlocal_heat.solver.Engine`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import transforms as tr
from .contours import ContourSpec
from .piecewise import SpaceSignal, TimeSignal
from .solver import Engine, SpectralModel
from .weights import HypothesisViolation, Weight, box_weight


@dataclass(frozen=True)
class MultipointWeight:
    m: int
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        if len(self.coeffs) != self.m + 1:
            raise ValueError("need m + 1 coefficients")

    @property
    def nodes(self) -> np.ndarray:
        if self.m == 0:
            return np.zeros(1)
        return np.arange(self.m + 1) / self.m

    def to_weight(self) -> Weight:
        """The same functional as a weight made only of atoms."""
        return Weight((0.0, 1.0), ((0.0,),), atoms=tuple(zip(self.nodes.tolist(), self.coeffs)))

    def to_dict(self) -> dict:
        return {"m": self.m, "coeffs": list(self.coeffs)}


def from_weight(K: Weight, m: int) -> MultipointWeight:
    """Coefficients ``K(j/m)/(m+1)`` with the weight's left-continuous evaluation."""
    K._require_atom_free("from_weight")
    if m < 0:
        raise ValueError("m must be nonnegative")
    nodes = np.zeros(1) if m == 0 else np.arange(m + 1) / m
    return MultipointWeight(m, tuple(float(v) / (m + 1) for v in K(nodes)))


def dirichlet_limit_weight(j: int) -> Weight:
    """Height ``j`` on ``[0, 1/j]``: unit mass concentrating at ``x = 0``."""
    if j < 1:
        raise ValueError("j must be >= 1")
    return box_weight(0.0, 1.0 / j, float(j))


# -- spectral functions ------------------------------------------------------

def _lam(lam):
    arr = np.asarray(lam, dtype=complex)
    return arr.ravel(), arr.shape


def _partial_moment(q0: SpaceSignal, lo: float, hi: float, c, pre, S):
    """``exp(pre - S) int_lo^hi q0(y) exp(c y) dy``."""
    total = np.zeros(c.shape, dtype=complex)
    if hi <= lo:
        return total
    for a, b, coeffs in q0.refine([lo, hi]):
        if a < lo - 1e-15 or b > hi + 1e-15 or not np.any(coeffs):
            continue
        mant, e = tr._piece_moment(a, b - a, coeffs, c)
        total += mant * np.exp(e + pre - S)
    return total


def _scale(lam, scaled):
    return np.abs(lam.imag) if scaled else np.zeros(lam.shape)


def delta_m(w: MultipointWeight, lam, scaled: bool = False):
    """``sum_j b_j cos((1 - j/m) lam)``."""
    lam, shape = _lam(lam)
    S = _scale(lam, scaled)
    out = np.zeros(lam.shape, dtype=complex)
    for x, b in zip(w.nodes, w.coeffs):
        if b:
            e = 1j * (1 - x) * lam
            out += 0.5 * b * (np.exp(e - S) + np.exp(-e - S))
    return tr._out(out, shape)


def f_plus_m(w: MultipointWeight, q0: SpaceSignal, lam, scaled: bool = False):
    lam, shape = _lam(lam)
    S = _scale(lam, scaled)
    il = 1j * lam
    out = np.zeros(lam.shape, dtype=complex)
    for x, b in zip(w.nodes, w.coeffs):
        if not b:
            continue
        for sgn in (1, -1):
            # cos((1-x) lam) int_0^x e^{-i lam y} q0
            out += 0.5 * b * _partial_moment(q0, 0.0, x, -il, sgn * (1 - x) * il, S)
            # e^{-i lam x} int_x^1 cos((1-y) lam) q0
            out += 0.5 * b * _partial_moment(q0, x, 1.0, -sgn * il, -il * x + sgn * il, S)
    return tr._out(out, shape)


def f_minus_m(w: MultipointWeight, q0: SpaceSignal, lam, scaled: bool = False):
    """``i sum_j b_j int_{j/m}^1 sin((y - j/m) lam) q0(y) dy``."""
    lam, shape = _lam(lam)
    S = _scale(lam, scaled)
    il = 1j * lam
    out = np.zeros(lam.shape, dtype=complex)
    for x, b in zip(w.nodes, w.coeffs):
        if b:
            out += 0.5 * b * (_partial_moment(q0, x, 1.0, il, -il * x, S) - _partial_moment(q0, x, 1.0, -il, il * x, S))
    return tr._out(out, shape)


def _node_moment(w: MultipointWeight, lam, pre, S):
    out = np.zeros(lam.shape, dtype=complex)
    for x, b in zip(w.nodes, w.coeffs):
        if b:
            out += b * np.exp(-1j * lam * x + pre - S)
    return out


def h_m(w: MultipointWeight, g0: TimeSignal, g1: TimeSignal, lam, tau: float, t_shift: float = 0.0, scaled: bool = False):
    """``i lam e^{-i lam} G0 + sum_j e^{-i lam j/m} b_j G1``, times ``exp(-lam^2 t_shift)``."""
    lam, shape = _lam(lam)
    S = _scale(lam, scaled)
    mu = lam * lam
    out = np.zeros(lam.shape, dtype=complex)
    if not g0.is_zero():
        out += 1j * lam * np.exp(-1j * lam - S) * tr.time_transform(g0, mu, tau, t_shift)
    if not g1.is_zero():
        out += _node_moment(w, lam, 0.0, S) * tr.time_transform(g1, mu, tau, t_shift)
    return tr._out(out, shape)


def zero_strip(w: MultipointWeight, floor: float = 0.5) -> float:
    """Half-width ``M`` with every zero of ``delta_m`` in ``|Im lam| < M``.

    For ``|Im lam| = y`` the first term has modulus at least
    ``|b_0| sinh y`` and the rest at most ``sum |b_j| cosh((1 - j/m) y)``;
    ``M`` is where the first bound wins for good.
    """
    b0 = abs(w.coeffs[0])
    if b0 == 0.0:
        raise HypothesisViolation("the coefficient at x = 0 must be nonzero")
    rest = [(1 - x, abs(b)) for x, b in zip(w.nodes[1:], w.coeffs[1:]) if b]
    if not rest:
        return floor

    logs = np.log([c for _, c in rest])
    rates = np.array([a for a, _ in rest])

    def margin(y):
        # increasing in y: d/dy log sinh y = coth y >= 1 > every rate
        lhs = math.log(b0) + y + math.log1p(-math.exp(-2 * y)) - math.log(2)
        rhs = np.logaddexp.reduce(np.concatenate([logs + rates * y, logs - rates * y])) - math.log(2)
        return lhs - rhs

    lo, hi = 1e-9, 1.0
    while margin(hi) <= 0:
        lo, hi = hi, 2 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if margin(mid) <= 0 else (lo, mid)
    return max(floor, hi * (1 + 1e-9))


class MultipointModel(SpectralModel):
    def __init__(self, w: MultipointWeight, q0: SpaceSignal, g0: TimeSignal, g1: TimeSignal):
        self.w, self.q0_sig = w, q0
        self.g0, self.g1, self.horizon_T = g0, g1, g0.horizon
        self.M = zero_strip(w)

    def delta_s(self, z):
        return delta_m(self.w, z, True)

    def zeta_plus_s(self, z):
        return f_plus_m(self.w, self.q0_sig, z, True)

    def zeta_minus_s(self, z):
        return f_minus_m(self.w, self.q0_sig, z, True)

    def kmom_s(self, z):
        z = np.asarray(z, dtype=complex)
        return _node_moment(self.w, z, 0.0, np.abs(z.imag))

    def kmom_refl_s(self, z):
        z = np.asarray(z, dtype=complex)
        return _node_moment(self.w, z, 1j * z, np.abs(z.imag))

    def q0hat(self, z):
        return tr.fourier_q0(self.q0_sig, z)

    def q0(self, x):
        return self.q0_sig(x)


@lru_cache(maxsize=32)
def _engine(w, q0, g0, g1, spec):
    return Engine(MultipointModel(w, q0, g0, g1), spec)


def evaluate_m(
    w: MultipointWeight,
    q0: SpaceSignal,
    g0: TimeSignal,
    g1: TimeSignal,
    x,
    t: float,
    tau=None,
    spec: Optional[ContourSpec] = None,
):
    """Solution of the multipoint problem at ``x`` (scalar or array) and ``t``.

    ``tau`` and ``spec`` behave as in :func:`nonlocal_heat.solver.evaluate`.
    An explicit radius below ``sqrt(2) zero_strip(w)`` must pass the zero
    census, otherwise :class:`~nonlocal_heat.solver.PoleRiskError` is raised.
    """
    from .solver import _tau_arg

    if not math.isclose(g0.horizon, g1.horizon):
        raise ValueError("g0 and g1 must share the horizon")
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if t == 0:
        vals = q0(xs).astype(complex)
    else:
        vals, _, _ = _engine(w, q0, g0, g1, spec).values(xs, t, _tau_arg(tau, t))
    return complex(vals[0]) if scalar else vals
