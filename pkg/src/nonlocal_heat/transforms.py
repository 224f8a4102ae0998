"""Spectral building blocks: Delta, zeta+-, time transforms, H and q0-hat.

Every function accepts a scalar or an array of spectral parameters ``lam``.
All space integrals are evaluated in closed form piece by piece through the
exponential-moment kernels.  With ``scaled=True`` the result is multiplied by
``exp(-|Im lam|)``; this keeps values finite on contours that reach far from
the real axis, and the factor cancels in every ratio the solver forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .piecewise import PiecewisePolynomial, SpaceSignal, TimeSignal
from .weights import Weight


def _as_lam(lam):
    arr = np.asarray(lam, dtype=complex)
    return arr.ravel(), arr.shape


def _out(vals, shape):
    vals = vals.reshape(shape)
    return complex(vals) if vals.ndim == 0 else vals


def _scale_exponent(lam, scaled):
    return np.abs(lam.imag) if scaled else np.zeros(lam.shape)


def _piece_moment(a, h, coeffs, c):
    """Mantissa and complex log-factor of ``int_a^{a+h} p(y - a) exp(c y) dy``."""
    F, shift = kernels.mono(c, h, len(coeffs) - 1)
    return F @ np.asarray(coeffs, dtype=complex), c * a + shift


def _moment(w: PiecewisePolynomial, c, pre, S):
    """``exp(pre - S) * int w(y) exp(c y) dy`` over the domain of ``w``."""
    total = np.zeros(c.shape, dtype=complex)
    for a, b, coeffs in w.pieces():
        if not np.any(coeffs):
            continue
        m, e = _piece_moment(a, b - a, coeffs, c)
        total += m * np.exp(e + pre - S)
    return total


def _double(K: Weight, phi: SpaceSignal, alpha, beta, upper: bool, pre, S):
    """``exp(pre - S) * int K(y) e^{alpha y} int phi(z) e^{beta z} dz dy``.

    The inner range is ``[y, 1]`` when ``upper`` and ``[0, y]`` otherwise.
    """
    kp = K.refine(phi.breakpoints)
    pp = phi.refine(K.breakpoints)
    n = len(kp)
    total = np.zeros(alpha.shape, dtype=complex)
    ym = [None] * n
    zm = [None] * n
    for i, ((a, b, kc), (_, _, pc)) in enumerate(zip(kp, pp)):
        if np.any(kc):
            ym[i] = _piece_moment(a, b - a, kc, alpha)
        if np.any(pc):
            zm[i] = _piece_moment(a, b - a, pc, beta)
    for i in range(n):
        if ym[i] is None:
            continue
        my, ey = ym[i]
        others = range(i + 1, n) if upper else range(i)
        for j in others:
            if zm[j] is None:
                continue
            mz, ez = zm[j]
            total += my * mz * np.exp(ey + ez + pre - S)
        if zm[i] is None:
            continue
        a, b, kc = kp[i]
        pc = pp[i][2]
        T, shift = kernels.tri(alpha, beta, b - a, len(kc) - 1, len(pc) - 1, upper)
        m = np.einsum("njk,j,k->n", T, np.asarray(kc, dtype=complex), np.asarray(pc, dtype=complex))
        total += m * np.exp((alpha + beta) * a + shift + pre - S)
    return total


# -- determinant ---------------------------------------------------------

def delta(K: Weight, lam, scaled: bool = False):
    """``int_0^1 K(y) cos((1 - y) lam) dy``."""
    K._require_atom_free("delta")
    lam, shape = _as_lam(lam)
    S = _scale_exponent(lam, scaled)
    il = 1j * lam
    val = 0.5 * (_moment(K, -il, il, S) + _moment(K, il, -il, S))
    return _out(val, shape)


def k_moment(K: Weight, lam, scaled: bool = False):
    """``int_0^1 K(y) exp(-i lam y) dy``."""
    lam, shape = _as_lam(lam)
    S = _scale_exponent(lam, scaled)
    return _out(_moment(K, -1j * lam, np.zeros(lam.shape), S), shape)


def reflected_k_moment(K: Weight, lam, scaled: bool = False):
    """``int_0^1 K(y) exp(i lam (1 - y)) dy``."""
    lam, shape = _as_lam(lam)
    S = _scale_exponent(lam, scaled)
    return _out(_moment(K, -1j * lam, 1j * lam, S), shape)


def fourier_q0(q0: SpaceSignal, lam, scaled: bool = False):
    """``int_0^1 exp(-i lam x) q0(x) dx``."""
    lam, shape = _as_lam(lam)
    S = _scale_exponent(lam, scaled)
    return _out(_moment(q0, -1j * lam, np.zeros(lam.shape), S), shape)


# -- numerators ------------------------------------------------------------

def zeta_plus(K: Weight, phi: SpaceSignal, lam, scaled: bool = False):
    K._require_atom_free("zeta_plus")
    lam, shape = _as_lam(lam)
    S = _scale_exponent(lam, scaled)
    il = 1j * lam
    val = 0.5 * (
        _double(K, phi, -il, -il, False, il, S)
        + _double(K, phi, il, -il, False, -il, S)
        + _double(K, phi, -il, -il, True, il, S)
        + _double(K, phi, -il, il, True, -il, S)
    )
    return _out(val, shape)


def _zeta_minus(K, phi, lam, pre, S):
    il = 1j * lam
    return 0.5 * (_double(K, phi, -il, il, True, pre, S) - _double(K, phi, il, -il, True, pre, S))


def zeta_minus(K: Weight, phi: SpaceSignal, lam, scaled: bool = False):
    K._require_atom_free("zeta_minus")
    lam, shape = _as_lam(lam)
    S = _scale_exponent(lam, scaled)
    return _out(_zeta_minus(K, phi, lam, np.zeros(lam.shape, dtype=complex), S), shape)


def shifted_zeta_minus(K: Weight, phi: SpaceSignal, lam, scaled: bool = False):
    """``exp(-i lam) * zeta_minus``, formed without an intermediate overflow."""
    K._require_atom_free("zeta_minus")
    lam, shape = _as_lam(lam)
    S = _scale_exponent(lam, scaled)
    return _out(_zeta_minus(K, phi, lam, -1j * lam, S), shape)


# -- time transforms -------------------------------------------------------

def time_transform(g: TimeSignal, mu, tau: float, t_shift: float = 0.0):
    """``exp(-mu t_shift) * int_0^tau exp(mu s) g(s) ds``.

    ``t_shift`` lets callers fold the factor ``exp(-lam^2 t)`` of the solution
    formula into the transform without overflow.
    """
    mu, shape = _as_lam(mu)
    if not 0.0 <= tau <= g.horizon * (1 + 1e-12):
        raise ValueError("tau must lie in [0, T]")
    total = np.zeros(mu.shape, dtype=complex)
    for a, b, coeffs in g.pieces():
        hi = min(b, tau)
        if hi <= a or not np.any(coeffs):
            continue
        m, e = _piece_moment(a, hi - a, coeffs, mu)
        total += m * np.exp(e - mu * t_shift)
    return _out(total, shape)


def h_cap(K: Weight, g0: TimeSignal, g1: TimeSignal, lam, tau: float, t_shift: float = 0.0, scaled: bool = False):
    """``i lam e^{-i lam} G0(lam^2) + Khat(lam) G1(lam^2)``, times ``exp(-lam^2 t_shift)``."""
    lam, shape = _as_lam(lam)
    S = _scale_exponent(lam, scaled)
    mu = lam * lam
    val = np.zeros(lam.shape, dtype=complex)
    if not g0.is_zero():
        val += 1j * lam * np.exp(-1j * lam - S) * time_transform(g0, mu, tau, t_shift)
    if not g1.is_zero():
        val += k_moment(K, lam, scaled) * time_transform(g1, mu, tau, t_shift)
    return _out(val, shape)


# -- bundle ----------------------------------------------------------------

@dataclass(frozen=True)
class SpectralNumerators:
    """Data-only factors of the solution integrands at one or more ``lam``.

    When produced with ``scaled=True`` every field except ``lam`` carries the
    common factor ``exp(-|Im lam|)``.
    """

    lam: np.ndarray
    delta: np.ndarray
    zeta_plus: np.ndarray
    zeta_minus: np.ndarray
    h_cap: np.ndarray
    num_plus: np.ndarray
    num_minus: np.ndarray


def numerators(K, q0, g0, g1, lam, tau, t_shift: float = 0.0, scaled: bool = False) -> SpectralNumerators:
    lam = np.asarray(lam, dtype=complex)
    d = delta(K, lam, scaled)
    zp = zeta_plus(K, q0, lam, scaled)
    zm = zeta_minus(K, q0, lam, scaled)
    ezm = shifted_zeta_minus(K, q0, lam, scaled)
    h = h_cap(K, g0, g1, lam, tau, t_shift, scaled)
    return SpectralNumerators(lam, d, zp, zm, h, zp + h, ezm + h)
