"""Pure numpy implementation of the exponential-moment kernels.

Two primitives carry every closed-form transform in the package:

``mono(c, h, kmax)``
    ``F[k] = exp(-shift) * int_0^h s**k exp(c s) ds`` for ``k = 0..kmax``.

``tri(alpha, beta, h, jmax, kmax, upper)``
    ``T[j, k] = exp(-shift) * iint u**j v**k exp(alpha u + beta v)`` over the
    triangle ``0 <= v <= u <= h`` (``upper=False``) or ``0 <= u <= v <= h``
    (``upper=True``).

Both return a mantissa array and the real ``shift`` that was factored out, so
that arguments with very large real parts never overflow.  The shift is the
largest real exponent attained on the integration domain.

The compiled extension ``_kernels_ext`` implements the same contract node by
node; :mod:`nonlocal_heat.kernels` picks one at import time.
"""

from __future__ import annotations

import math

import numpy as np

MONO_SERIES_RADIUS = 4.0
MONO_SERIES_TERMS = 40
TRI_SERIES_RADIUS = 1.5
TRI_SERIES_TERMS = 32

_FACT = np.array([math.factorial(n) for n in range(TRI_SERIES_TERMS + MONO_SERIES_TERMS)], dtype=float)


def mono(c, h, kmax):
    c = np.asarray(c, dtype=complex).ravel()
    h = float(h)
    n = c.size
    shift = np.maximum(0.0, c.real * h)
    out = np.empty((n, kmax + 1), dtype=complex)
    z = c * h
    small = np.abs(z) <= MONO_SERIES_RADIUS

    if np.any(small):
        zs = z[small]
        scale = np.exp(-shift[small])
        powers = zs[:, None] ** np.arange(MONO_SERIES_TERMS)[None, :] / _FACT[:MONO_SERIES_TERMS]
        for k in range(kmax + 1):
            denom = np.arange(MONO_SERIES_TERMS) + k + 1.0
            out[small, k] = scale * h ** (k + 1) * (powers / denom).sum(axis=1)

    big = ~small
    if np.any(big):
        cb = c[big]
        e_end = np.exp(cb * h - shift[big])
        e_start = np.exp(-shift[big])
        prev = (e_end - e_start) / cb
        out[big, 0] = prev
        for k in range(1, kmax + 1):
            prev = (h**k * e_end - k * prev) / cb
            out[big, k] = prev
    return out, shift


def _tri_weights(jmax, kmax, upper):
    """Coefficient tables for the double power series, indexed [j, k, n, m]."""
    N = TRI_SERIES_TERMS
    n = np.arange(N)[:, None]
    m = np.arange(N)[None, :]
    mask = (n + m) < N
    inv = 1.0 / (_FACT[:N][:, None] * _FACT[:N][None, :])
    w = np.zeros((jmax + 1, kmax + 1, N, N))
    for j in range(jmax + 1):
        for k in range(kmax + 1):
            if upper:
                core = (1.0 / (k + m + 1.0)) * (1.0 / (j + n + 1.0) - 1.0 / (j + n + k + m + 2.0))
            else:
                core = 1.0 / ((k + m + 1.0) * (j + k + n + m + 2.0))
            w[j, k] = np.where(mask, core * inv, 0.0)
    return w


_TRI_CACHE: dict[tuple[int, int, bool], np.ndarray] = {}


def tri(alpha, beta, h, jmax, kmax, upper):
    alpha = np.asarray(alpha, dtype=complex).ravel()
    beta = np.broadcast_to(np.asarray(beta, dtype=complex).ravel(), alpha.shape)
    h = float(h)
    n_nodes = alpha.size
    sigma = alpha + beta
    if upper:
        shift = np.maximum.reduce([np.zeros(n_nodes), beta.real * h, sigma.real * h])
    else:
        shift = np.maximum.reduce([np.zeros(n_nodes), alpha.real * h, sigma.real * h])
    out = np.empty((n_nodes, jmax + 1, kmax + 1), dtype=complex)

    rho_max = np.maximum(np.abs(alpha), np.abs(beta)) * h
    rho_min = np.minimum(np.abs(alpha), np.abs(beta)) * h
    small = rho_max <= TRI_SERIES_RADIUS
    if np.any(~small & (rho_min <= TRI_SERIES_RADIUS)):
        raise ValueError("tri kernel needs |alpha| and |beta| on the same side of the series radius")

    if np.any(small):
        key = (jmax, kmax, upper)
        if key not in _TRI_CACHE:
            _TRI_CACHE[key] = _tri_weights(jmax, kmax, upper)
        w = _TRI_CACHE[key]
        N = TRI_SERIES_TERMS
        a = alpha[small] * h
        b = beta[small] * h
        apow = a[:, None] ** np.arange(N)[None, :]
        bpow = b[:, None] ** np.arange(N)[None, :]
        scale = np.exp(-shift[small])
        for j in range(jmax + 1):
            for k in range(kmax + 1):
                val = np.einsum("pn,pm,nm->p", apow, bpow, w[j, k])
                out[small, j, k] = scale * h ** (j + k + 2) * val

    big = ~small
    if np.any(big):
        al, be, sg, sh = alpha[big], beta[big], sigma[big], shift[big]
        f_sig, s_sig = mono(sg, h, jmax + kmax)
        f_al, s_al = mono(al, h, jmax)
        r_sig = np.exp(s_sig - sh)
        for k in range(kmax + 1):
            coefs = [(-1) ** i * math.factorial(k) / math.factorial(k - i) / be ** (i + 1) for i in range(k + 1)]
            for j in range(jmax + 1):
                diag = sum(coefs[i] * f_sig[:, j + k - i] for i in range(k + 1)) * r_sig
                if upper:
                    p_end = sum(coefs[i] * h ** (k - i) for i in range(k + 1))
                    edge = p_end * f_al[:, j] * np.exp(be * h + s_al - sh)
                    out[big, j, k] = edge - diag
                else:
                    p_zero = (-1) ** k * math.factorial(k) / be ** (k + 1)
                    edge = p_zero * f_al[:, j] * np.exp(s_al - sh)
                    out[big, j, k] = diag - edge
    return out, shift
