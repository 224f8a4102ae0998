"""Independent reference solvers.

``fd_solve`` treats the nonlocal problem as a differential-algebraic system
on a uniform grid; ``series_solve_dirichlet`` is the eigenfunction expansion
of the Dirichlet-Neumann problem that the nonlocal problem approaches when
the weight concentrates at ``x = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import transforms as tr
from .piecewise import SpaceSignal, TimeSignal
from .solver import HeatProblem, SolutionField
from .weights import Weight


class OracleConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FdConfig:
    """Grid and step for :func:`fd_solve`.

    ``quad_weights`` selects how the constraint row is formed: ``"product"``
    integrates ``K`` against each hat function exactly, ``"trapezoid"`` uses
    ``h K(x_i)`` with halved end weights.
    """

    n_space: int = 400
    dt: float = 1e-4
    quad_weights: str = "product"
    rannacher_steps: int = 4

    def __post_init__(self):
        if self.n_space < 16:
            raise OracleConfigError("n_space must be >= 16")
        if not self.dt > 0:
            raise OracleConfigError("dt must be positive")
        if self.quad_weights not in ("product", "trapezoid"):
            raise OracleConfigError("quad_weights must be 'product' or 'trapezoid'")


def constraint_weights(K: Weight, n: int, kind: str = "product") -> np.ndarray:
    """Row ``c`` with ``c @ q`` approximating ``int K q`` for nodal values ``q``."""
    h = 1.0 / n
    x = np.linspace(0.0, 1.0, n + 1)
    if kind == "trapezoid":
        w = np.full(n + 1, h)
        w[[0, -1]] = h / 2
        vals = np.array([K.right_limit(xi) if i == 0 else float(K(xi)) for i, xi in enumerate(x)])
        c = w * vals
    else:
        c = np.zeros(n + 1)
        gx, gw = np.polynomial.legendre.leggauss(8)
        for a, b, coeffs in K.refine(x):
            if not np.any(coeffs):
                continue
            s = 0.5 * (b - a) * gx + 0.5 * (a + b)
            kv = 0.5 * (b - a) * gw * np.polynomial.polynomial.polyval(s - a, coeffs)
            i = min(int(math.floor(a / h + 1e-9)), n - 1)
            lam = (s - x[i]) / h
            c[i] += np.sum(kv * (1 - lam))
            c[i + 1] += np.sum(kv * lam)
    for pos, mass in K.atoms:
        i = min(int(math.floor(pos / h)), n - 1)
        lam = pos / h - i
        c[i] += mass * (1 - lam)
        c[i + 1] += mass * lam
    return c


def _matrices(n: int, c: np.ndarray):
    """Laplacian with the Neumann ghost closure; row 0 is left for the constraint."""
    h = 1.0 / n
    main = np.full(n + 1, -2.0)
    lower = np.ones(n)
    upper = np.ones(n)
    lower[-1] = 2.0  # ghost node at x = 1
    L = sp.diags([lower, main, upper], [-1, 0, 1], format="lil") / (h * h)
    L[0, :] = 0.0
    C = sp.lil_matrix((n + 1, n + 1))
    C[0, :] = c
    D = sp.identity(n + 1, format="lil")
    D[0, 0] = 0.0
    return L.tocsr(), C.tocsr(), D.tocsr()


def fd_solve(p: HeatProblem, cfg: FdConfig, ts: Sequence[float], weight: Optional[Weight] = None) -> SolutionField:
    """Crank-Nicolson solution on the nodes ``x_i = i/n_space``.

    ``weight`` replaces ``p.K`` in the constraint; it may carry atoms, which
    covers multipoint conditions.

    The first ``rannacher_steps`` steps are backward Euler half steps, which
    damps the oscillations Crank-Nicolson leaves behind for rough data.
    ``meta`` records the initial projection and the largest constraint
    defect over all steps.
    """
    ts = np.asarray(ts, dtype=float)
    T = p.horizon_T
    if np.any(ts < 0) or np.any(ts > T * (1 + 1e-12)):
        raise ValueError("ts must lie in [0, T]")
    n = cfg.n_space
    h = 1.0 / n
    x = np.linspace(0.0, 1.0, n + 1)
    c = constraint_weights(p.K if weight is None else weight, n, cfg.quad_weights)
    if not np.any(c):
        raise OracleConfigError("constraint row is zero")
    L, C, D = _matrices(n, c)

    def forcing(t):
        b = np.zeros(n + 1)
        b[-1] = 2.0 * p.g1(min(t, T)) / h
        return b

    # average one-sided limits so that jumps sitting on nodes keep second order
    q = np.array([p.q0.right_limit(0.0)] + [0.5 * (float(p.q0(xi)) + p.q0.right_limit(xi)) for xi in x[1:-1]] + [float(p.q0(1.0))])
    # q_0 is the algebraic unknown, so only it moves to meet the constraint
    if c[0] == 0.0:
        raise OracleConfigError("constraint row does not involve the node at x = 0")
    defect0 = c @ q - p.g0(0.0)
    q[0] -= defect0 / c[0]
    meta = {"projection": float(abs(defect0 / c[0])), "constraint_defect": 0.0, "x": x}

    lu_cache = {}

    def solver(theta, dt):
        key = (theta, round(dt, 15))
        if key not in lu_cache:
            A = (D - theta * dt * L + C).tocsc()
            lu = splu(A)
            lu_cache[key] = lu
        return lu_cache[key]

    def step(q, t, dt, theta):
        rhs = D @ q + (1 - theta) * dt * (L @ q + forcing(t)) + theta * dt * forcing(t + dt)
        rhs[0] = p.g0(min(t + dt, T))
        out = solver(theta, dt).solve(rhs)
        if not np.all(np.isfinite(out)):
            raise OracleConfigError("singular step matrix")
        meta["constraint_defect"] = max(meta["constraint_defect"], abs(c @ out - rhs[0]))
        return out

    order = np.argsort(ts)
    values = np.zeros((n + 1, ts.size))
    t = 0.0
    startup = cfg.rannacher_steps
    for j in order:
        target = ts[j]
        while target - t > 1e-14 and startup > 0:
            dt = min(cfg.dt / 2, target - t)
            q = step(q, t, dt, 1.0)
            t += dt
            startup -= 1
        if target - t > 1e-14:
            k = max(1, math.ceil((target - t) / cfg.dt - 1e-9))
            dt = (target - t) / k
            for i in range(k):
                q = step(q, t + i * dt, dt, 0.5)
        t = target
        values[:, j] = q
    return SolutionField(x, ts, values.astype(complex), ts.copy(), None, meta=meta)


# -- Dirichlet-Neumann series -------------------------------------------------

SERIES_TAIL = 1e-8
MAX_MODES = 200_000


def _jumps(g: TimeSignal):
    """Breakpoints inside ``(0, T)`` with the jump of ``g`` across them."""
    out = []
    for b in g.breakpoints[1:-1]:
        jmp = g.right_limit(b) - float(g(b))
        if jmp != 0.0:
            out.append((b, jmp))
    return out


def _max_abs(g: TimeSignal) -> float:
    total = 0.0
    for a, b, c in g.pieces():
        s = np.linspace(0, b - a, 33)
        total = max(total, float(np.max(np.abs(np.polynomial.polynomial.polyval(s, c)))))
    return total


def series_solve_dirichlet(q0: SpaceSignal, gamma: TimeSignal, g1: TimeSignal, xs, ts) -> SolutionField:
    """``q(0,t) = gamma``, ``q_x(1,t) = g1`` by expansion in ``sin((n+1/2) pi x)``.

    With ``w = gamma(t) + x g1(t)`` the difference ``v = q - w`` solves a
    homogeneous problem with source ``-(gamma' + x g1')``; each modal
    amplitude is propagated exactly, the source through its piecewise
    polynomial time transform plus one term per jump.
    """
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    vals = np.zeros((xs.size, ts.size))
    dg, dg1 = gamma.derivative(), g1.derivative()
    jg, jg1 = _jumps(gamma), _jumps(g1)
    v0_l1 = float(np.mean(np.abs(q0(np.linspace(0, 1, 257))))) + abs(gamma(0.0)) + abs(g1(0.0))
    src = _max_abs(dg) + _max_abs(dg1) + sum(abs(j) for _, j in jg + jg1)
    for jt, t in enumerate(ts):
        if t == 0:
            vals[:, jt] = q0(xs)
            continue
        # modes beyond N: initial part <= 2|v0| e^{-k^2 t}, source part <= 2 src / k^3
        N = 16
        while True:
            k = (N + 0.5) * math.pi
            tail = 2 * v0_l1 * math.exp(-k * k * t) / (2 * k * t * math.pi) + 2 * src / (math.pi * k * k)
            if tail < SERIES_TAIL or N >= MAX_MODES:
                break
            N = int(N * 1.5)
        n = np.arange(N)
        k = (n + 0.5) * math.pi
        sgn = np.where(n % 2 == 0, 1.0, -1.0)
        a_n = 1.0 / k
        b_n = sgn / k**2
        c0 = 2 * (-tr.fourier_q0(q0, k).imag - gamma(0.0) * a_n - g1(0.0) * b_n)
        mu = k * k
        coef = c0 * np.exp(-mu * t)
        if not dg.is_zero():
            coef -= 2 * a_n * tr.time_transform(dg, mu, t, t).real
        if not dg1.is_zero():
            coef -= 2 * b_n * tr.time_transform(dg1, mu, t, t).real
        for b, jmp in jg:
            if b < t:
                coef -= 2 * a_n * jmp * np.exp(-mu * (t - b))
        for b, jmp in jg1:
            if b < t:
                coef -= 2 * b_n * jmp * np.exp(-mu * (t - b))
        for start in range(0, xs.size, 64):
            xx = xs[start : start + 64]
            vals[start : start + 64, jt] = np.sin(np.outer(xx, k)) @ coef + gamma(t) + xx * g1(t)
    return SolutionField(xs, ts, vals.astype(complex), ts.copy(), None)
