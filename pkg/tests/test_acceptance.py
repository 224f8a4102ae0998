"""Acceptance criteria, one test each, at the stated tolerances and runtime budgets.

Every test prints a single ``criterion N: PASS|FAIL`` line (also collected in
the terminal summary).
"""

import math
import time

import numpy as np
import pytest

from nonlocal_heat import transforms as tr
from nonlocal_heat.contours import count_zeros
from nonlocal_heat.multipoint import dirichlet_limit_weight, evaluate_m, from_weight
from nonlocal_heat.oracle import FdConfig, fd_solve, series_solve_dirichlet
from nonlocal_heat.piecewise import SpaceSignal, TimeSignal
from nonlocal_heat.solver import HeatProblem, NonlocalModel, evaluate, evaluate_grid, residuals
from nonlocal_heat.weights import (
    box_weight,
    constant_weight,
    piecewise_linear_weight,
    polynomial_weight,
    zero_bound,
)
from strategies import random_cubic_signal, random_lambda, random_linear_weight

T = 0.1
XS = np.linspace(0.1, 0.9, 9)
TS = np.array([0.02, 0.05, 0.1])
SMOOTH_K = piecewise_linear_weight([0, 0.5, 1], [1, 2, 0.5])
B1_WEIGHTS = [constant_weight(), SMOOTH_K, polynomial_weight([2.0, -1.0, 0.5])]


def slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def steady_problem():
    return HeatProblem.build(constant_weight(), q0=2.0, g0=2.0, T=T)


def compatible_problem(K):
    """Cubic q0; g0 and g1 match q0 and its time derivative at t = 0."""
    q0 = SpaceSignal.from_global([0, 1], [[1, 0, 1, -1 / 3]])
    gx, gw = np.polynomial.legendre.leggauss(20)
    x, w = (gx + 1) / 2, gw / 2
    c0 = np.sum(w * K(x) * (1 + x**2 - x**3 / 3))
    c1 = np.sum(w * K(x) * (2 - 2 * x))
    return HeatProblem(q0, TimeSignal.polynomial([c0, c1], T), TimeSignal.polynomial([1.0, -2.0], T), K, T)


def boundary_data_problem(K):
    """Smooth data whose side conditions do not match q0 at t = 0."""
    q0 = SpaceSignal.from_global([0, 1], [[0, 0, 1, -0.5]])
    return HeatProblem(q0, TimeSignal.polynomial([0.1, 1.0], T), TimeSignal.polynomial([0.5, -2.0], T), K, T)


def box_problem():
    return HeatProblem.build(box_weight(0, 0.2), q0=SpaceSignal.box(0.25, 0.75), T=T)


def test_criterion_1_cancellation_identity(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst, bad = 0.0, 0
    for _ in range(200):
        K = random_linear_weight(rng)
        phi = random_cubic_signal(rng)
        lam = random_lambda(rng, 50.0)
        zp = tr.zeta_plus(K, phi, lam)
        res = abs(zp - tr.shifted_zeta_minus(K, phi, lam) - tr.delta(K, lam) * tr.fourier_q0(phi, lam))
        r = res / (1 + abs(zp))
        worst = max(worst, r)
        bad += r > 1e-10
    elapsed = time.perf_counter() - start
    criterion(1, "cancellation identity", bad == 0 and elapsed < 5,
              f"{bad}/200 above 1e-10, worst {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_zero_localization(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    weights = [constant_weight()]
    while len(weights) < 21:
        K = random_linear_weight(rng)
        weights.append(K)
    found = 0
    for K in weights:
        zb = zero_bound(K)
        model = NonlocalModel(HeatProblem.build(K, T=T))
        L = zb.R + 40.0
        # the truncated sectors lie in |Im| >= R / sqrt(2) = M, |lam| <= L
        found += count_zeros(model.census_f(True), (complex(-L, zb.M), complex(L, L)))
        found += count_zeros(model.census_f(False), (complex(-L, -L), complex(L, -zb.M)))
    elapsed = time.perf_counter() - start
    criterion(2, "zero localization", found == 0 and elapsed < 30,
              f"{found} zeros in 21 truncated sector pairs, {elapsed:.1f}s")


def test_criterion_3_decay_rates(criterion):
    start = time.perf_counter()
    phi = SpaceSignal.polynomial([1.0, 0.5, -2.0, 1.0])
    minus, plus = [], []
    for K in B1_WEIGHTS:
        r = zero_bound(K).R * 2.0 ** np.arange(1, 9)
        for ang in (-math.pi / 4, -3 * math.pi / 4):
            lam = r * np.exp(1j * ang)
            minus.append(slope(r, np.abs(tr.zeta_minus(K, phi, lam, True) / tr.delta(K, lam, True))))
        for ang in (math.pi / 4, 3 * math.pi / 4):
            lam = r * np.exp(1j * ang)
            plus.append(slope(r, np.abs(tr.zeta_plus(K, phi, lam, True) / tr.delta(K, lam, True))))
    elapsed = time.perf_counter() - start
    ok = max(minus) <= -0.9 and max(plus) <= 0.1 and elapsed < 10
    criterion(3, "decay rates", ok, f"worst minus slope {max(minus):.3f}, worst plus slope {max(plus):.3f}, {elapsed:.1f}s")


def test_criterion_4_existence_residuals(criterion):
    start = time.perf_counter()
    worst_smooth = 0.0
    for p in (steady_problem(), compatible_problem(SMOOTH_K), compatible_problem(constant_weight())):
        worst_smooth = max(worst_smooth, residuals(p, evaluate_grid(p, XS, TS)).worst())
    pb = box_problem()
    worst_box = residuals(pb, evaluate_grid(pb, XS, TS)).worst()
    elapsed = time.perf_counter() - start
    ok = worst_smooth < 1e-6 and worst_box < 1e-3 and elapsed < 120
    criterion(4, "existence residuals", ok, f"smooth {worst_smooth:.2e}, box {worst_box:.2e}, {elapsed:.1f}s")


def test_criterion_5_tau_independence(criterion):
    start = time.perf_counter()
    worst = 0.0
    for p in (compatible_problem(SMOOTH_K), box_problem()):
        a = evaluate_grid(p, XS, TS).values
        b = evaluate_grid(p, XS, TS, tau="double").values
        worst = max(worst, float(np.abs(a - b).max()))
    elapsed = time.perf_counter() - start
    criterion(5, "tau independence", worst < 1e-6 and elapsed < 30, f"max diff {worst:.2e}, {elapsed:.1f}s")


def _self_converged_fd(p, ts, target=1e-4):
    n, dt = 100, 1e-3
    idx = lambda n: np.rint(XS * n).astype(int)
    prev = fd_solve(p, FdConfig(n, dt), ts).values[idx(n)]
    while True:
        n, dt = 2 * n, dt / 4
        cur = fd_solve(p, FdConfig(n, dt), ts).values[idx(n)]
        change = float(np.abs(cur - prev).max())
        if change < target or n >= 3200:
            return cur, change, n
        prev = cur


def test_criterion_6_oracle_equivalence(criterion):
    start = time.perf_counter()
    diffs, changes = [], []
    for p in (box_problem(), compatible_problem(SMOOTH_K), boundary_data_problem(SMOOTH_K)):
        fd, change, _ = _self_converged_fd(p, TS)
        changes.append(change)
        diffs.append(float(np.abs(fd - evaluate_grid(p, XS, TS).values).max()))
    elapsed = time.perf_counter() - start
    ok = max(diffs) < 1e-3 and max(changes) < 1e-4 and elapsed < 180
    criterion(6, "oracle equivalence", ok,
              f"sup diffs {', '.join(f'{d:.1e}' for d in diffs)}; oracle self-change {max(changes):.1e}, {elapsed:.1f}s")


def test_criterion_7_figure_reproduction(criterion):
    start = time.perf_counter()
    p = box_problem()
    xs = np.linspace(0.0025, 0.9975, 399)
    q = evaluate_grid(p, xs, [0.05]).values[:, 0]
    at = abs(evaluate(p, 0.1, 0.05))
    elapsed = time.perf_counter() - start
    ok = q.real.min() < 0 and at <= 0.05 * 1.0 and elapsed < 60
    criterion(7, "box scenario features", ok, f"min Re q {q.real.min():.3f}, |q(0.1, 0.05)| {at:.1e}, {elapsed:.1f}s")


def test_criterion_8_multipoint_convergence(criterion):
    start = time.perf_counter()
    p = compatible_problem(SMOOTH_K)
    ref = evaluate_grid(p, XS, TS).values
    ms = [10, 20, 40, 80]
    diffs = []
    for m in ms:
        w = from_weight(p.K, m)
        v = np.array([evaluate_m(w, p.q0, p.g0, p.g1, XS, t) for t in TS]).T
        diffs.append(float(np.abs(v - ref).max()))
    s = slope(ms, diffs)
    elapsed = time.perf_counter() - start
    ok = all(b < a for a, b in zip(diffs, diffs[1:])) and s <= -0.8 and elapsed < 240
    criterion(8, "multipoint convergence", ok, f"diffs {', '.join(f'{d:.2e}' for d in diffs)}, slope {s:.3f}, {elapsed:.1f}s")


def test_criterion_9_dirichlet_limit(criterion):
    start = time.perf_counter()
    base = boundary_data_problem(constant_weight())
    js = [10, 20, 50]
    series = series_solve_dirichlet(base.q0, base.g0, base.g1, XS, TS).values
    diffs = []
    for j in js:
        p = HeatProblem(base.q0, base.g0, base.g1, dirichlet_limit_weight(j), T)
        diffs.append(float(np.abs(evaluate_grid(p, XS, TS).values - series).max()))
    s = slope(js, diffs)
    # 1/j coefficient of Delta_j(2) from a fit c/j + d/j^2 over the same js
    lam = 2.0
    jj = np.array(js, dtype=float)
    y = np.array([tr.delta(dirichlet_limit_weight(j), lam).real for j in js]) - math.cos(lam)
    coef = np.linalg.lstsq(np.vstack([1 / jj, 1 / jj**2]).T, y, rcond=None)[0][0]
    expected = -lam * math.sin(lam) / 2
    coef_ok = abs(coef - expected) <= 0.05 * abs(expected)
    elapsed = time.perf_counter() - start
    ok = all(b < a for a, b in zip(diffs, diffs[1:])) and s <= -0.8 and coef_ok and elapsed < 180
    criterion(9, "Dirichlet limit", ok,
              f"diffs {', '.join(f'{d:.2e}' for d in diffs)}, slope {s:.3f}; "
              f"Delta_j 1/j coefficient {coef:.4f} vs expected {expected:.4f}, {elapsed:.1f}s")
