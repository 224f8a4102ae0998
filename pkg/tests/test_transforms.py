import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import quad_oracle as qo
from strategies import random_cubic_signal, random_lambda, random_linear_weight, random_weight_any
from nonlocal_heat.piecewise import SpaceSignal, TimeSignal
from nonlocal_heat.transforms import (
    delta,
    fourier_q0,
    h_cap,
    k_moment,
    numerators,
    shifted_zeta_minus,
    time_transform,
    zeta_minus,
    zeta_plus,
)
from nonlocal_heat.weights import (
    box_weight,
    constant_weight,
    piecewise_linear_weight,
    polynomial_weight,
    zero_bound,
)

ONE = SpaceSignal.constant(1.0)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# -- examples ----------------------------------------------------------------

def test_delta_examples():
    K = piecewise_linear_weight([0.0, 0.4, 1.0], [1.0, 3.0, -1.0])
    assert delta(K, 0.0) == pytest.approx(K.integral(), rel=1e-14)
    lam = np.array([0.3, np.pi, 2 + 1j, 12.5 - 7j])
    assert np.allclose(delta(constant_weight(), lam), np.sin(lam) / lam, rtol=1e-13)
    assert delta(K, 1.7 - 0.4j) == pytest.approx(delta(K, -1.7 + 0.4j), rel=1e-13)


def test_zeta_plus_examples():
    K = piecewise_linear_weight([0.0, 0.4, 1.0], [1.0, 3.0, -1.0])
    phi = SpaceSignal.polynomial([0.5, -1.0, 2.0])
    assert zeta_plus(K, phi, 0.0) == pytest.approx(K.integral() * phi.integral(), rel=1e-13)
    assert rel(zeta_plus(constant_weight(), ONE, np.pi), qo.zeta_plus(constant_weight(), ONE, np.pi)) < 1e-11
    assert zeta_plus(K, SpaceSignal.zero(), 3.0 + 1j) == 0.0


def test_zeta_minus_examples():
    K = piecewise_linear_weight([0.0, 0.4, 1.0], [1.0, 3.0, -1.0])
    phi = SpaceSignal.polynomial([0.5, -1.0, 2.0])
    assert zeta_minus(K, phi, 0.0) == 0.0
    lam = 2.2 + 0.7j
    assert zeta_minus(K, phi, -lam) == pytest.approx(-zeta_minus(K, phi, lam), rel=1e-13)
    for lam in [0.5, np.pi, 3 - 2j, 25 + 10j]:
        assert rel(zeta_minus(constant_weight(), ONE, lam), 1j * (lam - np.sin(lam)) / lam**2) < 1e-12


def test_time_transform_examples():
    g1 = TimeSignal.constant(1.0, 0.5)
    assert time_transform(g1, 0.0, 0.3) == pytest.approx(0.3, rel=1e-15)
    for mu in [2.0, -3 + 1j, 40j, 1e-7]:
        assert rel(time_transform(g1, mu, 0.3), np.expm1(mu * 0.3) / mu) < 1e-12
    gs = TimeSignal.polynomial([0.0, 1.0], 0.5)
    mu, tau = 1.5 - 2j, 0.4
    ref = tau * np.exp(mu * tau) / mu - (np.exp(mu * tau) - 1) / mu**2
    assert rel(time_transform(gs, mu, tau), ref) < 1e-12


def test_time_transform_shift_matches_explicit_factor():
    g = TimeSignal((0.0, 0.2, 1.0), ((1.0, 2.0), (0.3, 0.0, -1.0)), (0.0, 1.0))
    mu, tau, t = 3.0 + 50j, 0.7, 0.6
    assert rel(time_transform(g, mu, tau, t), np.exp(-mu * t) * time_transform(g, mu, tau)) < 1e-12


def test_h_cap_examples():
    K = constant_weight()
    z = TimeSignal.zero(0.5)
    assert h_cap(K, z, z, 1 + 1j, 0.1) == 0.0
    g1 = TimeSignal.polynomial([1.0, 2.0], 0.5)
    g0 = TimeSignal.constant(3.0, 0.5)
    assert h_cap(K, g0, g1, 0.0, 0.3) == pytest.approx(K.integral() * g1.integral(0.0, 0.3), rel=1e-14)
    lam, tau = 1 + 1j, 0.1
    ref = 1j * lam * np.exp(-1j * lam) * qo.time_transform(TimeSignal.constant(1.0, 0.5), lam**2, tau)
    assert rel(h_cap(K, TimeSignal.constant(1.0, 0.5), z, lam, tau), ref) < 1e-12


def test_fourier_q0_examples():
    assert fourier_q0(SpaceSignal.zero(), 2.0) == 0.0
    for lam in [0.2, 3 + 1j, -9 - 4j]:
        assert rel(fourier_q0(ONE, lam), (1 - np.exp(-1j * lam)) / (1j * lam)) < 1e-13
    q0 = SpaceSignal.box(0.25, 0.75)
    assert fourier_q0(q0, 0.0) == pytest.approx(0.5)


def test_numerators_examples():
    K = piecewise_linear_weight([0.0, 0.4, 1.0], [1.0, 3.0, -1.0])
    q0 = SpaceSignal.polynomial([0.5, -1.0, 2.0])
    z = TimeSignal.zero(1.0)
    g0 = TimeSignal.constant(1.0, 1.0)
    g1 = TimeSignal.polynomial([0.0, 1.0], 1.0)
    lam = 3.5 - 1.2j
    n = numerators(K, q0, z, z, lam, 0.5)
    assert n.num_plus == n.zeta_plus
    assert n.num_minus == pytest.approx(np.exp(-1j * lam) * n.zeta_minus, rel=1e-13)
    n = numerators(K, SpaceSignal.zero(), g0, g1, lam, 0.5)
    assert n.num_plus == n.num_minus == n.h_cap
    n = numerators(K, q0, g0, g1, lam, 0.5)
    assert rel(n.num_plus - n.num_minus, n.delta * fourier_q0(q0, lam)) < 1e-12


# -- closed form vs quadrature -------------------------------------------------

def test_closed_forms_match_quadrature():
    rng = np.random.default_rng(11)
    for _ in range(12):
        K = random_weight_any(rng)
        phi = random_cubic_signal(rng)
        lam = random_lambda(rng, 20.0)
        assert rel(delta(K, lam), qo.delta(K, lam)) < 1e-9
        assert rel(zeta_plus(K, phi, lam), qo.zeta_plus(K, phi, lam)) < 1e-9
        assert rel(zeta_minus(K, phi, lam), qo.zeta_minus(K, phi, lam)) < 1e-9
        assert rel(k_moment(K, lam), qo.single(K, lambda y: np.exp(-1j * lam * y))) < 1e-9
        assert rel(fourier_q0(phi, lam), qo.single(phi, lambda y: np.exp(-1j * lam * y))) < 1e-9


def test_time_transform_matches_quadrature():
    rng = np.random.default_rng(5)
    for _ in range(20):
        g = TimeSignal((0.0, 0.3, 0.8), (tuple(rng.normal(size=4)), tuple(rng.normal(size=2))), (0.0, 0.8))
        mu = complex(*rng.normal(size=2) * 30)
        tau = rng.uniform(0.05, 0.8)
        assert rel(time_transform(g, mu, tau), qo.time_transform(g, mu, tau)) < 1e-9


def test_small_lambda_is_smooth():
    K = piecewise_linear_weight([0.0, 0.5, 1.0], [1.0, 0.5, 2.0])
    phi = SpaceSignal.polynomial([1.0, 1.0, -1.0])
    lam = np.array([1e-9, 1e-6, 1e-4, 1e-3])
    d0 = delta(K, 0.0)
    z0 = zeta_plus(K, phi, 0.0)
    assert np.all(np.abs(delta(K, lam) - d0) < 1.0 * lam)
    assert np.all(np.abs(zeta_plus(K, phi, lam) - z0) < 2.0 * lam)
    assert np.all(np.abs(zeta_minus(K, phi, lam)) < 1.0 * lam)


def test_scaled_matches_unscaled():
    K = piecewise_linear_weight([0.0, 0.5, 1.0], [1.0, 0.5, 2.0])
    phi = SpaceSignal.polynomial([1.0, 1.0, -1.0])
    lam = np.array([5 + 3j, -20 - 15j, 2 - 30j])
    f = np.exp(-np.abs(lam.imag))
    for fn in (delta, k_moment, fourier_q0):
        arg = phi if fn is fourier_q0 else K
        assert np.allclose(fn(arg, lam, scaled=True), f * fn(arg, lam), rtol=1e-12)
    for fn in (zeta_plus, zeta_minus, shifted_zeta_minus):
        assert np.allclose(fn(K, phi, lam, scaled=True), f * fn(K, phi, lam), rtol=1e-12)


def test_scaled_values_finite_far_out():
    K = box_weight(0.0, 0.2)
    phi = SpaceSignal.box(0.25, 0.75)
    lam = 2.0e4 * np.exp(1j * np.array([0.3, np.pi / 4, -2.5, -np.pi / 4]))
    for v in (delta(K, lam, True), zeta_plus(K, phi, lam, True), zeta_minus(K, phi, lam, True)):
        assert np.all(np.isfinite(v))
    # exp(-i lam) zeta_minus is only bounded (after scaling) below the real axis
    assert np.all(np.isfinite(shifted_zeta_minus(K, phi, lam[2:], True)))


# -- invariants --------------------------------------------------------------

def _identity_terms(seed, lower_only=False):
    rng = np.random.default_rng(seed)
    K = random_linear_weight(rng)
    phi = random_cubic_signal(rng)
    lam = random_lambda(rng, 50.0, lower_only)
    return lam, zeta_plus(K, phi, lam), shifted_zeta_minus(K, phi, lam), delta(K, lam) * fourier_q0(phi, lam)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_cancellation_identity_term_relative(seed):
    _, zp, ezm, dq = _identity_terms(seed)
    scale = max(abs(zp), abs(ezm), abs(dq))
    assert abs(zp - ezm - dq) <= 1e-12 * (1 + scale)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_cancellation_identity_lower_half_plane(seed):
    # below the real axis all three terms share the size of zeta_plus
    _, zp, ezm, dq = _identity_terms(seed, lower_only=True)
    assert abs(zp - ezm - dq) <= 1e-10 * (1 + abs(zp))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_symmetries(seed):
    rng = np.random.default_rng(seed)
    K = random_weight_any(rng)
    phi = random_cubic_signal(rng)
    lam = random_lambda(rng, 30.0)
    assert rel(delta(K, -lam), delta(K, lam)) < 1e-11 or abs(delta(K, lam)) < 1e-12
    assert abs(zeta_minus(K, phi, -lam) + zeta_minus(K, phi, lam)) <= 1e-11 * (1 + abs(zeta_minus(K, phi, lam)))
    g = TimeSignal.polynomial([1.0, -2.0, 0.5], 1.0)
    a = h_cap(K, TimeSignal.zero(1.0), g, lam, 0.5) / k_moment(K, lam)
    b = time_transform(g, (-lam) ** 2, 0.5)
    assert rel(a, b) < 1e-11


B1_WEIGHTS = [
    constant_weight(),
    piecewise_linear_weight([0.0, 0.5, 1.0], [1.0, 2.0, 0.5]),
    polynomial_weight([2.0, -1.0, 0.5]),
]


@pytest.mark.parametrize("K", B1_WEIGHTS)
def test_decay_rates_along_rays(K):
    R = zero_bound(K).R
    phi = SpaceSignal.polynomial([1.0, 0.5, -2.0, 1.0])
    r = R * 2.0 ** np.arange(1, 9)
    for ang in (-np.pi / 4, -3 * np.pi / 4):
        lam = r * np.exp(1j * ang)
        ratio = np.abs(zeta_minus(K, phi, lam, True) / delta(K, lam, True))
        assert np.polyfit(np.log(r), np.log(ratio), 1)[0] <= -0.9
    for ang in (np.pi / 4, 3 * np.pi / 4):
        lam = r * np.exp(1j * ang)
        ratio = np.abs(zeta_plus(K, phi, lam, True) / delta(K, lam, True))
        assert np.polyfit(np.log(r), np.log(ratio), 1)[0] <= 0.1
        assert ratio.max() < 10.0


@pytest.mark.parametrize("K", B1_WEIGHTS)
def test_inverse_delta_growth_bound(K):
    R = zero_bound(K).R
    r = R * 2.0 ** np.arange(1, 9)
    consts = []
    for ang in (np.pi / 4, 3 * np.pi / 4, -np.pi / 4, -3 * np.pi / 4):
        lam = r * np.exp(1j * ang)
        # |1/Delta| <= C |lam| exp(-|Im lam|); scaled Delta absorbs the exponential
        consts.append(1.0 / (np.abs(delta(K, lam, True)) * r))
    consts = np.concatenate(consts)
    assert np.all(np.isfinite(consts))
    assert consts.max() < 10.0
