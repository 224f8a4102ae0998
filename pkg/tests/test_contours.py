import math

import numpy as np
import pytest

from nonlocal_heat.contours import (
    ContourEvaluationError,
    ContourSpec,
    ContourThroughZeroError,
    build_arc,
    build_dminus,
    build_dplus,
    build_gamma,
    build_realline,
    count_zeros,
    integrate,
    localize_zeros,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        ContourSpec(0.0, 10.0)
    with pytest.raises(ValueError):
        ContourSpec(2.0, 1.0)
    with pytest.raises(ValueError):
        ContourSpec(1.0, 10.0, panel_order=3)
    with pytest.raises(ValueError):
        ContourSpec(1.0, 10.0, tail_tolerance=1.0)
    with pytest.raises(ValueError):
        ContourSpec(1.0, 10.0, ray_angle=1.0)
    s = ContourSpec(1.0, 10.0, 3, 12, 1e-9, 0.5)
    assert ContourSpec.from_dict(s.to_dict()) == s


def test_arc_only_contour():
    c = build_dplus(ContourSpec(1.0, 1.0))
    ang = np.angle(c.nodes)
    assert ang.min() >= math.pi / 4 and ang.max() <= 3 * math.pi / 4
    assert np.allclose(np.abs(c.nodes), 1.0)
    assert len(c) == c.n_panels * c.panel_order


@pytest.mark.parametrize("build, sign", [(build_dplus, 1), (build_dminus, -1)])
def test_membership_and_antiderivatives(build, sign):
    spec = ContourSpec(0.98, 40.0)
    c = build(spec)
    assert np.all((c.nodes**2).real <= 1e-9)
    assert np.all(sign * c.nodes.imag > 0)
    if sign == 1:
        a, b = 40 * np.exp(3j * math.pi / 4), 40 * np.exp(1j * math.pi / 4)
    else:
        a, b = 40 * np.exp(-1j * math.pi / 4), 40 * np.exp(-3j * math.pi / 4)
    assert integrate(c, lambda z: z) == pytest.approx((b * b - a * a) / 2, abs=1e-10)
    assert integrate(c, lambda z: np.ones_like(z)) == pytest.approx(b - a, abs=1e-12)


@pytest.mark.parametrize("build, sign", [(build_dplus, 1), (build_dminus, -1)])
def test_positive_orientation(build, sign):
    spec = ContourSpec(1.5, 60.0)
    c = build(spec)
    outer = build_arc(60.0, math.pi / 4, 3 * math.pi / 4, 300, 16) if sign == 1 else build_arc(
        60.0, -3 * math.pi / 4, -math.pi / 4, 300, 16
    )
    for z in (sign * 5j, 3 + sign * 4j):
        val = integrate(c + outer, lambda lam: 1.0 / (lam - z))
        assert val == pytest.approx(2j * math.pi, abs=1e-9)
    # a point outside the truncated sector winds zero times
    assert abs(integrate(c + outer, lambda lam: 1.0 / (lam - sign * 0.3j))) < 1e-9


def test_tilted_rays_stay_off_strip():
    spec = ContourSpec(2.0, 80.0, ray_angle=math.pi / 10)
    for build, sign in ((build_dplus, 1), (build_dminus, -1)):
        c = build(spec)
        assert np.all(sign * c.nodes.imag >= 2.0 / math.sqrt(2) - 1e-12)
        assert np.abs(c.nodes).max() <= 80.0 + 1e-9
        a = np.exp(1j * (math.pi - spec.ray_angle)) if sign == 1 else np.exp(-1j * spec.ray_angle)
        # a polynomial integrand only sees the endpoints
        start = c.nodes[0]
        assert abs(np.angle((start - 2.0 * np.exp(1j * sign * (3 * math.pi / 4 if sign == 1 else math.pi / 4))) / a)) < 1e-9


def test_realline_gaussian():
    c = build_realline(ContourSpec(1.0, 8.0))
    assert integrate(c, lambda z: np.exp(-z * z)) == pytest.approx(math.sqrt(math.pi), abs=1e-8)
    assert integrate(c, lambda z: np.zeros_like(z)) == 0.0


def test_gamma_orientation():
    spec = ContourSpec(1.0, 5.0)
    gp, gm = build_gamma(spec, 1), build_gamma(spec, -1)
    assert np.allclose(gp.nodes.imag, 1 / math.sqrt(2))
    assert np.allclose(gm.nodes.imag, -1 / math.sqrt(2))
    assert integrate(gp, np.ones_like) == pytest.approx(10.0)
    assert integrate(gm, np.ones_like) == pytest.approx(-10.0)
    with pytest.raises(ValueError):
        build_gamma(spec, 0)


def test_integrate_reports_bad_node():
    c = build_realline(ContourSpec(1.0, 2.0))
    with pytest.raises(ContourEvaluationError) as err, np.errstate(divide="ignore", invalid="ignore"):
        integrate(c, lambda z: 1.0 / (z - c.nodes[5]))
    assert err.value.node == c.nodes[5]


def test_panels_follow_rate():
    spec = ContourSpec(1.0, 50.0, panels_per_unit=1)
    plain = build_dplus(spec)
    fine = build_dplus(spec, rate=lambda lam: 4.0 * np.abs(lam))
    assert fine.n_panels > 5 * plain.n_panels


def test_count_zeros_examples():
    sinc = lambda z: np.sin(z) / z
    assert count_zeros(sinc, (0.5 - 1j, 10 + 1j)) == 3
    assert count_zeros(np.exp, (-3 - 3j, 2 + 5j)) == 0
    assert count_zeros(lambda z: z - (2 + 1j), (1 + 0j, 3 + 2j)) == 1


def test_count_zeros_additive():
    f = lambda z: np.sin(z) / z
    whole = count_zeros(f, (0.5 - 1j, 13 + 1j))
    left = count_zeros(f, (0.5 - 1j, 8 + 1j))
    right = count_zeros(f, (8 - 1j, 13 + 1j))
    assert whole == left + right == 4


def test_count_zeros_through_zero():
    with pytest.raises(ContourThroughZeroError):
        count_zeros(lambda z: z - 1.0, (1 - 1j, 3 + 1j))


def test_localize_zeros():
    cells = localize_zeros(lambda z: np.sin(z), (0.5 - 1j, 7 + 1j), 0.5)
    centres = sorted(0.5 * (a + b).real for (a, b), _ in cells)
    assert len(cells) == 2
    assert np.allclose(centres, [math.pi, 2 * math.pi], atol=0.5)
