"""Quadrature contours in the spectral plane and an argument-principle counter.

The upper contour is traversed with the sector ``D_R^+`` on its left: in along
the left ray, clockwise over the arc of radius ``R``, out along the right ray.
The lower contour mirrors this with ``D_R^-`` on its left.

Rays start at the arc endpoints ``R exp(i pi/4)`` and ``R exp(3 i pi/4)`` (and
their conjugates).  By default they point along the same directions, which
reproduces the boundary of ``{Re lam^2 < 0, |lam| > R}``.  A smaller
``ray_angle`` tilts them toward the real axis while keeping
``|Im lam| >= R / sqrt(2)``; the factor ``exp(-lam^2 t)`` then decays like a
Gaussian along the rays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

LABELS = ("Dplus", "Dminus", "RealLine", "GammaPlus", "GammaMinus", "Closed", "Path")


class ContourEvaluationError(ArithmeticError):
    """The integrand was not finite at a quadrature node."""

    def __init__(self, node: complex, value):
        super().__init__(f"non-finite integrand {value!r} at lambda = {node!r}")
        self.node = node


class ContourThroughZeroError(ValueError):
    """The function nearly vanishes on the counting contour."""


@dataclass(frozen=True)
class ContourSpec:
    """Radius, truncation and panel layout for the spectral contours.

    Parameters
    ----------
    radius_R : float
        Radius of the arc excluded around the origin.
    max_abs_lambda : float
        Truncation: rays end where ``|lam| = max_abs_lambda``.
    panels_per_unit : int
        Minimum number of Gauss panels per unit length of contour.
    panel_order : int
        Gauss-Legendre nodes per panel.
    tail_tolerance : float
        Relative size of neglected tails, used by truncation rules.
    ray_angle : float
        Angle of the right ray with the real axis, in ``(0, pi/4]``.
    """

    radius_R: float
    max_abs_lambda: float
    panels_per_unit: int = 2
    panel_order: int = 16
    tail_tolerance: float = 1e-12
    ray_angle: float = math.pi / 4

    def __post_init__(self):
        if not self.radius_R > 0:
            raise ValueError("radius_R must be positive")
        if not self.max_abs_lambda >= self.radius_R:
            raise ValueError("max_abs_lambda must be at least radius_R")
        if self.panel_order < 4:
            raise ValueError("panel_order must be >= 4")
        if self.panels_per_unit < 1:
            raise ValueError("panels_per_unit must be >= 1")
        if not 0 < self.tail_tolerance < 1:
            raise ValueError("tail_tolerance must lie in (0, 1)")
        if not 0 < self.ray_angle <= math.pi / 4 + 1e-15:
            raise ValueError("ray_angle must lie in (0, pi/4]")

    def with_(self, **kw) -> "ContourSpec":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "radius_R": self.radius_R,
            "max_abs_lambda": self.max_abs_lambda,
            "panels_per_unit": self.panels_per_unit,
            "panel_order": self.panel_order,
            "tail_tolerance": self.tail_tolerance,
            "ray_angle": self.ray_angle,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContourSpec":
        return cls(**d)


@dataclass(frozen=True)
class QuadContour:
    nodes: np.ndarray
    weights: np.ndarray
    label: str
    n_panels: int = 0
    panel_order: int = 16
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown contour label {self.label!r}")
        if self.nodes.shape != self.weights.shape:
            raise ValueError("nodes and weights differ in shape")

    def __len__(self):
        return self.nodes.size

    def __add__(self, other: "QuadContour") -> "QuadContour":
        return QuadContour(
            np.concatenate([self.nodes, other.nodes]),
            np.concatenate([self.weights, other.weights]),
            "Path",
            self.n_panels + other.n_panels,
            self.panel_order,
        )


# -- panel layout ----------------------------------------------------------

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def _panel_edges(length: float, density: Callable[[float], float]) -> np.ndarray:
    """Edges ``0 = s_0 < ... < s_n = length`` with ``1/(s_{k+1}-s_k) >= density(s_k)``."""
    if length <= 0:
        return np.array([0.0])
    edges = [0.0]
    s = 0.0
    while s < length:
        step = 1.0 / max(density(s), 1e-300)
        # never let a panel grow past the density demanded at its far end
        step = min(step, 1.0 / max(density(min(s + step, length)), 1e-300))
        s += step
        edges.append(s)
    edges = np.asarray(edges)
    return edges * (length / edges[-1])


def _segment(p0: complex, direction: complex, edges: np.ndarray, order: int):
    x, w = gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    s = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    ws = 0.5 * (b - a) * w[None, :]
    return (p0 + direction * s).ravel(), (direction * ws).ravel()


def build_arc(radius: float, theta0: float, theta1: float, n_panels: int, order: int, label="Path", center=0.0):
    """Arc ``center + radius e^{i theta}`` from ``theta0`` to ``theta1``."""
    x, w = gauss_legendre(order)
    edges = np.linspace(theta0, theta1, n_panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    th = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
    wt = (0.5 * (b - a) * w[None, :]).ravel()
    z = center + radius * np.exp(1j * th)
    return QuadContour(z, 1j * radius * np.exp(1j * th) * wt, label, n_panels, order)


def ray_length(R: float, start_angle: float, ray_angle: float, max_abs: float) -> float:
    """Arclength ``s`` where ``|R e^{i start} + s e^{i ray}| = max_abs``."""
    p = R * np.exp(1j * start_angle)
    d = np.exp(1j * ray_angle)
    pd = (p * np.conj(d)).real
    disc = pd * pd - (R * R - max_abs * max_abs)
    return max(0.0, -pd + math.sqrt(max(disc, 0.0)))


def _density_fn(spec: ContourSpec, rate: Optional[Callable[[np.ndarray], np.ndarray]], start: complex, d: complex):
    """Panels per unit length along ``start + s d``; ``rate`` is radians per unit length."""
    base = float(spec.panels_per_unit)
    if rate is None:
        return lambda s: base
    return lambda s: max(base, float(rate(start + s * d)) / PHASE_PER_PANEL)


# Radians of oscillation resolved by one panel of the default order.
PHASE_PER_PANEL = 4.0


def _sector_contour(spec: ContourSpec, upper: bool, rate) -> QuadContour:
    R, phi, order = spec.radius_R, spec.ray_angle, spec.panel_order
    left, right = (3 * math.pi / 4, math.pi / 4)
    left_dir, right_dir = math.pi - phi, phi
    if not upper:
        # in along the right ray, out along the left ray (all conjugated)
        left, right = -right, -left
        left_dir, right_dir = -phi, -(math.pi - phi)
    length_in = ray_length(R, left, left_dir, spec.max_abs_lambda)
    length_out = ray_length(R, right, right_dir, spec.max_abs_lambda)

    nodes, weights, n_pan = [], [], 0
    # inbound ray: parametrize outward from the arc, then reverse orientation
    p_in, d_in = R * np.exp(1j * left), np.exp(1j * left_dir)
    e_in = _panel_edges(length_in, _density_fn(spec, rate, p_in, d_in))
    if length_in > 0:
        z, w = _segment(p_in, d_in, e_in, order)
        nodes.append(z[::-1])
        weights.append(-w[::-1])
        n_pan += len(e_in) - 1
    arc_len = R * math.pi / 2
    arc_rate = 0.0 if rate is None else float(np.max(rate(R * np.exp(1j * np.linspace(left, right, 33)))))
    n_arc = max(2, math.ceil(arc_len * max(spec.panels_per_unit, arc_rate / PHASE_PER_PANEL)))
    arc = build_arc(R, left, right, n_arc, order)
    nodes.append(arc.nodes)
    weights.append(arc.weights)
    n_pan += n_arc
    p_out, d_out = R * np.exp(1j * right), np.exp(1j * right_dir)
    e_out = _panel_edges(length_out, _density_fn(spec, rate, p_out, d_out))
    if length_out > 0:
        z, w = _segment(p_out, d_out, e_out, order)
        nodes.append(z)
        weights.append(w)
        n_pan += len(e_out) - 1
    label = "Dplus" if upper else "Dminus"
    return QuadContour(np.concatenate(nodes), np.concatenate(weights), label, n_pan, order)


def build_dplus(spec: ContourSpec, rate=None) -> QuadContour:
    """Truncated boundary of ``D_R^+``.

    ``rate(lam)`` optionally gives the integrand's oscillation (radians per
    unit length) near ``lam``; panels are narrowed to resolve it.
    """
    return _sector_contour(spec, True, rate)


def build_dminus(spec: ContourSpec, rate=None) -> QuadContour:
    """Truncated boundary of ``D_R^-`` (mirror image of ``build_dplus``)."""
    return _sector_contour(spec, False, rate)


def build_realline(spec: ContourSpec, rate=None) -> QuadContour:
    L = spec.max_abs_lambda
    dens = _density_fn(spec, rate, 0.0, 1.0)
    half = _panel_edges(L, dens)
    edges = np.concatenate([-half[::-1], half[1:]])
    z, w = _segment(0.0, 1.0, edges, spec.panel_order)
    return QuadContour(z.astype(complex), w.astype(complex), "RealLine", len(edges) - 1, spec.panel_order)


def build_gamma(spec: ContourSpec, sign: int) -> QuadContour:
    """Line ``Im lam = sign R/sqrt(2)`` with the strip ``|Im lam| < R/sqrt(2)`` on its right."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    L = spec.max_abs_lambda
    h = sign * spec.radius_R / math.sqrt(2.0)
    n = max(2, math.ceil(2 * L * spec.panels_per_unit))
    edges = np.linspace(0.0, 2 * L, n + 1)
    if sign == 1:
        z, w = _segment(complex(-L, h), 1.0, edges, spec.panel_order)
        label = "GammaPlus"
    else:
        z, w = _segment(complex(L, h), -1.0, edges, spec.panel_order)
        label = "GammaMinus"
    return QuadContour(z, w.astype(complex), label, n, spec.panel_order)


# -- integration -------------------------------------------------------------

def integrate(contour: QuadContour, f) -> complex:
    """``sum(weights * f(nodes))``; raises on the first non-finite value."""
    vals = np.asarray(f(contour.nodes), dtype=complex)
    vals = np.broadcast_to(vals, contour.nodes.shape)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ContourEvaluationError(complex(contour.nodes[k]), vals[k])
    return complex(np.sum(contour.weights * vals))


# -- argument principle --------------------------------------------------------

def _rect_corners(z0: complex, z1: complex):
    x0, y0, x1, y1 = z0.real, z0.imag, z1.real, z1.imag
    return [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]


def _rect_path(z0: complex, z1: complex, per_side: int, order: int) -> QuadContour:
    corners = _rect_corners(z0, z1)
    nodes, weights, ends = [], [], []
    n_pan = max(1, math.ceil(per_side / order))
    edges = np.linspace(0.0, 1.0, n_pan + 1)
    for a, b in zip(corners, corners[1:]):
        z, w = _segment(a, b - a, edges, order)
        nodes.append(z)
        weights.append(w)
        ends.append(a + (b - a) * edges[:-1])
    return QuadContour(
        np.concatenate(nodes), np.concatenate(weights), "Closed", 4 * n_pan, order, {"edges": np.concatenate(ends)}
    )


def winding_number(f, path: QuadContour, fd_step: float, modulus_floor: float = 1e-12) -> float:
    """``(1/2 pi i) * sum(weights * f'/f)`` with central-difference ``f'``."""
    z = path.nodes
    fz = np.asarray(f(z), dtype=complex)
    if not np.all(np.isfinite(fz)):
        raise ContourEvaluationError(complex(z[np.argmax(~np.isfinite(fz))]), None)
    probe_z = np.concatenate([z, path.meta.get("edges", np.empty(0))])
    probe = np.abs(np.concatenate([fz, np.asarray(f(probe_z[z.size:]), dtype=complex)]))
    if np.min(probe) <= modulus_floor * np.max(probe):
        k = int(np.argmin(probe))
        raise ContourThroughZeroError(
            f"|f| = {probe[k]:.3e} near lambda = {probe_z[k]:.6g} on the contour; perturb the rectangle"
        )
    dfz = (np.asarray(f(z + fd_step), dtype=complex) - np.asarray(f(z - fd_step), dtype=complex)) / (2 * fd_step)
    return (np.sum(path.weights * dfz / fz) / (2j * math.pi)).real


def count_zeros(f, rect, nodes_per_side: int = 256, order: int = 16, modulus_floor: float = 1e-12, max_doublings: int = 6) -> int:
    """Number of zeros of the analytic ``f`` inside the rectangle ``rect``.

    ``rect`` is a pair ``(lower_left, upper_right)`` of complex corners.  The
    node count is doubled until the winding number is within 0.05 of an
    integer and agrees with the previous resolution.  A winding number that
    never settles almost always means a zero sits on or very near the
    boundary, and is reported as such.
    """
    z0, z1 = complex(rect[0]), complex(rect[1])
    if not (z1.real > z0.real and z1.imag > z0.imag):
        raise ValueError("rect must be (lower_left, upper_right)")
    step = 1e-6 * max(1.0, abs(z0), abs(z1))
    prev = None
    n = nodes_per_side
    for _ in range(max_doublings + 1):
        w = winding_number(f, _rect_path(z0, z1, n, order), step, modulus_floor)
        k = round(w)
        if abs(w - k) < 0.05 and prev == k:
            return int(k)
        prev = k if abs(w - k) < 0.05 else None
        n *= 2
    raise ContourThroughZeroError(f"winding number did not settle (last value {w:.4f}); perturb the rectangle")


def localize_zeros(f, rect, min_width: float, **kw) -> list[tuple[tuple[complex, complex], int]]:
    """Bisect ``rect`` until each zero-bearing cell is narrower than ``min_width``."""
    z0, z1 = complex(rect[0]), complex(rect[1])
    n = count_zeros(f, (z0, z1), **kw)
    if n == 0:
        return []
    if max(z1.real - z0.real, z1.imag - z0.imag) <= min_width:
        return [((z0, z1), n)]
    if z1.real - z0.real >= z1.imag - z0.imag:
        # off-centre cut lowers the chance of slicing through a zero
        xm = z0.real + 0.4987 * (z1.real - z0.real)
        halves = [(z0, complex(xm, z1.imag)), (complex(xm, z0.imag), z1)]
    else:
        ym = z0.imag + 0.4987 * (z1.imag - z0.imag)
        halves = [(z0, complex(z1.real, ym)), (complex(z0.real, ym), z1)]
    out = []
    for h in halves:
        out.extend(localize_zeros(f, h, min_width, **kw))
    return out
