"""Weight functions for the nonlocal condition and the zero-exclusion radius."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .piecewise import PiecewisePolynomial, reverse_shift


class UnsupportedOperation(ValueError):
    """Raised when a pointwise operation is requested on an atom-bearing weight."""


class HypothesisViolation(ValueError):
    """The weight fails the hypotheses of the zero-exclusion bound."""


class Weight(PiecewisePolynomial):
    """Piecewise polynomial weight ``K`` on ``[0, 1]`` with optional point atoms.

    Atoms are ``(location, mass)`` pairs and are only meaningful for the
    multipoint machinery; every pointwise operation refuses them.
    """

    def __init__(self, breakpoints, coeffs, atoms: Sequence[tuple[float, float]] = ()):
        super().__init__(breakpoints, coeffs, (0.0, 1.0))
        atoms = tuple((float(x), float(m)) for x, m in atoms)
        for x, _ in atoms:
            if not 0.0 <= x <= 1.0:
                raise ValueError("atom location outside [0, 1]")
        object.__setattr__(self, "atoms", atoms)

    @staticmethod
    def _rebuild(template, breakpoints, coeffs):
        return Weight(tuple(breakpoints), tuple(tuple(c) for c in coeffs), getattr(template, "atoms", ()))

    def __eq__(self, other):
        return (
            isinstance(other, Weight)
            and self.breakpoints == other.breakpoints
            and self.coeffs == other.coeffs
            and self.atoms == other.atoms
        )

    def __hash__(self):
        return hash((self.breakpoints, self.coeffs, self.atoms))

    def __repr__(self):
        return f"Weight(breakpoints={self.breakpoints}, coeffs={self.coeffs}, atoms={self.atoms})"

    @property
    def has_atoms(self) -> bool:
        return len(self.atoms) > 0

    def _require_atom_free(self, what: str):
        if self.has_atoms:
            raise UnsupportedOperation(f"{what} is undefined for a weight with point atoms")

    def __call__(self, x):
        self._require_atom_free("pointwise evaluation")
        return super().__call__(x)

    def to_dict(self) -> dict:
        d = super().to_dict()
        if self.atoms:
            d["atoms"] = [list(a) for a in self.atoms]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Weight":
        return cls(d["breakpoints"], d["coeffs"], [tuple(a) for a in d.get("atoms", [])])


def eval(w: Weight, x):  # noqa: A001 - mirrors the operation name
    """Value of ``w`` at ``x`` (left-continuous, right limit at 0)."""
    return w(x)


def reflected(w: Weight) -> Weight:
    """The weight ``k(y) = K(1 - y)``."""
    bps = [1.0 - b for b in reversed(w.breakpoints)]
    bps[0], bps[-1] = 0.0, 1.0
    cfs = []
    for i in reversed(range(w.n_pieces)):
        h = w.breakpoints[i + 1] - w.breakpoints[i]
        cfs.append(tuple(reverse_shift(np.asarray(w.coeffs[i]), h)))
    atoms = [(1.0 - x, m) for x, m in reversed(w.atoms)]
    return Weight(bps, cfs, atoms)


def _critical_points(coeffs: np.ndarray, lo: float, hi: float) -> list[float]:
    if len(coeffs) < 3:
        return []
    d = np.polynomial.polynomial.polyder(coeffs)
    roots = np.polynomial.polynomial.polyroots(d)
    out = []
    for r in roots:
        if abs(r.imag) < 1e-12 and lo < r.real < hi:
            out.append(float(r.real))
    return sorted(out)


def total_variation(w: Weight, lo: float = 0.0, hi: float = 1.0) -> float:
    """Exact total variation of ``w`` on ``[lo, hi]``.

    Monotone segments are delimited by the roots of each piece's derivative;
    jumps at interior breakpoints strictly inside ``(lo, hi)`` are added.
    """
    w._require_atom_free("total variation")
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError("need 0 <= lo < hi <= 1")
    tv = 0.0
    prev_end = None
    for i, (a, b, c) in enumerate(w.pieces()):
        u, v = max(a, lo), min(b, hi)
        if v <= u:
            continue
        c = np.asarray(c)
        # local coordinates of the piece
        pts = [u - a] + _critical_points(c, u - a, v - a) + [v - a]
        vals = np.polynomial.polynomial.polyval(np.asarray(pts), c)
        tv += float(np.abs(np.diff(vals)).sum())
        if prev_end is not None:
            tv += abs(vals[0] - prev_end)
        prev_end = vals[-1]
    return tv


def support(w: Weight) -> tuple[float, float]:
    nonzero = [(a, b) for a, b, c in w.pieces() if np.any(np.asarray(c) != 0.0)]
    if not nonzero:
        raise HypothesisViolation("weight is identically zero")
    return nonzero[0][0], nonzero[-1][1]


@dataclass(frozen=True)
class ZeroBound:
    support_a: float
    support_b: float
    k_at_b: float
    total_variation: float
    delta0: float
    M: float
    R: float


DELTA0_SCAN_RATIO = 0.98
DELTA0_FLOOR = 1e-12


def zero_bound(w: Weight) -> ZeroBound:
    """Strip half-width ``M`` containing every zero of ``Delta`` and ``R = sqrt(2) M``.

    ``delta0`` is the largest value on the geometric grid
    ``(b - a)(1 - 1e-6) * 0.98**n`` for which the variation of ``k`` on
    ``[b - delta0, b]`` is below ``|k(b)| / 8``.  When the total variation of
    ``k`` vanishes the logarithmic term is dropped.
    """
    if w.has_atoms:
        raise UnsupportedOperation("the zero bound requires a weight of bounded variation (no atoms)")
    k = reflected(w)
    a, b = support(k)
    kb = float(k(b))
    if kb == 0.0:
        raise HypothesisViolation("k(b) = 0: the weight must not vanish at x = 0")
    v_total = total_variation(k, 0.0, 1.0)
    target = abs(kb) / 8.0
    delta0 = (b - a) * (1.0 - 1e-6)
    while total_variation(k, b - delta0, b) >= target:
        delta0 *= DELTA0_SCAN_RATIO
        if delta0 < DELTA0_FLOOR:
            raise HypothesisViolation("no admissible delta0: k is not left-continuous at b")
    M = math.log(2.0) / b
    if v_total > 0.0:
        M = max(M, math.log(4.0 * v_total / abs(kb)) / delta0)
    return ZeroBound(a, b, kb, v_total, delta0, M, math.sqrt(2.0) * M)


# -- convenience constructors ---------------------------------------------

def constant_weight(value: float = 1.0) -> Weight:
    return Weight((0.0, 1.0), ((value,),))


def box_weight(a: float, b: float, height: float = 1.0) -> Weight:
    p = PiecewisePolynomial.box(a, b, height)
    return Weight(p.breakpoints, p.coeffs)


def polynomial_weight(global_coeffs: Sequence[float]) -> Weight:
    p = PiecewisePolynomial.polynomial(global_coeffs)
    return Weight(p.breakpoints, p.coeffs)


def piecewise_linear_weight(nodes: Sequence[float], values: Sequence[float]) -> Weight:
    """Continuous piecewise-linear weight through ``(nodes[i], values[i])``."""
    nodes = list(nodes)
    cfs = []
    for (x0, y0), (x1, y1) in zip(zip(nodes, values), zip(nodes[1:], values[1:])):
        cfs.append((y0, (y1 - y0) / (x1 - x0)))
    return Weight(nodes, cfs)
