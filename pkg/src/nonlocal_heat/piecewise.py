"""Piecewise polynomials on an interval, stored in local coordinates.

Piece ``i`` covers ``[b_i, b_{i+1}]`` and holds ascending coefficients of the
polynomial in the local variable ``s = x - b_i``.  Local coordinates keep the
closed-form transforms well conditioned on short pieces.

Point values follow a left-continuous convention: at an interior breakpoint the
value of the piece on the left is returned, at the first breakpoint the value of
the first piece.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_DEGREE = 3


def taylor_shift(coeffs: np.ndarray, d: float) -> np.ndarray:
    """Coefficients of ``p(d + s)`` in powers of ``s``."""
    n = len(coeffs)
    out = np.zeros(n)
    for k, c in enumerate(coeffs):
        if c == 0.0:
            continue
        for i in range(k + 1):
            out[i] += c * math.comb(k, i) * d ** (k - i)
    return out


def reverse_shift(coeffs: np.ndarray, h: float) -> np.ndarray:
    """Coefficients of ``p(h - s)`` in powers of ``s``."""
    n = len(coeffs)
    out = np.zeros(n)
    for k, c in enumerate(coeffs):
        if c == 0.0:
            continue
        for i in range(k + 1):
            out[i] += c * math.comb(k, i) * h ** (k - i) * (-1) ** i
    return out


@dataclass(frozen=True)
class PiecewisePolynomial:
    breakpoints: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]
    domain: tuple[float, float] = field(default=(0.0, 1.0))

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        cf = tuple(tuple(float(c) for c in piece) for piece in self.coeffs)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "coeffs", cf)
        lo, hi = self.domain
        if len(bp) < 2 or len(cf) != len(bp) - 1:
            raise ValueError("need len(coeffs) == len(breakpoints) - 1 >= 1")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if not (math.isclose(bp[0], lo, abs_tol=1e-14) and math.isclose(bp[-1], hi, abs_tol=1e-14)):
            raise ValueError(f"breakpoints must start at {lo} and end at {hi}")
        for piece in cf:
            if len(piece) == 0 or len(piece) > MAX_DEGREE + 1:
                raise ValueError(f"pieces must have 1..{MAX_DEGREE + 1} coefficients")

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value: float, domain=(0.0, 1.0)):
        return cls((domain[0], domain[1]), ((value,),), domain)

    @classmethod
    def zero(cls, domain=(0.0, 1.0)):
        return cls.constant(0.0, domain)

    @classmethod
    def box(cls, a: float, b: float, height: float = 1.0, domain=(0.0, 1.0)):
        """``height`` on ``(a, b)``, zero elsewhere in ``domain``."""
        lo, hi = domain
        bps = [lo]
        cfs: list[tuple[float, ...]] = []
        if a > lo:
            bps.append(a)
            cfs.append((0.0,))
        bps.append(b)
        cfs.append((height,))
        if b < hi:
            bps.append(hi)
            cfs.append((0.0,))
        return cls(tuple(bps), tuple(cfs), domain)

    @classmethod
    def from_global(cls, breakpoints: Sequence[float], global_coeffs: Sequence[Sequence[float]], domain=(0.0, 1.0)):
        """Build from coefficients in the global variable ``x`` on each piece."""
        local = [taylor_shift(np.asarray(c, float), b) for c, b in zip(global_coeffs, breakpoints)]
        return cls(tuple(breakpoints), tuple(tuple(c) for c in local), domain)

    @classmethod
    def polynomial(cls, global_coeffs: Sequence[float], domain=(0.0, 1.0)):
        return cls.from_global(domain, [global_coeffs], domain)

    # -- evaluation ---------------------------------------------------
    @property
    def n_pieces(self) -> int:
        return len(self.coeffs)

    @property
    def degree(self) -> int:
        return max(len(c) for c in self.coeffs) - 1

    def piece_index(self, x) -> np.ndarray:
        bp = np.asarray(self.breakpoints)
        idx = np.searchsorted(bp, x, side="left") - 1
        return np.clip(idx, 0, self.n_pieces - 1)

    def piece_value(self, i: int, x):
        s = np.asarray(x, dtype=float) - self.breakpoints[i]
        return np.polynomial.polynomial.polyval(s, self.coeffs[i])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.any((x < lo - 1e-12) | (x > hi + 1e-12)):
            raise ValueError(f"evaluation point outside {self.domain}")
        idx = self.piece_index(x)
        out = np.empty(x.shape)
        flat_x, flat_i, flat_o = x.ravel(), idx.ravel(), out.ravel()
        for i in np.unique(flat_i):
            sel = flat_i == i
            flat_o[sel] = self.piece_value(int(i), flat_x[sel])
        return out if out.ndim else float(out)

    def right_limit(self, x: float) -> float:
        bp = np.asarray(self.breakpoints)
        i = int(np.clip(np.searchsorted(bp, x, side="right") - 1, 0, self.n_pieces - 1))
        return float(self.piece_value(i, x))

    def derivative(self) -> "PiecewisePolynomial":
        cfs = []
        for c in self.coeffs:
            d = np.polynomial.polynomial.polyder(np.asarray(c)) if len(c) > 1 else np.array([0.0])
            cfs.append(tuple(d))
        return type(self)._rebuild(self, self.breakpoints, cfs)

    def integral(self, lo: float | None = None, hi: float | None = None) -> float:
        lo = self.domain[0] if lo is None else lo
        hi = self.domain[1] if hi is None else hi
        total = 0.0
        for i, c in enumerate(self.coeffs):
            a, b = self.breakpoints[i], self.breakpoints[i + 1]
            u, v = max(a, lo), min(b, hi)
            if v <= u:
                continue
            anti = np.polynomial.polynomial.polyint(np.asarray(c))
            total += np.polynomial.polynomial.polyval(v - a, anti) - np.polynomial.polynomial.polyval(u - a, anti)
        return float(total)

    def is_zero(self) -> bool:
        return all(all(v == 0.0 for v in c) for c in self.coeffs)

    # -- structure ----------------------------------------------------
    @staticmethod
    def _rebuild(template, breakpoints, coeffs):
        return PiecewisePolynomial(tuple(breakpoints), tuple(tuple(c) for c in coeffs), template.domain)

    def refine(self, points: Iterable[float]) -> list[tuple[float, float, np.ndarray]]:
        """Split at extra ``points``; returns ``(a, b, local_coeffs)`` triples."""
        lo, hi = self.domain
        extra = [p for p in points if lo < p < hi]
        grid = np.unique(np.concatenate([np.asarray(self.breakpoints), np.asarray(extra, dtype=float)]))
        # merge near-duplicates so no piece is degenerate
        keep = [grid[0]]
        for g in grid[1:]:
            if g - keep[-1] > 1e-13:
                keep.append(g)
        keep[-1] = hi
        out = []
        for a, b in zip(keep, keep[1:]):
            i = int(self.piece_index(0.5 * (a + b)))
            c = taylor_shift(np.asarray(self.coeffs[i]), a - self.breakpoints[i])
            out.append((float(a), float(b), c))
        return out

    def pieces(self) -> list[tuple[float, float, np.ndarray]]:
        return [
            (self.breakpoints[i], self.breakpoints[i + 1], np.asarray(self.coeffs[i]))
            for i in range(self.n_pieces)
        ]

    def scaled(self, factor: float) -> "PiecewisePolynomial":
        return type(self)._rebuild(self, self.breakpoints, [np.asarray(c) * factor for c in self.coeffs])

    def __add__(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        if self.domain != other.domain:
            raise ValueError("domains differ")
        pts = list(other.breakpoints)
        mine = self.refine(pts)
        theirs = other.refine(self.breakpoints)
        cfs = []
        for (a, _, c1), (_, _, c2) in zip(mine, theirs):
            n = max(len(c1), len(c2))
            cfs.append(tuple(np.pad(c1, (0, n - len(c1))) + np.pad(c2, (0, n - len(c2)))))
        bps = [p[0] for p in mine] + [mine[-1][1]]
        return type(self)._rebuild(self, bps, cfs)

    # -- serialization --------------------------------------------------
    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "coeffs": [list(c) for c in self.coeffs]}


class SpaceSignal(PiecewisePolynomial):
    """Piecewise polynomial on ``[0, 1]`` (initial data, test functions)."""

    def __init__(self, breakpoints, coeffs, domain=(0.0, 1.0)):
        super().__init__(breakpoints, coeffs, (0.0, 1.0))

    @staticmethod
    def _rebuild(template, breakpoints, coeffs):
        return SpaceSignal(tuple(breakpoints), tuple(tuple(c) for c in coeffs))

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceSignal":
        return cls(d["breakpoints"], d["coeffs"])


class TimeSignal(PiecewisePolynomial):
    """Piecewise polynomial on ``[0, T]`` (boundary and nonlocal data)."""

    @staticmethod
    def _rebuild(template, breakpoints, coeffs):
        return TimeSignal(tuple(breakpoints), tuple(tuple(c) for c in coeffs), template.domain)

    @classmethod
    def constant(cls, value: float, horizon: float = 1.0):  # type: ignore[override]
        return cls((0.0, horizon), ((value,),), (0.0, horizon))

    @classmethod
    def zero(cls, horizon: float = 1.0):  # type: ignore[override]
        return cls.constant(0.0, horizon)

    @classmethod
    def polynomial(cls, global_coeffs, horizon: float = 1.0):  # type: ignore[override]
        return cls.from_global((0.0, horizon), [global_coeffs], (0.0, horizon))

    @property
    def horizon(self) -> float:
        return self.domain[1]

    @classmethod
    def from_dict(cls, d: dict, horizon: float) -> "TimeSignal":
        return cls(d["breakpoints"], d["coeffs"], (0.0, horizon))
