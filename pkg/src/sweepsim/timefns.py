"""Piecewise-polynomial scalar functions of time and vector-valued curves.

Restricting time dependence of set families to piecewise polynomials keeps
every moving set semi-algebraic jointly in (t, x) and makes closed graphs
automatic.  Pieces use local coordinates u = t - start so that converting
interpolants (e.g. monotone cubics) is exact and evaluation stays well
conditioned far from the origin.
"""

from __future__ import annotations

import numpy as np


class TimePoly:
    """Scalar piecewise polynomial of time.

    Piece k is a polynomial in u = t - starts[k] with ascending coefficients
    coeffs[k], active on [starts[k], starts[k+1]).  The first and last pieces
    extend polynomially beyond the covered range.
    """

    __slots__ = ("starts", "coeffs")

    def __init__(self, starts, coeffs):
        starts = np.atleast_1d(np.asarray(starts, dtype=float))
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if starts.ndim != 1 or coeffs.shape[0] != starts.shape[0]:
            raise ValueError("need one coefficient row per piece start")
        if starts.size > 1 and np.any(np.diff(starts) <= 0):
            raise ValueError("piece starts must be strictly increasing")
        self.starts = starts
        self.coeffs = coeffs

    @classmethod
    def constant(cls, value: float) -> "TimePoly":
        return cls([0.0], [[float(value)]])

    @classmethod
    def polynomial(cls, coeffs, origin: float = 0.0) -> "TimePoly":
        """Single global polynomial with ascending coefficients in (t - origin)."""
        return cls([origin], [list(np.atleast_1d(coeffs))])

    @classmethod
    def from_pchip(cls, interpolant) -> "TimePoly":
        """Convert a scipy piecewise-cubic interpolant (e.g. PchipInterpolator)."""
        # scipy stores descending powers in local variable (t - x[k])
        c = np.asarray(interpolant.c, dtype=float)  # (order+1, K)
        return cls(np.asarray(interpolant.x[:-1], dtype=float), c[::-1].T)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        t_arr = np.atleast_1d(t_arr)
        idx = np.clip(np.searchsorted(self.starts, t_arr, side="right") - 1, 0, None)
        u = t_arr - self.starts[idx]
        c = self.coeffs[idx]  # (m, D)
        out = c[:, -1].copy()
        for j in range(c.shape[1] - 2, -1, -1):
            out = out * u + c[:, j]
        return float(out[0]) if scalar else out

    def __repr__(self):
        return f"TimePoly(pieces={self.starts.size}, degree={self.coeffs.shape[1] - 1})"


class TimeReparam:
    """Composition f(psi(t)) used for table-lookup time reparametrization."""

    __slots__ = ("fn", "psi")

    def __init__(self, fn, psi):
        self.fn = fn
        self.psi = psi

    def __call__(self, t):
        return self.fn(self.psi(t))


def as_timefn(value) -> TimePoly:
    """Coerce a constant or coefficient list into a TimePoly; pass callables through."""
    if callable(value):
        return value
    if np.isscalar(value):
        return TimePoly.constant(float(value))
    return TimePoly.polynomial(value)


class Curve:
    """Vector-valued function of time with one scalar time function per coordinate."""

    __slots__ = ("components",)

    def __init__(self, components):
        self.components = [as_timefn(c) for c in components]

    @classmethod
    def constant(cls, point) -> "Curve":
        return cls([float(p) for p in np.atleast_1d(point)])

    @property
    def dimension(self) -> int:
        return len(self.components)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        cols = [np.atleast_1d(c(t_arr)) for c in self.components]
        out = np.stack(cols, axis=-1)
        return out[0] if scalar else out

    def __repr__(self):
        return f"Curve(dimension={self.dimension})"
