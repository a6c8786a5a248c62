"""Moving semi-algebraic set families and the polynomials that define them.

A set family S(t) is built from six closed primitives (balls, half-spaces,
polytopes, polynomial sublevel sets, intersections, translates) whose
coefficients vary piecewise-polynomially in time.  Membership is evaluated
with exact inequalities on computed values; all slices are closed sets.

Vector conventions: points are float arrays of shape (n,), batched points
(m, n).  Every membership/evaluation routine accepts a scalar time or a
per-row time array of shape (m,), which is what makes the estimators in
:mod:`sweepsim.variational` cheap to run over thousands of probe points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError
from .rng import derive_rng
from .timefns import Curve, TimePoly, as_timefn

#: Default geometric tolerance: sampled boundary points lie within this
#: distance of the complement.  Two orders below the smallest integrator
#: step exercised by the bundled scenarios.
BOUNDARY_TOL = 1e-9


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

class Polynomial:
    """Multivariate polynomial stored as a list of (coefficient, exponents) terms.

    Evaluation and differentiation are exact term-wise operations; the
    gradient of ``x**2 + y**2`` at (1, 2) is exactly (2.0, 4.0).
    """

    __slots__ = ("dimension", "coeffs", "exps", "_partials")

    def __init__(self, dimension: int, terms=()):
        if dimension < 1:
            raise ValueError("dimension must be a positive integer")
        self.dimension = int(dimension)
        coeffs, exps = [], []
        for coeff, exponents in terms:
            exponents = tuple(int(e) for e in np.atleast_1d(exponents))
            if len(exponents) != self.dimension:
                raise DimensionMismatchError(
                    f"term exponents {exponents} do not match dimension {self.dimension}")
            if any(e < 0 for e in exponents):
                raise ValueError("exponents must be non-negative")
            coeffs.append(float(coeff))
            exps.append(exponents)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.exps = (np.asarray(exps, dtype=np.int64)
                     if exps else np.zeros((0, self.dimension), dtype=np.int64))
        self._partials = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dimension: int) -> "Polynomial":
        return cls(dimension, [])

    @classmethod
    def squared_norm(cls, dimension: int, weights=None) -> "Polynomial":
        """sum_i w_i * x_i**2 (unit weights by default)."""
        w = np.ones(dimension) if weights is None else np.asarray(weights, dtype=float)
        terms = []
        for i in range(dimension):
            e = [0] * dimension
            e[i] = 2
            terms.append((w[i], e))
        return cls(dimension, terms)

    @classmethod
    def linear(cls, coefficients, constant: float = 0.0) -> "Polynomial":
        coefficients = np.atleast_1d(np.asarray(coefficients, dtype=float))
        n = coefficients.size
        terms = []
        if constant != 0.0:
            terms.append((constant, [0] * n))
        for i, c in enumerate(coefficients):
            if c != 0.0:
                e = [0] * n
                e[i] = 1
                terms.append((c, e))
        return cls(n, terms)

    # -- evaluation ---------------------------------------------------------

    def value(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"points of dimension {X.shape[1]}, polynomial of dimension {self.dimension}")
        if self.coeffs.size == 0:
            return np.zeros(X.shape[0])
        monomials = np.prod(X[:, None, :] ** self.exps[None, :, :], axis=2)
        return monomials @ self.coeffs

    def gradient(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((X.shape[0], self.dimension))
        for j, pj in enumerate(self.partials()):
            out[:, j] = pj.value(X)
        return out

    def value_and_gradient(self, X):
        return self.value(X), self.gradient(X)

    def hessian(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = self.dimension
        out = np.empty((X.shape[0], n, n))
        for i, pi in enumerate(self.partials()):
            for j in range(i, n):
                val = pi.partials()[j].value(X)
                out[:, i, j] = val
                out[:, j, i] = val
        return out

    def partials(self):
        if self._partials is None:
            self._partials = [self._partial(j) for j in range(self.dimension)]
        return self._partials

    def _partial(self, j: int) -> "Polynomial":
        terms = []
        for c, e in zip(self.coeffs, self.exps):
            if e[j] > 0:
                new_e = e.copy()
                new_e[j] -= 1
                terms.append((c * e[j], new_e))
        return Polynomial(self.dimension, terms)

    @property
    def degree(self) -> int:
        if self.coeffs.size == 0:
            return 0
        return int(self.exps.sum(axis=1).max())

    def __repr__(self):
        return f"Polynomial(dim={self.dimension}, terms={self.coeffs.size})"


def poly_eval_grad(p: Polynomial, x):
    """Evaluate a polynomial and its exact gradient at a single point."""
    x = np.asarray(x, dtype=float)
    val, grad = p.value_and_gradient(x[None, :])
    return float(val[0]), grad[0]


# ---------------------------------------------------------------------------
# Regions (bounded localization windows)
# ---------------------------------------------------------------------------

class Box:
    """Axis-aligned box with nonempty interior."""

    __slots__ = ("lower", "upper")

    def __init__(self, lower, upper):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if self.lower.shape != self.upper.shape or np.any(self.lower >= self.upper):
            raise ValueError("box needs lower < upper componentwise")

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def scale(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.all((X >= self.lower) & (X <= self.upper), axis=1)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        u = rng.random((count, self.dimension))
        return self.lower + u * (self.upper - self.lower)

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


class BallRegion:
    """Closed ball window with positive radius."""

    __slots__ = ("center", "radius")

    def __init__(self, center, radius):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.radius = float(radius)
        if self.radius <= 0:
            raise ValueError("ball region needs positive radius")

    @property
    def dimension(self) -> int:
        return self.center.size

    @property
    def scale(self) -> float:
        return 2.0 * self.radius

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.linalg.norm(X - self.center, axis=1) <= self.radius

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        n = self.dimension
        d = rng.standard_normal((count, n))
        d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
        r = self.radius * rng.random(count) ** (1.0 / n)
        return self.center + d * r[:, None]

    def __repr__(self):
        return f"BallRegion(center={self.center.tolist()}, radius={self.radius})"


# ---------------------------------------------------------------------------
# Set families
# ---------------------------------------------------------------------------

def _rows_t(t, m: int) -> np.ndarray:
    t_arr = np.asarray(t, dtype=float)
    if t_arr.ndim == 0:
        return np.full(m, float(t_arr))
    if t_arr.shape != (m,):
        raise ValueError(f"time array of shape {t_arr.shape} for {m} points")
    return t_arr


class SetFamily:
    """Base class for time-varying closed set families S(t) in R^n."""

    dimension: int

    def membership_mask(self, t, X) -> np.ndarray:
        """Vectorized membership; t is a scalar or one time per row of X."""
        raise NotImplementedError

    def _check_points(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"points of dimension {X.shape[1]}, family of dimension {self.dimension}")
        return X


class MovingBall(SetFamily):
    """S(t) = closed ball around center(t) with radius(t).

    A zero radius leaves a single point; a negative radius makes the slice
    empty (reported as such, never clamped).
    """

    def __init__(self, center, radius):
        self.center = center if isinstance(center, Curve) else Curve.constant(center)
        self.radius = as_timefn(radius)
        self.dimension = self.center.dimension

    def membership_mask(self, t, X):
        X = self._check_points(X)
        ts = _rows_t(t, X.shape[0])
        c = np.atleast_2d(self.center(ts))
        r = np.atleast_1d(self.radius(ts))
        return np.linalg.norm(X - c, axis=1) <= r

    def __repr__(self):
        return f"MovingBall(dim={self.dimension})"


class MovingHalfspace(SetFamily):
    """S(t) = {x : <normal(t), x> >= offset(t)}."""

    def __init__(self, normal, offset):
        self.normal = normal if isinstance(normal, Curve) else Curve.constant(normal)
        self.offset = as_timefn(offset)
        self.dimension = self.normal.dimension

    def membership_mask(self, t, X):
        X = self._check_points(X)
        ts = _rows_t(t, X.shape[0])
        n = np.atleast_2d(self.normal(ts))
        c = np.atleast_1d(self.offset(ts))
        return np.einsum("ij,ij->i", X, n) >= c

    def __repr__(self):
        return f"MovingHalfspace(dim={self.dimension})"


class MovingPolytope(SetFamily):
    """Finite intersection of moving half-spaces."""

    def __init__(self, facets):
        facets = list(facets)
        if not facets:
            raise ValueError("polytope needs at least one facet")
        dims = {f.dimension for f in facets}
        if len(dims) != 1:
            raise DimensionMismatchError("facet dimensions disagree")
        self.facets = facets
        self.dimension = facets[0].dimension

    def membership_mask(self, t, X):
        X = self._check_points(X)
        mask = np.ones(X.shape[0], dtype=bool)
        for f in self.facets:
            mask &= f.membership_mask(t, X)
        return mask

    def __repr__(self):
        return f"MovingPolytope(dim={self.dimension}, facets={len(self.facets)})"


class Sublevel(SetFamily):
    """S(t) = {x : p(x) <= level(t)} for a fixed polynomial p."""

    def __init__(self, poly: Polynomial, level):
        self.poly = poly
        self.level = as_timefn(level)
        self.dimension = poly.dimension

    def membership_mask(self, t, X):
        X = self._check_points(X)
        ts = _rows_t(t, X.shape[0])
        return self.poly.value(X) <= np.atleast_1d(self.level(ts))

    def __repr__(self):
        return f"Sublevel(dim={self.dimension}, degree={self.poly.degree})"


class Intersection(SetFamily):
    """Intersection of several set families."""

    def __init__(self, members):
        members = list(members)
        if not members:
            raise ValueError("intersection needs at least one member")
        dims = {m.dimension for m in members}
        if len(dims) != 1:
            raise DimensionMismatchError("member dimensions disagree")
        self.members = members
        self.dimension = members[0].dimension

    def membership_mask(self, t, X):
        X = self._check_points(X)
        mask = np.ones(X.shape[0], dtype=bool)
        for m in self.members:
            mask &= m.membership_mask(t, X)
        return mask

    def __repr__(self):
        return f"Intersection(dim={self.dimension}, members={len(self.members)})"


class Translate(SetFamily):
    """S(t) = base(t) + shift(t)."""

    def __init__(self, base: SetFamily, shift):
        self.base = base
        self.shift = shift if isinstance(shift, Curve) else Curve.constant(shift)
        if self.shift.dimension != base.dimension:
            raise DimensionMismatchError("shift dimension does not match base family")
        self.dimension = base.dimension

    def membership_mask(self, t, X):
        X = self._check_points(X)
        ts = _rows_t(t, X.shape[0])
        return self.base.membership_mask(ts, X - np.atleast_2d(self.shift(ts)))

    def __repr__(self):
        return f"Translate({self.base!r})"


def membership(family: SetFamily, t, x) -> bool:
    """Exact membership x in S(t): all defining inequalities hold at (t, x)."""
    x = np.asarray(x, dtype=float)
    return bool(family.membership_mask(float(t), x[None, :])[0])


# ---------------------------------------------------------------------------
# Boundary sampling
# ---------------------------------------------------------------------------

@dataclass
class BoundarySample:
    """Boundary points of one slice; possibly_empty flags a slice in which no
    interior point was found within the retry budget (not proof of emptiness)."""

    points: np.ndarray
    possibly_empty: bool = False
    directions: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.points.shape[0]


def _rejection_inside(family, ts, draw, count, rng, rounds=40):
    """Collect up to `count` membership-true points; draw(idx) yields one
    candidate per requested slot index."""
    n = family.dimension
    accepted = np.zeros((count, n))
    have = np.zeros(count, dtype=bool)
    for _ in range(rounds):
        idx = np.flatnonzero(~have)
        if idx.size == 0:
            break
        cand = draw(idx)
        ok = family.membership_mask(ts[idx] if ts.ndim else ts, cand)
        hit = idx[ok]
        accepted[hit] = cand[ok]
        have[hit] = True
    return accepted, have


def _bisect_to_boundary(family, ts, pts, in_window, rng, boundary_tol,
                        step0, step_max, direction_tries=6):
    """Push each inside point to within boundary_tol of the complement.

    Marches along random directions to bracket a membership sign change while
    staying inside the window, then bisects.  Returns boundary points, a
    success mask, and the outward direction used for each success.
    """
    m, n = pts.shape
    result = np.zeros_like(pts)
    dirs_out = np.zeros_like(pts)
    done = np.zeros(m, dtype=bool)
    for _ in range(direction_tries):
        todo = ~done
        k = int(todo.sum())
        if k == 0:
            break
        idx = np.flatnonzero(todo)
        d = rng.standard_normal((k, n))
        d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
        lo = np.zeros(k)
        hi = np.full(k, np.nan)
        s = np.full(k, step0)
        active = np.ones(k, dtype=bool)
        t_rows = ts[idx] if ts.ndim else ts
        while np.any(active):
            cand = pts[idx] + s[:, None] * d
            member = family.membership_mask(t_rows, cand)
            inside_win = in_window(idx, cand)
            # crossing found where no longer a member
            hit = active & ~member
            hi[hit] = s[hit]
            active[hit] = False
            # direction escapes the window while still inside the set: give up
            active &= ~(member & ~inside_win)
            lo[active] = s[active]
            s[active] *= 2.0
            active &= s <= step_max
        found = ~np.isnan(hi)
        if not np.any(found):
            continue
        f_idx = np.flatnonzero(found)
        a = lo[f_idx].copy()
        b = hi[f_idx].copy()
        sub_rows = ts[idx[f_idx]] if ts.ndim else ts
        # bisect until the bracket is below boundary_tol
        iters = int(np.ceil(np.log2(max(np.max(b - a), boundary_tol) / boundary_tol))) + 1
        for _ in range(iters):
            mid = 0.5 * (a + b)
            cand = pts[idx[f_idx]] + mid[:, None] * d[f_idx]
            member = family.membership_mask(sub_rows, cand)
            a[member] = mid[member]
            b[~member] = mid[~member]
        rows = idx[f_idx]
        result[rows] = pts[rows] + a[:, None] * d[f_idx]
        dirs_out[rows] = d[f_idx]
        done[rows] = True
    return result, done, dirs_out


def _boundary_by_projection(family, t, region, count, rng, boundary_tol):
    """Boundary points found by projecting region samples onto the slice.

    Fallback for slices too small for rejection sampling to hit.  Each
    projected point is re-bracketed along its outward ray and bisected so
    the returned points are members within boundary_tol of the complement.
    Returns (points, outward_directions).
    """
    from .projection import project_batch  # deferred: higher-level machinery
    from .errors import EmptySetError

    n = family.dimension
    draws = region.sample(rng, max(4 * count, 32))
    try:
        pts, dist, ok = project_batch(family, float(t), draws)
    except EmptySetError:
        return np.zeros((0, n)), np.zeros((0, n))
    keep = ok & (dist > boundary_tol)
    if not np.any(keep):
        return np.zeros((0, n)), np.zeros((0, n))
    y = pts[keep]
    u = (draws[keep] - y) / dist[keep][:, None]
    m = y.shape[0]
    scale = 1.0 + np.linalg.norm(y, axis=1)

    member0 = family.membership_mask(float(t), y)
    sign = np.where(member0, 1.0, -1.0)      # walk outward from members, inward otherwise
    s_prev = np.zeros(m)
    s = boundary_tol * scale
    lo = np.full(m, np.nan)                  # signed offset of a member point
    hi = np.full(m, np.nan)                  # signed offset of a non-member point
    active = np.ones(m, dtype=bool)
    for _ in range(50):
        if not np.any(active):
            break
        cand = y + (sign * s)[:, None] * u
        mem = family.membership_mask(float(t), cand)
        flipped = active & (mem != member0)
        lo[flipped] = np.where(member0[flipped], sign[flipped] * s_prev[flipped],
                               sign[flipped] * s[flipped])
        hi[flipped] = np.where(member0[flipped], sign[flipped] * s[flipped],
                               sign[flipped] * s_prev[flipped])
        active &= ~flipped
        s_prev[active] = s[active]
        s[active] *= 2.0
        active &= s <= 1e-2 * scale
    good = ~np.isnan(lo)
    if not np.any(good):
        return np.zeros((0, n)), np.zeros((0, n))
    y, u, lo, hi = y[good], u[good], lo[good], hi[good]
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        cand = y + mid[:, None] * u
        mem = family.membership_mask(float(t), cand)
        lo[mem] = mid[mem]
        hi[~mem] = mid[~mem]
    out = y + lo[:, None] * u
    in_region = region.contains(out)
    return out[in_region][:count], u[in_region][:count]


def sample_boundary(family: SetFamily, t: float, region, count: int, seed: int,
                    boundary_tol: float = BOUNDARY_TOL) -> BoundarySample:
    """Sample up to `count` near-boundary points of S(t) inside `region`.

    Rejection sampling finds interior points; bisection along random
    directions pushes them to within `boundary_tol` of the complement.
    Slices too small for rejection to hit fall back to projecting region
    samples onto the slice.  Deterministic for a fixed seed.  An empty
    result with the possibly_empty flag means no member of S(t) was found
    in the region within the retry budget.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if region.dimension != family.dimension:
        raise DimensionMismatchError("region dimension does not match family")
    rng = derive_rng(seed, "sample_boundary", float(t))
    ts = np.asarray(float(t))
    pts_in, have = _rejection_inside(
        family, ts, lambda idx: region.sample(rng, idx.size), count, rng)
    inside = pts_in[have]
    if inside.shape[0] == 0:
        pts, dirs = _boundary_by_projection(family, t, region, count, rng,
                                            boundary_tol)
        if pts.shape[0] == 0:
            return BoundarySample(np.zeros((0, family.dimension)),
                                  possibly_empty=True)
        return BoundarySample(pts, possibly_empty=False, directions=dirs)

    def in_window(_idx, cand):
        return region.contains(cand)

    pts, ok, dirs = _bisect_to_boundary(
        family, ts, inside, in_window, rng, boundary_tol,
        step0=region.scale / 64.0, step_max=2.0 * region.scale)
    return BoundarySample(pts[ok], possibly_empty=False, directions=dirs[ok])


def sample_inside(family: SetFamily, t: float, region, count: int, seed: int,
                  tag="inside") -> np.ndarray:
    """Plain rejection sample of S(t) members in `region` (no boundary push)."""
    rng = derive_rng(seed, tag, float(t))
    ts = np.asarray(float(t))
    pts, have = _rejection_inside(
        family, ts, lambda idx: region.sample(rng, idx.size), count, rng)
    return pts[have]
