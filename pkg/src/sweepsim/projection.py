"""Nearest-point projection onto moving sets and proximal normal directions.

The projection is the single primitive the catching-up integrator needs.
Balls, half-spaces and translates have closed forms; polytopes are solved
exactly by active-set enumeration over facet subsets; polynomial sublevel
sets run a damped Newton iteration on the stationarity system

    y - x + lam * grad p(y) = 0,   p(y) = level,   lam >= 0,

multistarted from boundary points so that nonconvex slices return the best
local solution deterministically.  Intersections use alternating projections
polished by a joint Newton step on the active constraints.

All heavy paths are batched: `project_batch` accepts (m, n) point arrays and
a scalar or per-row time, which the Lipschitz-modulus estimators rely on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .errors import DimensionMismatchError, EmptySetError, SingularNormalError
from .geometry import (BOUNDARY_TOL, Intersection, MovingBall, MovingHalfspace,
                       MovingPolytope, SetFamily, Sublevel, Translate, _rows_t)
from .rng import derive_rng

KKT_TOL = 1e-10
MAX_NEWTON_ITER = 100
DEFAULT_STARTS = 8


@dataclass
class ProjectionResult:
    """Nearest point found on S(t), with the proximal normal when outside."""

    point: np.ndarray
    distance: float
    normal: np.ndarray | None
    converged: bool
    iterations: int


# ---------------------------------------------------------------------------
# Batched projection dispatch
# ---------------------------------------------------------------------------

def _dispatch(family: SetFamily, ts, X, starts, seed, kkt_tol, max_iter):
    """Per-kind projection core; returns (points, distances, converged, iters)."""
    if isinstance(family, MovingBall):
        return (*_project_ball(family, ts, X), 0)
    if isinstance(family, MovingHalfspace):
        return (*_project_halfspace(family, ts, X), 0)
    if isinstance(family, Translate):
        shift = np.atleast_2d(family.shift(ts))
        pts, dist, ok, iters = _dispatch(family.base, ts, X - shift, starts,
                                         seed, kkt_tol, max_iter)
        return pts + shift, dist, ok, iters
    if isinstance(family, MovingPolytope):
        return (*_project_polytope(family, ts, X), 0)
    if isinstance(family, Sublevel):
        return _project_sublevel(family, ts, X, starts, seed, kkt_tol, max_iter)
    if isinstance(family, Intersection):
        return _project_intersection(family, ts, X, starts, seed, kkt_tol,
                                     max_iter)
    raise TypeError(f"unsupported family kind {type(family).__name__}")


def project_batch(family: SetFamily, t, X, starts: int = DEFAULT_STARTS,
                  seed: int = 0, kkt_tol: float = KKT_TOL,
                  max_iter: int = MAX_NEWTON_ITER):
    """Project each row of X onto S(t_row).

    Returns (points, distances, converged) arrays.  Raises EmptySetError when
    a slice is provably empty (closed-form kinds) or no feasible point can be
    located (sublevel kinds).
    """
    X = family._check_points(X)
    ts = _rows_t(t, X.shape[0])
    pts, dist, ok, _ = _dispatch(family, ts, X, starts, seed, kkt_tol, max_iter)
    return pts, dist, ok


def project(family: SetFamily, t: float, x, starts: int = DEFAULT_STARTS,
            seed: int = 0, kkt_tol: float = KKT_TOL,
            max_iter: int = MAX_NEWTON_ITER) -> ProjectionResult:
    """Project a single point onto S(t)."""
    x = np.asarray(x, dtype=float)
    X = family._check_points(x[None, :])
    ts = _rows_t(float(t), 1)
    pts, dist, ok, iters = _dispatch(family, ts, X, starts, seed, kkt_tol,
                                     max_iter)
    d = float(dist[0])
    point = pts[0]
    normal = (x - point) / d if d > 0 else None
    return ProjectionResult(point=point, distance=d, normal=normal,
                            converged=bool(ok[0]), iterations=int(iters))


def distance(family: SetFamily, t: float, x) -> float:
    return project(family, t, x).distance


# -- closed forms -----------------------------------------------------------

def _project_ball(family, ts, X):
    c = np.atleast_2d(family.center(ts))
    r = np.atleast_1d(family.radius(ts))
    if np.any(r < 0):
        raise EmptySetError(f"ball radius negative at t={ts[r < 0][0]}: empty slice")
    delta = X - c
    nrm = np.linalg.norm(delta, axis=1)
    dist = np.maximum(nrm - r, 0.0)
    outside = dist > 0
    pts = X.copy()
    safe = np.where(nrm > 0, nrm, 1.0)
    pts[outside] = (c + delta * (r / safe)[:, None])[outside]
    return pts, dist, np.ones(X.shape[0], dtype=bool)


def _project_halfspace(family, ts, X):
    n = np.atleast_2d(family.normal(ts))
    c = np.atleast_1d(family.offset(ts))
    nn = np.einsum("ij,ij->i", n, n)
    if np.any(nn == 0):
        raise EmptySetError("half-space has zero normal: undefined slice")
    gap = c - np.einsum("ij,ij->i", X, n)      # positive when outside
    dist = np.maximum(gap, 0.0) / np.sqrt(nn)
    pts = X + (np.maximum(gap, 0.0) / nn)[:, None] * n
    return pts, dist, np.ones(X.shape[0], dtype=bool)


# -- polytopes: exact enumeration over facet subsets -------------------------

def _polytope_data(family, ts):
    """Unit outward-inequality data: rows satisfy A x >= b inside."""
    A = np.stack([np.atleast_2d(f.normal(ts)) for f in family.facets], axis=1)
    b = np.stack([np.atleast_1d(f.offset(ts)) for f in family.facets], axis=1)
    norms = np.linalg.norm(A, axis=2, keepdims=True)
    if np.any(norms == 0):
        raise EmptySetError("polytope facet has zero normal")
    return A / norms, b / norms[:, :, 0]


def _project_polytope(family, ts, X):
    m, n = X.shape
    A, b = _polytope_data(family, ts)             # (m, F, n), (m, F)
    F = A.shape[1]
    feas_tol = 1e-10
    best = np.full(m, np.inf)
    pts = X.copy()

    def consider(Y):
        nonlocal best, pts
        slack = np.einsum("mfn,mn->mf", A, Y) - b
        feas = np.all(slack >= -feas_tol, axis=1)
        d = np.linalg.norm(Y - X, axis=1)
        take = feas & (d < best)
        best[take] = d[take]
        pts[take] = Y[take]

    consider(X)  # empty active set
    max_active = min(n, F)
    for k in range(1, max_active + 1):
        for subset in itertools.combinations(range(F), k):
            As = A[:, subset, :]                  # (m, k, n)
            bs = b[:, subset]                     # (m, k)
            G = As @ As.transpose(0, 2, 1)        # (m, k, k)
            det = np.linalg.det(G)
            usable = np.abs(det) > 1e-12
            if not np.any(usable):
                continue
            rhs = bs - np.einsum("mkn,mn->mk", As, X)
            mu = np.zeros_like(bs)
            mu[usable] = np.linalg.solve(G[usable], rhs[usable][..., None])[..., 0]
            Y = X + np.einsum("mk,mkn->mn", mu, As)
            Y[~usable] = X[~usable] + np.inf      # poisoned: never feasible
            consider(Y)

    if np.any(~np.isfinite(best)):
        raise EmptySetError("polytope slice is empty (no facet subset feasible)")
    return pts, best, np.ones(m, dtype=bool)


# -- sublevel sets: multistart damped Newton on the stationarity system ------

def _find_inside_anchors(poly, levels, X, rng, max_iter=80):
    """Gradient descent on p with Newton step sizing until p(z) <= level.

    Near-critical stalls get a random kick so that starts diversify across
    disconnected feasible pieces (e.g. the two sheets of a cone).
    """
    Z = X.copy()
    vals = poly.value(Z)
    # thin-set tolerance: accept anchors that land on the level to rounding
    atol = 1e-12 * (1.0 + np.abs(levels))
    found = vals <= levels + atol
    scale = 1.0 + np.linalg.norm(X, axis=1)
    for _ in range(max_iter):
        idx = np.flatnonzero(~found)
        if idx.size == 0:
            break
        z = Z[idx]
        v = vals[idx]
        g = poly.gradient(z)
        gn2 = np.einsum("ij,ij->i", g, g)
        stalled = gn2 < 1e-18 * scale[idx] ** 2
        if np.any(stalled):
            kick = 0.05 * scale[idx[stalled], None] * rng.standard_normal(
                (int(stalled.sum()), X.shape[1]))
            z[stalled] += kick
            g[stalled] = poly.gradient(z[stalled])
            gn2[stalled] = np.einsum("ij,ij->i", g[stalled], g[stalled])
            v[stalled] = poly.value(z[stalled])
        # 1.5x overshoot so the iterate crosses the level instead of
        # converging onto it from above
        eta = 1.5 * (v - levels[idx]) / np.maximum(gn2, 1e-300)
        # cap the step length at one window scale
        step = eta[:, None] * g
        slen = np.linalg.norm(step, axis=1)
        cap = np.maximum(scale[idx], 1e-6)
        shrink = np.minimum(1.0, cap / np.maximum(slen, 1e-300))
        cand = z - step * shrink[:, None]
        cv = poly.value(cand)
        better = cv < v
        z[better] = cand[better]
        v[better] = cv[better]
        Z[idx] = z
        vals[idx] = v
        found[idx] = v <= levels[idx] + atol[idx]
    return Z, found


def _bisect_segment(poly, levels, X_out, X_in, iters=30):
    """Boundary crossing on segments [outside, inside]: returns inside-side point.

    Only needs Newton-start accuracy, so the bracket stops near 1e-9 of the
    segment length rather than machine precision."""
    a = np.zeros(X_out.shape[0])   # toward X_out (p > r)
    b = np.ones(X_out.shape[0])    # toward X_in  (p <= r)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        P = X_out + mid[:, None] * (X_in - X_out)
        inside = poly.value(P) <= levels
        b[inside] = mid[inside]
        a[~inside] = mid[~inside]
    return X_out + b[:, None] * (X_in - X_out)


def _newton_kkt(poly, levels, X, Y0, lam0, kkt_tol, max_iter):
    """Damped Newton on [y - x + lam*grad p(y); p(y) - level], lam >= 0.

    Iterates past kkt_tol down to near machine precision when cheap, so that
    easy projections are exact to rounding.  Returns (Y, lam, residual, iters).
    """
    M, n = X.shape
    Y = Y0.copy()
    lam = np.maximum(lam0.copy(), 0.0)
    target = min(kkt_tol, 1e-13)

    def residual(Yv, lamv, rows):
        g = poly.gradient(Yv)
        r1 = Yv - X[rows] + lamv[:, None] * g
        r2 = poly.value(Yv) - levels[rows]
        return np.concatenate([r1, r2[:, None]], axis=1), g

    all_rows = np.arange(M)
    G, g = residual(Y, lam, all_rows)
    Gn = np.linalg.norm(G, axis=1)
    active = Gn > target
    iters = 0
    eye = np.eye(n)
    while np.any(active) and iters < max_iter:
        iters += 1
        idx = np.flatnonzero(active)
        H = poly.hessian(Y[idx])
        J = np.zeros((idx.size, n + 1, n + 1))
        J[:, :n, :n] = eye + lam[idx, None, None] * H
        J[:, :n, n] = g[idx]
        J[:, n, :n] = g[idx]
        try:
            step = np.linalg.solve(J, -G[idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            J[:, np.arange(n + 1), np.arange(n + 1)] += 1e-12
            step = np.linalg.solve(J, -G[idx][..., None])[..., 0]
        alpha = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        newY = Y[idx].copy()
        newlam = lam[idx].copy()
        for _ in range(20):
            trying = ~accepted
            if not np.any(trying):
                break
            Yt = Y[idx[trying]] + alpha[trying, None] * step[trying, :n]
            lt = np.maximum(lam[idx[trying]] + alpha[trying] * step[trying, n], 0.0)
            Gt, _ = residual(Yt, lt, idx[trying])
            ok = np.linalg.norm(Gt, axis=1) <= (1 - 1e-4 * alpha[trying]) * Gn[idx[trying]]
            sel = np.flatnonzero(trying)[ok]
            newY[sel] = Yt[ok]
            newlam[sel] = lt[ok]
            accepted[sel] = True
            alpha[~accepted] *= 0.5
        # rows whose line search failed entirely stall out
        stalled = ~accepted
        Y[idx[accepted]] = newY[accepted]
        lam[idx[accepted]] = newlam[accepted]
        G, g = residual(Y, lam, all_rows)
        Gn = np.linalg.norm(G, axis=1)
        active = Gn > target
        active[idx[stalled]] = False
    return Y, lam, Gn, iters


def _project_sublevel(family, ts, X, starts, seed, kkt_tol, max_iter):
    poly = family.poly
    levels = np.atleast_1d(family.level(ts))
    m, n = X.shape
    vals = poly.value(X)
    outside = vals > levels
    pts = X.copy()
    dist = np.zeros(m)
    ok = np.ones(m, dtype=bool)
    if not np.any(outside):
        return pts, dist, ok, 0

    rows = np.flatnonzero(outside)
    Xo = X[rows]
    ro = levels[rows]
    rng = derive_rng(seed, "project", float(ts[rows[0]]), Xo)
    anchors, found = _find_inside_anchors(poly, ro, Xo, rng)
    if np.any(~found):
        raise EmptySetError(
            "no feasible point found for sublevel slice (possibly empty set)")

    mo = rows.size
    span = np.linalg.norm(Xo - anchors, axis=1)
    # diversified interior targets around each anchor
    k_extra = max(starts - 1, 0)
    targets = np.empty((mo, starts, n))
    targets[:, 0] = anchors
    if k_extra:
        d = rng.standard_normal((mo, k_extra, n))
        d /= np.maximum(np.linalg.norm(d, axis=2, keepdims=True), 1e-300)
        radii = span[:, None] * rng.random((mo, k_extra)) ** (1.0 / n)
        W = anchors[:, None, :] + d * radii[:, :, None]
        lev = np.repeat(ro, k_extra)
        flatW = W.reshape(-1, n)
        bad = poly.value(flatW) > lev
        anchor_rep = np.repeat(anchors, k_extra, axis=0)
        for _ in range(12):
            if not np.any(bad):
                break
            flatW[bad] = 0.5 * (flatW[bad] + anchor_rep[bad])
            bad = poly.value(flatW) > lev
        flatW[bad] = anchor_rep[bad]
        targets[:, 1:] = flatW.reshape(mo, k_extra, n)

    X_rep = np.repeat(Xo, starts, axis=0)
    lev_rep = np.repeat(ro, starts)
    Y0 = _bisect_segment(poly, lev_rep, X_rep, targets.reshape(-1, n))
    gx = np.linalg.norm(poly.gradient(X_rep), axis=1)
    d0 = np.linalg.norm(X_rep - Y0, axis=1)
    lam0 = np.where(gx > 0, d0 / np.maximum(gx, 1e-300), 1.0)

    Y, lam, res, iters = _newton_kkt(poly, lev_rep, X_rep, Y0, lam0, kkt_tol, max_iter)
    res = res.reshape(mo, starts)
    Y = Y.reshape(mo, starts, n)
    D = np.linalg.norm(Y - Xo[:, None, :], axis=2)

    conv = res <= kkt_tol
    for i in range(mo):
        r_i = rows[i]
        if np.any(conv[i]):
            cand = np.flatnonzero(conv[i])
        else:
            cand = np.array([int(np.argmin(res[i]))])
            ok[r_i] = False
        dmin = D[i, cand].min()
        near = cand[D[i, cand] <= dmin + 1e-9 * (1.0 + dmin)]
        # deterministic tie-break: lexicographically smallest coordinates
        order = np.lexsort(tuple(Y[i, near, j] for j in range(n - 1, -1, -1)))
        choice = near[order[0]]
        pts[r_i] = Y[i, choice]
        dist[r_i] = D[i, choice]
    return pts, dist, ok, iters


# -- intersections: alternating projections + joint KKT polish ---------------

def _project_intersection(family, ts, X, starts, seed, kkt_tol, max_iter):
    m, n = X.shape
    Y = X.copy()
    scale = 1.0 + np.linalg.norm(X, axis=1).max()
    converged_ap = False
    sweeps = 0
    for _ in range(200):
        sweeps += 1
        Y_prev = Y
        for member in family.members:
            Y, _, _ = project_batch(member, ts, Y, starts, seed, kkt_tol, max_iter)
        if np.max(np.linalg.norm(Y - Y_prev, axis=1)) <= 1e-12 * scale:
            converged_ap = True
            break
    pts = np.empty_like(X)
    dist = np.empty(m)
    ok = np.empty(m, dtype=bool)
    for i in range(m):
        y, d, flag = _polish_intersection(family, float(ts[i]), X[i], Y[i], kkt_tol)
        pts[i], dist[i] = y, d
        ok[i] = flag and converged_ap
    return pts, dist, ok, sweeps


def _active_constraints(family, t, y, act_tol):
    """Collect smooth constraint functions active at y, as (val, grad, hess) callables."""
    out = []
    if isinstance(family, MovingBall):
        c = family.center(t)
        r = family.radius(t)
        val = np.dot(y - c, y - c) - r * r
        if val >= -act_tol * (1.0 + abs(r)):
            out.append((lambda z, c=c, r=r: np.dot(z - c, z - c) - r * r,
                        lambda z, c=c: 2.0 * (z - c),
                        lambda z, n=y.size: 2.0 * np.eye(n)))
    elif isinstance(family, MovingHalfspace):
        nvec = family.normal(t)
        off = family.offset(t)
        if off - np.dot(nvec, y) >= -act_tol * np.linalg.norm(nvec):
            out.append((lambda z, nv=nvec, c=off: c - np.dot(nv, z),
                        lambda z, nv=nvec: -nv,
                        lambda z, n=y.size: np.zeros((n, n))))
    elif isinstance(family, MovingPolytope):
        for f in family.facets:
            out.extend(_active_constraints(f, t, y, act_tol))
    elif isinstance(family, Sublevel):
        r = family.level(t)
        p = family.poly
        g = p.gradient(y[None, :])[0]
        if p.value(y[None, :])[0] - r >= -act_tol * (1.0 + np.linalg.norm(g)):
            out.append((lambda z, p=p, r=r: p.value(z[None, :])[0] - r,
                        lambda z, p=p: p.gradient(z[None, :])[0],
                        lambda z, p=p: p.hessian(z[None, :])[0]))
    elif isinstance(family, Intersection):
        for mem in family.members:
            out.extend(_active_constraints(mem, t, y, act_tol))
    elif isinstance(family, Translate):
        shift = family.shift(t)
        for val, grad, hess in _active_constraints(family.base, t, y - shift, act_tol):
            out.append((lambda z, v=val, s=shift: v(z - s),
                        lambda z, g=grad, s=shift: g(z - s),
                        lambda z, h=hess, s=shift: h(z - s)))
    return out


def _solve_equality_kkt(cons, x, y0, lam0, tol, max_iter=40):
    """Newton on the equality-constrained stationarity system for a working set."""
    n = x.size
    K = len(cons)
    y = y0.copy()
    lam = lam0.copy()
    for _ in range(max_iter):
        vals = np.array([c[0](y) for c in cons])
        grads = np.stack([c[1](y) for c in cons])
        G = np.concatenate([y - x + grads.T @ lam, vals])
        if np.linalg.norm(G) <= tol:
            break
        J = np.zeros((n + K, n + K))
        J[:n, :n] = np.eye(n) + sum(l * c[2](y) for l, c in zip(lam, cons))
        J[:n, n:] = grads.T
        J[n:, :n] = grads
        try:
            step = np.linalg.solve(J, -G)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -G, rcond=None)[0]
        y = y + step[:n]
        lam = lam + step[n:]
    return y, lam


def _polish_intersection(family, t, x, y_ap, kkt_tol):
    """Active-set polish of the alternating-projection fixed point.

    Grows the working set when the equality-stationary point violates another
    constraint, drops constraints with negative multipliers, and falls back to
    the feasible fixed point when the polish leaves the set.  The converged
    flag requires feasibility plus a nonnegative-combination stationarity
    residual below kkt_tol.
    """
    y_ap = np.asarray(y_ap, dtype=float)
    all_cons = _active_constraints(family, t, y_ap, act_tol=np.inf)
    work = [i for i, c in enumerate(all_cons) if c[0](y_ap) >= -1e-7]
    y = y_ap.copy()
    solve_tol = min(kkt_tol, 1e-13)
    for _ in range(2 * len(all_cons) + 4):
        if not work:
            break
        cons = [all_cons[i] for i in work]
        y_new, lam = _solve_equality_kkt(cons, x, y, np.zeros(len(cons)), solve_tol)
        if not np.all(np.isfinite(y_new)):
            break
        y = y_new
        if np.any(lam < -1e-9):
            work.pop(int(np.argmin(lam)))
            continue
        violated = [i for i, c in enumerate(all_cons)
                    if i not in work and c[0](y) > 1e-9]
        if not violated:
            break
        worst = max(violated, key=lambda i: all_cons[i][0](y))
        work.append(worst)

    if not _feasible_within(family, t, y, tol=1e-9):
        y = y_ap  # polish left the set: keep the feasible fixed point
    d = float(np.linalg.norm(x - y))
    feasible = _feasible_within(family, t, y, tol=1e-9)
    active = _active_constraints(family, t, y, act_tol=1e-7)
    if d <= kkt_tol:
        res = 0.0
    elif active:
        grads = np.stack([c[1](y) for c in active])
        lam_fit, _ = nnls(grads.T, x - y)
        res = float(np.linalg.norm((x - y) - grads.T @ lam_fit))
    else:
        res = d  # outside-looking point with no active constraint
    return y, d, feasible and res <= max(kkt_tol, 1e-9 * (1.0 + d))


def _feasible_within(family, t, y, tol):
    """Feasibility up to tol: every defining constraint value <= tol."""
    cons = _active_constraints(family, t, y, act_tol=np.inf)
    return all(c[0](y) <= tol for c in cons)


# ---------------------------------------------------------------------------
# Proximal normals
# ---------------------------------------------------------------------------

def _active_outward_normals(family, t, x, act_tol):
    if isinstance(family, MovingBall):
        c = family.center(t)
        r = family.radius(t)
        slack = r - np.linalg.norm(x - c)
        if slack <= act_tol:
            nrm = np.linalg.norm(x - c)
            if nrm <= 1e-14 * (1.0 + abs(r)):
                raise SingularNormalError("ball degenerated to its center point")
            return [(x - c) / nrm]
        return []
    if isinstance(family, MovingHalfspace):
        n = family.normal(t)
        c = family.offset(t)
        nn = np.linalg.norm(n)
        if nn == 0:
            raise SingularNormalError("half-space with zero normal")
        if (np.dot(n, x) - c) / nn <= act_tol:
            return [-n / nn]
        return []
    if isinstance(family, MovingPolytope):
        out = []
        for f in family.facets:
            out.extend(_active_outward_normals(f, t, x, act_tol))
        return out
    if isinstance(family, Sublevel):
        r = family.level(t)
        val = family.poly.value(x[None, :])[0]
        g = family.poly.gradient(x[None, :])[0]
        gn = np.linalg.norm(g)
        if r - val <= act_tol * (1.0 + gn):
            if gn <= 1e-12:
                raise SingularNormalError(
                    "vanishing gradient at a sublevel boundary point")
            return [g / gn]
        return []
    if isinstance(family, Intersection):
        out = []
        for m in family.members:
            out.extend(_active_outward_normals(m, t, x, act_tol))
        return out
    if isinstance(family, Translate):
        return _active_outward_normals(family.base, t, x - family.shift(t), act_tol)
    raise TypeError(f"unsupported family kind {type(family).__name__}")


def proximal_normal(family: SetFamily, t: float, x, act_tol: float = 1e-7) -> np.ndarray:
    """Unit generator of the proximal normal cone at a point of S(t).

    Interior points return the zero vector.  Raises SingularNormalError when
    the defining gradient vanishes at an active boundary constraint (the
    point is variationally critical) or active normals cancel.
    """
    x = np.asarray(x, dtype=float)
    if x.size != family.dimension:
        raise DimensionMismatchError("point dimension does not match family")
    normals = _active_outward_normals(family, float(t), x, act_tol)
    if not normals:
        return np.zeros(family.dimension)
    v = np.sum(normals, axis=0)
    nv = np.linalg.norm(v)
    if nv <= 1e-12:
        raise SingularNormalError("active normals cancel: no proximal normal direction")
    return v / nv
