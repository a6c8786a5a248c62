"""Gradient flow of a polynomial and its sweeping-process counterpart.

A descent orbit x(t) of  dx/dt = -grad f(x)  strictly decreases f, so the
map t -> s = b - f(x(t)) (with b the starting value) is increasing and the
orbit can be re-indexed by how much value it has shed.  The resulting curve
u(s) traces the same points while staying on the boundary of the shrinking
sublevel set [f <= b - s], and its s-velocity points along
-grad f / |grad f|^2: the descent orbit, after this reparametrization, is a
solution of the sweeping process driven by sublevel sets.  The module
integrates the flow, performs the reparametrization, measures the two
residuals that certify the correspondence (direction alignment with the
proximal normal, and value consistency f(u(s)) = b - s), and estimates the
talweg of the sublevel family directly from gradient norms on level sets:

    phi(r) = 1 / min{ |grad f(x)| : f(x) = r, x in region }.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonMonotoneFlowError
from .dynamics import Trajectory, VectorField, central_velocities, ode_orbit
from .geometry import Polynomial, SetFamily, sample_boundary, Sublevel
from .tableio import write_csv
from .variational import TalwegProfile, derive_seed, linear_inverse_outer_norm

GRAD_STOP = 1e-10


def gradient_flow(f: Polynomial, x0, t_end: float, h: float,
                  grad_stop: float = GRAD_STOP) -> Trajectory:
    """4th-order integration of dx/dt = -grad f(x) with critical-point stop.

    Stops early once |grad f| < grad_stop and records the value reached
    there in meta['asymptotic_value'] (the level the orbit settles onto).
    """
    field = VectorField([_negate(p) for p in f.partials()])
    traj = ode_orbit(field, x0, t_end, h)
    grads = np.linalg.norm(f.gradient(traj.points), axis=1)
    below = np.flatnonzero(grads < grad_stop)
    if below.size:
        k = int(below[0])
        k = max(k, 1)
        traj = Trajectory(times=traj.times[: k + 1], points=traj.points[: k + 1],
                          step_speeds=traj.step_speeds[:k],
                          cum_length=traj.cum_length[: k + 1],
                          breakpoints=[], status="critical_point",
                          warn_steps=[], meta=dict(traj.meta))
        traj.meta["asymptotic_value"] = float(f.value(traj.points[-1:])[0])
    else:
        traj.meta["asymptotic_value"] = float(f.value(traj.points[-1:])[0])
    return traj


def _negate(p: Polynomial) -> Polynomial:
    return Polynomial(p.dimension, [(-c, e) for c, e in zip(p.coeffs, p.exps)])


@dataclass
class SweptCurve:
    """Flow re-indexed by shed value s = b - f(x(t)), plus ds-derivatives."""

    s_grid: np.ndarray
    points: np.ndarray
    duds: np.ndarray          # NaN at the two end nodes
    start_value: float        # b = f(x(t0))
    collapsed: int            # nodes dropped because f stalled within tol

    def as_trajectory(self) -> Trajectory:
        steps = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return Trajectory(times=self.s_grid, points=self.points,
                          step_speeds=steps / np.diff(self.s_grid),
                          cum_length=np.concatenate([[0.0], np.cumsum(steps)]),
                          breakpoints=[], status="ok", warn_steps=[],
                          meta={"start_value": self.start_value})


def reparametrize_by_value(flow: Trajectory, f: Polynomial,
                           tie_tol: float = 1e-13) -> SweptCurve:
    """Re-index a descent orbit by s = b - f(x(t)).

    Consecutive nodes whose values tie within tol collapse into one; a value
    increase beyond tol means the input was not a descent orbit.
    """
    values = f.value(flow.points)
    b = float(values[0])
    scale = 1.0 + abs(b)
    keep = [0]
    for k in range(1, values.size):
        dv = values[keep[-1]] - values[k]
        if dv > tie_tol * scale:
            keep.append(k)
        elif dv < -tie_tol * scale:
            raise NonMonotoneFlowError(
                f"value increases along the flow at node {k} "
                f"({values[keep[-1]]} -> {values[k]})")
    keep = np.asarray(keep)
    pts = flow.points[keep]
    s = b - values[keep]
    duds = np.full_like(pts, np.nan)
    if keep.size >= 3:
        duds[1:-1] = central_velocities(s, pts)
    return SweptCurve(s_grid=s, points=pts, duds=duds, start_value=b,
                      collapsed=int(values.size - keep.size))


@dataclass
class BridgeResult:
    """Flow, its swept reparametrization, and the correspondence residuals."""

    flow: Trajectory
    swept: SweptCurve
    inclusion_residuals: np.ndarray   # angle (rad) per interior node
    value_residuals: np.ndarray       # |f(u(s)) - (b - s)| per node

    @property
    def max_inclusion_residual(self) -> float:
        good = self.inclusion_residuals[~np.isnan(self.inclusion_residuals)]
        return float(good.max()) if good.size else 0.0

    @property
    def max_value_residual(self) -> float:
        return float(self.value_residuals.max()) if self.value_residuals.size else 0.0

    def to_csv(self, path) -> str:
        n = self.swept.points.shape[1]
        header = ["s"] + [f"u_{i + 1}" for i in range(n)] + \
            ["inclusion_residual", "value_residual"]
        rows = []
        for k in range(self.swept.s_grid.size):
            rows.append([float(self.swept.s_grid[k]), *map(float, self.swept.points[k]),
                         float(self.inclusion_residuals[k]),
                         float(self.value_residuals[k])])
        return write_csv(path, header, rows)


def _residuals(swept: SweptCurve, f: Polynomial, grad_tol: float):
    M = swept.s_grid.size
    incl = np.full(M, np.nan)
    grads = f.gradient(swept.points)
    for k in range(1, M - 1):
        v = -swept.duds[k]
        g = grads[k]
        gn, vn = np.linalg.norm(g), np.linalg.norm(v)
        if gn <= grad_tol or vn <= grad_tol:
            continue
        cosang = np.clip(np.dot(v, g) / (gn * vn), -1.0, 1.0)
        incl[k] = float(np.arccos(cosang))
    values = f.value(swept.points)
    value_res = np.abs(values - (swept.start_value - swept.s_grid))
    return incl, value_res


def run_bridge(f: Polynomial, x0, t_end: float, h: float,
               grad_stop: float = GRAD_STOP,
               grad_tol: float = 1e-12) -> BridgeResult:
    """Integrate the descent flow, reparametrize by value, attach residuals."""
    flow = gradient_flow(f, x0, t_end, h, grad_stop=grad_stop)
    swept = reparametrize_by_value(flow, f)
    incl, value_res = _residuals(swept, f, grad_tol)
    return BridgeResult(flow=flow, swept=swept, inclusion_residuals=incl,
                        value_residuals=value_res)


def verify_sublevel_inclusion(result: BridgeResult, f: Polynomial,
                              grad_tol: float = 1e-12):
    """(max inclusion angle, max value residual, skipped nodes) for a bridge.

    The inclusion angle at an interior node is the angle between -du/ds and
    the gradient of f there (the proximal normal direction to the sublevel
    slice); nodes where the gradient vanishes are critical and skipped.
    """
    incl, value_res = _residuals(result.swept, f, grad_tol)
    interior = incl[1:-1] if incl.size >= 3 else incl
    skipped = int(np.sum(np.isnan(interior)))
    good = incl[~np.isnan(incl)]
    max_incl = float(good.max()) if good.size else 0.0
    return max_incl, float(value_res.max()), skipped


# ---------------------------------------------------------------------------
# Talweg of a sublevel family from gradient norms on level sets
# ---------------------------------------------------------------------------

def _min_grad_on_level(f: Polynomial, r: float, starts: np.ndarray,
                       iters: int = 60):
    """Projected-gradient minimization of |grad f|^2 over the level set f = r."""
    Z = starts.copy()
    eta = np.full(Z.shape[0], 0.1)
    for _ in range(iters):
        g = f.gradient(Z)
        gn2 = np.einsum("ij,ij->i", g, g)
        H = f.hessian(Z)
        grad_m = 2.0 * np.einsum("ijk,ik->ij", H, g)   # gradient of |grad f|^2
        ghat = g / np.maximum(np.sqrt(gn2), 1e-300)[:, None]
        tang = grad_m - np.einsum("ij,ij->i", grad_m, ghat)[:, None] * ghat
        cand = Z - eta[:, None] * tang
        # retract back onto the level set along the gradient direction
        for _ in range(3):
            cg = f.gradient(cand)
            cgn2 = np.maximum(np.einsum("ij,ij->i", cg, cg), 1e-300)
            cand = cand - ((f.value(cand) - r) / cgn2)[:, None] * cg
        better = (np.einsum("ij,ij->i", f.gradient(cand), f.gradient(cand))
                  < gn2) & (np.abs(f.value(cand) - r) < 1e-8 * (1.0 + abs(r)))
        Z[better] = cand[better]
        eta = np.where(better, np.minimum(eta * 1.3, 1.0), eta * 0.5)
    gn = np.linalg.norm(f.gradient(Z), axis=1)
    j = int(np.argmin(gn))
    return Z[j], f.gradient(Z[j][None, :])[0]


def level_talweg(f: Polynomial, region, r_grid, samples: int = 64,
                 seed: int = 0) -> TalwegProfile:
    """Talweg of the sublevel family [f <= r] via the level-set formula.

    For each knot, minimizes |grad f| over the sampled level set with a
    multistart projected-gradient descent; the profile value is the outer
    norm of the inverse of the gradient row there, 1/|grad f|.  Knots whose
    level set misses the region are flagged empty.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    n = f.dimension
    phi = np.full(r_grid.size, np.nan)
    witnesses = np.full((r_grid.size, n), np.nan)
    empty = np.zeros(r_grid.size, dtype=bool)
    for i, r in enumerate(r_grid):
        family = Sublevel(f, float(r))
        bs = sample_boundary(family, 0.0, region, samples, derive_seed(seed, i))
        if bs.points.shape[0] == 0:
            empty[i] = True
            continue
        witness, grad = _min_grad_on_level(f, float(r), bs.points)
        phi[i] = linear_inverse_outer_norm(grad[None, :])
        witnesses[i] = witness
    if np.all(empty):
        from .errors import EmptySliceError
        raise EmptySliceError("every level-set knot missed the region")
    return TalwegProfile(r_grid=r_grid, phi=phi, witnesses=witnesses, empty=empty)
