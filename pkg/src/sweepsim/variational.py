"""Set-motion estimators: Lipschitz modulus, talweg profile, desingularization.

The local speed of a moving set S(t) at a point x is measured by the Aubin
(Lipschitz) modulus: the worst one-sided Hausdorff excess of a nearby slice
into S(t), per unit time, localized to a ball window around x.  For the
families implemented here (convex values or smooth boundaries) this modulus
equals the outer norm of the generalized derivative of S, so it is the
computable face of the quantity that bounds sweeping speeds; on wilder sets
it is a lower bound, which callers should keep in mind.

The talweg profile phi(r) is the supremum of that modulus over a slice
intersected with a bounded window, estimated by sampling boundary points.
Integrating phi from a left endpoint a gives a strictly increasing map Phi
whose inverse Psi reparametrizes time so that the composed family moves at
unit speed or less; the quadrature handles an integrable power-law blow-up
of phi at a by fitting the head below the first knot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import EmptySliceError, UnremovableSingularityError
from .geometry import (BOUNDARY_TOL, BallRegion, Intersection, MovingBall,
                       MovingHalfspace, MovingPolytope, SetFamily, Sublevel,
                       Translate, _bisect_to_boundary, _rejection_inside)
from .projection import DEFAULT_STARTS, project_batch
from .rng import derive_rng
from .tableio import write_csv
from .timefns import Curve, TimeReparam

LIP_CAP = 1e6
SPEED_SLACK = 0.05
DESING_SLACK = 0.05
DEFAULT_DT = 1e-3
DEFAULT_RADIUS = 0.25
DEFAULT_EXCESS_SAMPLES = 16


# ---------------------------------------------------------------------------
# Homogeneous-map outer norms
# ---------------------------------------------------------------------------

def linear_outer_norm(matrix) -> float:
    """Outer norm of a linear map: its largest singular value."""
    return float(np.linalg.svd(np.atleast_2d(np.asarray(matrix, float)),
                               compute_uv=False).max())


def linear_inverse_outer_norm(matrix) -> float:
    """Outer norm of the inverse map: 1 / (smallest singular value).

    For the scalar map x -> c*x this is exactly 1/|c|; for a gradient row it
    is 1/||grad||, the level-set form of the modulus used by the talweg.
    """
    sigma = np.linalg.svd(np.atleast_2d(np.asarray(matrix, float)),
                          compute_uv=False)
    smin = float(sigma.min()) if sigma.size else 0.0
    return np.inf if smin == 0.0 else 1.0 / smin


# ---------------------------------------------------------------------------
# Window sampling of slices (batched over rows)
# ---------------------------------------------------------------------------

def _window_points(family, ts, centers, radius, slots, seed, tag):
    """Sample S(ts[i]) inside Ball(centers[i], radius) for each row i.

    Half the slots are pushed to the slice boundary, the rest stay interior,
    so the per-row maximum of a distance function sees both regimes.  Draws
    are window-local offsets, which makes estimates translation-equivariant.
    Returns (points, valid, row_index) flattened over row-major slots.
    """
    m, n = centers.shape
    M = m * slots
    rng = derive_rng(seed, tag)
    ts_rep = np.repeat(ts, slots)
    centers_rep = np.repeat(centers, slots, axis=0)

    def draw(idx):
        d = rng.standard_normal((idx.size, n))
        d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
        rr = radius * rng.random(idx.size) ** (1.0 / n)
        return centers_rep[idx] + d * rr[:, None]

    pts, valid = _rejection_inside(family, ts_rep, draw, M, rng, rounds=30)

    k_bnd = (slots + 1) // 2
    bnd_slot = (np.arange(M) % slots) < k_bnd
    push = valid & bnd_slot
    if np.any(push):
        idx_push = np.flatnonzero(push)

        def in_window(idx, cand):
            return np.linalg.norm(cand - centers_rep[idx_push[idx]], axis=1) <= radius

        bpts, ok, _ = _bisect_to_boundary(
            family, ts_rep[idx_push], pts[idx_push], in_window, rng,
            BOUNDARY_TOL, step0=radius / 32.0, step_max=2.2 * radius)
        moved = idx_push[ok]
        pts[moved] = bpts[ok]
    return pts, valid, np.repeat(np.arange(m), slots)


def _excess_rows(family, ts_from, ts_to, centers, radius, slots, seed, tag,
                 starts=DEFAULT_STARTS):
    """Per-row localized excess sup dist(S(ts_from) cap window, S(ts_to)).

    Rows whose window contains no point of the from-slice report 0 (the
    containment is vacuous there) and are flagged in the second output.
    """
    m = centers.shape[0]
    pts, valid, rows = _window_points(family, ts_from, centers, radius, slots,
                                      seed, tag)
    excess = np.zeros(m)
    filled = np.zeros(m, dtype=bool)
    if np.any(valid):
        vpts = pts[valid]
        vrows = rows[valid]
        t_to_rep = ts_to[vrows]
        inside = family.membership_mask(t_to_rep, vpts)
        dist = np.zeros(vpts.shape[0])
        if np.any(~inside):
            _, d, _ = project_batch(family, t_to_rep[~inside], vpts[~inside],
                                    starts=starts, seed=seed)
            dist[~inside] = d
        np.maximum.at(excess, vrows, dist)
        filled[np.unique(vrows)] = True
    return excess, filled


# ---------------------------------------------------------------------------
# Public excess and Lipschitz-modulus estimators
# ---------------------------------------------------------------------------

def excess(family: SetFamily, t_from: float, t_to: float, region,
           samples: int = 32, seed: int = 0,
           starts: int = DEFAULT_STARTS) -> float:
    """One-sided Hausdorff excess of S(t_from) over S(t_to) within a region.

    Samples the from-slice (interior plus boundary points) and takes the
    largest projection distance onto S(t_to).  Deterministic given the seed.
    """
    from .errors import EmptySetError
    from .geometry import sample_boundary, sample_inside

    k_bnd = (samples + 1) // 2
    bnd = sample_boundary(family, float(t_from), region, k_bnd, seed)
    interior = sample_inside(family, float(t_from), region, samples - k_bnd,
                             seed, tag="excess_inside")
    pts = [p for p in (bnd.points, interior) if p.shape[0]]
    if not pts:
        raise EmptySliceError(
            f"slice at t={t_from} has no points in the region (within budget)")
    X = np.concatenate(pts, axis=0)
    inside = family.membership_mask(float(t_to), X)
    if np.all(inside):
        return 0.0
    try:
        _, dist, _ = project_batch(family, float(t_to), X[~inside],
                                   starts=starts, seed=seed)
    except EmptySetError as exc:
        raise EmptySliceError(f"target slice at t={t_to} is empty") from exc
    return float(dist.max())


@dataclass
class LipEstimate:
    """Sampled local Lipschitz modulus of the set motion at (t, x)."""

    value: float
    t: float
    x: np.ndarray
    dt_used: float
    radius_used: float
    one_sided: bool = False

    @property
    def is_infinite(self) -> bool:
        return self.value > LIP_CAP


def lip_estimate_batch(family: SetFamily, ts, xs, dt: float = DEFAULT_DT,
                       radius: float = DEFAULT_RADIUS,
                       samples: int = DEFAULT_EXCESS_SAMPLES, seed: int = 0,
                       starts: int = DEFAULT_STARTS):
    """Vectorized local modulus at many (t, x) pairs.

    For each pair, takes the largest excess/|tau - t| over probe offsets
    tau in {t±dt, t±dt/2} with the excess localized to Ball(x, radius).
    Returns (values, one_sided) where one_sided marks pairs for which an
    entire probe side produced no slice points (domain boundary).
    """
    ts = np.asarray(ts, dtype=float)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    m = xs.shape[0]
    offsets = np.array([dt, -dt, dt / 2.0, -dt / 2.0])
    ts_from = (ts[:, None] + offsets[None, :]).reshape(-1)
    ts_to = np.repeat(ts, offsets.size)
    centers = np.repeat(xs, offsets.size, axis=0)
    exc, filled = _excess_rows(family, ts_from, ts_to, centers, radius, samples,
                               seed, "lip", starts=starts)
    ratios = exc / np.abs(ts_from - ts_to)
    ratios = ratios.reshape(m, offsets.size)
    filled = filled.reshape(m, offsets.size)
    values = ratios.max(axis=1)
    plus_empty = ~(filled[:, 0] | filled[:, 2])
    minus_empty = ~(filled[:, 1] | filled[:, 3])
    return values, plus_empty | minus_empty


def lip_estimate(family: SetFamily, t: float, x, dt: float = DEFAULT_DT,
                 radius: float = DEFAULT_RADIUS,
                 samples: int = DEFAULT_EXCESS_SAMPLES, seed: int = 0,
                 starts: int = DEFAULT_STARTS) -> LipEstimate:
    """Local Lipschitz modulus of t -> S(t) at a point x of S(t)."""
    x = np.asarray(x, dtype=float)
    values, one_sided = lip_estimate_batch(
        family, np.array([float(t)]), x[None, :], dt, radius, samples, seed,
        starts)
    return LipEstimate(value=float(values[0]), t=float(t), x=x, dt_used=dt,
                       radius_used=radius, one_sided=bool(one_sided[0]))


# ---------------------------------------------------------------------------
# Talweg profile
# ---------------------------------------------------------------------------

@dataclass
class TalwegProfile:
    """Sampled worst-case modulus phi(r) over S(r) cap region, with witnesses."""

    r_grid: np.ndarray
    phi: np.ndarray
    witnesses: np.ndarray
    empty: np.ndarray

    @property
    def infinite(self) -> np.ndarray:
        return np.where(np.isnan(self.phi), False, self.phi > LIP_CAP)

    def to_csv(self, path) -> str:
        n = self.witnesses.shape[1]
        header = ["r", "phi"] + [f"w_{i + 1}" for i in range(n)]
        rows = [[float(r), float(p), *map(float, w)]
                for r, p, w in zip(self.r_grid, self.phi, self.witnesses)]
        return write_csv(path, header, rows)


def talweg_profile(family: SetFamily, region, r_grid, samples: int = 64,
                   seed: int = 0, dt: float = DEFAULT_DT,
                   radius: float = DEFAULT_RADIUS,
                   excess_samples: int = DEFAULT_EXCESS_SAMPLES,
                   starts: int = DEFAULT_STARTS) -> TalwegProfile:
    """Estimate phi(r) = sup of the local modulus over S(r) cap region.

    Each knot samples boundary points of its slice and takes the largest
    local modulus among them, keeping the argmax point as witness.  Knots
    whose slice has no points in the region are flagged empty (NaN).
    """
    from .geometry import sample_boundary

    r_grid = np.asarray(r_grid, dtype=float)
    n = family.dimension
    all_ts: list[np.ndarray] = []
    all_pts: list[np.ndarray] = []
    knot_of: list[int] = []
    empty = np.zeros(r_grid.size, dtype=bool)
    for i, r in enumerate(r_grid):
        bs = sample_boundary(family, float(r), region, samples, derive_seed(seed, i))
        if bs.points.shape[0] == 0:
            empty[i] = True
            continue
        all_ts.append(np.full(bs.points.shape[0], float(r)))
        all_pts.append(bs.points)
        knot_of.extend([i] * bs.points.shape[0])
    if not all_pts:
        raise EmptySliceError("every grid knot produced an empty slice sample")

    ts = np.concatenate(all_ts)
    pts = np.concatenate(all_pts, axis=0)
    knot_of = np.asarray(knot_of)
    values, _ = lip_estimate_batch(family, ts, pts, dt, radius, excess_samples,
                                   seed, starts)
    phi = np.full(r_grid.size, np.nan)
    witnesses = np.full((r_grid.size, n), np.nan)
    for i in range(r_grid.size):
        mask = knot_of == i
        if not np.any(mask):
            continue
        vals = values[mask]
        j = int(np.argmax(vals))
        phi[i] = vals[j]
        witnesses[i] = pts[mask][j]
    return TalwegProfile(r_grid=r_grid, phi=phi, witnesses=witnesses, empty=empty)


def derive_seed(seed: int, index: int) -> int:
    """Stable per-knot sub-seed."""
    return (int(seed) * 1000003 + 7919 * (index + 1)) % (2 ** 63)


# ---------------------------------------------------------------------------
# Desingularization: Phi = a + integral of phi, Psi = Phi^{-1}
# ---------------------------------------------------------------------------

@dataclass
class DesingMap:
    """Strictly increasing time-rescale Phi on [a, b) and its inverse Psi.

    Phi(a) = a exactly; Psi is evaluated by monotone piecewise-cubic
    interpolation through the knots, so Psi(Phi(knot)) reproduces each knot.
    quadrature_gap records the largest change when the knot set is halved
    (refinement check of the trapezoid integral).
    """

    a: float
    knots: np.ndarray
    Phi: np.ndarray
    phi: np.ndarray
    quadrature_gap: float
    _inverse: PchipInterpolator = field(repr=False, default=None)
    _forward: PchipInterpolator = field(repr=False, default=None)

    @property
    def domain(self):
        """Interval of reparametrized times covered by the map."""
        return float(self.Phi[0]), float(self.Phi[-1])

    def psi(self, s):
        lo, hi = self.domain
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < lo - 1e-12) or np.any(s_arr > hi + 1e-12):
            raise ValueError(f"argument outside the map domain [{lo}, {hi}]")
        out = self._inverse(np.clip(s_arr, lo, hi))
        return float(out) if np.ndim(s) == 0 else out

    def phi_at(self, r):
        out = self._forward(r)
        return float(out) if np.ndim(r) == 0 else out

    def to_csv(self, path) -> str:
        rows = [[float(r), float(p)] for r, p in zip(self.knots, self.Phi)]
        return write_csv(path, ["r", "Phi"], rows)


def _integrable_head(u0, u1, phi0, phi1):
    """Integral of phi over (0, u0] from a power-law fit through the first knots."""
    if phi0 <= 0.0:
        return 0.0
    if phi1 <= 0.0 or abs(np.log(u1 / u0)) < 1e-12:
        return phi0 * u0
    beta = (np.log(phi0) - np.log(phi1)) / (np.log(u1) - np.log(u0))
    if beta >= 1.0 - 1e-6:
        raise UnremovableSingularityError(
            f"talweg grows like u^-{beta:.3f} at the left endpoint: "
            "not integrable")
    return phi0 * u0 / (1.0 - beta)


def _phi_quadrature(a, knots, phi):
    u = knots - a
    head = _integrable_head(u[0], u[1], phi[0], phi[1]) if knots.size >= 2 \
        else phi[0] * u[0]
    increments = 0.5 * (phi[1:] + phi[:-1]) * np.diff(knots)
    return a + head + np.concatenate([[0.0], np.cumsum(increments)])


def desingularize(profile: TalwegProfile, a: float,
                  interp_tol: float = 1e-8) -> DesingMap:
    """Build the cumulative-integral map Phi of a talweg profile from a.

    Trapezoid quadrature on the profile knots plus a fitted power-law head
    below the first knot (the profile may blow up integrably at a, so grids
    should be geometric toward a).  Raises UnremovableSingularityError when
    an infinity-flagged knot lies inside the window, and ValueError when the
    profile vanishes over a subinterval (the map would not be invertible
    there) or carries empty knots.
    """
    keep = profile.r_grid > a + 1e-15
    knots = profile.r_grid[keep]
    phi = profile.phi[keep]
    if knots.size < 3:
        raise ValueError("need at least 3 profile knots above a")
    if np.any(profile.empty[keep]) or np.any(np.isnan(phi)):
        raise ValueError("profile has empty knots inside the window")
    if np.any(phi > LIP_CAP) or np.any(np.isinf(phi)):
        bad = knots[np.where((phi > LIP_CAP) | np.isinf(phi))[0][0]]
        raise UnremovableSingularityError(
            f"infinity-flagged talweg value at r={bad}: split the window there")
    if np.any(phi < 0):
        raise ValueError("talweg values must be nonnegative")
    trapz_mass = 0.5 * (phi[1:] + phi[:-1]) * np.diff(knots)
    if np.any(trapz_mass <= 0):
        raise ValueError("talweg vanishes on a subinterval: map not invertible there")

    Phi = _phi_quadrature(a, knots, phi)
    coarse_idx = np.arange(0, knots.size, 2)
    if coarse_idx[-1] != knots.size - 1:
        coarse_idx = np.append(coarse_idx, knots.size - 1)
    Phi_coarse = _phi_quadrature(a, knots[coarse_idx], phi[coarse_idx])
    gap = float(np.max(np.abs(Phi_coarse - Phi[coarse_idx])))

    knots_full = np.concatenate([[a], knots])
    Phi_full = np.concatenate([[a], Phi])
    inverse = PchipInterpolator(Phi_full, knots_full)
    forward = PchipInterpolator(knots_full, Phi_full)
    dmap = DesingMap(a=float(a), knots=knots_full, Phi=Phi_full,
                     phi=np.concatenate([[np.nan], phi]), quadrature_gap=gap,
                     _inverse=inverse, _forward=forward)
    round_trip = np.abs(dmap.psi(Phi_full) - knots_full)
    if np.any(round_trip > interp_tol * (1.0 + np.abs(knots_full))):
        raise ValueError("monotone inversion failed the knot round-trip check")
    return dmap


def reparametrized_family(family: SetFamily, psi) -> SetFamily:
    """Copy of a family with every time function composed with psi."""
    def curve(c: Curve) -> Curve:
        return Curve([TimeReparam(fn, psi) for fn in c.components])

    if isinstance(family, MovingBall):
        return MovingBall(curve(family.center), TimeReparam(family.radius, psi))
    if isinstance(family, MovingHalfspace):
        return MovingHalfspace(curve(family.normal), TimeReparam(family.offset, psi))
    if isinstance(family, MovingPolytope):
        return MovingPolytope([reparametrized_family(f, psi) for f in family.facets])
    if isinstance(family, Sublevel):
        return Sublevel(family.poly, TimeReparam(family.level, psi))
    if isinstance(family, Intersection):
        return Intersection([reparametrized_family(m, psi) for m in family.members])
    if isinstance(family, Translate):
        return Translate(reparametrized_family(family.base, psi), curve(family.shift))
    raise TypeError(f"unsupported family kind {type(family).__name__}")


@dataclass
class DesingCheck:
    """Direct and chain-rule evidence that the reparametrized family is 1-Lipschitz."""

    probe_times: np.ndarray
    probe_levels: np.ndarray
    composed_lips: np.ndarray
    chain_ratios: np.ndarray
    max_composed_lip: float
    max_ratio_error: float
    passed: bool


def verify_desingularized(family: SetFamily, dmap: DesingMap, region,
                          probes: int = 16, dt: float = DEFAULT_DT,
                          radius: float = DEFAULT_RADIUS,
                          samples: int = DEFAULT_EXCESS_SAMPLES,
                          witnesses: int = 8, seed: int = 0,
                          slack: float = DESING_SLACK) -> DesingCheck:
    """Check that the family composed with Psi moves at unit speed or less.

    Probes are taken at interior knot images of the map.  The direct check
    estimates the modulus of the composed family at boundary witnesses; the
    cross-check divides the raw modulus of the original family at the pulled
    back time by the stored talweg value there, which must come out at 1 for
    a family whose talweg is tight at every boundary point.
    """
    from .geometry import sample_boundary

    interior = np.arange(1, dmap.knots.size - 1)
    lo, hi = dmap.domain
    # the composed family moves at unit speed, so probes keep a 16*dt margin
    # from the left endpoint: closer in, the slice is smaller than the
    # finite-difference window can resolve
    admissible = interior[(dmap.Phi[interior] >= lo + 16.0 * dt) &
                          (dmap.Phi[interior] <= hi - dt)]
    if admissible.size == 0:
        raise ValueError("no interior knots leave dt-margin inside the map domain")
    sel = admissible[np.unique(np.linspace(0, admissible.size - 1,
                                           min(probes, admissible.size)).astype(int))]
    probe_times = dmap.Phi[sel]
    probe_levels = dmap.knots[sel]

    composed = reparametrized_family(family, dmap.psi)
    comp_lips = np.full(sel.size, np.nan)
    ratios = np.full(sel.size, np.nan)
    for j, (tau, r_val, k_idx) in enumerate(zip(probe_times, probe_levels, sel)):
        bs = sample_boundary(composed, float(tau), region, witnesses,
                             derive_seed(seed, 10_000 + j))
        if bs.points.shape[0] == 0:
            continue
        radius_comp = min(radius, 64.0 * dt)
        values, _ = lip_estimate_batch(
            composed, np.full(bs.points.shape[0], float(tau)), bs.points,
            dt, radius_comp, samples, derive_seed(seed, 20_000 + j))
        comp_lips[j] = values.max()
        # the raw modulus is probed at the pulled-back level; its distance to
        # the endpoint a caps the finite-difference step, and the expected
        # set motion phi*dt sets the window needed to see the moved boundary
        gap = max(float(r_val) - dmap.a, 1e-300)
        dt_raw = min(dt, gap / 16.0)
        phi_here = float(dmap.phi[k_idx])
        radius_raw = min(radius, max(32.0 * max(phi_here, 2.0) * dt_raw,
                                     64.0 * dt_raw))
        raw, _ = lip_estimate_batch(
            family, np.full(bs.points.shape[0], float(r_val)), bs.points,
            dt_raw, radius_raw, samples, derive_seed(seed, 30_000 + j))
        ratios[j] = raw.max() / phi_here if phi_here > 0 else np.inf

    valid = ~np.isnan(comp_lips)
    if not np.any(valid):
        raise EmptySliceError("no probe produced boundary witnesses")
    max_lip = float(np.nanmax(comp_lips))
    max_ratio_err = float(np.nanmax(np.abs(ratios - 1.0)))
    passed = max_lip <= 1.0 + slack and max_ratio_err <= slack
    return DesingCheck(probe_times=probe_times, probe_levels=probe_levels,
                       composed_lips=comp_lips, chain_ratios=ratios,
                       max_composed_lip=max_lip, max_ratio_error=max_ratio_err,
                       passed=passed)


# ---------------------------------------------------------------------------
# Trajectory-level inequality checks
# ---------------------------------------------------------------------------

ZERO_LIP_TOL = 1e-9
ZERO_SPEED_TOL = 1e-9


@dataclass
class SpeedBoundReport:
    """Per-step speed / modulus ratios along a trajectory (breakpoints excluded)."""

    ratios: np.ndarray
    lips: np.ndarray
    max_ratio: float
    violations: list[int]
    checked: int

    def passed(self, slack: float = SPEED_SLACK) -> bool:
        return not self.violations and self.max_ratio <= 1.0 + slack


def _speed_ratios(speeds, lips):
    ratios = np.full(speeds.shape, np.nan)
    violations = []
    for k, (s, lip) in enumerate(zip(speeds, lips)):
        if np.isnan(lip):
            continue
        if lip <= ZERO_LIP_TOL:
            if s <= ZERO_SPEED_TOL:
                ratios[k] = 0.0
            else:
                ratios[k] = np.inf
                violations.append(k)
        else:
            ratios[k] = s / lip
    return ratios, violations


def verify_speed_bound(traj, family: SetFamily, dt: float = DEFAULT_DT,
                       radius: float = DEFAULT_RADIUS,
                       samples: int = DEFAULT_EXCESS_SAMPLES, seed: int = 0,
                       starts: int = DEFAULT_STARTS) -> SpeedBoundReport:
    """Check step speeds against the local modulus at each step's left node.

    Breakpoint (restart) steps are excluded: the speed estimate is a shadow
    of the a.e. bound for absolutely continuous pieces.  Zero-modulus steps
    must have zero speed; a positive speed there is flagged as a violation.
    """
    speeds = np.asarray(traj.step_speeds, dtype=float)
    keep = np.ones(speeds.size, dtype=bool)
    for b in traj.breakpoints:
        if 1 <= b <= speeds.size:
            keep[b - 1] = False
    lips = np.full(speeds.size, np.nan)
    if np.any(keep):
        values, _ = lip_estimate_batch(
            family, traj.times[:-1][keep], traj.points[:-1][keep],
            dt, radius, samples, seed, starts)
        lips[keep] = values
    ratios, violations = _speed_ratios(speeds, lips)
    finite = ratios[~np.isnan(ratios) & np.isfinite(ratios)]
    max_ratio = float(finite.max()) if finite.size else 0.0
    if violations:
        max_ratio = np.inf
    return SpeedBoundReport(ratios=ratios, lips=lips, max_ratio=max_ratio,
                            violations=violations, checked=int(np.sum(keep)))


def verify_monotone_bound(traj, field, family: SetFamily,
                          dt: float = DEFAULT_DT, radius: float = DEFAULT_RADIUS,
                          samples: int = DEFAULT_EXCESS_SAMPLES, seed: int = 0,
                          starts: int = DEFAULT_STARTS) -> SpeedBoundReport:
    """Speed check for the pullback integrator: alpha * speed vs modulus at F(gamma).

    The trajectory must discretely solve the inclusion whose constraint acts
    on F(gamma); the declared monotonicity constant alpha scales the speed.
    Only invertible affine fields are supported (same restriction as the
    pullback integrator that produces such trajectories).
    """
    from .errors import UnsupportedFieldError

    if field.monotonicity_alpha is None:
        raise ValueError("field needs a declared monotonicity_alpha")
    parts = field.affine_parts()
    if parts is None or abs(np.linalg.det(parts[0])) < 1e-12:
        raise UnsupportedFieldError(
            "monotone bound check needs an invertible affine field")
    alpha = float(field.monotonicity_alpha)
    speeds = alpha * np.asarray(traj.step_speeds, dtype=float)
    keep = np.ones(speeds.size, dtype=bool)
    for b in traj.breakpoints:
        if 1 <= b <= speeds.size:
            keep[b - 1] = False
    images = field.eval(traj.points[:-1])
    lips = np.full(speeds.size, np.nan)
    if np.any(keep):
        values, _ = lip_estimate_batch(family, traj.times[:-1][keep],
                                       images[keep], dt, radius, samples, seed,
                                       starts)
        lips[keep] = values
    ratios, violations = _speed_ratios(speeds, lips)
    finite = ratios[~np.isnan(ratios) & np.isfinite(ratios)]
    max_ratio = float(finite.max()) if finite.size else 0.0
    if violations:
        max_ratio = np.inf
    return SpeedBoundReport(ratios=ratios, lips=lips, max_ratio=max_ratio,
                            violations=violations, checked=int(np.sum(keep)))
