import numpy as np
import pytest

from sweepsim.errors import UnremovableSingularityError
from sweepsim.geometry import (BallRegion, Box, MovingBall, MovingHalfspace,
                               Polynomial, Sublevel, Translate, sample_boundary)
from sweepsim.dynamics import VectorField, catch_up, catch_up_pullback
from sweepsim.timefns import Curve, TimePoly
from sweepsim.variational import (DesingMap, TalwegProfile, desingularize,
                                  excess, lip_estimate, linear_inverse_outer_norm,
                                  linear_outer_norm, talweg_profile,
                                  verify_desingularized, verify_monotone_bound,
                                  verify_speed_bound)

BOX = Box([-2.0, -2.0], [2.0, 2.0])
HALFSPACE_T = MovingHalfspace([1.0, 0.0], TimePoly.polynomial([0.0, 1.0]))
BALL_LEVELS = Sublevel(Polynomial.squared_norm(2), TimePoly.polynomial([0.0, 1.0]))
STATIC = MovingBall([0.0, 0.0], 1.0)


def test_excess_translating_halfspace():
    assert abs(excess(HALFSPACE_T, 0.0, 0.1, BOX, seed=1) - 0.1) < 1e-6


def test_excess_static_is_zero():
    assert excess(STATIC, 0.2, 0.9, BOX, seed=1) == 0.0


def test_excess_shrinking_ball_levels():
    # levels 1 -> 0.81: radius shrinks from 1 to 0.9
    assert abs(excess(BALL_LEVELS, 1.0, 0.81, BOX, seed=1) - 0.1) < 1e-6


def test_lip_estimate_halfspace_unit():
    est = lip_estimate(HALFSPACE_T, 0.5, [0.5, -0.3], seed=2)
    assert abs(est.value - 1.0) <= 0.02
    assert not est.is_infinite and not est.one_sided


def test_lip_estimate_ball_levels():
    est = lip_estimate(BALL_LEVELS, 0.25, [0.5, 0.0], seed=2)
    assert abs(est.value - 1.0) <= 0.05


def test_lip_estimate_static_zero():
    est = lip_estimate(STATIC, 0.5, [1.0, 0.0], seed=2)
    assert est.value == 0.0


def test_lip_estimate_infinity_flag():
    # offset races at 2e6 per unit time: sampled ratio crosses the cap
    racing = MovingHalfspace([1.0, 0.0], TimePoly.polynomial([0.0, 2e6]))
    est = lip_estimate(racing, 0.0, [0.0, 0.0], dt=1e-3, radius=2e4, seed=2)
    assert est.is_infinite


def test_lip_estimate_one_sided_at_domain_edge():
    # level r - dt goes negative below r = dt: the minus side has no slice
    est = lip_estimate(BALL_LEVELS, 5e-4, [np.sqrt(5e-4), 0.0], dt=1e-3,
                       radius=0.05, seed=2)
    assert est.one_sided


def test_lip_translation_equivariant():
    est = lip_estimate(BALL_LEVELS, 0.25, [0.5, 0.0], seed=2)
    shift = np.array([3.0, -2.0])
    moved = Translate(BALL_LEVELS, Curve([3.0, -2.0]))
    est2 = lip_estimate(moved, 0.25, np.array([0.5, 0.0]) + shift, seed=2)
    assert abs(est.value - est2.value) <= 1e-3


def test_talweg_profile_ball_levels():
    prof = talweg_profile(BALL_LEVELS, BallRegion([0.0, 0.0], 1.0),
                          np.geomspace(0.01, 1.0, 8), samples=16, seed=3)
    ref = 0.5 / np.sqrt(prof.r_grid)
    assert np.all(np.abs(prof.phi - ref) / ref <= 0.05)
    # witnesses realize the supremum: they sit on the slice boundary
    radii = np.linalg.norm(prof.witnesses, axis=1)
    assert np.all(np.abs(radii - np.sqrt(prof.r_grid)) < 1e-6)


def test_talweg_profile_halfspace_constant_one():
    prof = talweg_profile(HALFSPACE_T, BOX, np.linspace(0.1, 0.9, 5),
                          samples=16, seed=3)
    assert np.all(np.abs(prof.phi - 1.0) <= 0.02)


def test_talweg_profile_static_zero():
    prof = talweg_profile(STATIC, BOX, np.linspace(0.1, 0.9, 4), samples=8, seed=3)
    assert np.all(prof.phi == 0.0)


def test_talweg_dominates_pointwise_with_fresh_seed():
    region = BallRegion([0.0, 0.0], 1.0)
    prof = talweg_profile(BALL_LEVELS, region, [0.25], samples=16, seed=3)
    bs = sample_boundary(BALL_LEVELS, 0.25, region, 8, seed=99)
    for x in bs.points:
        est = lip_estimate(BALL_LEVELS, 0.25, x, seed=77)
        assert est.value <= prof.phi[0] * 1.01


# ---------------------------------------------------------------------------
# Desingularization
# ---------------------------------------------------------------------------

def analytic_profile(fn, grid, dim=2):
    grid = np.asarray(grid, dtype=float)
    return TalwegProfile(r_grid=grid, phi=fn(grid),
                         witnesses=np.zeros((grid.size, dim)),
                         empty=np.zeros(grid.size, dtype=bool))


def test_desingularize_inverse_sqrt_profile():
    prof = analytic_profile(lambda r: 0.5 / np.sqrt(r), np.geomspace(1e-6, 1.0, 64))
    dm = desingularize(prof, 0.0)
    rel = np.abs(dm.Phi[1:] - np.sqrt(dm.knots[1:])) / np.sqrt(dm.knots[1:])
    assert rel.max() <= 0.02
    s = np.linspace(0.05, 0.95, 9)
    assert np.max(np.abs(dm.psi(s) - s ** 2) / s ** 2) <= 0.02
    assert dm.psi(dm.a) == dm.a


def test_desingularize_constant_profiles():
    prof = analytic_profile(lambda r: np.ones_like(r), np.linspace(0.05, 1.0, 20))
    dm = desingularize(prof, 0.0)
    assert np.max(np.abs(dm.Phi[1:] - dm.knots[1:])) < 1e-12
    prof2 = analytic_profile(lambda r: 2.0 * np.ones_like(r), np.linspace(0.05, 0.95, 20))
    dm2 = desingularize(prof2, 0.0)
    assert np.max(np.abs(dm2.Phi[1:] - 2.0 * dm2.knots[1:])) < 1e-12
    assert abs(dm2.psi(0.8) - 0.4) < 1e-9


def test_desingularize_round_trip_on_knots():
    prof = analytic_profile(lambda r: 0.5 / np.sqrt(r), np.geomspace(1e-4, 1.0, 32))
    dm = desingularize(prof, 0.0)
    err = np.abs(dm.psi(dm.Phi) - dm.knots) / (1.0 + np.abs(dm.knots))
    assert err.max() <= 1e-8
    assert np.all(np.diff(dm.Phi) > 0)


def test_desingularize_rejects_infinite_knots():
    grid = np.geomspace(1e-3, 1.0, 16)
    phi = 0.5 / np.sqrt(grid)
    phi[4] = 1e7
    prof = TalwegProfile(r_grid=grid, phi=phi, witnesses=np.zeros((16, 2)),
                         empty=np.zeros(16, dtype=bool))
    with pytest.raises(UnremovableSingularityError):
        desingularize(prof, 0.0)


def test_desingularize_rejects_nonintegrable_head():
    prof = analytic_profile(lambda r: 1.0 / r, np.geomspace(1e-6, 1.0, 32))
    with pytest.raises(UnremovableSingularityError):
        desingularize(prof, 0.0)


def test_verify_desingularized_ball_family():
    prof = analytic_profile(lambda r: 0.5 / np.sqrt(r), np.geomspace(1e-6, 1.0, 48))
    dm = desingularize(prof, 0.0)
    chk = verify_desingularized(BALL_LEVELS, dm, BallRegion([0.0, 0.0], 1.0),
                                probes=8, seed=5)
    assert chk.passed
    assert chk.max_composed_lip <= 1.05
    assert chk.max_ratio_error <= 0.05


def test_verify_desingularized_identity_on_halfspace():
    # constant-speed family: identity reparametrization leaves the modulus at 1
    prof = analytic_profile(lambda r: np.ones_like(r), np.linspace(0.05, 1.0, 24))
    dm = desingularize(prof, 0.0)
    chk = verify_desingularized(HALFSPACE_T, dm, BOX, probes=6, seed=5)
    assert chk.max_composed_lip <= 1.02
    assert chk.max_ratio_error <= 0.02


def test_outer_norm_helpers_exact_in_one_dimension():
    for c in (2.0, -0.5, 10.0):
        assert linear_inverse_outer_norm([[c]]) == 1.0 / abs(c)
        assert linear_outer_norm([[c]]) == abs(c)
    assert linear_inverse_outer_norm([[0.0]]) == np.inf
    assert abs(linear_inverse_outer_norm([[0.6, 0.8]]) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# Speed bound verification
# ---------------------------------------------------------------------------

def test_speed_bound_translating_halfspace_tight():
    traj = catch_up(HALFSPACE_T, [0.0, 0.0], 0.0, 1.0, 0.01)
    rep = verify_speed_bound(traj, HALFSPACE_T, seed=6)
    assert rep.passed(0.05)
    good = rep.ratios[~np.isnan(rep.ratios)]
    assert np.all(np.abs(good - 1.0) <= 0.05)


def test_speed_bound_static_zero_ratios():
    traj = catch_up(STATIC, [2.0, 0.0], 0.0, 0.5, 0.05)
    rep = verify_speed_bound(traj, STATIC, seed=6)
    assert rep.max_ratio == 0.0
    assert not rep.violations


def test_speed_bound_excludes_breakpoints():
    cx = TimePoly([0.0, 0.5], [[0.0], [3.0]])
    fam = MovingBall(Curve([cx, 0.0]), 1.0)
    traj = catch_up(fam, [1.0, 0.0], 0.0, 1.0, 0.05)
    assert traj.breakpoints
    rep = verify_speed_bound(traj, fam, seed=6)
    k = traj.breakpoints[0]
    assert np.isnan(rep.ratios[k - 1])
    assert not rep.violations


def test_monotone_bound_scaled_identity():
    F2 = VectorField([Polynomial(2, [(2.0, (1, 0))]),
                      Polynomial(2, [(2.0, (0, 1))])], monotonicity_alpha=2.0)
    traj = catch_up_pullback(HALFSPACE_T, F2, [0.0, 0.0], 0.0, 1.0, 0.01)
    rep = verify_monotone_bound(traj, F2, HALFSPACE_T, seed=6)
    assert rep.passed(0.05)
    assert abs(rep.max_ratio - 1.0) <= 0.05


def test_monotone_bound_identity_reduces_to_speed_bound():
    F1 = VectorField([Polynomial(2, [(1.0, (1, 0))]),
                      Polynomial(2, [(1.0, (0, 1))])], monotonicity_alpha=1.0)
    traj = catch_up_pullback(HALFSPACE_T, F1, [0.0, 0.0], 0.0, 1.0, 0.01)
    rep_m = verify_monotone_bound(traj, F1, HALFSPACE_T, seed=6)
    rep_s = verify_speed_bound(traj, HALFSPACE_T, seed=6)
    good = ~np.isnan(rep_m.ratios)
    assert np.allclose(rep_m.ratios[good], rep_s.ratios[good])


def test_monotone_bound_rejects_noninvertible_field():
    from sweepsim.errors import UnsupportedFieldError
    traj = catch_up(HALFSPACE_T, [0.0, 0.0], 0.0, 0.2, 0.05)
    cubic = VectorField([Polynomial(2, [(1.0, (3, 0))]),
                         Polynomial(2, [(1.0, (0, 3))])], monotonicity_alpha=1.0)
    with pytest.raises(UnsupportedFieldError):
        verify_monotone_bound(traj, cubic, HALFSPACE_T)


def test_monotone_bound_triple_identity_shrinking_ball():
    # F = 3*Id on the moving ball of radius 1 - t: pullback moves at lip/3
    F3 = VectorField([Polynomial(2, [(3.0, (1, 0))]),
                      Polynomial(2, [(3.0, (0, 1))])], monotonicity_alpha=3.0)
    fam = MovingBall([0.0, 0.0], TimePoly.polynomial([1.0, -1.0]))
    traj = catch_up_pullback(fam, F3, [1.0 / 3.0, 0.0], 0.0, 0.9, 0.005)
    rep = verify_monotone_bound(traj, F3, fam, seed=6)
    assert rep.passed(0.05)
    # measured speed is (1/3) of the unit boundary speed
    assert np.max(np.abs(traj.step_speeds - 1.0 / 3.0)) < 1e-6
