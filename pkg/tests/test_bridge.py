import numpy as np
import pytest

from sweepsim.errors import NonMonotoneFlowError
from sweepsim.geometry import BallRegion, Polynomial, Sublevel
from sweepsim.bridge import (gradient_flow, level_talweg, reparametrize_by_value,
                             run_bridge, verify_sublevel_inclusion)
from sweepsim.dynamics import Trajectory
from sweepsim.timefns import TimePoly
from sweepsim.variational import talweg_profile, verify_speed_bound

HALF_SQ = Polynomial(2, [(0.5, (2, 0)), (0.5, (0, 2))])       # |x|^2 / 2
ANISO = Polynomial(2, [(0.5, (2, 0)), (2.0, (0, 2))])         # x^2/2 + 2 y^2


def test_gradient_flow_linear_rates():
    traj = gradient_flow(HALF_SQ, [1.0, 0.0], 1.0, 1e-3)
    assert np.allclose(traj.points[-1], [np.exp(-1.0), 0.0], atol=1e-10)
    traj = gradient_flow(ANISO, [1.0, 1.0], 1.0, 1e-3)
    assert np.allclose(traj.points[-1], [np.exp(-1.0), np.exp(-4.0)], atol=1e-9)


def test_gradient_flow_constant_potential_is_stationary():
    const = Polynomial(2, [(3.0, (0, 0))])
    traj = gradient_flow(const, [0.4, -0.2], 2.0, 0.1)
    assert np.all(traj.points == [0.4, -0.2])
    assert traj.total_length == 0.0


def test_gradient_flow_records_asymptotic_value():
    traj = gradient_flow(HALF_SQ, [1e-3, 0.0], 50.0, 0.05)
    assert traj.status == "critical_point"
    assert traj.meta["asymptotic_value"] < 1e-12


def test_reparametrize_by_value_closed_form():
    flow = gradient_flow(HALF_SQ, [1.0, 0.0], 1.2, 1e-3)
    sw = reparametrize_by_value(flow, HALF_SQ)
    ref = np.sqrt(1.0 - 2.0 * sw.s_grid)
    assert np.max(np.abs(np.linalg.norm(sw.points, axis=1) - ref)) < 1e-10
    # 1-D closed form: du/ds = -1/sqrt(1-2s) along the ray
    interior = slice(1, -1)
    expected = -1.0 / np.sqrt(1.0 - 2.0 * sw.s_grid[interior])
    assert np.max(np.abs(sw.duds[interior, 0] - expected)
                  / np.abs(expected)) < 1e-4
    assert np.allclose(sw.duds[interior, 1], 0.0, atol=1e-12)


def test_reparametrize_single_node():
    flow = Trajectory(times=np.array([0.0]), points=np.array([[1.0, 0.0]]),
                      step_speeds=np.zeros(0), cum_length=np.array([0.0]))
    sw = reparametrize_by_value(flow, HALF_SQ)
    assert sw.s_grid.size == 1
    assert np.all(np.isnan(sw.duds))


def test_reparametrize_rejects_increasing_values():
    times = np.array([0.0, 0.1, 0.2])
    pts = np.array([[1.0, 0.0], [0.9, 0.0], [1.1, 0.0]])   # value rises at the end
    flow = Trajectory(times=times, points=pts, step_speeds=np.ones(2),
                      cum_length=np.array([0.0, 0.1, 0.3]))
    with pytest.raises(NonMonotoneFlowError):
        reparametrize_by_value(flow, HALF_SQ)


def test_reparametrize_collapses_ties():
    times = np.array([0.0, 0.1, 0.2])
    pts = np.array([[1.0, 0.0], [1.0, 0.0], [0.5, 0.0]])
    flow = Trajectory(times=times, points=pts, step_speeds=np.ones(2),
                      cum_length=np.array([0.0, 0.0, 0.5]))
    sw = reparametrize_by_value(flow, HALF_SQ)
    assert sw.collapsed == 1
    assert sw.s_grid.size == 2


def test_bridge_residuals_isotropic():
    res = run_bridge(HALF_SQ, [1.0, 0.0], 1.2, 1e-3)
    mi, mv, skipped = verify_sublevel_inclusion(res, HALF_SQ)
    assert mi <= 1e-8      # 1-D ray: exactly collinear
    assert mv <= 1e-12
    assert skipped == 0


def test_bridge_residuals_anisotropic_second_order():
    residuals = {}
    for h in (2e-3, 1e-3):
        res = run_bridge(ANISO, [1.0, 1.0], 1.0, h)
        residuals[h], _, _ = verify_sublevel_inclusion(res, ANISO)
    assert residuals[2e-3] / residuals[1e-3] > 2.5   # ~O(h^2)
    assert residuals[1e-3] < 1e-4


def test_bridge_length_invariance():
    res = run_bridge(ANISO, [1.0, 1.0], 1.0, 1e-3)
    flow_len = res.flow.total_length
    swept_len = res.swept.as_trajectory().total_length
    assert abs(flow_len - swept_len) <= 1e-6 * flow_len


def test_bridge_passes_speed_bound_against_sublevel_family():
    res = run_bridge(HALF_SQ, [1.0, 0.0], 1.2, 1e-3)
    fam = Sublevel(HALF_SQ, TimePoly.polynomial([res.swept.start_value, -1.0]))
    rep = verify_speed_bound(res.swept.as_trajectory(), fam, seed=7)
    assert rep.max_ratio <= 1.05
    assert not rep.violations


# ---------------------------------------------------------------------------
# Level-set talweg
# ---------------------------------------------------------------------------

def test_level_talweg_ball():
    prof = level_talweg(Polynomial.squared_norm(2), BallRegion([0.0, 0.0], 1.0),
                        np.geomspace(0.01, 1.0, 8), samples=16, seed=4)
    ref = 0.5 / np.sqrt(prof.r_grid)
    assert np.max(np.abs(prof.phi - ref) / ref) <= 0.05


def test_level_talweg_linear_function():
    lin = Polynomial.linear([1.0, 0.0])
    prof = level_talweg(lin, BallRegion([0.0, 0.0], 2.0),
                        np.linspace(-1.0, 1.0, 5), samples=16, seed=4)
    assert np.allclose(prof.phi, 1.0, atol=1e-9)


def test_level_talweg_ellipse_against_scan_oracle():
    # dense parameterized scan of the ellipse x^2/2 + 2 y^2 = 1/2
    theta = np.linspace(0.0, 2.0 * np.pi, 400001)
    pts = np.column_stack([np.cos(theta), 0.5 * np.sin(theta)])
    gmin = np.linalg.norm(ANISO.gradient(pts), axis=1).min()
    prof = level_talweg(ANISO, BallRegion([0.0, 0.0], 2.0), [0.4, 0.5, 0.6],
                        samples=32, seed=9)
    assert abs(prof.phi[1] - 1.0 / gmin) / (1.0 / gmin) < 1e-6


def test_level_talweg_flags_empty_levels():
    prof = level_talweg(Polynomial.squared_norm(2), BallRegion([0.0, 0.0], 1.0),
                        [0.25, 9.0], samples=8, seed=4)
    assert not prof.empty[0]
    assert prof.empty[1]
    assert np.isnan(prof.phi[1])


def test_level_talweg_cross_validates_estimator():
    fam = Sublevel(Polynomial.squared_norm(2), TimePoly.polynomial([0.0, 1.0]))
    grid = np.geomspace(0.05, 0.8, 6)
    region = BallRegion([0.0, 0.0], 1.0)
    direct = level_talweg(Polynomial.squared_norm(2), region, grid,
                          samples=16, seed=10)
    sampled = talweg_profile(fam, region, grid, samples=16, seed=11)
    assert np.max(np.abs(direct.phi - sampled.phi) / direct.phi) <= 0.10
