import numpy as np
import pytest

from sweepsim.errors import EmptySetError, SingularNormalError
from sweepsim.geometry import (Box, Intersection, MovingBall, MovingHalfspace,
                               MovingPolytope, Polynomial, Sublevel, Translate,
                               membership)
from sweepsim.projection import project, project_batch, proximal_normal
from sweepsim.timefns import Curve, TimePoly

CONE = Sublevel(Polynomial(2, [(1.0, (2, 0)), (-1.0, (0, 2))]), 0.0)
CIRCLE = Sublevel(Polynomial.squared_norm(2), 1.0)


def grid_project(family, t, x, lo=-2.0, hi=2.0, cells=801):
    """Brute-force nearest member on a regular grid, lexicographic tie-break."""
    axis = np.linspace(lo, hi, cells)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    P = np.column_stack([X.ravel(), Y.ravel()])
    P = P[family.membership_mask(t, P)]
    d = np.linalg.norm(P - np.asarray(x), axis=1)
    dmin = d.min()
    near = P[d <= dmin + 1e-12]
    order = np.lexsort((near[:, 1], near[:, 0]))
    return near[order[0]], dmin, (hi - lo) / (cells - 1)


def test_project_ball_closed_form():
    res = project(MovingBall([0.0, 0.0], 1.0), 0.0, [2.0, 0.0])
    assert np.allclose(res.point, [1.0, 0.0])
    assert res.distance == 1.0
    assert np.allclose(res.normal, [1.0, 0.0])
    assert res.converged


def test_project_halfspace_closed_form():
    res = project(MovingHalfspace([1.0, 0.0], 0.5), 0.0, [0.0, 0.0])
    assert np.allclose(res.point, [0.5, 0.0])
    assert res.distance == 0.5
    assert np.allclose(res.normal, [-1.0, 0.0])


def test_project_circle_radial():
    res = project(CIRCLE, 0.0, [3.0, 4.0])
    assert np.allclose(res.point, [0.6, 0.8], atol=1e-12)
    assert abs(res.distance - 4.0) < 1e-12
    assert res.converged


def test_project_inside_returns_point_itself():
    res = project(CIRCLE, 0.0, [0.1, -0.2])
    assert res.distance == 0.0
    assert res.normal is None
    assert np.array_equal(res.point, [0.1, -0.2])


def test_project_cone_matches_grid_oracle():
    res = project(CONE, 0.0, [1.0, 0.0])
    gp, gd, cell = grid_project(CONE, 0.0, [1.0, 0.0])
    assert abs(res.distance - np.sqrt(2) / 2) < 1e-9
    assert abs(res.distance - gd) <= cell * np.sqrt(2)
    assert np.linalg.norm(res.point - gp) <= cell * np.sqrt(2)
    # deterministic tie-break picks the lexicographically smaller candidate
    assert np.allclose(res.point, [0.5, -0.5], atol=1e-9)


def test_project_idempotent():
    for fam, x in [(CIRCLE, [3.0, 4.0]), (CONE, [1.0, 0.0]),
                   (MovingBall([0.0, 0.0], 1.0), [2.0, 2.0])]:
        y = project(fam, 0.0, x).point
        again = project(fam, 0.0, y)
        assert again.distance <= 1e-9


def test_projection_nonexpansive_on_convex_families():
    rng = np.random.default_rng(4)
    families = [MovingBall([0.2, -0.1], 1.3),
                MovingHalfspace([1.0, 2.0], 0.7),
                MovingPolytope([MovingHalfspace([1.0, 0.0], 0.0),
                                MovingHalfspace([0.0, 1.0], 0.0),
                                MovingHalfspace([-1.0, -1.0], -2.0)])]
    for fam in families:
        X = rng.normal(size=(40, 2)) * 3
        Y = rng.normal(size=(40, 2)) * 3
        px, _, _ = project_batch(fam, 0.0, X)
        py, _, _ = project_batch(fam, 0.0, Y)
        assert np.all(np.linalg.norm(px - py, axis=1)
                      <= np.linalg.norm(X - Y, axis=1) + 1e-12)


def test_project_polytope_corner_edge_inside():
    facets = [MovingHalfspace([1.0, 0.0], 0.0), MovingHalfspace([-1.0, 0.0], -1.0),
              MovingHalfspace([0.0, 1.0], 0.0), MovingHalfspace([0.0, -1.0], -1.0)]
    box01 = MovingPolytope(facets)
    assert np.allclose(project(box01, 0.0, [2.0, 2.0]).point, [1.0, 1.0])
    assert np.allclose(project(box01, 0.0, [0.5, -3.0]).point, [0.5, 0.0])
    res = project(box01, 0.0, [0.25, 0.75])
    assert res.distance == 0.0


def test_project_polytope_empty():
    facets = [MovingHalfspace([1.0, 0.0], 1.0), MovingHalfspace([-1.0, 0.0], 1.0)]
    with pytest.raises(EmptySetError):
        project(MovingPolytope(facets), 0.0, [0.0, 0.0])


def test_project_empty_ball():
    fam = MovingBall([0.0, 0.0], TimePoly.polynomial([1.0, -1.0]))
    with pytest.raises(EmptySetError):
        project(fam, 2.0, [0.5, 0.5])


def test_project_zero_radius_ball_is_single_point():
    fam = MovingBall([0.3, -0.4], TimePoly.polynomial([1.0, -1.0]))
    res = project(fam, 1.0, [1.3, -0.4])    # radius hit 0: set is the center
    assert np.allclose(res.point, [0.3, -0.4])
    assert abs(res.distance - 1.0) < 1e-12


def test_project_translate():
    moving = Translate(MovingBall([0.0, 0.0], 1.0),
                       Curve([TimePoly.polynomial([0.0, 1.0]), 0.0]))
    res = project(moving, 2.0, [4.0, 0.0])
    assert np.allclose(res.point, [3.0, 0.0])
    assert abs(res.distance - 1.0) < 1e-12


def test_project_intersection_lens_corner():
    lens = Intersection([MovingBall([0.0, 0.0], 1.0), MovingBall([1.2, 0.0], 1.0)])
    res = project(lens, 0.0, [0.6, 2.0])
    assert res.converged
    assert np.allclose(res.point, [0.6, 0.8], atol=1e-9)
    assert abs(res.distance - 1.2) < 1e-9
    gp, gd, cell = grid_project(lens, 0.0, [0.6, 2.0])
    assert abs(res.distance - gd) <= cell * np.sqrt(2)


def test_project_batch_per_row_times():
    fam = MovingBall([0.0, 0.0], TimePoly.polynomial([1.0, -1.0]))
    X = np.tile([2.0, 0.0], (3, 1))
    pts, dist, ok = project_batch(fam, np.array([0.0, 0.5, 0.75]), X)
    assert np.allclose(pts[:, 0], [1.0, 0.5, 0.25])
    assert np.allclose(dist, [1.0, 1.5, 1.75])
    assert np.all(ok)


def test_project_deterministic_for_seed():
    a = project(CONE, 0.0, [1.3, 0.1], seed=5)
    b = project(CONE, 0.0, [1.3, 0.1], seed=5)
    assert np.array_equal(a.point, b.point)


# ---------------------------------------------------------------------------
# Proximal normals
# ---------------------------------------------------------------------------

def test_proximal_normal_examples():
    assert np.allclose(proximal_normal(MovingBall([0.0, 0.0], 1.0), 0.0, [0.0, 1.0]),
                       [0.0, 1.0])
    assert np.allclose(proximal_normal(CIRCLE, 0.0, [0.6, 0.8]), [0.6, 0.8])
    hs = MovingHalfspace([2.0, 0.0], 1.0)    # {x1 >= 0.5}
    assert np.allclose(proximal_normal(hs, 0.0, [0.5, 3.0]), [-1.0, 0.0])


def test_proximal_normal_interior_is_zero():
    assert np.array_equal(proximal_normal(CIRCLE, 0.0, [0.1, 0.1]), [0.0, 0.0])


def test_proximal_normal_singular_at_cone_apex():
    with pytest.raises(SingularNormalError):
        proximal_normal(CONE, 0.0, [0.0, 0.0])


def test_proximal_normal_supports_a_touching_ball():
    # ball of radius rho = distance/2 centered at point + rho*normal touches
    # the set only at the projected point
    fam = CIRCLE
    x = np.array([2.0, 1.0])
    res = project(fam, 0.0, x)
    rho = res.distance / 2
    center = res.point + rho * res.normal
    rng = np.random.default_rng(8)
    S = rng.normal(size=(4000, 2))
    S = S[fam.membership_mask(0.0, S)]
    d = np.linalg.norm(S - center, axis=1)
    close = d < rho - 1e-9
    assert np.all(np.linalg.norm(S[close] - res.point, axis=1) < 1e-3)


def test_lexicographic_tie_break_stability():
    # symmetric configurations pick the lexicographically smallest projection
    res = project(CONE, 0.0, [-1.0, 0.0])
    assert np.allclose(res.point, [-0.5, -0.5], atol=1e-9)
