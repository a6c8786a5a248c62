"""Simulation and verification tools for sweeping processes.

A point dragged by the normal cone of a moving closed set ("catching-up"
dynamics), estimators for how fast such a set moves (Lipschitz modulus,
talweg profile), the time-rescaling that normalizes that speed, and the
correspondence between gradient descent and sweeping by sublevel sets.
"""

from .errors import (DimensionMismatchError, EmptySetError, EmptySliceError,
                     NonMonotoneFlowError, ScenarioError, SingularNormalError,
                     SweepError, UnremovableSingularityError, UnsupportedFieldError)
from .timefns import Curve, TimePoly
from .geometry import (BOUNDARY_TOL, BallRegion, BoundarySample, Box,
                       Intersection, MovingBall, MovingHalfspace,
                       MovingPolytope, Polynomial, SetFamily, Sublevel,
                       Translate, membership, poly_eval_grad, sample_boundary)
from .projection import (ProjectionResult, distance, project, project_batch,
                         proximal_normal)
from .dynamics import (InclusionReport, LengthStudy, Trajectory, VectorField,
                       catch_up, catch_up_pullback, central_velocities,
                       check_alpha_monotone, length_study, ode_orbit,
                       verify_state_dependent_inclusion)
from .variational import (DesingCheck, DesingMap, LipEstimate, SpeedBoundReport,
                          TalwegProfile, desingularize, excess, lip_estimate,
                          lip_estimate_batch, linear_inverse_outer_norm,
                          linear_outer_norm, reparametrized_family,
                          talweg_profile, verify_desingularized,
                          verify_monotone_bound, verify_speed_bound)
from .bridge import (BridgeResult, SweptCurve, gradient_flow, level_talweg,
                     reparametrize_by_value, run_bridge,
                     verify_sublevel_inclusion)
from .scenario import Scenario, load_scenario, parse_scenario
from .runner import RunReport, run, run_file, run_suite

__version__ = "0.1.0"
