"""Why finite length fails when the moving set depends on the state.

Any orbit of dx/dt = F(x) solves the state-dependent sweeping inclusion for
the moving affine set S(x) = x + F(x)^perp (its normal space at x is
span{F(x)}).  A rotation field then provides a bounded orbit whose length
grows linearly forever: no finite-length theorem can hold in the
state-dependent setting, in contrast to time-dependent sweeping.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sweepsim import (Polynomial, VectorField, ode_orbit,
                      verify_state_dependent_inclusion)

rotation = VectorField([Polynomial(2, [(-1.0, (0, 1))]),
                        Polynomial(2, [(1.0, (1, 0))])])
orbit = ode_orbit(rotation, [1.0, 0.0], t_end=100.0, h=0.01)
sup = np.max(np.linalg.norm(orbit.points, axis=1))
print(f"rotation orbit: sup |x(t)| = {sup!r} over [0, 100] (bounded)")
for T in (25.0, 50.0, 100.0):
    print(f"  length(0..{T:>5}) / {T:>5} = {orbit.length_at(T) / T:.6f}")
rep = verify_state_dependent_inclusion(orbit, rotation)
print(f"inclusion residual (velocity vs span F): max {rep.max_residual:.2e}")

# a genuinely nonlinear example: spiral onto the unit limit cycle
fx = Polynomial(2, [(-1.0, (0, 1)), (1.0, (1, 0)), (-1.0, (3, 0)), (-1.0, (1, 2))])
fy = Polynomial(2, [(1.0, (1, 0)), (1.0, (0, 1)), (-1.0, (2, 1)), (-1.0, (0, 3))])
cycle = VectorField([fx, fy])
orbit2 = ode_orbit(cycle, [0.1, 0.0], t_end=100.0, h=0.01)
rep2 = verify_state_dependent_inclusion(orbit2, cycle)
grow = (orbit2.length_at(100.0) - orbit2.length_at(50.0)) / 50.0
print(f"\nlimit-cycle field from (0.1, 0): residual {rep2.max_residual:.2e}, "
      f"asymptotic length growth per unit time {grow:.4f}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.8))
ax1.plot(orbit2.points[:, 0], orbit2.points[:, 1], lw=0.7)
ax1.set_aspect("equal"), ax1.set_title("orbit spiraling onto the cycle")
ax2.plot(orbit2.times, orbit2.cum_length)
ax2.set_xlabel("t"), ax2.set_ylabel("accumulated length")
ax2.set_title("length grows without bound")
fig.tight_layout()
fig.savefig("demo05_state_dependent.png", dpi=120)
print("\nwrote demo05_state_dependent.png")
