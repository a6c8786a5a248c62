"""Catching-up integration: project onto each next slice of a moving set.

Two canonical runs.  A half-space translating at unit speed drags its
boundary point at exactly unit speed; a ball-shaped sublevel set with level
1 - t shrinks, and the swept point rides the boundary at radius sqrt(1-t),
accelerating as the set collapses.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sweepsim import (MovingHalfspace, Polynomial, Sublevel, TimePoly,
                      catch_up, verify_speed_bound)

# --- half-space {x1 >= t} ---------------------------------------------------
halfspace = MovingHalfspace([1.0, 0.0], TimePoly.polynomial([0.0, 1.0]))
traj = catch_up(halfspace, [0.0, 0.0], 0.0, 1.0, h=0.01)
print("half-space sweep:")
print(f"  steps: {traj.step_speeds.size}, total length: {traj.total_length}")
print(f"  step speeds all equal 1: {np.allclose(traj.step_speeds, 1.0)}")

report = verify_speed_bound(traj, halfspace, seed=1)
print(f"  speed/modulus ratio, max over steps: {report.max_ratio:.6f}")

# --- shrinking ball [x^2 + y^2 <= 1 - t] -------------------------------------
shrink = Sublevel(Polynomial.squared_norm(2), TimePoly.polynomial([1.0, -1.0]))
traj2 = catch_up(shrink, [1.0, 0.0], 0.0, 0.99, h=0.002)
radii = np.linalg.norm(traj2.points, axis=1)
print("\nshrinking ball sweep:")
print(f"  total length: {traj2.total_length}  (closed form: 0.9)")
print(f"  max |radius - sqrt(1-t)|: {np.max(np.abs(radii - np.sqrt(1 - traj2.times))):.2e}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
ax1.plot(traj2.times, radii, label="swept point radius")
ax1.plot(traj2.times, np.sqrt(1 - traj2.times), "--", label="sqrt(1-t)")
ax1.set_xlabel("t"), ax1.set_ylabel("|x(t)|"), ax1.legend()
ax2.plot(traj2.times[:-1], traj2.step_speeds, label="step speed")
ax2.plot(traj2.times[:-1], 0.5 / np.sqrt(1 - traj2.times[:-1]), "--",
         label="modulus 1/(2 sqrt(1-t))")
ax2.set_xlabel("t"), ax2.legend()
fig.tight_layout()
fig.savefig("demo01_catching_up.png", dpi=120)
print("\nwrote demo01_catching_up.png")
