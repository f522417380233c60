"""Why fixed-duration Bezier steering cannot swing the pendulum up.

A cubic with duration T that joins two nearby states of speed v starts with
acceleration -6 v / T. Under a torque limit that caps the acceleration, only
slow states can be connected, so the tree piles up in a low-speed band and
never reaches the speed needed to go over the top.

    python3 demos/bezier_band.py [budget]
"""

from __future__ import annotations

import sys

import numpy as np

from kinoplan.experiment import ExperimentSpec, run_seed
from kinoplan.interp import make_interpolator
from kinoplan.planner import band_density_ratio, velocity_band_diagnostic
from kinoplan.statespace import State

budget = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000

# %% The acceleration of a zero-displacement Bezier segment scales with the speed
bez = make_interpolator("bezier", bezier_T=1.0)
for v in (1.0, 5.0, 10.0):
    qdd0 = bez.interpolate(State([0.3], [v]), State([0.3], [v])).eval(0.0)[2][0]
    print(f"v = {v:5.1f} rad/s -> initial acceleration {qdd0:8.2f} rad/s^2")

# %% Grow a Bezier tree and a SOC1 tree with the same seed and budget
rows = []
for interp in ("bezier", "soc1"):
    spec = ExperimentSpec(interp=interp, budget=budget)
    res = run_seed(spec, 1)
    band = velocity_band_diagnostic(res.roadmap, spec.model(), spec.bezier_T)
    rows.append((interp, res.status, res.extensions_used, band.max_speed,
                 band_density_ratio(res.roadmap.qd)))
print(f"\nanalytic band K T tau_max / 6 = {band.band:.3f} rad/s, "
      f"swing-up speed {band.swingup_speed:.3f} rad/s")
print(f"{'interp':<8} {'status':<17} {'ext':>7} {'max |qd|':>9} {'density ratio':>14}")
for interp, status, ext, vmax, ratio in rows:
    print(f"{interp:<8} {status:<17} {ext:>7} {vmax:>9.3f} {ratio:>14.2f}")

# %% Histogram of node speeds for the Bezier tree
spec = ExperimentSpec(interp="bezier", budget=budget)
speeds = np.abs(run_seed(spec, 1).roadmap.qd[:, 0])
counts, edges = np.histogram(speeds, bins=np.arange(0.0, 18.0, 2.0))
for c, lo in zip(counts, edges[:-1]):
    print(f"{lo:4.0f}-{lo + 2:<4.0f} {'#' * int(60 * c / counts.max())}")
