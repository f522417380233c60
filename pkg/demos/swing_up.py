"""Swing a torque-limited pendulum up with RRT and constant-acceleration steering.

The motor delivers at most 5 N m, less than the 7.85 N m needed to hold the
rod horizontal, so the planner has to pump energy over several swings.

    python3 demos/swing_up.py [seed] [budget]
"""

from __future__ import annotations

import sys

import numpy as np

from kinoplan.dynamics import is_admissible, replay
from kinoplan.experiment import ExperimentSpec, run_seed
from kinoplan.formats import parse_roadmap_csv, roadmap_csv
from kinoplan.planner import swing_count
from kinoplan.statespace import state_distance
from kinoplan.svg import render_phase_portrait

# %% Problem setup: 8 kg, 0.2 m uniform rod hanging down, goal is upright and at rest
seed = int(sys.argv[1]) if len(sys.argv) > 1 else 2
budget = int(sys.argv[2]) if len(sys.argv) > 2 else 150_000
spec = ExperimentSpec(interp="soc1", tau_max=5.0, budget=budget)
model = spec.model()
print(f"static torque at theta = pi/2: {model.inverse_dynamics([np.pi / 2], [0.0], [0.0])[0]:.3f} N m")
print(f"torque limit:                  {model.tau_max:.3f} N m")
print(f"swing-up speed sqrt(6 g / l):  {model.swingup_speed():.3f} rad/s")

# %% Plan
result = run_seed(spec, seed)
print(f"\nseed {seed}: {result.status} after {result.extensions_used} extensions, "
      f"{result.nodes_created} nodes")
if not result.solved:
    sys.exit(0)

# %% Inspect the solution
traj = result.solution
print(f"duration {traj.duration:.3f} s over {len(traj.segments)} segments, "
      f"{swing_count(traj)} velocity reversals")
ok, ratio = is_admissible(model, traj, 4 * spec.admissibility_checks)
print(f"peak |tau| / tau_max at 4x resolution: {ratio:.4f} ({'admissible' if ok else 'VIOLATION'})")

# %% Replay the inverse-dynamics torque open loop and compare with the tree's goal node
final = replay(model, traj, 2.5e-4).final_state()
print(f"replay end state error: {state_distance(final, result.roadmap.state(result.goal_node)):.2e}")

# %% Phase portrait
table = parse_roadmap_csv(roadmap_csv(result.roadmap, {"seed": seed}))
with open("swing_up.svg", "w") as fh:
    fh.write(render_phase_portrait(table, traj, title=f"SOC1 roadmap, seed {seed}"))
print("wrote swing_up.svg")
