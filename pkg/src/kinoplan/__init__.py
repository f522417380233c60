"""Kinodynamic RRT with state-based steering for torque-limited pendulums."""

from .dynamics import (DoublePendulumModel, SinglePendulumModel, integrate, inverse_dynamics,
                       forward_dynamics, is_admissible, replay)
from .interp import (BezierInterpolator, QuadraticInterpolator, SOC1Interpolator,
                     bezier_interpolate, make_interpolator, quad_interpolate, soc1_interpolate)
from .planner import PlannerConfig, PlanResult, Roadmap, extract_solution, parents, plan, steer
from .soc import SOCReport, verify_soc
from .statespace import State, Trajectory, TrajectorySegment, state_distance, wrap_angle

__version__ = "0.1.0"

__all__ = [
    "BezierInterpolator", "DoublePendulumModel", "PlanResult", "PlannerConfig",
    "QuadraticInterpolator", "Roadmap", "SOC1Interpolator", "SOCReport", "SinglePendulumModel",
    "State", "Trajectory", "TrajectorySegment", "bezier_interpolate", "extract_solution",
    "forward_dynamics", "integrate", "inverse_dynamics", "is_admissible", "make_interpolator",
    "parents", "plan", "quad_interpolate", "replay", "soc1_interpolate", "state_distance", "steer",
    "verify_soc", "wrap_angle",
]
