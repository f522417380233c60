"""Randomized tree planner (RRT flavour) with state-based steering.

Each extension draws a target state (or, every ``goal_bias_period`` extensions,
takes the goal itself), picks the k nearest roadmap nodes as parents and tries
to steer from each of them: interpolate parent -> target, compute the
inverse-dynamics torques along the interpolated motion and accept the segment
if they stay within the torque limits. Every accepted segment adds a node.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DynamicsModel, SinglePendulumModel, segment_torque_ratio
from .interp import Interpolator
from .neighbors import make_index
from .statespace import TWO_PI, State, Trajectory, TrajectorySegment, state_distance, wrap_angle


class SteeringFailure(Exception):
    """Steering did not produce an admissible segment.

    ``reason`` is ``"interpolation"`` when the interpolator rejected the pair
    and ``"torque"`` when the interpolated motion needs too much torque.
    """

    def __init__(self, reason: str, ratio: float = float("nan")):
        super().__init__(f"steering failed ({reason})")
        self.reason = reason
        self.ratio = ratio


@dataclass(frozen=True)
class Node:
    id: int
    state: State
    parent: int | None
    segment: TrajectorySegment | None
    iteration_added: int


class Roadmap:
    """Tree of states grown from node 0; node i stores the segment from its parent."""

    def __init__(self, root: State, capacity: int = 1024):
        n = root.n_dof
        self.n_dof = n
        self._q = np.empty((capacity, n))
        self._qd = np.empty((capacity, n))
        self._parent = np.empty(capacity, dtype=np.int64)
        self._iteration = np.empty(capacity, dtype=np.int64)
        self._duration = np.empty(capacity)
        self._coeffs = np.empty((capacity, n, 4))
        self.size = 0
        self._append(root.q, root.qd, -1, 0, np.nan, np.full((n, 4), np.nan))

    def _append(self, q, qd, parent, iteration, duration, coeffs):
        if self.size == self._q.shape[0]:
            grow = lambda a: np.concatenate([a, np.empty_like(a)])  # noqa: E731
            self._q, self._qd = grow(self._q), grow(self._qd)
            self._parent, self._iteration = grow(self._parent), grow(self._iteration)
            self._duration, self._coeffs = grow(self._duration), grow(self._coeffs)
        i = self.size
        self._q[i] = q
        self._qd[i] = qd
        self._parent[i] = parent
        self._iteration[i] = iteration
        self._duration[i] = duration
        self._coeffs[i] = coeffs
        self.size += 1
        return i

    def add(self, state: State, parent: int, segment: TrajectorySegment, iteration: int) -> int:
        if not 0 <= parent < self.size:
            raise ValueError(f"unknown parent {parent}")
        return self._append(state.q, state.qd, parent, iteration, segment.duration, segment.coeffs)

    def __len__(self):
        return self.size

    @property
    def q(self) -> np.ndarray:
        return self._q[:self.size]

    @property
    def qd(self) -> np.ndarray:
        return self._qd[:self.size]

    @property
    def parents(self) -> np.ndarray:
        return self._parent[:self.size]

    @property
    def iterations(self) -> np.ndarray:
        return self._iteration[:self.size]

    def state(self, i: int) -> State:
        return State(self._q[i], self._qd[i])

    def segment(self, i: int) -> TrajectorySegment | None:
        if self._parent[i] < 0:
            return None
        return TrajectorySegment(self._duration[i], self._coeffs[i])

    def node(self, i: int) -> Node:
        if not 0 <= i < self.size:
            raise IndexError(f"node {i} not in roadmap of size {self.size}")
        parent = int(self._parent[i])
        return Node(i, self.state(i), None if parent < 0 else parent, self.segment(i),
                    int(self._iteration[i]))

    @property
    def nodes(self) -> list[Node]:
        return [self.node(i) for i in range(self.size)]

    def path_to(self, i: int) -> list[int]:
        if not 0 <= i < self.size:
            raise ValueError(f"node {i} not in roadmap")
        path = [i]
        while self._parent[path[-1]] >= 0:
            path.append(int(self._parent[path[-1]]))
            if len(path) > self.size:
                raise RuntimeError("cycle in roadmap parents")
        return path[::-1]


@dataclass(frozen=True)
class PlannerConfig:
    n_iterations: int = 150_000
    k_parents: int = 10
    goal_bias_period: int = 100
    goal_state: State = field(default_factory=lambda: State([np.pi], [0.0]))
    goal_tolerance: float = 0.1
    init_state: State = field(default_factory=lambda: State([0.0], [0.0]))
    omega_max: float = 25.0
    admissibility_checks: int = 32
    rng_seed: int = 0
    # None: pi / omega_max, so angle and speed are scaled by their sampling half-ranges
    velocity_weight: float | None = None
    nn_index: str = "kdtree"

    def __post_init__(self):
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be non-negative")
        for name in ("k_parents", "goal_bias_period"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.admissibility_checks < 2:
            raise ValueError("admissibility_checks must be at least 2")
        if not self.goal_tolerance > 0:
            raise ValueError("goal_tolerance must be positive")
        if not self.omega_max > 0:
            raise ValueError("omega_max must be positive")
        if self.goal_state.n_dof != self.init_state.n_dof:
            raise ValueError("init and goal states differ in dimension")
        if self.velocity_weight is not None and not self.velocity_weight > 0:
            raise ValueError("velocity_weight must be positive")

    @property
    def metric_weight(self) -> float:
        if self.velocity_weight is None:
            return float(np.pi / self.omega_max)
        return float(self.velocity_weight)


@dataclass
class PlanResult:
    status: str
    roadmap: Roadmap
    solution: Trajectory | None
    extensions_used: int
    nodes_created: int
    goal_node: int | None = None
    interpolation_failures: int = 0
    torque_failures: int = 0
    wall_time: float = 0.0

    @property
    def solved(self) -> bool:
        return self.status == "solved"


@dataclass(frozen=True)
class SampleBounds:
    """Angles over the whole circle, joint speeds within [-omega_max, omega_max]."""

    n_dof: int
    omega_max: float


def sample(bounds: SampleBounds, rng: np.random.Generator) -> State:
    u = rng.random(2 * bounds.n_dof)
    q = wrap_angle(-np.pi + TWO_PI * u[:bounds.n_dof])
    qd = bounds.omega_max * (2.0 * u[bounds.n_dof:] - 1.0)
    return State(q, qd)


def parents(x: State, roadmap: Roadmap, k: int, velocity_weight: float = 1.0) -> list[int]:
    """Ids of the min(k, |V|) nodes closest to ``x``, by distance then id (exhaustive)."""
    dq = np.mod(roadmap.q - x.q + np.pi, TWO_PI) - np.pi
    dv = velocity_weight * (roadmap.qd - x.qd)
    dist = np.sqrt(np.sum(dq * dq, axis=1) + np.sum(dv * dv, axis=1))
    order = np.lexsort((np.arange(dist.shape[0]), dist))
    return [int(i) for i in order[:k]]


def steer(model: DynamicsModel, interp: Interpolator, x: State, x2: State,
          checks: int = 32) -> TrajectorySegment:
    """Interpolate x -> x2 and keep the segment only if its torques are admissible."""
    durations, coeffs, ok = interp.batch(x.q, x.qd, x2.q, x2.qd)
    if not ok[0]:
        raise SteeringFailure("interpolation")
    ratio = float(segment_torque_ratio(model, durations, coeffs, checks)[0])
    if ratio > 1.0:
        raise SteeringFailure("torque", ratio)
    return TrajectorySegment(durations[0], coeffs[0])


def _goal_distance(x: State, goal: State) -> float:
    # unweighted, so goal_tolerance bounds the angle and speed errors alike
    return state_distance(x, goal)


def plan(model: DynamicsModel, interp: Interpolator, config: PlannerConfig,
         progress=None) -> PlanResult:
    """Grow a tree from ``config.init_state`` until a node reaches the goal ball.

    Extensions are numbered from 1; extension i targets the goal when
    i % goal_bias_period == 0 and otherwise a fresh uniform sample (no sample
    is drawn on goal extensions). ``progress``, if given, is called as
    ``progress(iteration, roadmap)`` every 1000 extensions.
    """
    start = time.perf_counter()
    cfg = config
    w = cfg.metric_weight
    roadmap = Roadmap(cfg.init_state)
    index = make_index(cfg.nn_index, roadmap.n_dof, w)
    index.add(cfg.init_state.q, cfg.init_state.qd)
    rng = np.random.default_rng(cfg.rng_seed)
    bounds = SampleBounds(roadmap.n_dof, cfg.omega_max)
    goal = cfg.goal_state

    def finish(status, extensions, goal_node, n_interp, n_torque):
        solution = extract_solution(roadmap, goal_node) if goal_node is not None else None
        return PlanResult(status, roadmap, solution, extensions, roadmap.size - 1, goal_node,
                          n_interp, n_torque, time.perf_counter() - start)

    if _goal_distance(cfg.init_state, goal) <= cfg.goal_tolerance:
        return finish("solved", 0, 0, 0, 0)

    n_interp = n_torque = 0
    for it in range(1, cfg.n_iterations + 1):
        target = goal if it % cfg.goal_bias_period == 0 else sample(bounds, rng)
        ids = index.query(target, cfg.k_parents)
        durations, coeffs, ok = interp.batch(roadmap.q[ids], roadmap.qd[ids], target.q, target.qd)
        n_interp += int(np.count_nonzero(~ok))
        if np.any(ok):
            ratio = np.full(ok.shape, np.inf)
            ratio[ok] = segment_torque_ratio(model, durations[ok], coeffs[ok],
                                             cfg.admissibility_checks)
            accepted = ratio <= 1.0
            n_torque += int(np.count_nonzero(ok & ~accepted))
            if np.any(accepted):
                in_goal = None
                for j in np.flatnonzero(accepted):
                    if interp.exact:
                        new = target
                    else:
                        c = coeffs[j]
                        t = durations[j]
                        new = State(c[:, 0] + t * (c[:, 1] + t * (c[:, 2] + t * c[:, 3])),
                                    c[:, 1] + t * (2.0 * c[:, 2] + 3.0 * t * c[:, 3]))
                    node = roadmap._append(new.q, new.qd, int(ids[j]), it, durations[j], coeffs[j])
                    index.add(new.q, new.qd)
                    if in_goal is None or not interp.exact:
                        in_goal = _goal_distance(new, goal) <= cfg.goal_tolerance
                    if in_goal:
                        return finish("solved", it, node, n_interp, n_torque)
        if progress is not None and it % 1000 == 0:
            progress(it, roadmap)
    return finish("budget_exhausted", cfg.n_iterations, None, n_interp, n_torque)


def extract_solution(roadmap: Roadmap, goal_node: int) -> Trajectory:
    """Concatenate root -> ``goal_node`` segments into one C1 trajectory.

    Positions are unwrapped: each segment is shifted by the multiple of 2*pi
    that makes it start where the previous one ended.
    """
    if not 0 <= goal_node < roadmap.size:
        raise ValueError(f"node {goal_node} not in roadmap")
    path = roadmap.path_to(goal_node)
    segments = []
    end_q = None
    for i in path[1:]:
        seg = roadmap.segment(i)
        if end_q is not None:
            start_q = seg.coeffs[:, 0]
            seg = seg.shifted(TWO_PI * np.round((end_q - start_q) / TWO_PI))
        segments.append(seg)
        end_q = seg.end()[0]
    return Trajectory(segments)


@dataclass(frozen=True)
class VelocityBand:
    max_speed: float
    band: float
    accel_gain: float
    swingup_speed: float
    swingup_speed_8gl: float


def velocity_band_diagnostic(roadmap: Roadmap, model: SinglePendulumModel,
                             T: float) -> VelocityBand:
    """Largest node speed of a 1-DOF roadmap next to the fixed-duration Bezier speed band.

    With accelerations bounded by K * tau_max (K = 1 / inertia) and the
    near-pair Bezier acceleration -6 qd / T, accepted connections between
    nearby states need |qd| <= K T tau_max / 6 (K T^2 tau_max / 6 when written
    with the unit-duration limit -6 qd / T^2; the two agree at T = 1). Both the
    uniform-rod swing-up speed sqrt(6 g / l) and sqrt(8 g / l) are reported.
    """
    K = 1.0 / model.inertia
    return VelocityBand(
        max_speed=float(np.max(np.abs(roadmap.qd))),
        band=K * T * model.tau_max / 6.0,
        accel_gain=K,
        swingup_speed=model.swingup_speed(),
        swingup_speed_8gl=float(np.sqrt(8.0 * model.g / model.length)),
    )


def swing_count(traj: Trajectory, resolution: int = 2000) -> int:
    """Number of velocity sign changes of the first joint along ``traj``."""
    if not traj.segments:
        return 0
    _, qd, _ = traj.eval(np.linspace(0.0, traj.duration, resolution))
    s = np.sign(qd[:, 0])
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def check_tree(roadmap: Roadmap) -> list[str]:
    """Return a list of violated tree invariants (empty when the roadmap is a valid tree)."""
    problems = []
    par = roadmap.parents
    if roadmap.size == 0:
        return ["empty roadmap"]
    if par[0] != -1:
        problems.append("node 0 is not a root")
    roots = np.flatnonzero(par < 0)
    if len(roots) != 1:
        problems.append(f"expected exactly one root, found {len(roots)}")
    bad = np.flatnonzero((par[1:] < 0) | (par[1:] >= np.arange(1, roadmap.size))) + 1
    if len(bad):
        problems.append(f"node {int(bad[0])} has parent {int(par[bad[0]])} not added before it")
    return problems


def band_density_ratio(theta_dot, inner: float = 2.0, outer=(5.0, 15.0)) -> float:
    """Node density (per rad/s of speed range) in |qd| <= inner over that in outer[0] < |qd| < outer[1].

    Returns ``inf`` when the outer band is empty.
    """
    v = np.abs(np.asarray(theta_dot, dtype=float).ravel())
    lo, hi = outer
    d_in = np.count_nonzero(v <= inner) / (2.0 * inner)
    d_out = np.count_nonzero((v > lo) & (v < hi)) / (2.0 * (hi - lo))
    return float("inf") if d_out == 0 else float(d_in / d_out)
