"""States, polynomial trajectories and the state-space metric.

Angles are revolute and stored wrapped to (-pi, pi]. Trajectory positions are
kept *unwrapped* so that consecutive segments join continuously even when a
motion crosses the +/-pi seam; wrap them yourself when you need canonical
coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi

# position and velocity mismatch allowed at trajectory knots
KNOT_TOL = 1e-9


def wrap_angle(theta):
    """Map angles (scalar or array) to (-pi, pi], with -pi sent to +pi."""
    arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot wrap a non-finite angle")
    out = np.pi - np.mod(np.pi - arr, TWO_PI)
    if np.ndim(out) == 0:
        return float(out)
    return out


def angle_diff(a, b):
    """Shortest signed angular displacement from ``a`` to ``b``."""
    return wrap_angle(np.asarray(b, dtype=float) - np.asarray(a, dtype=float))


@dataclass(frozen=True)
class State:
    """Point (q, qd) of the 2n-dimensional state space."""

    q: np.ndarray
    qd: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float)).copy()
        qd = np.atleast_1d(np.asarray(self.qd, dtype=float)).copy()
        if q.ndim != 1 or q.shape != qd.shape:
            raise ValueError(f"q and qd must be equal-length vectors, got {q.shape} and {qd.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
            raise ValueError("state components must be finite")
        q = np.atleast_1d(wrap_angle(q))
        q.flags.writeable = False
        qd.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qd", qd)

    @classmethod
    def from_array(cls, x: Sequence[float]) -> State:
        x = np.asarray(x, dtype=float)
        n = x.shape[0] // 2
        return cls(x[:n], x[n:])

    @property
    def n_dof(self) -> int:
        return self.q.shape[0]

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.qd])

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return np.array_equal(self.q, other.q) and np.array_equal(self.qd, other.qd)

    def __hash__(self):
        return hash((self.q.tobytes(), self.qd.tobytes()))

    def __repr__(self):
        return f"State(q={self.q.tolist()}, qd={self.qd.tolist()})"


def state_distance(a: State, b: State, velocity_weight: float = 1.0) -> float:
    """Euclidean distance on (wrapped angle difference, weighted velocity difference)."""
    if a.n_dof != b.n_dof:
        raise ValueError(f"dimension mismatch: {a.n_dof} vs {b.n_dof}")
    dq = angle_diff(a.q, b.q)
    dv = velocity_weight * (b.qd - a.qd)
    return float(np.sqrt(np.sum(dq * dq) + np.sum(dv * dv)))


def state_distances(q, qd, x: State, velocity_weight: float = 1.0) -> np.ndarray:
    """Distances from many states, given as (N, n) position/velocity arrays, to ``x``."""
    dq = np.mod(np.asarray(q) - x.q + np.pi, TWO_PI) - np.pi
    dv = velocity_weight * (np.asarray(qd) - x.qd)
    return np.sqrt(np.sum(dq * dq, axis=-1) + np.sum(dv * dv, axis=-1))


def _poly_eval(coeffs: np.ndarray, t: np.ndarray):
    # coeffs (..., n, 4) ascending powers; t broadcastable to leading dims
    c0, c1, c2, c3 = (coeffs[..., i] for i in range(4))
    t = np.asarray(t, dtype=float)[..., None]
    q = c0 + t * (c1 + t * (c2 + t * c3))
    qd = c1 + t * (2.0 * c2 + 3.0 * t * c3)
    qdd = 2.0 * c2 + 6.0 * t * c3
    return q, qd, qdd


@dataclass(frozen=True)
class TrajectorySegment:
    """Cubic (or lower) polynomial per joint on local time [0, duration].

    ``coeffs[j, i]`` multiplies ``t**i`` in the position of joint ``j``.
    """

    duration: float
    coeffs: np.ndarray

    def __post_init__(self):
        d = float(self.duration)
        if not (np.isfinite(d) and d > 0.0):
            raise ValueError(f"segment duration must be positive and finite, got {self.duration}")
        c = np.array(self.coeffs, dtype=float)
        if c.ndim == 1:
            c = c[None, :]
        if c.ndim != 2 or c.shape[1] > 4:
            raise ValueError(f"coeffs must have shape (n_dof, <=4), got {c.shape}")
        if c.shape[1] < 4:
            c = np.pad(c, ((0, 0), (0, 4 - c.shape[1])))
        if not np.all(np.isfinite(c)):
            raise ValueError("segment coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "duration", d)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_dof(self) -> int:
        return self.coeffs.shape[0]

    def evaluate(self, t):
        """Return (q, qd, qdd) at local time(s) ``t``; arrays gain a trailing joint axis."""
        return _poly_eval(self.coeffs, t)

    def shifted(self, offset) -> TrajectorySegment:
        """Same motion with positions offset by ``offset`` (e.g. a multiple of 2*pi)."""
        c = self.coeffs.copy()
        c[:, 0] += offset
        return TrajectorySegment(self.duration, c)

    def start(self):
        q, qd, _ = self.evaluate(0.0)
        return q, qd

    def end(self):
        q, qd, _ = self.evaluate(self.duration)
        return q, qd


class Trajectory:
    """Ordered, C1-continuous sequence of segments."""

    def __init__(self, segments: Iterable[TrajectorySegment] = ()):
        self.segments = tuple(segments)
        if self.segments:
            n = self.segments[0].n_dof
            if any(s.n_dof != n for s in self.segments):
                raise ValueError("all segments must have the same number of joints")
        for k, (left, right) in enumerate(zip(self.segments, self.segments[1:])):
            ql, vl = left.end()
            qr, vr = right.start()
            if np.max(np.abs(ql - qr)) > KNOT_TOL or np.max(np.abs(vl - vr)) > KNOT_TOL:
                raise ValueError(f"trajectory is not C1 at knot {k + 1}")
        self.knots = np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    def __len__(self):
        return len(self.segments)

    def __repr__(self):
        return f"Trajectory({len(self.segments)} segments, duration={self.duration:.6g})"

    @property
    def duration(self) -> float:
        return float(self.knots[-1])

    @property
    def n_dof(self) -> int:
        if not self.segments:
            raise ValueError("empty trajectory")
        return self.segments[0].n_dof

    def _locate(self, t: np.ndarray):
        # knots belong to the left segment
        idx = np.searchsorted(self.knots, t, side="left") - 1
        idx = np.clip(idx, 0, len(self.segments) - 1)
        return idx, t - self.knots[idx]

    def eval(self, t):
        """Position, velocity and acceleration at global time(s) ``t``."""
        if not self.segments:
            raise ValueError("cannot evaluate an empty trajectory")
        ts = np.asarray(t, dtype=float)
        if np.any(ts < 0.0) or np.any(ts > self.duration) or not np.all(np.isfinite(ts)):
            raise ValueError(f"time outside [0, {self.duration}]")
        idx, local = self._locate(np.atleast_1d(ts))
        coeffs = np.stack([s.coeffs for s in self.segments])[idx]
        q, qd, qdd = _poly_eval(coeffs, local)
        if ts.ndim == 0:
            return q[0], qd[0], qdd[0]
        return q, qd, qdd

    def start_state(self) -> State:
        q, qd = self.segments[0].start()
        return State(q, qd)

    def end_state(self) -> State:
        q, qd = self.segments[-1].end()
        return State(q, qd)

    def concatenate(self, other: Trajectory) -> Trajectory:
        return Trajectory(self.segments + other.segments)


def evaluate(traj: Trajectory, t):
    return traj.eval(t)


def dist_to_trajectory(x: State, traj: Trajectory, resolution: int | None = None,
                       velocity_weight: float = 1.0) -> float:
    """Grid approximation of min_t ||(gamma, gamma_dot)(t) - x||.

    The grid has ``resolution`` uniformly spaced times (default 200 per
    segment), so the result upper-bounds the continuous minimum.
    """
    if not traj.segments:
        raise ValueError("distance to an empty trajectory is undefined")
    if resolution is None:
        resolution = 200 * len(traj)
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    ts = np.linspace(0.0, traj.duration, resolution)
    q, qd, _ = traj.eval(ts)
    return float(np.min(state_distances(q, qd, x, velocity_weight)))


def difference_quotient_gap(g: Callable, dg: Callable, t, t2) -> np.ndarray:
    """|g'(t) - (g(t2) - g(t)) / (t2 - t)|, the error of a one-sided difference quotient.

    For g with K-Lipschitz derivative this is at most K/2 * |t2 - t|.
    """
    t = np.asarray(t, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    quotient = (np.asarray(g(t2)) - np.asarray(g(t))) / (t2 - t)
    gap = np.asarray(dg(t)) - quotient
    if gap.ndim > t.ndim:
        return np.linalg.norm(gap, axis=-1)
    return np.abs(gap)
