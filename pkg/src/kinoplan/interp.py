"""State-to-state interpolation: Bezier (fixed duration), SOC1 and quadratic.

Every interpolator exposes two entry points:

* ``interpolate(x, x2)`` returns a single-segment :class:`Trajectory` or raises
  :class:`InterpolationError` when the pair cannot be connected;
* ``batch(q, qd, q2, qd2)`` works on (k, n) arrays and returns
  ``(durations, coeffs, ok)`` so the planner can try k parents at once.

Position differences are always taken as wrapped angle differences, so a
connection never winds more than half a turn unless explicitly allowed.
"""

from __future__ import annotations

import numpy as np

from .statespace import TWO_PI, State, Trajectory, TrajectorySegment


class InterpolationError(ValueError):
    """The interpolator cannot connect this pair of states."""


def _wrapped_delta(q, q2):
    return np.pi - np.mod(np.pi - (q2 - q), TWO_PI)


def _as_batch(q, qd, q2, qd2):
    arrays = [np.atleast_2d(np.asarray(a, dtype=float)) for a in (q, qd, q2, qd2)]
    shape = np.broadcast_shapes(*(a.shape for a in arrays))
    return [np.broadcast_to(a, shape) for a in arrays]


class Interpolator:
    name = "interpolator"
    #: True when the trajectory ends exactly at the requested target state
    exact = True

    def batch(self, q, qd, q2, qd2):
        raise NotImplementedError

    def interpolate(self, x: State, x2: State) -> Trajectory:
        if x.n_dof != x2.n_dof:
            raise ValueError("dimension mismatch")
        durations, coeffs, ok = self.batch(x.q, x.qd, x2.q, x2.qd)
        if not ok[0]:
            raise InterpolationError(f"{self.name} cannot connect {x} to {x2}")
        return Trajectory([TrajectorySegment(durations[0], coeffs[0])])

    def params(self) -> dict:
        return {"interp": self.name}


class BezierInterpolator(Interpolator):
    """Cubic Hermite curve of fixed duration T matching both end states.

    B(t) = q + qd t + (3 dq - T (2 qd + qd2)) / T^2 t^2 + (-2 dq + T (qd + qd2)) / T^3 t^3,
    so that B(0) = q, B'(0) = qd, B(T) = q2 and B'(T) = qd2. It never fails.
    """

    name = "bezier"

    def __init__(self, duration: float = 1.0):
        if not duration > 0:
            raise ValueError("Bezier duration must be positive")
        self.duration = float(duration)

    def __repr__(self):
        return f"BezierInterpolator(duration={self.duration})"

    def params(self):
        return {"interp": self.name, "bezier_T": self.duration}

    def batch(self, q, qd, q2, qd2):
        q, qd, q2, qd2 = _as_batch(q, qd, q2, qd2)
        T = self.duration
        dq = _wrapped_delta(q, q2)
        coeffs = np.stack([
            q,
            qd,
            (3.0 * dq - T * (2.0 * qd + qd2)) / T ** 2,
            (-2.0 * dq + T * (qd + qd2)) / T ** 3,
        ], axis=-1)
        k = q.shape[0]
        return np.full(k, T), coeffs, np.ones(k, dtype=bool)


class SOC1Interpolator(Interpolator):
    """Constant-acceleration curve for one joint, lasting dq / mean(qd, qd2).

    C(t) = q + qd t + (qd2 - qd) / (2 dt) t^2 with dt = dq / ((qd + qd2) / 2).
    The pair is rejected when dt is not in (0, dt_cap] or when the mean
    velocity is below ``eps_v``. By default ``dq`` is the wrapped difference in
    (-pi, pi]; with ``long_way=True`` the complementary displacement
    ``dq -/+ 2 pi`` is used when it is the one that agrees with the mean velocity.
    """

    name = "soc1"

    def __init__(self, eps_v: float = 1e-3, dt_cap: float = 1.0, long_way: bool = False):
        self.eps_v = float(eps_v)
        self.dt_cap = float(dt_cap)
        self.long_way = bool(long_way)

    def __repr__(self):
        return f"SOC1Interpolator(eps_v={self.eps_v}, dt_cap={self.dt_cap}, long_way={self.long_way})"

    def params(self):
        return {"interp": self.name, "soc1_dt_cap": self.dt_cap, "soc1_long_way": self.long_way}

    def displacement(self, q, qd, q2, qd2):
        dq = _wrapped_delta(q, q2)
        vavg = 0.5 * (qd + qd2)
        if self.long_way:
            flip = (dq * vavg < 0.0)
            dq = np.where(flip, dq - np.sign(dq) * TWO_PI, dq)
        return dq, vavg

    def batch(self, q, qd, q2, qd2):
        q, qd, q2, qd2 = _as_batch(q, qd, q2, qd2)
        if q.shape[-1] != 1:
            raise ValueError("SOC1 interpolation only applies to one degree of freedom")
        dq, vavg = self.displacement(q, qd, q2, qd2)
        dq, vavg = dq[:, 0], vavg[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            dt = dq / vavg
        ok = (np.abs(vavg) >= self.eps_v) & (dt > 0.0) & (dt <= self.dt_cap)
        dt = np.where(ok, dt, 1.0)
        accel = (qd2[:, 0] - qd[:, 0]) / dt
        zeros = np.zeros_like(dt)
        coeffs = np.stack([q[:, 0], qd[:, 0], 0.5 * accel, zeros], axis=-1)[:, None, :]
        return dt, coeffs, ok


class QuadraticInterpolator(Interpolator):
    """n-DOF quadratic reaching q2 after dt_disc = |dq| / |qd| with acceleration dqd / dt_disc.

    gamma(t) = q + (dq / dt - dqd / 2) t + dqd / (2 dt) t^2. The end position is
    exact but the end velocity is dq / dt + dqd / 2, which matches qd2 only
    approximately, so ``exact`` is False.
    """

    name = "quad"
    exact = False

    def __init__(self, eps_v: float = 1e-3, eps_q: float = 1e-6, dt_cap: float = 1.0):
        self.eps_v = float(eps_v)
        self.eps_q = float(eps_q)
        self.dt_cap = float(dt_cap)

    def __repr__(self):
        return f"QuadraticInterpolator(eps_v={self.eps_v}, eps_q={self.eps_q}, dt_cap={self.dt_cap})"

    def batch(self, q, qd, q2, qd2):
        q, qd, q2, qd2 = _as_batch(q, qd, q2, qd2)
        dq = _wrapped_delta(q, q2)
        dv = qd2 - qd
        speed = np.linalg.norm(qd, axis=-1)
        dist = np.linalg.norm(dq, axis=-1)
        ok = (speed >= self.eps_v) & (dist >= self.eps_q)
        with np.errstate(divide="ignore", invalid="ignore"):
            dt = np.where(ok, dist / speed, 1.0)
        ok &= dt <= self.dt_cap
        dt = np.where(ok, dt, 1.0)
        coeffs = np.stack([
            q,
            dq / dt[:, None] - 0.5 * dv,
            dv / (2.0 * dt[:, None]),
            np.zeros_like(q),
        ], axis=-1)
        return dt, coeffs, ok


def bezier_interpolate(x: State, x2: State, T: float = 1.0) -> Trajectory:
    return BezierInterpolator(T).interpolate(x, x2)


def soc1_interpolate(x: State, x2: State, **kwargs) -> Trajectory:
    return SOC1Interpolator(**kwargs).interpolate(x, x2)


def quad_interpolate(x: State, x2: State, **kwargs) -> Trajectory:
    return QuadraticInterpolator(**kwargs).interpolate(x, x2)


def make_interpolator(name: str, bezier_T: float = 1.0, **kwargs) -> Interpolator:
    if name == "bezier":
        return BezierInterpolator(bezier_T)
    if name == "soc1":
        return SOC1Interpolator(**kwargs)
    if name == "quad":
        return QuadraticInterpolator(**kwargs)
    raise ValueError(f"unknown interpolator {name!r} (expected bezier, soc1 or quad)")
