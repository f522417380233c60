"""Pendulum equations of motion M(q) qdd + C(q, qd) qd + g(q) = u under torque bounds.

Both models accept batched inputs: arrays of shape (..., n_dof) broadcast over
the leading axes, which the planner uses to check many torques at once.
Angles are measured from the downward vertical (0 hangs, pi is upright).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .statespace import State, Trajectory

GRAVITY = 9.81


@dataclass(frozen=True)
class TorqueBounds:
    tau_max: np.ndarray

    def __post_init__(self):
        tau = np.atleast_1d(np.asarray(self.tau_max, dtype=float)).copy()
        if not (np.all(np.isfinite(tau)) and np.all(tau > 0.0)):
            raise ValueError(f"torque limits must be positive and finite, got {tau}")
        tau.flags.writeable = False
        object.__setattr__(self, "tau_max", tau)


class DynamicsModel:
    """Fully actuated rigid-body model with per-joint torque limits.

    Subclasses provide ``mass_matrix``, ``bias`` (C(q, qd) qd + g(q)) and
    ``gravity``; forward and inverse dynamics are derived from those.
    """

    n_dof: int
    bounds: TorqueBounds

    def mass_matrix(self, q):
        raise NotImplementedError

    def bias(self, q, qd):
        raise NotImplementedError

    def gravity(self, q):
        raise NotImplementedError

    def inverse_dynamics(self, q, qd, qdd):
        q, qd, qdd = (np.asarray(a, dtype=float) for a in (q, qd, qdd))
        self._check_dims(q, qd, qdd)
        M = self.mass_matrix(q)
        return np.einsum("...ij,...j->...i", M, qdd) + self.bias(q, qd)

    def forward_dynamics(self, q, qd, u):
        q, qd, u = (np.asarray(a, dtype=float) for a in (q, qd, u))
        self._check_dims(q, qd, u)
        M = self.mass_matrix(q)
        if np.any(np.abs(np.linalg.det(M)) < 1e-12):
            raise FloatingPointError("singular mass matrix")
        rhs = u - self.bias(q, qd)
        return np.linalg.solve(M, rhs[..., None])[..., 0]

    def torque_ratio(self, u):
        """max_i |u_i| / tau_max_i over the trailing joint axis."""
        return np.max(np.abs(u) / self.bounds.tau_max, axis=-1)

    def _check_dims(self, *arrays):
        for a in arrays:
            if a.shape[-1:] != (self.n_dof,):
                raise ValueError(f"expected trailing dimension {self.n_dof}, got shape {a.shape}")


class SinglePendulumModel(DynamicsModel):
    """Uniform rod pivoting at one end: (1/3) m l^2 qdd + (1/2) m g l sin(q) = u."""

    n_dof = 1

    def __init__(self, length=0.2, mass=8.0, gravity=GRAVITY, tau_max=5.0):
        if not (length > 0 and mass > 0):
            raise ValueError("length and mass must be positive")
        self.length = float(length)
        self.mass = float(mass)
        self.g = float(gravity)
        self.bounds = TorqueBounds(tau_max)
        if self.bounds.tau_max.shape != (1,):
            raise ValueError("single pendulum takes one torque limit")

    def __repr__(self):
        return (f"SinglePendulumModel(length={self.length}, mass={self.mass}, "
                f"gravity={self.g}, tau_max={self.tau_max})")

    @property
    def tau_max(self) -> float:
        return float(self.bounds.tau_max[0])

    @property
    def inertia(self) -> float:
        return self.mass * self.length ** 2 / 3.0

    @property
    def static_torque(self) -> float:
        """Largest torque needed to hold the pendulum still (at q = +/-pi/2)."""
        return 0.5 * self.mass * self.g * self.length

    def mass_matrix(self, q):
        q = np.asarray(q, dtype=float)
        return np.full(q.shape[:-1] + (1, 1), self.inertia)

    def gravity(self, q):
        return self.static_torque * np.sin(np.asarray(q, dtype=float))

    def bias(self, q, qd):
        return self.gravity(q) + 0.0 * np.asarray(qd)

    # closed forms, cheaper than the generic matrix path
    def inverse_dynamics(self, q, qd, qdd):
        q, qd, qdd = (np.asarray(a, dtype=float) for a in (q, qd, qdd))
        self._check_dims(q, qd, qdd)
        return self.inertia * qdd + self.static_torque * np.sin(q) + 0.0 * qd

    def forward_dynamics(self, q, qd, u):
        q, qd, u = (np.asarray(a, dtype=float) for a in (q, qd, u))
        self._check_dims(q, qd, u)
        return (u - self.static_torque * np.sin(q)) / self.inertia + 0.0 * qd

    def energy(self, q, qd):
        """Total mechanical energy, zero potential at the pivot height."""
        q = np.asarray(q, dtype=float)[..., 0]
        qd = np.asarray(qd, dtype=float)[..., 0]
        return 0.5 * self.inertia * qd ** 2 - self.static_torque * np.cos(q)

    def swingup_speed(self) -> float:
        """Speed at the bottom whose kinetic energy lifts the rod to upright, sqrt(6 g / l)."""
        return float(np.sqrt(6.0 * self.g / self.length))


class DoublePendulumModel(DynamicsModel):
    """Two planar links of equal mass and length, q2 measured relative to link 1.

    The inertia and Coriolis terms are those of uniform rods. By default the
    gravity vector is (m g l / 2) [sin q1 + sin(q1 + q2), sin(q1 + q2)], whose
    Lipschitz constant stays below 2 m g l. ``rod_gravity=True`` switches to the
    exact uniform-rod gravity, (m g l / 2) [3 sin q1 + sin(q1 + q2), sin(q1 + q2)],
    whose Lipschitz constant is (5 + sqrt(13)) / 4 * m g l (about 2.15 m g l).
    """

    n_dof = 2

    def __init__(self, length=1.0, mass=1.0, gravity=GRAVITY, tau_max=(10.0, 10.0),
                 rod_gravity=False):
        if not (length > 0 and mass > 0):
            raise ValueError("length and mass must be positive")
        self.length = float(length)
        self.mass = float(mass)
        self.g = float(gravity)
        self.rod_gravity = bool(rod_gravity)
        self.bounds = TorqueBounds(np.broadcast_to(np.asarray(tau_max, dtype=float), (2,)))

    def __repr__(self):
        return (f"DoublePendulumModel(length={self.length}, mass={self.mass}, gravity={self.g}, "
                f"rod_gravity={self.rod_gravity})")

    def mass_matrix(self, q):
        q = np.asarray(q, dtype=float)
        ml2 = self.mass * self.length ** 2
        c2 = np.cos(q[..., 1])
        M = np.empty(q.shape[:-1] + (2, 2))
        M[..., 0, 0] = ml2 * (5.0 / 3.0 + c2)
        M[..., 0, 1] = M[..., 1, 0] = ml2 * (1.0 / 3.0 + 0.5 * c2)
        M[..., 1, 1] = ml2 / 3.0
        return M

    def coriolis_matrix(self, q, qd):
        q = np.asarray(q, dtype=float)
        qd = np.asarray(qd, dtype=float)
        h = 0.5 * self.mass * self.length ** 2 * np.sin(q[..., 1])
        C = np.empty(np.broadcast_shapes(q.shape, qd.shape)[:-1] + (2, 2))
        C[..., 0, 0] = -h * qd[..., 1]
        C[..., 0, 1] = -h * (qd[..., 0] + qd[..., 1])
        C[..., 1, 0] = h * qd[..., 0]
        C[..., 1, 1] = 0.0
        return C

    def gravity(self, q):
        q = np.asarray(q, dtype=float)
        k = 0.5 * self.mass * self.g * self.length
        s12 = np.sin(q[..., 0] + q[..., 1])
        first = (3.0 if self.rod_gravity else 1.0) * np.sin(q[..., 0])
        return k * np.stack([first + s12, s12], axis=-1)

    def bias(self, q, qd):
        C = self.coriolis_matrix(q, qd)
        return np.einsum("...ij,...j->...i", C, np.asarray(qd, dtype=float)) + self.gravity(q)

    def energy(self, q, qd):
        q = np.asarray(q, dtype=float)
        qd = np.asarray(qd, dtype=float)
        kinetic = 0.5 * np.einsum("...i,...ij,...j->...", qd, self.mass_matrix(q), qd)
        k = 0.5 * self.mass * self.g * self.length
        potential = -k * ((3.0 if self.rod_gravity else 1.0) * np.cos(q[..., 0])
                          + np.cos(q[..., 0] + q[..., 1]))
        return kinetic + potential


def forward_dynamics(model: DynamicsModel, x: State, u) -> np.ndarray:
    return model.forward_dynamics(x.q, x.qd, np.atleast_1d(np.asarray(u, dtype=float)))


def inverse_dynamics(model: DynamicsModel, q, qd, qdd) -> np.ndarray:
    return model.inverse_dynamics(np.atleast_1d(q), np.atleast_1d(qd), np.atleast_1d(qdd))


def segment_torque_ratio(model: DynamicsModel, durations, coeffs, n_checks: int) -> np.ndarray:
    """Max torque ratio along a batch of polynomial segments.

    ``durations`` has shape (k,) and ``coeffs`` shape (k, n, 4). Torques are
    evaluated at ``n_checks`` uniformly spaced times per segment, endpoints included.
    """
    if n_checks < 2:
        raise ValueError("n_checks must be at least 2")
    durations = np.asarray(durations, dtype=float)
    s = np.linspace(0.0, 1.0, n_checks)
    t = durations[:, None] * s[None, :]                       # (k, m)
    c = np.asarray(coeffs, dtype=float)[:, None, :, :]         # (k, 1, n, 4)
    t3 = t[..., None]
    q = c[..., 0] + t3 * (c[..., 1] + t3 * (c[..., 2] + t3 * c[..., 3]))
    qd = c[..., 1] + t3 * (2.0 * c[..., 2] + 3.0 * t3 * c[..., 3])
    qdd = 2.0 * c[..., 2] + 6.0 * t3 * c[..., 3]
    u = model.inverse_dynamics(q, qd, qdd)
    return np.max(model.torque_ratio(u), axis=-1)


def is_admissible(model: DynamicsModel, traj: Trajectory, n_checks: int = 32):
    """Check |u_i(t)| <= tau_max_i at ``n_checks`` samples per segment.

    Returns ``(admissible, max_ratio)``. An empty trajectory is trivially
    admissible with ratio 0.
    """
    if n_checks < 2:
        raise ValueError("n_checks must be at least 2")
    if not traj.segments:
        return True, 0.0
    durations = np.array([s.duration for s in traj.segments])
    coeffs = np.stack([s.coeffs for s in traj.segments])
    ratio = float(np.max(segment_torque_ratio(model, durations, coeffs, n_checks)))
    return ratio <= 1.0, ratio


@dataclass(frozen=True)
class Samples:
    """States recorded at RK4 step boundaries."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray

    def final_state(self) -> State:
        return State(self.q[-1], self.qd[-1])


def integrate(model: DynamicsModel, x0, u: Callable[[float], np.ndarray],
              dt_max: float, T: float, t0: float = 0.0) -> Samples:
    """Classic RK4 on qdd = f(q, qd, u(t)) with equal steps no longer than ``dt_max``.

    ``x0`` is a State or a ``(q, qd)`` pair; ``u`` is called with absolute time
    ``t0 + s``. Positions are not wrapped.
    """
    if not (T > 0 and dt_max > 0):
        raise ValueError("T and dt_max must be positive")
    n_steps = int(np.ceil(T / dt_max - 1e-12))
    h = T / n_steps
    n = model.n_dof
    ts = t0 + h * np.arange(n_steps + 1)
    qs = np.empty((n_steps + 1, n))
    vs = np.empty((n_steps + 1, n))
    q0, v0 = (x0.q, x0.qd) if isinstance(x0, State) else x0
    q = np.array(q0, dtype=float)
    v = np.array(v0, dtype=float)
    qs[0], vs[0] = q, v

    def accel(t, q, v):
        return model.forward_dynamics(q, v, np.atleast_1d(np.asarray(u(t), dtype=float)))

    for i in range(n_steps):
        t = ts[i]
        a1 = accel(t, q, v)
        q2, v2 = q + 0.5 * h * v, v + 0.5 * h * a1
        a2 = accel(t + 0.5 * h, q2, v2)
        q3, v3 = q + 0.5 * h * v2, v + 0.5 * h * a2
        a3 = accel(t + 0.5 * h, q3, v3)
        q4, v4 = q + h * v3, v + h * a3
        a4 = accel(t + h, q4, v4)
        q = q + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v = v + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise FloatingPointError(f"non-finite state at t={ts[i + 1]:.6g}")
        qs[i + 1], vs[i + 1] = q, v
    return Samples(ts, qs, vs)


def replay(model: DynamicsModel, traj: Trajectory, dt_max: float = 1e-3) -> Samples:
    """Integrate the inverse-dynamics control of ``traj`` open loop from its start state.

    Steps are aligned with segment boundaries so each RK4 step sees a smooth control.
    """
    x = traj.start_state()
    parts = []
    for seg, t0 in zip(traj.segments, traj.knots):
        def control(t, seg=seg, t0=t0):
            q, qd, qdd = seg.evaluate(t - t0)
            return model.inverse_dynamics(q, qd, qdd)
        part = integrate(model, x, control, dt_max, seg.duration, t0=t0)
        # carry the unwrapped end state into the next segment
        x = (part.q[-1], part.qd[-1])
        parts.append(part if not parts else Samples(part.t[1:], part.q[1:], part.qd[1:]))
    return Samples(np.concatenate([p.t for p in parts]),
                   np.concatenate([p.q for p in parts]),
                   np.concatenate([p.qd for p in parts]))


@dataclass(frozen=True)
class LipschitzEstimate:
    K: float
    sample_count: int
    max_separation: float | None


def estimate_lipschitz(fn: Callable, low, high, n_samples: int, seed: int = 0,
                       max_separation: float | None = None) -> LipschitzEstimate:
    """Sample-based lower bound on the Lipschitz constant of ``fn`` over a box.

    ``fn`` maps an (N, d) array of points to an (N, k) array. Pairs are drawn
    uniformly in the box; with ``max_separation`` the second point of each pair
    lies within that Euclidean distance of the first (and is clipped to the box).
    Pair i depends only on the seed and i, so K never decreases with n_samples.
    """
    low = np.atleast_1d(np.asarray(low, dtype=float))
    high = np.atleast_1d(np.asarray(high, dtype=float))
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if low.shape != high.shape or np.any(high <= low):
        raise ValueError("degenerate sampling box")
    d = low.shape[0]
    rng = np.random.default_rng(seed)
    draws = rng.random((n_samples, 3, d))
    a = low + draws[:, 0] * (high - low)
    if max_separation is None:
        b = low + draws[:, 1] * (high - low)
    else:
        direction = draws[:, 1] - 0.5
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        b = np.clip(a + direction * (max_separation * draws[:, 2, :1]), low, high)
    sep = np.linalg.norm(a - b, axis=1)
    keep = sep > 0
    fa = np.asarray(fn(a[keep])).reshape(np.count_nonzero(keep), -1)
    fb = np.asarray(fn(b[keep])).reshape(np.count_nonzero(keep), -1)
    ratios = np.linalg.norm(fa - fb, axis=1) / sep[keep]
    return LipschitzEstimate(float(np.max(ratios)), n_samples, max_separation)


def sample_matrix_norms(fn: Callable, low, high, n_samples: int, seed: int = 0) -> np.ndarray:
    """Spectral norms of ``fn(q)`` (an (N, k, k) batch) at uniform random points of a box."""
    low = np.atleast_1d(np.asarray(low, dtype=float))
    high = np.atleast_1d(np.asarray(high, dtype=float))
    if np.any(high <= low):
        raise ValueError("degenerate sampling box")
    rng = np.random.default_rng(seed)
    pts = low + rng.random((n_samples, low.shape[0])) * (high - low)
    return np.linalg.norm(fn(pts), ord=2, axis=(-2, -1))
