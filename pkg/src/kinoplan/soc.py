"""Numeric check of second-order continuity (SOC) for an interpolator.

For shrinking pair separations s, :func:`verify_soc` measures two ratios over
random state pairs (x, x2) with |x2 - x| = s:

* local boundedness: max_t |(gamma(t), gamma'(t)) - x| / |dx|
* discrete-acceleration convergence: max_t |gamma''(t) - dqd / dt_disc| / |dx|,
  with dt_disc = |dq| / |qd|.

An SOC interpolator keeps both ratios bounded as s -> 0, so the unnormalized
acceleration residual vanishes linearly in s. Boundedness is judged from the
Theil-Sen slope of log(ratio) against log(1/s).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import theilslopes

from .interp import Interpolator
from .statespace import TWO_PI

DEFAULT_SCALES = (0.1, 0.05, 0.02, 0.01, 0.005)

# ratios and residuals below this are treated as exact zeros
EXACT_TOL = 1e-9


@dataclass(frozen=True)
class Region:
    """Box of start states: angles in [q_low, q_high], per-joint speeds in [speed_min, speed_max]."""

    q_low: tuple
    q_high: tuple
    speed_min: float = 0.5
    speed_max: float = 20.0

    @classmethod
    def pendulum(cls, speed_min=0.5, speed_max=20.0, n_dof=1):
        return cls((-np.pi,) * n_dof, (np.pi,) * n_dof, speed_min, speed_max)

    @property
    def n_dof(self) -> int:
        return len(self.q_low)


@dataclass
class SOCReport:
    interpolator: str
    eta_hat: float
    nu_hat: float
    residual_floor: float
    passed: bool
    samples: int
    scales: tuple
    seed: int
    eta_growth: float = float("nan")
    nu_growth: float = float("nan")
    residual_tolerance: float = float("nan")
    inconclusive: bool = False
    eta_by_scale: list = field(default_factory=list)
    nu_by_scale: list = field(default_factory=list)
    residual_by_scale: list = field(default_factory=list)
    connected_by_scale: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_text(self) -> str:
        verdict = "INCONCLUSIVE" if self.inconclusive else ("PASS" if self.passed else "FAIL")
        lines = [
            f"SOC verification for {self.interpolator}: {verdict}",
            f"  eta_hat (local boundedness)        = {self.eta_hat:.6g}  growth exponent {self.eta_growth:+.3f}",
            f"  nu_hat  (discrete-accel. residual) = {self.nu_hat:.6g}  growth exponent {self.nu_growth:+.3f}",
            f"  residual floor at s={self.scales[-1]:g}         = {self.residual_floor:.6g}"
            f"  (tolerance {self.residual_tolerance:.3g})",
            f"  pairs evaluated = {self.samples}, seed = {self.seed}",
            "  scale      eta        nu         residual   connected",
        ]
        for row in zip(self.scales, self.eta_by_scale, self.nu_by_scale,
                       self.residual_by_scale, self.connected_by_scale):
            s, e, n, r, c = row
            lines.append(f"  {s:<10g} {e:<10.4g} {n:<10.4g} {r:<10.4g} {c}")
        return "\n".join(lines) + "\n"

    def to_kv(self) -> str:
        items = {
            "interpolator": self.interpolator,
            "eta_hat": repr(self.eta_hat),
            "nu_hat": repr(self.nu_hat),
            "residual_floor": repr(self.residual_floor),
            "pass": str(self.passed).lower(),
            "inconclusive": str(self.inconclusive).lower(),
            "samples": str(self.samples),
            "scales": ",".join(repr(float(s)) for s in self.scales),
            "seed": str(self.seed),
            "eta_growth": repr(self.eta_growth),
            "nu_growth": repr(self.nu_growth),
            "residual_tolerance": repr(self.residual_tolerance),
        }
        items.update({k: str(v) for k, v in self.extra.items()})
        return "".join(f"{k} = {v}\n" for k, v in items.items())

    @classmethod
    def from_kv(cls, text: str) -> SOCReport:
        kv = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                key, _, value = line.partition("=")
                kv[key.strip()] = value.strip()
        return cls(
            interpolator=kv["interpolator"],
            eta_hat=float(kv["eta_hat"]),
            nu_hat=float(kv["nu_hat"]),
            residual_floor=float(kv["residual_floor"]),
            passed=kv["pass"] == "true",
            samples=int(kv["samples"]),
            scales=tuple(float(s) for s in kv["scales"].split(",")),
            seed=int(kv["seed"]),
            eta_growth=float(kv.get("eta_growth", "nan")),
            nu_growth=float(kv.get("nu_growth", "nan")),
            residual_tolerance=float(kv.get("residual_tolerance", "nan")),
            inconclusive=kv.get("inconclusive", "false") == "true",
        )


def _draw_pairs(region: Region, pairs: int, rng, mode: str, accel_max: float):
    """Per-pair random draws shared by every scale (common random numbers)."""
    n = region.n_dof
    lo = np.asarray(region.q_low, dtype=float)
    hi = np.asarray(region.q_high, dtype=float)
    q = lo + rng.random((pairs, n)) * (hi - lo)
    speed = region.speed_min + rng.random((pairs, n)) * (region.speed_max - region.speed_min)
    qd = np.where(rng.random((pairs, n)) < 0.5, -speed, speed)
    if mode == "arc":
        direction = rng.normal(size=(pairs, n))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        magnitude = accel_max * (0.1 + 0.9 * rng.random((pairs, 1)))
        aux = direction * magnitude
    elif mode == "isotropic":
        aux = rng.normal(size=(pairs, 2 * n))
        aux /= np.linalg.norm(aux, axis=1, keepdims=True)
    else:
        raise ValueError(f"unknown pair mode {mode!r} (expected 'arc' or 'isotropic')")
    return q, qd, aux


def _arc_duration(qd, a, s, iters=80):
    """Smallest-bracket root tau of |(qd tau + a tau^2 / 2, a tau)| = s, by bisection."""
    lo = np.zeros(qd.shape[0])
    hi = s / np.linalg.norm(a, axis=1)

    def size(tau):
        t = tau[:, None]
        return np.sqrt(np.sum((qd * t + 0.5 * a * t * t) ** 2, axis=1) + np.sum((a * t) ** 2, axis=1))

    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        big = size(mid) > s
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
    return 0.5 * (lo + hi)


def _targets(q, qd, aux, s, mode):
    n = q.shape[1]
    if mode == "arc":
        tau = _arc_duration(qd, aux, s)[:, None]
        dq = qd * tau + 0.5 * aux * tau * tau
        dv = aux * tau
    else:
        dq = s * aux[:, :n]
        dv = s * aux[:, n:]
    q2 = np.pi - np.mod(np.pi - (q + dq), TWO_PI)
    return q2, qd + dv


def _growth(scales, values):
    values = np.asarray(values, dtype=float)
    if np.all(values <= EXACT_TOL):
        return 0.0
    x = np.log(1.0 / np.asarray(scales, dtype=float))
    y = np.log(np.maximum(values, EXACT_TOL))
    return float(theilslopes(y, x)[0])


def verify_soc(interp: Interpolator, region: Region | None = None, scales=DEFAULT_SCALES,
               pairs_per_scale: int = 200, seed: int = 0, pair_mode: str = "arc",
               accel_max: float = 10.0, n_times: int = 65, slope_tol: float = 0.1) -> SOCReport:
    """Estimate the local-boundedness and discrete-acceleration constants of ``interp``.

    ``pair_mode="arc"`` places x2 on a constant-acceleration arc leaving x
    (acceleration magnitude up to ``accel_max``), which is how pairs look when
    both lie near a smooth trajectory. ``"isotropic"`` displaces x in a
    uniformly random state-space direction instead.
    """
    region = region or Region.pendulum()
    scales = tuple(float(s) for s in scales)
    if len(scales) < 2 or any(b >= a for a, b in zip(scales, scales[1:])) or scales[-1] <= 0:
        raise ValueError("scales must be positive and strictly decreasing")
    if pairs_per_scale < 10:
        raise ValueError("pairs_per_scale must be at least 10")

    rng = np.random.default_rng(seed)
    q, qd, aux = _draw_pairs(region, pairs_per_scale, rng, pair_mode, accel_max)
    grid = np.linspace(0.0, 1.0, n_times)

    eta_s, nu_s, res_s, conn_s = [], [], [], []
    total = 0
    for s in scales:
        q2, qd2 = _targets(q, qd, aux, s, pair_mode)
        durations, coeffs, ok = interp.batch(q, qd, q2, qd2)
        dq = np.pi - np.mod(np.pi - (q2 - q), TWO_PI)
        dv = qd2 - qd
        dx = np.sqrt(np.sum(dq ** 2, axis=1) + np.sum(dv ** 2, axis=1))
        dq_norm = np.linalg.norm(dq, axis=1)
        ok = ok & (dq_norm > 0)
        conn_s.append(int(np.count_nonzero(ok)))
        if not np.any(ok):
            eta_s.append(float("nan"))
            nu_s.append(float("nan"))
            res_s.append(float("nan"))
            continue
        total += int(np.count_nonzero(ok))
        d, c = durations[ok], coeffs[ok]
        t = (d[:, None] * grid[None, :])[..., None]                      # (P, m, 1)
        cc = c[:, None, :, :]
        g = cc[..., 0] + t * (cc[..., 1] + t * (cc[..., 2] + t * cc[..., 3]))
        gd = cc[..., 1] + t * (2.0 * cc[..., 2] + 3.0 * t * cc[..., 3])
        gdd = 2.0 * cc[..., 2] + 6.0 * t * cc[..., 3]

        x_q, x_v = q[ok][:, None, :], qd[ok][:, None, :]
        off_q = np.mod(g - x_q + np.pi, TWO_PI) - np.pi
        spread = np.sqrt(np.sum(off_q ** 2, axis=-1) + np.sum((gd - x_v) ** 2, axis=-1)).max(axis=1)

        dt_disc = dq_norm[ok] / np.linalg.norm(qd[ok], axis=1)
        disc_acc = dv[ok] / dt_disc[:, None]
        dev = np.linalg.norm(gdd - disc_acc[:, None, :], axis=-1).max(axis=1)

        eta_s.append(float(np.max(spread / dx[ok])))
        nu_s.append(float(np.max(dev / dx[ok])))
        res_s.append(float(np.max(dev)))

    inconclusive = any(c == 0 for c in conn_s)
    if inconclusive:
        return SOCReport(interp.name, float(np.nanmax(eta_s)) if total else float("nan"),
                         float(np.nanmax(nu_s)) if total else float("nan"),
                         res_s[-1], False, total, scales, seed, inconclusive=True,
                         eta_by_scale=eta_s, nu_by_scale=nu_s, residual_by_scale=res_s,
                         connected_by_scale=conn_s, extra={"pair_mode": pair_mode})

    eta_growth = _growth(scales, eta_s)
    nu_growth = _growth(scales, nu_s)
    residual_floor = res_s[-1]
    # linear decay within a factor 2, measured from the coarsest scale
    residual_tol = 2.0 * (scales[-1] / scales[0]) * res_s[0] + EXACT_TOL
    passed = (eta_growth <= slope_tol and nu_growth <= slope_tol
              and residual_floor <= residual_tol)
    return SOCReport(
        interpolator=interp.name,
        eta_hat=float(max(eta_s)),
        nu_hat=float(max(nu_s)),
        residual_floor=float(residual_floor),
        passed=bool(passed),
        samples=total,
        scales=scales,
        seed=seed,
        eta_growth=eta_growth,
        nu_growth=nu_growth,
        residual_tolerance=float(residual_tol),
        eta_by_scale=eta_s,
        nu_by_scale=nu_s,
        residual_by_scale=res_s,
        connected_by_scale=conn_s,
        extra={"pair_mode": pair_mode},
    )
