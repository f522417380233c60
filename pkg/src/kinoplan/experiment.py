"""Seeded swing-up experiments: configuration, execution and output files."""

from __future__ import annotations

import dataclasses
import logging
import os
from dataclasses import dataclass

import numpy as np

from .dynamics import SinglePendulumModel, is_admissible, segment_torque_ratio
from .formats import RoadmapTable, write_roadmap_csv, write_solution
from .interp import Interpolator, make_interpolator
from .planner import PlannerConfig, PlanResult, plan, swing_count
from .soc import Region, SOCReport, verify_soc
from .statespace import State

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending line or field."""


def parse_seeds(text: str) -> tuple[int, ...]:
    """Parse ``"A..B"`` (inclusive) or a comma-separated list of integers."""
    text = text.strip()
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            a, b = int(a), int(b)
            if b < a:
                raise ValueError(f"empty seed range {text}")
            return tuple(range(a, b + 1))
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(f"seeds: {exc}") from None


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    length: float = 0.2
    mass: float = 8.0
    gravity: float = 9.81
    tau_max: float = 5.0
    interp: str = "soc1"
    bezier_T: float = 1.0
    soc1_dt_cap: float = 1.0
    soc1_long_way: bool = False
    budget: int = 150_000
    k_parents: int = 10
    goal_bias_period: int = 100
    goal_tolerance: float = 0.1
    omega_max: float = 25.0
    admissibility_checks: int = 32
    velocity_weight: float | None = None
    nn_index: str = "kdtree"
    init_theta: float = 0.0
    init_theta_dot: float = 0.0
    goal_theta: float = float(np.pi)
    goal_theta_dot: float = 0.0
    seeds: tuple = tuple(range(1, 11))
    out: str = "runs"
    soc_pairs: int = 200

    def __post_init__(self):
        for name in ("length", "mass", "gravity", "tau_max", "bezier_T", "soc1_dt_cap",
                     "goal_tolerance", "omega_max", "velocity_weight"):
            value = getattr(self, name)
            if value is None and name == "velocity_weight":
                continue
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name}: must be positive and finite, got {value}")
        if self.interp not in ("bezier", "soc1", "quad"):
            raise ConfigError(f"interp: expected bezier, soc1 or quad, got {self.interp!r}")
        if self.budget < 0:
            raise ConfigError(f"budget: must be non-negative, got {self.budget}")
        for name in ("k_parents", "goal_bias_period", "soc_pairs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be at least 1")
        if self.admissibility_checks < 2:
            raise ConfigError("admissibility_checks: must be at least 2")
        if self.nn_index not in ("kdtree", "linear"):
            raise ConfigError(f"nn_index: expected kdtree or linear, got {self.nn_index!r}")
        if not self.seeds:
            raise ConfigError("seeds: at least one seed is required")

    @property
    def repetitions(self) -> int:
        return len(self.seeds)

    @classmethod
    def field_types(cls) -> dict:
        return {f.name: f.default for f in dataclasses.fields(cls)}

    @classmethod
    def parse_value(cls, key: str, text: str):
        defaults = cls.field_types()
        if key not in defaults:
            raise ConfigError(f"unknown key {key!r}")
        default = defaults[key]
        if key == "seeds":
            return parse_seeds(text)
        if key == "velocity_weight":
            # "auto" selects pi / omega_max
            return None if text.strip().lower() in ("auto", "none", "") else float(text)
        if isinstance(default, bool):
            return _bool(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text.strip()

    @classmethod
    def from_text(cls, text: str, overrides: dict | None = None) -> ExperimentSpec:
        """Parse ``key = value`` lines (``#`` starts a comment); ``overrides`` win over the file."""
        values, where = {}, {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            key = key.strip()
            where[key] = lineno
            try:
                values[key] = cls.parse_value(key, value)
            except ConfigError as exc:
                raise ConfigError(f"line {lineno}: {exc}") from None
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {key}: {exc}") from None
        overrides = overrides or {}
        values.update(overrides)
        try:
            return cls(**values)
        except ConfigError as exc:
            field_name = str(exc).split(":", 1)[0]
            if field_name in where and field_name not in overrides:
                raise ConfigError(f"line {where[field_name]}: {exc}") from None
            raise

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = ",".join(str(s) for s in self.seeds)
        if d["velocity_weight"] is None:
            d["velocity_weight"] = "auto"
        return d

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())

    def model(self) -> SinglePendulumModel:
        return SinglePendulumModel(self.length, self.mass, self.gravity, self.tau_max)

    def interpolator(self) -> Interpolator:
        if self.interp == "soc1":
            return make_interpolator("soc1", dt_cap=self.soc1_dt_cap, long_way=self.soc1_long_way)
        if self.interp == "quad":
            return make_interpolator("quad", dt_cap=self.soc1_dt_cap)
        return make_interpolator("bezier", bezier_T=self.bezier_T)

    def planner_config(self, seed: int) -> PlannerConfig:
        return PlannerConfig(
            n_iterations=self.budget,
            k_parents=self.k_parents,
            goal_bias_period=self.goal_bias_period,
            goal_state=State([self.goal_theta], [self.goal_theta_dot]),
            goal_tolerance=self.goal_tolerance,
            init_state=State([self.init_theta], [self.init_theta_dot]),
            omega_max=self.omega_max,
            admissibility_checks=self.admissibility_checks,
            rng_seed=seed,
            velocity_weight=self.velocity_weight,
            nn_index=self.nn_index,
        )

    @classmethod
    def from_config(cls, config: dict) -> ExperimentSpec:
        """Rebuild a spec from the ``# key = value`` header of an output file."""
        known = cls.field_types()
        values = {k: cls.parse_value(k, v) for k, v in config.items() if k in known}
        return cls(**values)


@dataclass
class SummaryRow:
    seed: int
    status: str
    extensions: int
    nodes: int
    wall_time: float
    solution_segments: int = 0
    solution_duration: float = 0.0
    swings: int = 0


SUMMARY_COLUMNS = ("seed", "status", "extensions", "nodes", "wall_time",
                   "solution_segments", "solution_duration", "swings")


def summary_csv(rows: list[SummaryRow], spec: ExperimentSpec) -> str:
    lines = ["# kinoplan-summary v1"]
    lines += [f"# {k} = {v}" for k, v in spec.to_dict().items()]
    lines.append(",".join(SUMMARY_COLUMNS))
    for r in rows:
        lines.append(f"{r.seed},{r.status},{r.extensions},{r.nodes},{r.wall_time:.3f},"
                     f"{r.solution_segments},{r.solution_duration:.6f},{r.swings}")
    return "\n".join(lines) + "\n"


def seed_dir(out: str, seed: int) -> str:
    return os.path.join(out, f"seed_{seed:03d}")


def run_seed(spec: ExperimentSpec, seed: int) -> PlanResult:
    return plan(spec.model(), spec.interpolator(), spec.planner_config(seed))


def write_seed_outputs(spec: ExperimentSpec, seed: int, result: PlanResult) -> None:
    d = seed_dir(spec.out, seed)
    os.makedirs(d, exist_ok=True)
    config = dict(spec.to_dict(), seed=seed)
    write_roadmap_csv(os.path.join(d, "roadmap.csv"), result.roadmap, config)
    if result.solution is not None:
        meta = {"seed": seed, "extensions": result.extensions_used, "nodes": result.nodes_created,
                "interpolator": spec.interp, "goal_node": result.goal_node}
        write_solution(os.path.join(d, "solution.json"), result.solution, meta, config)


def soc_report_for(spec: ExperimentSpec, seed: int = 0) -> SOCReport:
    report = verify_soc(spec.interpolator(), Region.pendulum(), pairs_per_scale=spec.soc_pairs,
                        seed=seed)
    report.extra.update({f"config.{k}": v for k, v in spec.to_dict().items()})
    return report


def write_soc_report(out: str, report: SOCReport, stem: str = "soc_report") -> None:
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, stem + ".txt"), "w") as fh:
        fh.write(report.to_text())
    with open(os.path.join(out, stem + ".kv"), "w") as fh:
        fh.write(report.to_kv())


def run_experiment(spec: ExperimentSpec, quiet: bool = False) -> list[SummaryRow]:
    """Plan once per seed and write roadmaps, solutions, the SOC report and a summary."""
    os.makedirs(spec.out, exist_ok=True)
    rows = []
    for seed in spec.seeds:
        result = run_seed(spec, seed)
        row = SummaryRow(seed, result.status, result.extensions_used, result.nodes_created,
                         result.wall_time)
        if result.solution is not None:
            row.solution_segments = len(result.solution)
            row.solution_duration = result.solution.duration
            row.swings = swing_count(result.solution)
        rows.append(row)
        write_seed_outputs(spec, seed, result)
        if not quiet:
            log.info("seed %d: %s after %d extensions, %d nodes, %.1f s", seed, row.status,
                     row.extensions, row.nodes, row.wall_time)
    write_soc_report(spec.out, soc_report_for(spec))
    with open(os.path.join(spec.out, "summary.csv"), "w") as fh:
        fh.write(summary_csv(rows, spec))
    return rows


def validate_roadmap(table: RoadmapTable, recheck: bool = False, checks: int | None = None) -> list[str]:
    """Tree invariants of a parsed roadmap, optionally re-steering every edge.

    With ``recheck`` the interpolator and model are rebuilt from the file's
    configuration header and each parent -> child connection must be
    re-created and admissible.
    """
    problems = []
    n = len(table)
    if not np.array_equal(table.ids, np.arange(n)):
        problems.append("node ids are not 0..N-1 in order")
        return problems
    if table.parents[0] != -1:
        problems.append("node 0 is not the root")
    bad = np.flatnonzero((table.parents[1:] < 0) | (table.parents[1:] >= np.arange(1, n))) + 1
    if len(bad):
        problems.append(f"node {int(bad[0])} has invalid parent {int(table.parents[bad[0]])}")
        return problems
    if recheck and n > 1:
        spec = ExperimentSpec.from_config(table.config)
        model, interp = spec.model(), spec.interpolator()
        checks = checks or spec.admissibility_checks
        p = table.parents[1:]
        durations, coeffs, ok = interp.batch(table.q[p], table.qd[p], table.q[1:], table.qd[1:])
        if not np.all(ok):
            problems.append(f"edge to node {int(np.flatnonzero(~ok)[0]) + 1} cannot be interpolated")
        ratio = segment_torque_ratio(model, durations[ok], coeffs[ok], checks)
        if np.any(ratio > 1.0):
            worst = int(np.flatnonzero(ok)[np.argmax(ratio)]) + 1
            problems.append(f"edge to node {worst} exceeds the torque limit (ratio {ratio.max():.4f})")
    return problems


def solution_checks(spec: ExperimentSpec, result: PlanResult) -> dict:
    """Admissibility of a solved run at the planning resolution and at 4x."""
    model = spec.model()
    ok1, r1 = is_admissible(model, result.solution, spec.admissibility_checks)
    ok4, r4 = is_admissible(model, result.solution, 4 * spec.admissibility_checks)
    return {"admissible": ok1, "ratio": r1, "admissible_4x": ok4, "ratio_4x": r4}
