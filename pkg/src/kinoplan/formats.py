"""Roadmap CSV and solution dump formats.

Both formats open with a version header line and carry the resolved
experiment configuration as ``# key = value`` comment lines (CSV) or under a
``config`` key (solution). Floats are written with ``repr`` so files
round-trip exactly and are byte-identical for identical runs.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .statespace import Trajectory, TrajectorySegment

ROADMAP_HEADER = "# kinoplan-roadmap v1"
SOLUTION_HEADER = "# kinoplan-solution v1"


class FormatError(ValueError):
    """A roadmap or solution file could not be parsed."""


@dataclass
class RoadmapTable:
    """Node table as read back from a roadmap CSV."""

    ids: np.ndarray
    parents: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    iterations: np.ndarray
    config: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.ids)

    @property
    def n_dof(self) -> int:
        return self.q.shape[1]


def _columns(n_dof: int) -> list[str]:
    if n_dof == 1:
        return ["id", "parent_id", "theta", "theta_dot", "iteration_added"]
    return (["id", "parent_id"] + [f"theta_{j + 1}" for j in range(n_dof)]
            + [f"theta_dot_{j + 1}" for j in range(n_dof)] + ["iteration_added"])


def roadmap_csv(roadmap, config: dict | None = None) -> str:
    """Serialize a :class:`~kinoplan.planner.Roadmap` (or a RoadmapTable)."""
    out = io.StringIO()
    out.write(ROADMAP_HEADER + "\n")
    for key, value in (config or {}).items():
        out.write(f"# {key} = {value}\n")
    n = roadmap.q.shape[1]
    out.write(",".join(_columns(n)) + "\n")
    parents = roadmap.parents
    for i in range(len(roadmap)):
        cells = [str(i), str(int(parents[i]))]
        cells += [repr(float(v)) for v in roadmap.q[i]]
        cells += [repr(float(v)) for v in roadmap.qd[i]]
        cells.append(str(int(roadmap.iterations[i])))
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def write_roadmap_csv(path, roadmap, config: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(roadmap_csv(roadmap, config))


def parse_roadmap_csv(text: str) -> RoadmapTable:
    lines = text.splitlines()
    if not lines or lines[0].strip() != ROADMAP_HEADER:
        raise FormatError(f"line 1: expected header {ROADMAP_HEADER!r}")
    config = {}
    body_start = 1
    for body_start in range(1, len(lines)):
        line = lines[body_start]
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].partition("=")
        if sep:
            config[key.strip()] = value.strip()
    else:
        raise FormatError("missing column header row")
    reader = csv.reader(lines[body_start:])
    columns = next(reader)
    if len(columns) < 5 or columns[:2] != ["id", "parent_id"] or columns[-1] != "iteration_added":
        raise FormatError(f"line {body_start + 1}: unexpected columns {columns}")
    n = (len(columns) - 3) // 2
    if columns != _columns(n):
        raise FormatError(f"line {body_start + 1}: unexpected columns {columns}")
    ids, parents, states, iterations = [], [], [], []
    for lineno, row in enumerate(reader, start=body_start + 2):
        if not row:
            continue
        if len(row) != len(columns):
            raise FormatError(f"line {lineno}: expected {len(columns)} fields, got {len(row)}")
        try:
            ids.append(int(row[0]))
            parents.append(int(row[1]))
            states.append([float(v) for v in row[2:2 + 2 * n]])
            iterations.append(int(row[-1]))
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        if not np.all(np.isfinite(states[-1])):
            raise FormatError(f"line {lineno}: non-finite state")
    if not ids:
        raise FormatError("roadmap has no nodes")
    states = np.asarray(states, dtype=float).reshape(len(ids), 2 * n)
    return RoadmapTable(np.asarray(ids), np.asarray(parents), states[:, :n], states[:, n:],
                        np.asarray(iterations), config)


def read_roadmap_csv(path) -> RoadmapTable:
    with open(path, newline="") as fh:
        return parse_roadmap_csv(fh.read())


def solution_dump(traj: Trajectory, metadata: dict | None = None, config: dict | None = None) -> str:
    doc = {
        "format": "kinoplan-solution",
        "version": 1,
        "metadata": metadata or {},
        "config": config or {},
        "segments": [
            {"duration": seg.duration, "coeffs": seg.coeffs.tolist()} for seg in traj.segments
        ],
    }
    return SOLUTION_HEADER + "\n" + json.dumps(doc, indent=1) + "\n"


def write_solution(path, traj: Trajectory, metadata: dict | None = None,
                   config: dict | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(solution_dump(traj, metadata, config))


def parse_solution(text: str) -> tuple[Trajectory, dict]:
    header, _, body = text.partition("\n")
    if header.strip() != SOLUTION_HEADER:
        raise FormatError(f"line 1: expected header {SOLUTION_HEADER!r}")
    try:
        doc = json.loads(body)
        traj = Trajectory(TrajectorySegment(s["duration"], s["coeffs"]) for s in doc["segments"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"malformed solution body: {exc}") from None
    return traj, {"metadata": doc.get("metadata", {}), "config": doc.get("config", {})}


def read_solution(path) -> tuple[Trajectory, dict]:
    with open(path) as fh:
        return parse_solution(fh.read())
