"""Phase-portrait rendering of 1-DOF roadmaps as standalone SVG.

Output depends only on the inputs (fixed number formatting, node order), so
rendering the same files twice gives byte-identical documents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formats import RoadmapTable
from .statespace import Trajectory, wrap_angle


@dataclass(frozen=True)
class PortraitStyle:
    width: int = 800
    height: int = 600
    margin: int = 50
    omega_max: float | None = None   # vertical half-range; default from the data
    edge_color: str = "#9a9a9a"
    node_color: str = "#202020"
    solution_color: str = "#d62728"
    node_radius: float = 1.2
    edge_width: float = 0.4
    solution_width: float = 2.0
    draw_edges: bool = True


class _Frame:
    def __init__(self, style: PortraitStyle, omega: float):
        self.s = style
        self.omega = omega
        self.w = style.width - 2 * style.margin
        self.h = style.height - 2 * style.margin

    def x(self, theta):
        return self.s.margin + (np.asarray(theta) + np.pi) / (2 * np.pi) * self.w

    def y(self, theta_dot):
        return self.s.margin + (self.omega - np.asarray(theta_dot)) / (2 * self.omega) * self.h


def _f(v) -> str:
    return f"{float(v):.2f}"


def _seam_pieces(t0, v0, t1, v1):
    """Split the edge (t0, v0) -> (t1, v1) where it crosses the +/-pi seam."""
    d = wrap_angle(t1 - t0)
    if abs(t1 - t0) <= np.pi:
        return [((t0, v0), (t1, v1))]
    edge = np.pi if d > 0 else -np.pi
    frac = (edge - t0) / d if d != 0 else 0.0
    vm = v0 + frac * (v1 - v0)
    return [((t0, v0), (edge, vm)), ((-edge, vm), (t1, v1))]


def render_phase_portrait(table: RoadmapTable, solution: Trajectory | None = None,
                          style: PortraitStyle | None = None, title: str | None = None) -> str:
    """Nodes as dots, parent -> child edges as lines, the solution as a thick polyline."""
    if table.n_dof != 1:
        raise ValueError("phase portraits are drawn for one-joint roadmaps only")
    style = style or PortraitStyle()
    theta = table.q[:, 0]
    theta_dot = table.qd[:, 0]
    omega = style.omega_max
    if omega is None:
        omega = max(1.0, float(np.ceil(np.max(np.abs(theta_dot)) + 0.5)))
    fr = _Frame(style, omega)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" height="{style.height}" '
        f'viewBox="0 0 {style.width} {style.height}">',
        f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="white"/>',
        f'<rect x="{style.margin}" y="{style.margin}" width="{fr.w}" height="{fr.h}" '
        f'fill="none" stroke="black" stroke-width="1"/>',
    ]
    if title:
        out.append(f'<text x="{style.width / 2:.2f}" y="{style.margin / 2:.2f}" '
                   f'text-anchor="middle" font-size="14">{title}</text>')
    for tick, label in ((-np.pi, "-pi"), (0.0, "0"), (np.pi, "pi")):
        out.append(f'<text x="{_f(fr.x(tick))}" y="{_f(style.height - style.margin / 3)}" '
                   f'text-anchor="middle" font-size="12">{label}</text>')
    for tick in (-omega, 0.0, omega):
        out.append(f'<text x="{_f(style.margin - 6)}" y="{_f(fr.y(tick) + 4)}" '
                   f'text-anchor="end" font-size="12">{tick:g}</text>')
    out.append(f'<line class="axis" x1="{_f(fr.x(-np.pi))}" y1="{_f(fr.y(0))}" '
               f'x2="{_f(fr.x(np.pi))}" y2="{_f(fr.y(0))}" stroke="#cccccc" stroke-width="0.5"/>')

    index = {int(i): k for k, i in enumerate(table.ids)}
    if style.draw_edges:
        out.append(f'<g class="edges" stroke="{style.edge_color}" stroke-width="{style.edge_width}">')
        for k, parent in enumerate(table.parents):
            if parent < 0 or int(parent) not in index:
                continue
            p = index[int(parent)]
            for (a, b) in _seam_pieces(theta[p], theta_dot[p], theta[k], theta_dot[k]):
                out.append(f'<line x1="{_f(fr.x(a[0]))}" y1="{_f(fr.y(a[1]))}" '
                           f'x2="{_f(fr.x(b[0]))}" y2="{_f(fr.y(b[1]))}"/>')
        out.append("</g>")

    out.append(f'<g class="nodes" fill="{style.node_color}">')
    for t, v in zip(theta, theta_dot):
        out.append(f'<circle cx="{_f(fr.x(t))}" cy="{_f(fr.y(v))}" r="{style.node_radius}"/>')
    out.append("</g>")

    if solution is not None and solution.segments:
        ts = np.concatenate([k0 + np.linspace(0.0, seg.duration, 40)
                             for k0, seg in zip(solution.knots, solution.segments)])
        ts = np.clip(ts, 0.0, solution.duration)
        q, qd, _ = solution.eval(ts)
        wq = wrap_angle(q[:, 0])
        breaks = np.flatnonzero(np.abs(np.diff(wq)) > np.pi) + 1
        for piece_q, piece_v in zip(np.split(wq, breaks), np.split(qd[:, 0], breaks)):
            pts = " ".join(f"{_f(fr.x(a))},{_f(fr.y(b))}" for a, b in zip(piece_q, piece_v))
            out.append(f'<polyline class="solution" points="{pts}" fill="none" '
                       f'stroke="{style.solution_color}" stroke-width="{style.solution_width}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
