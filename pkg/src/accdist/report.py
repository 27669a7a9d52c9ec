"""Deterministic emitters for per-frame distance profiles and MDS maps.

Everything is rendered as hand-built SVG plus a CSV twin so test suites can
diff output bytes; identical inputs always produce identical files. Numbers
in CSV carry 9 significant digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadWindow, UnsupportedDim

# Style constants (part of the output contract: changing them changes bytes).
CANVAS_W = 640
CANVAS_H = 400
MARGIN = 50
BULLET_BASE_RADIUS = 2.5
PROFILE_POINT_COLOR = "#d95f02"
PROFILE_AVG_COLOR = "#1f77b4"
PROFILE_GLOBAL_COLOR = "#444444"
MAP_POINT_RADIUS = 5.0


def _fmt(value: float) -> str:
    return f"{value:.9g}"


@dataclass(frozen=True)
class ProfilePlotSpec:
    """Inputs for a per-frame distance profile figure."""

    per_frame_costs: tuple
    moving_average: tuple
    window: int
    global_value: float
    multiplicity: tuple
    x_label: str = "frame"
    y_label: str = "distance"

    def __post_init__(self):
        costs = tuple(float(v) for v in self.per_frame_costs)
        avg = tuple(float(v) for v in self.moving_average)
        mult = tuple(int(v) for v in self.multiplicity)
        if len(mult) != len(costs):
            raise ValueError("multiplicity length must match per-frame costs")
        if len(avg) != len(costs) - self.window + 1:
            raise BadWindow(
                f"moving average of length {len(avg)} inconsistent with "
                f"{len(costs)} frames and window {self.window}")
        object.__setattr__(self, "per_frame_costs", costs)
        object.__setattr__(self, "moving_average", avg)
        object.__setattr__(self, "multiplicity", mult)


def profile_spec_from_trace(trace, window: int,
                            x_label: str = "frame",
                            y_label: str = "distance") -> ProfilePlotSpec:
    """Build a plot spec from an alignment trace (see dtw.frame_profile)."""
    from .dtw import frame_profile

    per_frame, moving, counts, global_value = frame_profile(trace, window)
    return ProfilePlotSpec(
        per_frame_costs=tuple(per_frame), moving_average=tuple(moving),
        window=window, global_value=float(global_value),
        multiplicity=tuple(int(c) for c in counts),
        x_label=x_label, y_label=y_label,
    )


def _scale(values, lo_out: float, hi_out: float):
    lo, hi = min(values), max(values)
    span = hi - lo
    if span == 0:
        return [0.5 * (lo_out + hi_out) for _ in values]
    return [lo_out + (v - lo) / span * (hi_out - lo_out) for v in values]


def _xml_comments(header) -> list[str]:
    return [f"<!-- {line.replace('--', '==')} -->" for line in header]


def emit_profile_svg(spec: ProfilePlotSpec, path, header=()) -> None:
    """Scatter of per-frame costs (bullet size = multiplicity), moving-average
    polyline, and one horizontal rule at the global distance value.

    ``header`` lines are placed as XML comments before the root element.
    """
    n = len(spec.per_frame_costs)
    xs = _scale(range(n), MARGIN, CANVAS_W - MARGIN)
    y_values = list(spec.per_frame_costs) + list(spec.moving_average) + [spec.global_value, 0.0]
    y_lo, y_hi = min(y_values), max(y_values)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def y_px(v):
        return (CANVAS_H - MARGIN) - (v - y_lo) / (y_hi - y_lo) * (CANVAS_H - 2 * MARGIN)

    parts = _xml_comments(header) + [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" height="{CANVAS_H}" '
        f'viewBox="0 0 {CANVAS_W} {CANVAS_H}">',
        f'<path d="M {MARGIN} {MARGIN} V {CANVAS_H - MARGIN} H {CANVAS_W - MARGIN}" '
        f'fill="none" stroke="#000000" stroke-width="1"/>',
        f'<text x="{CANVAS_W // 2}" y="{CANVAS_H - 12}" text-anchor="middle" '
        f'font-size="12">{spec.x_label}</text>',
        f'<text x="14" y="{CANVAS_H // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {CANVAS_H // 2})">{spec.y_label}</text>',
    ]
    gy = y_px(spec.global_value)
    parts.append(
        f'<line x1="{MARGIN}" y1="{gy:.2f}" x2="{CANVAS_W - MARGIN}" y2="{gy:.2f}" '
        f'stroke="{PROFILE_GLOBAL_COLOR}" stroke-width="1.5" stroke-dasharray="6 3"/>'
    )
    if spec.moving_average:
        half = (spec.window - 1) // 2
        points = " ".join(
            f"{xs[i + half]:.2f},{y_px(v):.2f}"
            for i, v in enumerate(spec.moving_average)
        )
        parts.append(
            f'<polyline points="{points}" fill="none" '
            f'stroke="{PROFILE_AVG_COLOR}" stroke-width="2"/>'
        )
    for i, (cost, mult) in enumerate(zip(spec.per_frame_costs, spec.multiplicity)):
        radius = BULLET_BASE_RADIUS * math.sqrt(mult)
        parts.append(
            f'<circle cx="{xs[i]:.2f}" cy="{y_px(cost):.2f}" r="{radius:.2f}" '
            f'fill="{PROFILE_POINT_COLOR}" fill-opacity="0.8"/>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def emit_profile_csv(spec: ProfilePlotSpec, path, header=()) -> None:
    """CSV twin of the profile figure (moving average at its center frame)."""
    half = (spec.window - 1) // 2
    avg_at = {i + half: v for i, v in enumerate(spec.moving_average)}
    lines = [f"# {line}" for line in header] + [
        "# accdist profile",
        f"# window: {spec.window}",
        f"# global: {_fmt(spec.global_value)}",
        "frame,cost,multiplicity,moving_average",
    ]
    for i, (cost, mult) in enumerate(zip(spec.per_frame_costs, spec.multiplicity)):
        avg = _fmt(avg_at[i]) if i in avg_at else ""
        lines.append(f"{i},{_fmt(cost)},{mult},{avg}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_profile_csv(path):
    """Parse a profile CSV twin back into (costs, multiplicity, avg, window, global)."""
    window = None
    global_value = None
    costs, mult, avg = [], [], {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            text = line[1:].strip()
            if text.startswith("window:"):
                window = int(text.split(":", 1)[1])
            elif text.startswith("global:"):
                global_value = float(text.split(":", 1)[1])
            continue
        if not line or line.startswith("frame,"):
            continue
        frame, cost, m, a = line.split(",")
        costs.append(float(cost))
        mult.append(int(m))
        if a:
            avg[int(frame)] = float(a)
    ordered_avg = [avg[k] for k in sorted(avg)]
    return costs, mult, ordered_avg, window, global_value


def _channel(values) -> list[int]:
    scaled = _scale(values, 0.0, 255.0)
    return [int(round(v)) for v in scaled]


def mds_colors(coords: np.ndarray) -> list[str]:
    """Map 2-D or 3-D coordinates to hex colors (one channel per dimension)."""
    coords = np.asarray(coords, dtype=np.float64)
    k = coords.shape[1]
    if k not in (2, 3):
        raise UnsupportedDim(f"color mapping needs 2 or 3 dimensions, got {k}")
    channels = [_channel(coords[:, d]) for d in range(k)]
    if k == 2:
        channels.append([128] * coords.shape[0])
    return [f"#{r:02x}{g:02x}{b:02x}" for r, g, b in zip(*channels)]


def emit_mds_map(coords, labels, geo=None, path="map.svg", header=()) -> None:
    """Scatter map of MDS coordinates; a CSV twin is always written.

    With ``geo`` (mapping label -> (x, y)) points sit at their geographic
    position and carry the MDS color; otherwise the first two MDS dimensions
    give the position.
    """
    coords = np.asarray(coords, dtype=np.float64)
    labels = list(labels)
    if coords.ndim != 2 or coords.shape[0] != len(labels):
        raise ValueError("coords must be n x k with one label per row")
    colors = mds_colors(coords)

    if geo is not None:
        missing = [lab for lab in labels if lab not in geo]
        if missing:
            raise ValueError(f"no geo position for: {', '.join(missing)}")
        pos_x = [float(geo[lab][0]) for lab in labels]
        pos_y = [float(geo[lab][1]) for lab in labels]
    else:
        pos_x = list(coords[:, 0])
        pos_y = list(coords[:, 1])
    xs = _scale(pos_x, MARGIN, CANVAS_W - MARGIN)
    ys = _scale(pos_y, CANVAS_H - MARGIN, MARGIN)  # y axis points up

    parts = _xml_comments(header) + [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" height="{CANVAS_H}" '
        f'viewBox="0 0 {CANVAS_W} {CANVAS_H}">',
    ]
    for x, y, color in zip(xs, ys, colors):
        parts.append(
            f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{MAP_POINT_RADIUS}" '
            f'fill="{color}"/>'
        )
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")

    k = coords.shape[1]
    columns = "id," + ",".join(f"dim{d + 1}" for d in range(k)) + ",color"
    lines = [f"# {line}" for line in header] + ["# accdist mds map", columns]
    for i, label in enumerate(labels):
        dims = ",".join(_fmt(coords[i, d]) for d in range(k))
        lines.append(f"{label},{dims},{colors[i]}")
    path.with_suffix(".csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
