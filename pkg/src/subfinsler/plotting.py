"""Static SVG plots of geodesic traces.

Drawing coordinates live in a 10000 x 10000 viewBox and are written as
integers, so every point is rounded to 1e-4 of the viewport.  Output depends
only on the arrays passed in, which in the CLI are read back from CSV.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

VIEW = 10000
MARGIN = 500
PIXELS = 600
AZIMUTH = math.radians(30.0)
ELEVATION = math.radians(20.0)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def axonometric(x, y, z, azimuth: float = AZIMUTH, elevation: float = ELEVATION):
    """Screen coordinates (u, v) of 3D points viewed from (azimuth, elevation)."""
    ca, sa = math.cos(azimuth), math.sin(azimuth)
    cb, sb = math.cos(elevation), math.sin(elevation)
    u = -sa * np.asarray(x) + ca * np.asarray(y)
    v = -sb * ca * np.asarray(x) - sb * sa * np.asarray(y) + cb * np.asarray(z)
    return u, v


def _svg(curves: Sequence[tuple[np.ndarray, np.ndarray]], title: str, closed: bool = False) -> str:
    xs = np.concatenate([c[0] for c in curves])
    ys = np.concatenate([c[1] for c in curves])
    lo = np.array([xs.min(), ys.min()])
    span = max(xs.max() - lo[0], ys.max() - lo[1]) or 1.0
    scale = (VIEW - 2 * MARGIN) / span
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{PIXELS}" height="{PIXELS}" '
        f'viewBox="0 0 {VIEW} {VIEW}">',
        f"<title>{title}</title>",
        f'<rect width="{VIEW}" height="{VIEW}" fill="white"/>',
    ]
    for i, (cx, cy) in enumerate(curves):
        px = np.rint(MARGIN + (cx - lo[0]) * scale).astype(int)
        py = np.rint(VIEW - MARGIN - (cy - lo[1]) * scale).astype(int)  # y axis up
        keep = np.ones(len(px), dtype=bool)
        keep[1:] = (np.diff(px) != 0) | (np.diff(py) != 0)
        pts = " ".join(f"{a},{b}" for a, b in zip(px[keep], py[keep]))
        tag = "polygon" if closed else "polyline"
        lines.append(f'<{tag} points="{pts}" fill="none" stroke="{COLORS[i % len(COLORS)]}" stroke-width="20"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def projection_svg(traces: Sequence[np.ndarray], title: str = "xy projection") -> str:
    """traces are arrays with columns (s, x, y, z, ...)."""
    return _svg([(t[:, 1], t[:, 2]) for t in traces], title)


def axonometric_svg(traces: Sequence[np.ndarray], title: str = "axonometric view") -> str:
    return _svg([axonometric(t[:, 1], t[:, 2], t[:, 3]) for t in traces], title)


def loop_svg(loops: Sequence[np.ndarray], title: str = "loop") -> str:
    """Closed polygons given as (n, 2) node arrays."""
    return _svg([(p[:, 0], p[:, 1]) for p in loops], title, closed=True)
