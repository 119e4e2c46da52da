"""Variational cross-checks on polygonal horizontal loops.

Horizontal curves in the Heisenberg group are determined by their planar
projection and a starting height, so the checks work on closed polygons in
the xy-plane with length measured by the planar Finsler norm |v| r(angle v).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import optimize
from scipy.spatial.distance import directed_hausdorff

from .errors import DegenerateSegment, NoConvergence, NotClosed
from .geodesics import GeodesicTrace, projection_closure
from .indicatrix import IndicatrixProfile

__all__ = [
    "DiscreteHorizontalPath",
    "finsler_length",
    "length_gradient",
    "StationarityReport",
    "area_preserving_perturbations",
    "dido_stationarity",
    "dido_direct_search",
    "hausdorff_distance",
    "write_loop_csv",
    "read_loop_csv",
]


@dataclass(frozen=True)
class DiscreteHorizontalPath:
    """Polygon in the plane; closed loops join the last node back to the first."""

    nodes: np.ndarray
    closed: bool = True
    z0: float = 0.0

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or len(nodes) < 2:
            raise ValueError("nodes must have shape (n, 2) with n >= 2")
        object.__setattr__(self, "nodes", nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def segments(self) -> np.ndarray:
        p = self.nodes
        nxt = np.roll(p, -1, axis=0) if self.closed else p[1:]
        return nxt - p[: len(nxt)]

    def z_lift(self) -> np.ndarray:
        """Heights along the horizontal lift; dz = -(x dy - y dx)/2 is exact on straight segments."""
        p = self.nodes
        q = np.roll(p, -1, axis=0) if self.closed else p[1:]
        p = p[: len(q)]
        dz = -0.5 * (p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1])
        return self.z0 + np.concatenate([[0.0], np.cumsum(dz)])

    @property
    def signed_area(self) -> float:
        """Shoelace area, positive for counterclockwise loops."""
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def centroid(self) -> np.ndarray:
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        A = 0.5 * cross.sum()
        return np.array([np.sum((x + xn) * cross), np.sum((y + yn) * cross)]) / (6.0 * A)

    def translated(self, offset) -> "DiscreteHorizontalPath":
        return DiscreteHorizontalPath(self.nodes + np.asarray(offset, dtype=float), self.closed, self.z0)

    def scaled(self, factor: float, about=None) -> "DiscreteHorizontalPath":
        c = self.centroid if about is None else np.asarray(about, dtype=float)
        return DiscreteHorizontalPath(c + factor * (self.nodes - c), self.closed, self.z0)

    def densified(self, per_segment: int) -> np.ndarray:
        """Points on every edge, per_segment per edge, for distance computations."""
        t = np.arange(per_segment)[:, None, None] / per_segment
        pts = self.nodes[: len(self.segments)] + t * self.segments
        pts = pts.transpose(1, 0, 2).reshape(-1, 2)
        return pts if self.closed else np.vstack([pts, self.nodes[-1]])

    @classmethod
    def ellipse(cls, a: float, b: float, n: int = 512, clockwise: bool = False) -> "DiscreteHorizontalPath":
        t = 2 * math.pi * np.arange(n) / n
        if clockwise:
            t = -t
        return cls(np.column_stack([a * np.cos(t), b * np.sin(t)]))

    @classmethod
    def circle(cls, radius: float = 1.0, n: int = 512, clockwise: bool = False) -> "DiscreteHorizontalPath":
        return cls.ellipse(radius, radius, n, clockwise)

    @classmethod
    def from_trace(cls, trace: GeodesicTrace, n: int = 512) -> "DiscreteHorizontalPath":
        """Closed projection over one turn of theta, with nodes equally spaced in theta."""
        if not projection_closure(trace).closes:
            raise NotClosed("geodesic projection does not close after one theta period")
        th0 = trace.theta[0]
        sign = 1.0 if trace.theta[-1] > th0 else -1.0
        theta = th0 + sign * 2 * math.pi * np.arange(n) / n
        x, y, z = trace.at_theta(theta)
        return cls(np.column_stack([x, y]), True, float(z[0]))


def finsler_length(profile: IndicatrixProfile, path: DiscreteHorizontalPath) -> float:
    d = path.segments
    norms = np.hypot(d[:, 0], d[:, 1])
    if np.any(norms == 0.0):
        k = int(np.argmin(norms))
        raise DegenerateSegment(f"segment {k} joins repeated nodes")
    return float(np.sum(norms * profile.r(np.arctan2(d[:, 1], d[:, 0]))))


def length_gradient(profile: IndicatrixProfile, nodes: np.ndarray) -> np.ndarray:
    """Gradient of the closed-loop Finsler length with respect to the nodes."""
    d = np.roll(nodes, -1, axis=0) - nodes
    n = np.hypot(d[:, 0], d[:, 1])
    u = d / n[:, None]
    psi = np.arctan2(d[:, 1], d[:, 0])
    r, r1 = profile.derivatives(psi, 1)
    perp = np.column_stack([-u[:, 1], u[:, 0]])
    g = r[:, None] * u + r1[:, None] * perp
    return np.roll(g, 1, axis=0) - g


def _area_gradient(nodes: np.ndarray) -> np.ndarray:
    nxt, prv = np.roll(nodes, -1, axis=0), np.roll(nodes, 1, axis=0)
    return 0.5 * np.column_stack([nxt[:, 1] - prv[:, 1], prv[:, 0] - nxt[:, 0]])


@dataclass(frozen=True)
class StationarityReport:
    max_first_order_defect: float
    defects: np.ndarray
    base_length: float
    area: float
    epsilon: float


def area_preserving_perturbations(path: DiscreteHorizontalPath, count: int, rng: np.random.Generator,
                                  modes: int = 4) -> np.ndarray:
    """Random smooth normal displacement fields, shape (count, n, 2), with zero first-order area change.

    Each field is a random trigonometric polynomial in the node index times the
    outward normal, shifted so the first-order shoelace change vanishes, then
    scaled to unit maximum displacement.
    """
    p = path.nodes
    n = len(p)
    grad = _area_gradient(p)  # |grad_k| times the outward unit normal at node k
    w = np.hypot(grad[:, 0], grad[:, 1])
    normal = grad / w[:, None] * math.copysign(1.0, path.signed_area)
    t = 2 * math.pi * np.arange(n) / n
    k = np.arange(1, modes + 1)
    out = np.empty((count, n, 2))
    for i in range(count):
        a, b = rng.standard_normal(modes), rng.standard_normal(modes)
        delta = np.cos(np.outer(t, k)) @ a + np.sin(np.outer(t, k)) @ b
        delta = delta - np.sum(delta * w) / np.sum(w)
        delta /= np.max(np.abs(delta))
        out[i] = delta[:, None] * normal
    return out


def dido_stationarity(
    profile: IndicatrixProfile,
    curve: Union[GeodesicTrace, DiscreteHorizontalPath],
    perturbation_count: int = 20,
    epsilon: float = 1e-3,
    seed: int = 0,
    nodes: int = 512,
) -> StationarityReport:
    """First-order length defect of a closed loop under area-preserving perturbations.

    Each perturbed loop is rescaled about its centroid to the original area
    exactly.  The defect is |L(+eps) - L(-eps)| / (2 eps), the first variation
    with the second-order term cancelled.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    path = curve if isinstance(curve, DiscreteHorizontalPath) else DiscreteHorizontalPath.from_trace(curve, nodes)
    if not path.closed:
        raise NotClosed("stationarity is defined for closed loops")
    A0 = abs(path.signed_area)
    L0 = finsler_length(profile, path)
    rng = np.random.default_rng(seed)
    fields = area_preserving_perturbations(path, perturbation_count, rng)

    def length_at(e, field):
        q = DiscreteHorizontalPath(path.nodes + e * field)
        q = q.scaled(math.sqrt(A0 / abs(q.signed_area)))
        return finsler_length(profile, q)

    defects = np.array([abs(length_at(epsilon, f) - length_at(-epsilon, f)) / (2 * epsilon) for f in fields])
    return StationarityReport(float(defects.max(initial=0.0)), defects, L0, A0, epsilon)


def dido_direct_search(
    profile: IndicatrixProfile,
    target_area: float,
    node_count: int = 128,
    clockwise: bool = False,
    max_iter: int = 5000,
    gtol: float = 1e-10,
    initial: Optional[DiscreteHorizontalPath] = None,
) -> DiscreteHorizontalPath:
    """Minimize Finsler length among closed polygons of fixed area, starting from a circle.

    The objective is L / sqrt(|A|), which is scale invariant, so its minimizers
    are exactly the constrained minimizers up to scale; the result is rescaled
    to target_area and centred at the origin.  A different starting loop can be
    passed as initial, in which case its orientation overrides clockwise.
    """
    if not target_area > 0:
        raise ValueError("target_area must be positive")
    if initial is None:
        if node_count < 32:
            raise ValueError("node_count must be at least 32")
        start = DiscreteHorizontalPath.circle(math.sqrt(target_area / math.pi), node_count, clockwise)
    else:
        if len(initial) < 32 or not initial.closed:
            raise ValueError("initial must be a closed loop with at least 32 nodes")
        start = initial
        clockwise = start.signed_area < 0
    orient = -1.0 if clockwise else 1.0

    def objective(flat):
        p = flat.reshape(-1, 2)
        A = orient * DiscreteHorizontalPath(p).signed_area
        if A <= 0:
            return np.inf, np.zeros_like(flat)
        L = finsler_length(profile, DiscreteHorizontalPath(p))
        f = L / math.sqrt(A)
        g = length_gradient(profile, p) / math.sqrt(A) - 0.5 * f / A * orient * _area_gradient(p)
        return f, g.ravel()

    res = optimize.minimize(objective, start.nodes.ravel(), jac=True, method="L-BFGS-B",
                            options={"maxiter": max_iter, "gtol": gtol, "ftol": 1e-15, "maxcor": 30})
    best = DiscreteHorizontalPath(res.x.reshape(-1, 2))
    best = best.scaled(math.sqrt(target_area / abs(best.signed_area)))
    best = best.translated(-best.centroid)
    if res.nit >= max_iter:
        raise NoConvergence(f"direct search hit the iteration cap ({max_iter})", best)
    return best


def hausdorff_distance(a: DiscreteHorizontalPath, b: DiscreteHorizontalPath, per_segment: int = 16) -> float:
    """Symmetric Hausdorff distance between the two polygons (edges included)."""
    pa, pb = a.densified(per_segment), b.densified(per_segment)
    return max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0])


def write_loop_csv(path: DiscreteHorizontalPath, filename) -> None:
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("x", "y"))
        for x, y in path.nodes:
            w.writerow((f"{x:.10g}", f"{y:.10g}"))


def read_loop_csv(filename, closed: bool = True) -> DiscreteHorizontalPath:
    with open(filename, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != ("x", "y"):
            raise ValueError(f"unexpected loop header {header}")
        return DiscreteHorizontalPath(np.array([[float(v) for v in row] for row in reader]), closed)
