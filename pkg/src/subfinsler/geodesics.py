"""Geodesics of homogeneous sub-Finsler metrics on the Heisenberg group.

State along a geodesic lift is (x, y, z, theta, lam) with arc length s.  The
system is

    x' = cos(theta)/r,  y' = -sin(theta)/r,  z' = (x sin(theta) + y cos(theta))/(2r),
    theta' = sqrt(r/(r + r'')) lam,  lam' = I lam^2,

and lam * r * sqrt(r (r + r'')) is a first integral.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import ConvexityViolation, InsufficientTrace, ProfileMismatch, StepUnderflow, ZeroMultiplier
from .indicatrix import IndicatrixProfile, torsion_I

__all__ = [
    "GeodesicState",
    "IntegratorSettings",
    "GeodesicTrace",
    "ClosureReport",
    "conserved_quantity",
    "geodesic_rhs",
    "integrate_geodesic",
    "theta_period_arclength",
    "randers_closed_form",
    "limacon_closed_form",
    "closed_form_deviation",
    "projection_closure",
    "planar_diameter",
    "finsler_speed",
    "write_trace_csv",
    "read_trace_csv",
]

TWO_PI = 2.0 * math.pi
CSV_HEADER = ("s", "x", "y", "z", "theta", "lambda", "conserved")


@dataclass(frozen=True)
class GeodesicState:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    theta: float = 0.0
    lam: float = 0.0
    s: float = 0.0

    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.theta, self.lam], dtype=float)


@dataclass(frozen=True)
class IntegratorSettings:
    """Fixed-step RK4 when tolerance is None, otherwise adaptive DOP853."""

    step: float = 1e-3
    tolerance: Optional[float] = None
    max_arclength: float = TWO_PI

    def __post_init__(self):
        if self.tolerance is None:
            if not self.step > 0:
                raise ValueError("step must be positive")
        elif not (0.0 < self.tolerance <= 1e-3):
            raise ValueError("tolerance must lie in (0, 1e-3]")
        if not self.max_arclength > 0:
            raise ValueError("max_arclength must be positive")

    @property
    def adaptive(self) -> bool:
        return self.tolerance is not None


def conserved_quantity(profile: IndicatrixProfile, theta, lam):
    d = profile.derivatives(theta, 2)
    return lam * d[0] * np.sqrt(d[0] * (d[0] + d[2]))


def _scalar_rhs(profile: IndicatrixProfile):
    deriv = profile.third_order_evaluator()
    cos, sin, sqrt = math.cos, math.sin, math.sqrt

    def f(x, y, z, th, lam):
        r, r1, r2, r3 = deriv(th)
        s = r + r2
        if r * s <= 0.0:
            raise ConvexityViolation(th, r * s)
        c, sn = cos(th), sin(th)
        I = -0.5 * (r * r3 + 3.0 * r1 * r2 + 4.0 * r * r1) / (sqrt(r) * s * sqrt(s))
        return (c / r, -sn / r, (x * sn + y * c) / (2.0 * r), sqrt(r / s) * lam, I * lam * lam)

    return f


def geodesic_rhs(profile: IndicatrixProfile, state) -> np.ndarray:
    """Rates (dx, dy, dz, dtheta, dlam)/ds; state is a GeodesicState or array(s) of shape (5, ...)."""
    if isinstance(state, GeodesicState):
        state = state.vector()
    x, y, z, th, lam = np.asarray(state, dtype=float)
    r, r1, r2, r3 = profile.derivatives(th, 3)
    conv = r * (r + r2)
    if np.any(conv <= 0.0):
        i = int(np.argmin(conv))
        raise ConvexityViolation(np.ravel(th)[i] if np.ndim(th) else th, np.ravel(conv)[i])
    I = torsion_I(r, r1, r2, r3)
    c, sn = np.cos(th), np.sin(th)
    return np.array([c / r, -sn / r, (x * sn + y * c) / (2.0 * r), np.sqrt(r / (r + r2)) * lam, I * lam**2])


@dataclass
class GeodesicTrace:
    """Samples (s, x, y, z, theta, lam), one row per accepted step."""

    samples: np.ndarray
    profile: IndicatrixProfile
    initial: GeodesicState
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != 6:
            raise ValueError("samples must have shape (n, 6)")
        if np.any(np.diff(self.samples[:, 0]) <= 0):
            raise ValueError("samples must be strictly increasing in s")
        self._rates = None

    s = property(lambda self: self.samples[:, 0])
    x = property(lambda self: self.samples[:, 1])
    y = property(lambda self: self.samples[:, 2])
    z = property(lambda self: self.samples[:, 3])
    theta = property(lambda self: self.samples[:, 4])
    lam = property(lambda self: self.samples[:, 5])

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    @property
    def rates(self) -> np.ndarray:
        """d/ds of (x, y, z, theta, lam) at every sample, shape (n, 5)."""
        if self._rates is None:
            self._rates = geodesic_rhs(self.profile, self.samples[:, 1:].T).T
        return self._rates

    @property
    def conserved(self) -> np.ndarray:
        return conserved_quantity(self.profile, self.theta, self.lam)

    def conserved_drift(self) -> float:
        c = self.conserved
        scale = abs(c[0])
        if scale == 0.0:
            return float(np.max(np.abs(c)))
        return float(np.max(np.abs(c - c[0])) / scale)

    def state_at(self, s) -> np.ndarray:
        """Cubic Hermite interpolation of (x, y, z, theta, lam); returns shape (5,) + shape(s)."""
        s = np.asarray(s, dtype=float)
        S = self.s
        i = np.clip(np.searchsorted(S, s, side="right") - 1, 0, len(S) - 2)
        h = S[i + 1] - S[i]
        t = (s - S[i]) / h
        Y0, Y1 = self.samples[i, 1:], self.samples[i + 1, 1:]
        D0, D1 = self.rates[i], self.rates[i + 1]
        t = t[..., None]
        h = h[..., None]
        h00 = 2 * t**3 - 3 * t**2 + 1
        h10 = t**3 - 2 * t**2 + t
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        out = h00 * Y0 + h10 * h * D0 + h01 * Y1 + h11 * h * D1
        return np.moveaxis(out, -1, 0)

    def rate_at(self, s) -> np.ndarray:
        """Derivative of the Hermite interpolant, shape (5,) + shape(s)."""
        s = np.asarray(s, dtype=float)
        S = self.s
        i = np.clip(np.searchsorted(S, s, side="right") - 1, 0, len(S) - 2)
        h = (S[i + 1] - S[i])[..., None]
        t = ((s - S[i]) / (S[i + 1] - S[i]))[..., None]
        Y0, Y1 = self.samples[i, 1:], self.samples[i + 1, 1:]
        D0, D1 = self.rates[i], self.rates[i + 1]
        out = ((6 * t**2 - 6 * t) * (Y0 - Y1) / h + (3 * t**2 - 4 * t + 1) * D0 + (3 * t**2 - 2 * t) * D1)
        return np.moveaxis(out, -1, 0)

    def s_at_theta(self, theta) -> np.ndarray:
        """Arc length where theta(s) equals the given values (theta is strictly monotone)."""
        theta = np.asarray(theta, dtype=float)
        th = self.theta
        sign = 1.0 if th[-1] >= th[0] else -1.0
        key = sign * th
        target = sign * theta
        if np.any(target < key[0] - 1e-12) or np.any(target > key[-1] + 1e-12):
            raise InsufficientTrace("requested theta outside the traced range")
        i = np.clip(np.searchsorted(key, target) - 1, 0, len(key) - 2)
        frac = (target - key[i]) / (key[i + 1] - key[i])
        s = self.s[i] + frac * (self.s[i + 1] - self.s[i])
        for _ in range(6):
            s = s - (self.state_at(s)[3] - theta) / self.rate_at(s)[3]
        return s

    def at_theta(self, theta) -> np.ndarray:
        """(x, y, z) at the given fiber angles."""
        return self.state_at(self.s_at_theta(theta))[:3]


def integrate_geodesic(
    profile: IndicatrixProfile, initial: GeodesicState, settings: IntegratorSettings = IntegratorSettings()
) -> GeodesicTrace:
    if settings.adaptive:
        return _integrate_adaptive(profile, initial, settings)
    f = _scalar_rhs(profile)
    L = settings.max_arclength
    n = max(1, math.ceil(L / settings.step - 1e-9))
    h = L / n
    out = np.empty((n + 1, 6))
    x, y, z, th, lam = (float(v) for v in initial.vector())
    s0 = float(initial.s)
    out[0] = (s0, x, y, z, th, lam)
    hh = 0.5 * h
    h6 = h / 6.0
    for k in range(1, n + 1):
        a0, a1, a2, a3, a4 = f(x, y, z, th, lam)
        b0, b1, b2, b3, b4 = f(x + hh * a0, y + hh * a1, z + hh * a2, th + hh * a3, lam + hh * a4)
        c0, c1, c2, c3, c4 = f(x + hh * b0, y + hh * b1, z + hh * b2, th + hh * b3, lam + hh * b4)
        d0, d1, d2, d3, d4 = f(x + h * c0, y + h * c1, z + h * c2, th + h * c3, lam + h * c4)
        x += h6 * (a0 + 2.0 * (b0 + c0) + d0)
        y += h6 * (a1 + 2.0 * (b1 + c1) + d1)
        z += h6 * (a2 + 2.0 * (b2 + c2) + d2)
        th += h6 * (a3 + 2.0 * (b3 + c3) + d3)
        lam += h6 * (a4 + 2.0 * (b4 + c4) + d4)
        out[k] = (s0 + k * h, x, y, z, th, lam)
    trace = GeodesicTrace(out, profile, initial, {"method": "rk4", "step": h})
    trace.metadata["conserved_drift"] = trace.conserved_drift()
    return trace


def _integrate_adaptive(profile, initial, settings):
    f = _scalar_rhs(profile)
    s0 = float(initial.s)
    sol = integrate.solve_ivp(
        lambda s, Y: f(*Y),
        (s0, s0 + settings.max_arclength),
        initial.vector(),
        method="DOP853",
        rtol=settings.tolerance,
        atol=settings.tolerance * 1e-3,
    )
    if sol.status != 0:
        raise StepUnderflow(f"adaptive integration stopped at s={sol.t[-1]:.6g}: {sol.message}")
    samples = np.column_stack([sol.t, sol.y.T])
    trace = GeodesicTrace(samples, profile, initial, {"method": "dop853", "tolerance": settings.tolerance})
    trace.metadata["conserved_drift"] = trace.conserved_drift()
    return trace


def theta_period_arclength(profile: IndicatrixProfile, theta0: float, lam0: float) -> float:
    """Arc length for theta to advance by one full turn from theta0."""
    if lam0 == 0:
        raise ZeroMultiplier("theta is constant when lam0 = 0")
    C = abs(float(conserved_quantity(profile, theta0, lam0)))
    val, _ = integrate.quad(lambda t: float(profile.convexity(t)) / C, theta0, theta0 + TWO_PI,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    return float(val)


def randers_closed_form(B: float, initial, theta):
    """Closed-form (x, y, z) of a Randers geodesic as a function of the fiber angle."""
    x0, y0, z0, th0, lam0 = (float(v) for v in initial)
    if lam0 == 0:
        raise ZeroMultiplier("closed form requires lam0 != 0")
    if not (0.0 <= B < 1.0):
        raise ValueError("need 0 <= B < 1")
    theta = np.asarray(theta, dtype=float)
    k = lam0 * math.sqrt((1.0 + B * math.cos(th0)) ** 3)
    ds, dc = np.sin(theta) - math.sin(th0), np.cos(theta) - math.cos(th0)
    x = x0 + ds / k
    y = y0 + dc / k
    z = z0 + (theta - th0 - np.sin(theta - th0)) / (2 * k * k) + (y0 * ds - x0 * dc) / (2 * k)
    return x, y, z


def limacon_closed_form(initial, theta):
    """Closed-form projected (x, y) of a limacon-metric geodesic."""
    x0, y0, th0, lam0 = (float(v) for v in initial)
    if lam0 == 0:
        raise ZeroMultiplier("closed form requires lam0 != 0")
    theta = np.asarray(theta, dtype=float)
    L = lam0 * math.sqrt(9 * math.cos(th0) + 11) / (3 + math.cos(th0)) ** 3

    def fx(t):
        return np.sin(t) * (4 * np.cos(t) + 6) / (3 + np.cos(t)) ** 2

    def fy(t):
        return (9 * np.cos(t) + 19) / (3 + np.cos(t)) ** 2

    return x0 + (fx(theta) - fx(th0)) / (2 * L), y0 - (fy(theta) - fy(th0)) / L


def closed_form_deviation(trace: GeodesicTrace) -> float:
    """Max distance between the trace and the closed-form solution over one turn of theta.

    Randers (and flat, as B = 0) compare (x, y, z); the limacon compares (x, y).
    """
    p = trace.profile
    if p.kind not in ("flat", "randers", "limacon"):
        raise ProfileMismatch(f"no closed form for profile kind {p.kind!r}")
    th0 = trace.theta[0]
    span = abs(trace.theta[-1] - th0)
    mask = np.abs(trace.theta - th0) <= min(span, TWO_PI)
    x0, y0, z0, _, lam0 = trace.samples[0, 1:]
    th = trace.theta[mask]
    if p.kind == "limacon":
        x, y = limacon_closed_form((x0, y0, th0, lam0), th)
        err = np.hypot(x - trace.x[mask], y - trace.y[mask])
    else:
        x, y, z = randers_closed_form(p.B, (x0, y0, z0, th0, lam0), th)
        err = np.sqrt((x - trace.x[mask]) ** 2 + (y - trace.y[mask]) ** 2 + (z - trace.z[mask]) ** 2)
    return float(err.max())


@dataclass(frozen=True)
class ClosureReport:
    closes: bool
    period_arclength: float
    enclosed_area: float
    signed_area: float
    z_gain: float
    stokes_residual: float
    gap: float
    diameter: float


_GAUSS_T = 0.5 * (1.0 + np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)]))
_GAUSS_W = 0.5 * np.array([5.0, 8.0, 5.0]) / 9.0


def _curve_area_integral(trace: GeodesicTrace, s_end: float) -> float:
    """Integral of (x dy - y dx) along the Hermite interpolant from s[0] to s_end."""
    S = trace.s
    knots = np.append(S[S < s_end], s_end)
    a, b = knots[:-1], knots[1:]
    q = a[:, None] + (b - a)[:, None] * _GAUSS_T[None, :]
    st = trace.state_at(q)
    rt = trace.rate_at(q)
    integrand = st[0] * rt[1] - st[1] * rt[0]
    return float(np.sum((integrand @ _GAUSS_W) * (b - a)))


def planar_diameter(points: np.ndarray, directions: int = 720) -> float:
    """Largest projected width over evenly spaced directions (relative error below 1e-5)."""
    a = np.arange(directions) * (math.pi / directions)
    proj = points @ np.vstack([np.cos(a), np.sin(a)])
    return float(np.max(proj.max(axis=0) - proj.min(axis=0)))


def projection_closure(trace: GeodesicTrace) -> ClosureReport:
    """Close the xy-projection after one turn of theta and compare z-gain with enclosed area."""
    lam0 = trace.lam[0]
    span = abs(trace.theta[-1] - trace.theta[0])
    if lam0 == 0 or span <= TWO_PI:
        raise InsufficientTrace(f"theta spans {span:.6g} <= 2*pi; cannot close the projection")
    th0 = trace.theta[0]
    s_end = float(trace.s_at_theta(th0 + math.copysign(TWO_PI, trace.theta[-1] - th0)))
    x1, y1, z1 = trace.state_at(s_end)[:3]
    x0, y0, z0 = trace.x[0], trace.y[0], trace.z[0]
    gap = math.hypot(x1 - x0, y1 - y0)
    mask = trace.s <= s_end
    diam = planar_diameter(np.column_stack([trace.x[mask], trace.y[mask]]))
    chord = x1 * y0 - y1 * x0
    curve = _curve_area_integral(trace, s_end)
    signed_area = 0.5 * (curve + chord)
    z_gain = float(z1 - z0)
    return ClosureReport(
        closes=gap < 1e-6 * diam,
        period_arclength=s_end - float(trace.s[0]),
        enclosed_area=abs(signed_area),
        signed_area=signed_area,
        z_gain=z_gain,
        stokes_residual=z_gain + 0.5 * curve,
        gap=gap,
        diameter=diam,
    )


def finsler_speed(profile: IndicatrixProfile, vx, vy):
    """Norm of a horizontal velocity: |v| r(angle of v)."""
    return np.hypot(vx, vy) * profile.r(np.arctan2(vy, vx))


def write_trace_csv(trace: GeodesicTrace, path) -> None:
    data = np.column_stack([trace.samples, trace.conserved])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in data:
            w.writerow([f"{v:.10g}" for v in row])


def read_trace_csv(path) -> np.ndarray:
    """Rows of (s, x, y, z, theta, lambda, conserved)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected trace header {header}")
        return np.array([[float(v) for v in row] for row in reader])
