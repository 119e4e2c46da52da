"""Indicatrix profiles of homogeneous sub-Finsler metrics on the Heisenberg group.

A left-invariant metric is fixed by a 2*pi-periodic scaling function r(theta);
the indicatrix in each contact plane is the polar curve R = 1/r.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
from math import comb, pi
from typing import Any, Mapping

import numpy as np
from scipy import integrate

from .errors import ConvexityViolation

__all__ = [
    "IndicatrixProfile",
    "ProfileDerivatives",
    "ConvexityReport",
    "evaluate_profile",
    "check_strong_convexity",
    "rund_average",
]

KINDS = ("flat", "randers", "limacon", "fourier")
TWO_PI = 2.0 * pi
_BINOM = [[comb(n, k) for k in range(n + 1)] for n in range(12)]


@dataclass(frozen=True)
class IndicatrixProfile:
    kind: str
    B: float = 0.0
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()

    period = TWO_PI

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "randers" and not (0.0 <= self.B < 1.0):
            raise ValueError(f"Randers parameter must satisfy 0 <= B < 1, got {self.B}")
        if self.kind == "fourier":
            if len(self.cos_coeffs) == 0:
                raise ValueError("fourier profile needs at least the constant coefficient a0")
            object.__setattr__(self, "cos_coeffs", tuple(float(a) for a in self.cos_coeffs))
            object.__setattr__(self, "sin_coeffs", tuple(float(b) for b in self.sin_coeffs))

    @classmethod
    def flat(cls) -> "IndicatrixProfile":
        return cls("flat")

    @classmethod
    def randers(cls, B: float) -> "IndicatrixProfile":
        return cls("randers", B=float(B))

    @classmethod
    def limacon(cls) -> "IndicatrixProfile":
        return cls("limacon")

    @classmethod
    def fourier(cls, cos_coeffs, sin_coeffs=()) -> "IndicatrixProfile":
        """r = a0 + sum_n (a_n cos n theta + b_n sin n theta), with b_n starting at n = 1."""
        return cls("fourier", cos_coeffs=tuple(cos_coeffs), sin_coeffs=tuple(sin_coeffs))

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "IndicatrixProfile":
        cfg = dict(cfg)
        kind = cfg.pop("kind", None)
        allowed = {"flat": set(), "randers": {"B"}, "limacon": set(), "fourier": {"a", "b"}}
        if kind not in allowed:
            raise ValueError(f"metric.kind must be one of {sorted(allowed)}, got {kind!r}")
        extra = set(cfg) - allowed[kind]
        if extra:
            raise ValueError(f"unknown keys for metric kind {kind!r}: {sorted(extra)}")
        if kind == "randers":
            return cls.randers(cfg["B"])
        if kind == "fourier":
            return cls.fourier(cfg.get("a", ()), cfg.get("b", ()))
        return cls(kind)

    def to_config(self) -> dict[str, Any]:
        if self.kind == "randers":
            return {"kind": "randers", "B": self.B}
        if self.kind == "fourier":
            return {"kind": "fourier", "a": list(self.cos_coeffs), "b": list(self.sin_coeffs)}
        return {"kind": self.kind}

    @property
    def is_even(self) -> bool:
        return self.kind != "fourier" or not any(self.sin_coeffs)

    def derivatives(self, theta, order: int = 3) -> np.ndarray:
        """Stack of r, r', ..., r^(order) at theta; shape (order + 1,) + shape(theta)."""
        theta = np.asarray(theta, dtype=float)
        return np.array([np.broadcast_to(v, theta.shape) for v in self._derivative_list(theta, order, np.cos, np.sin)])

    def scalar_derivatives(self, theta: float, order: int = 3) -> list[float]:
        """Same as derivatives() for a Python float, without array overhead."""
        return self._derivative_list(theta, order, math.cos, math.sin)

    def third_order_evaluator(self):
        """Fast closure float -> (r, r1, r2, r3) for integrator inner loops."""
        cos, sin = math.cos, math.sin
        if self.kind == "flat":
            return lambda th: (1.0, 0.0, 0.0, 0.0)
        if self.kind == "randers":
            B = self.B

            def randers(th):
                c, s = cos(th), sin(th)
                return 1.0 + B * c, -B * s, -B * c, B * s

            return randers
        if self.kind == "limacon":

            def limacon(th):
                c, s = cos(th), sin(th)
                R = 3.0 + c
                r = 1.0 / R
                r1 = s * r / R
                r2 = (2.0 * s * r1 + c * r) / R
                r3 = (3.0 * s * r2 + 3.0 * c * r1 - s * r) / R
                return r, r1, r2, r3

            return limacon
        return lambda th: tuple(self._derivative_list(th, 3, cos, sin))

    def _derivative_list(self, theta, order, cos, sin):
        # derivatives of cos(n theta) cycle through n^k (cos, -sin, -cos, sin)
        if self.kind == "flat":
            return [1.0] + [0.0] * order
        if self.kind in ("randers", "limacon"):
            c, s = cos(theta), sin(theta)
            cyc = (c, -s, -c, s)
            if self.kind == "randers":
                out = [self.B * cyc[k % 4] for k in range(order + 1)]
                out[0] = out[0] + 1.0
                return out
            # r = 1/R with R = 3 + cos: Leibniz on R r = 1 gives r^(n) recursively
            R0 = 3.0 + c
            out = [1.0 / R0]
            for n in range(1, order + 1):
                acc = 0.0
                for k in range(1, n + 1):
                    acc = acc + _BINOM[n][k] * cyc[k % 4] * out[n - k]
                out.append(-acc / R0)
            return out
        out = [0.0] * (order + 1)
        for n, a in enumerate(self.cos_coeffs):
            if a:
                c, s = cos(n * theta), sin(n * theta)
                cyc = (c, -s, -c, s)
                for k in range(order + 1):
                    out[k] = out[k] + a * n**k * cyc[k % 4]
        for n, b in enumerate(self.sin_coeffs, start=1):
            if b:
                c, s = cos(n * theta), sin(n * theta)
                cyc = (s, c, -s, -c)
                for k in range(order + 1):
                    out[k] = out[k] + b * n**k * cyc[k % 4]
        return out

    def r(self, theta):
        return self.derivatives(theta, 0)[0]

    def convexity(self, theta):
        """r (r + r'') at theta."""
        d = self.derivatives(theta, 2)
        return d[0] * (d[0] + d[2])

    def critical_angles(self) -> tuple[float, ...]:
        """Known critical points of r(r + r'') for the built-in kinds."""
        if self.kind in ("randers", "limacon"):
            return (0.0, pi)
        return ()


@dataclass(frozen=True)
class ProfileDerivatives:
    r: float
    r1: float
    r2: float
    r3: float


@dataclass(frozen=True)
class ConvexityReport:
    ok: bool
    min_value: float
    argmin: float


def evaluate_profile(profile: IndicatrixProfile, theta: float) -> ProfileDerivatives:
    d = profile.derivatives(float(theta), 3)
    return ProfileDerivatives(*(float(v) for v in d))


def check_strong_convexity(profile: IndicatrixProfile, grid_size: int = 1024) -> ConvexityReport:
    """Sample r(r + r'') on a uniform grid (plus analytic critical points for built-ins).

    For the fourier kind the grid is the only evidence, so the check is sampled.
    """
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")
    theta = np.concatenate([np.arange(grid_size) * (TWO_PI / grid_size), profile.critical_angles()])
    values = profile.convexity(theta)
    i = int(np.argmin(values))
    m = float(values[i])
    return ConvexityReport(ok=m > 0.0, min_value=m, argmin=float(theta[i]))


def torsion_I(r, r1, r2, r3):
    """The invariant I of a Heisenberg-homogeneous metric from r and three derivatives."""
    return -0.5 * (r * r3 + 3 * r1 * r2 + 4 * r * r1) / (np.sqrt(r) * (r + r2) ** 1.5)


def _rund_integrand(profile: IndicatrixProfile, theta: float) -> float:
    r, r1, r2, r3 = profile.derivatives(theta, 3)
    conv = r * (r + r2)
    if conv <= 0.0:
        raise ConvexityViolation(theta, conv)
    return float(torsion_I(r, r1, r2, r3) * np.sqrt((r + r2) / r))


def rund_average(profile: IndicatrixProfile) -> float:
    """Integral of I against the fiber measure sqrt((r + r'')/r) dtheta over one turn."""
    value, _ = integrate.quad(
        lambda t: _rund_integrand(profile, t), 0.0, TWO_PI, epsabs=1e-13, epsrel=1e-12, limit=400
    )
    return float(value)
