"""Second variation along a geodesic: the fourth-order Jacobi operator

    J(u) = u'''' + (P u')' + Q u,

conjugate points by shooting, the Morse index, and reconstruction of the full
variation field from its eta3-component V3.

P, Q and the variation formulas are written once for a general invariant
table; the Heisenberg case only fills the table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .errors import ProfileMismatch, RootIsolationFailure
from .geodesics import GeodesicTrace
from .indicatrix import IndicatrixProfile
from .invariants import InvariantTable, heisenberg_table

__all__ = [
    "p_coefficient",
    "p_dot_coefficient",
    "q_coefficient",
    "JacobiCoefficients",
    "jacobi_coefficients",
    "jacobi_apply",
    "ShootingResult",
    "shoot",
    "ConjugatePoint",
    "conjugate_points",
    "index",
    "VariationField",
    "reconstruct_variation",
    "vdiffeqs_residual",
    "bilinear_form",
]


def p_coefficient(t: InvariantTable, lam):
    I = t.I
    return (
        (2 * I**2 + 4 * t.I_4 + 1) * lam**2
        + 8 * (t.J1 * I + t.J2) * lam
        + (2 * t.K * I**2 + 4 * t.A2 * I + t.K - 3 * t.A1)
    )


def geodesic_C(t: InvariantTable, lam):
    """dlam/ds along a geodesic."""
    return lam**2 * t.I + lam * t.J1 + t.A2 + 0.5 * t.I * t.K


def p_dot_coefficient(t: InvariantTable, lam):
    """Derivative of P along the geodesic (the e_1 direction), by the chain rule."""
    I = t.I
    lam_dot = geodesic_C(t, lam)
    return (
        (4 * I * t.I_1 + 4 * t.I_41) * lam**2
        + 2 * (2 * I**2 + 4 * t.I_4 + 1) * lam * lam_dot
        + 8 * (t.J1_1 * I + t.J1 * t.I_1 + t.J2_1) * lam
        + 8 * (t.J1 * I + t.J2) * lam_dot
        + (2 * t.K_1 * I**2 + 4 * t.K * I * t.I_1 + 4 * t.A2_1 * I + 4 * t.A2 * t.I_1 + t.K_1 - 3 * t.A1_1)
    )


def q_coefficient(t: InvariantTable, lam):
    I, K, A1, A2, J1, J2, S0, S1, S2 = t.I, t.K, t.A1, t.A2, t.J1, t.J2, t.S0, t.S1, t.S2
    I4, I41, I411, I3 = t.I_4, t.I_41, t.I_411, t.I_3
    J14, J24, J141, J241 = t.J1_4, t.J2_4, t.J1_41, t.J2_41
    A11, A14, A141, A111 = t.A1_1, t.A1_4, t.A1_41, t.A1_11
    A21, A23, A24, A241, A211 = t.A2_1, t.A2_3, t.A2_4, t.A2_41, t.A2_11
    K1, K3, K11 = t.K_1, t.K_3, t.K_11
    S01, S04, S21, S24 = t.S0_1, t.S0_4, t.S2_1, t.S2_4

    c4 = 4 * I**4 + 2 * (8 * I4 + 1) * I**2 + (5 * I4**2 + I4)
    c3 = (
        20 * J1 * I**3
        + (14 * J2 + 10 * J14) * I**2
        + (40 * J1 * I4 + 6 * I41 + 4 * J1 + 8 * J24) * I
        + (12 * J2 * I4 + 6 * J14 * I4 + J2 + J14)
    )
    c2 = (
        (3 * K - 8 * A1) * I**4
        - (10 * A2 + 16 * S0 + 4 * A14) * I**3
        + (16 * K * I4 - 10 * A1 * I4 - 19 * A1 + 8 * A24 + 40 * J1**2 + K) * I**2
        + (5 * A2 * I4 - 4 * A14 * I4 - 16 * S0 * I4 + 42 * J1 * J2 + 18 * J1 * J14 + 2 * J141
           - 12 * A2 - 6.5 * A14 - 6 * S0) * I
        + (5 * K * I4**2 + 18 * J1**2 * I4 - 13 * A1 * I4 + 6 * A24 * I4 + 2 * K * I4 + 6 * J1 * I41
           + I411 + I3 - 2 * A1 + A24 + 3 * J1**2 + 8 * J2**2 + 8 * J2 * J14 + 10 * J1 * J24
           + 2 * J241 + S04)
    )
    c1 = (
        (12 * K * J1 - 20 * A1 * J1 - 2 * A11 + K1) * I**3
        + (4 * K * J14 - 9 * J1 * A14 - 2 * A21 - A141 - 14 * J1 * A2 - 12 * J2 * A1 + 9 * J2 * K
           - 36 * J1 * S0 - 4 * S01) * I**2
        + (20 * K * J1 * I4 + 4 * K1 * I4 + 4 * K * I41 + 7 * A2 * J14 + 4 * K * J24 + 16 * J1 * A24
           - 5 * J2 * A14 - 3 * A11 + 2 * A241 + 1.5 * K1 - 34 * A1 * J1 - 4 * A2 * J2 + 4 * K * J1
           + 24 * J1**3 - 20 * J2 * S0 + 2 * S2) * I
        + (14 * J1 * A2 * I4 + 4 * A21 * I4 + 8 * K * J2 * I4 + 5 * A2 * I41 + 7 * A2 * J24
           - 8 * J1 * A14 + 8 * J2 * A24 - 3 * A21 - 2 * A141 - 4 * S01 + S24 - 18 * A1 * J2
           - 13 * A2 * J1 + 24 * J1**2 * J2 + 2.5 * K * J2 - 8 * J1 * S0 - S1)
    )
    c0 = (
        (0.75 * K**2 - 3 * A1 * K) * I**4
        - (1.5 * K * A14 + 5 * A1 * A2 + 3 * A2 * K + 6 * K * S0) * I**3
        + (2.5 * K**2 * I4 - 2.5 * A2 * A14 + 3 * K * A24 + 3 * J1 * K1 + 0.5 * K11 - 7 * A2**2 + K**2
           - 6.5 * A1 * K + 9 * K * J1**2 - 10 * A2 * S0) * I**2
        + (6 * A2 * K * I4 + 5 * A2 * A24 + 4 * J1 * A21 - 3 * K * A14 + A211 + 3 * J2 * K1 + 0.5 * K3
           - 11 * A1 * A2 + 12 * A2 * J1**2 - 3 * A2 * K + 11 * J1 * J2 * K - 3.5 * K * S0) * I
        + (3 * A2**2 * I4 + 0.5 * K * I3 - 5 * A2 * A14 + 4 * J2 * A21 + A23 - A111 - S21 + 2 * A1**2
           - 8 * A2**2 + 12 * A2 * J1 * J2 - 6 * A2 * S0 + 2 * J2**2 * K + J1 * S2)
    )
    return (((c4 * lam + c3) * lam + c2) * lam + c1) * lam + c0


@dataclass(frozen=True)
class JacobiCoefficients:
    """P, dP/ds and Q as vectorized functions of arc length on [0, domain]."""

    P: Callable
    P_dot: Callable
    Q: Callable
    domain: float = math.inf
    lam_max: float = 1.0
    trace: Optional[GeodesicTrace] = None

    def evaluate(self, s):
        return self.P(s), self.P_dot(s), self.Q(s)

    @classmethod
    def constant(cls, P: float, Q: float, domain: float = math.inf) -> "JacobiCoefficients":
        lam = math.sqrt(abs(P)) if P else 1.0

        def const(v):
            return lambda s: np.full(np.shape(s), float(v))

        return cls(const(P), const(0.0), const(Q), domain, lam)


def jacobi_coefficients(profile: IndicatrixProfile, trace: GeodesicTrace) -> JacobiCoefficients:
    if trace.profile != profile:
        raise ProfileMismatch(f"trace was integrated for {trace.profile}, not {profile}")
    s0 = float(trace.s[0])

    def table(s):
        st = trace.state_at(np.asarray(s, dtype=float) + s0)
        return heisenberg_table(profile, st[3], st[4]), st[4]

    def P(s):
        t, lam = table(s)
        return p_coefficient(t, lam)

    def P_dot(s):
        t, lam = table(s)
        return p_dot_coefficient(t, lam)

    def Q(s):
        t, lam = table(s)
        return q_coefficient(t, lam)

    lam_max = float(np.max(np.abs(trace.lam)))
    return JacobiCoefficients(P, P_dot, Q, trace.length, lam_max, trace)


def jacobi_apply(coeffs: JacobiCoefficients, u: Callable, s):
    """J(u)(s); u(s) returns (u, u', u'', u''', u'''')."""
    u0, u1, u2, _, u4 = u(s)
    P, Pd, Q = coeffs.evaluate(s)
    return u4 + P * u2 + Pd * u1 + Q * u0


@dataclass
class ShootingResult:
    """Solutions of J(u) = 0 with u(0) = u'(0) = 0 and (u'', u''')(0) = (1, 0), (0, 1).

    Y[k, j, m] is the j-th derivative (j = 0..3) of solution m at s[k]; F holds u''''.
    """

    s: np.ndarray
    Y: np.ndarray
    F: np.ndarray

    def wronskian(self) -> np.ndarray:
        return self.Y[:, 0, 0] * self.Y[:, 1, 1] - self.Y[:, 0, 1] * self.Y[:, 1, 0]

    def solution(self, m: int) -> Callable:
        """Basis solution m as s -> (u, u', u'', u''') by Hermite interpolation."""
        Yd = np.concatenate([self.Y[:, :, m], self.F[:, m : m + 1]], axis=1)
        s = self.s

        def u(c):
            c = np.asarray(c, dtype=float)
            k = np.clip(np.searchsorted(s, c, side="right") - 1, 0, len(s) - 2)
            h = s[k + 1] - s[k]
            t = (c - s[k]) / h
            out = [_quintic(Yd[k, j], Yd[k, j + 1], Yd[k, j + 2], Yd[k + 1, j], Yd[k + 1, j + 1],
                            Yd[k + 1, j + 2], h, t) for j in range(3)]
            t2, t3 = t * t, t * t * t
            out.append((2 * t3 - 3 * t2 + 1) * Yd[k, 3] + (t3 - 2 * t2 + t) * h * Yd[k, 4]
                       + (-2 * t3 + 3 * t2) * Yd[k + 1, 3] + (t3 - t2) * h * Yd[k + 1, 4])
            return tuple(out)

        return u

    def matrix_at(self, c: float) -> np.ndarray:
        """[[u_a, u_b], [u_a', u_b']] at c by quintic Hermite interpolation."""
        k = int(np.clip(np.searchsorted(self.s, c, side="right") - 1, 0, len(self.s) - 2))
        h = self.s[k + 1] - self.s[k]
        t = (c - self.s[k]) / h
        Yd = np.concatenate([self.Y, self.F[:, None, :]], axis=1)
        val = _quintic(Yd[k, 0], Yd[k, 1], Yd[k, 2], Yd[k + 1, 0], Yd[k + 1, 1], Yd[k + 1, 2], h, t)
        der = _quintic(Yd[k, 1], Yd[k, 2], Yd[k, 3], Yd[k + 1, 1], Yd[k + 1, 2], Yd[k + 1, 3], h, t)
        return np.vstack([val, der])


def _quintic(y0, d0, dd0, y1, d1, dd1, h, t):
    t2, t3 = t * t, t * t * t
    t4, t5 = t3 * t, t3 * t2
    H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5
    H1 = t - 6 * t3 + 8 * t4 - 3 * t5
    H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5)
    H3 = 10 * t3 - 15 * t4 + 6 * t5
    H4 = -4 * t3 + 7 * t4 - 3 * t5
    H5 = 0.5 * (t3 - 2 * t4 + t5)
    return H0 * y0 + h * H1 * d0 + h * h * H2 * dd0 + H3 * y1 + h * H4 * d1 + h * h * H5 * dd1


def _default_step(coeffs: JacobiCoefficients) -> float:
    # at least 2048 samples per 2*pi/|lam| window
    lam = max(coeffs.lam_max, 1e-12)
    return min(1e-3, 2 * math.pi / (lam * 2048))


def shoot(coeffs: JacobiCoefficients, length: float, step: Optional[float] = None) -> ShootingResult:
    """Integrate the two basis solutions of J(u) = 0 as one 8-dimensional RK4 system."""
    if not length > 0:
        raise ValueError("length must be positive")
    if length > coeffs.domain + 1e-12:
        raise ValueError(f"length {length} exceeds the coefficient domain {coeffs.domain}")
    h0 = step or _default_step(coeffs)
    n = max(1, math.ceil(length / h0 - 1e-9))
    h = length / n
    grid = np.linspace(0.0, length, 2 * n + 1)
    P, Pd, Q = (np.broadcast_to(np.asarray(v, dtype=float), grid.shape) for v in coeffs.evaluate(grid))

    # companion matrices of u'''' = -P u'' - P_dot u' - Q u at every half step
    A = np.zeros((2 * n + 1, 4, 4))
    A[:, 0, 1] = A[:, 1, 2] = A[:, 2, 3] = 1.0
    A[:, 3, 0], A[:, 3, 1], A[:, 3, 2] = -Q, -Pd, -P
    # RK4 on a linear system is multiplication by a per-step matrix
    A0, Am, A1 = A[0:-1:2], A[1::2], A[2::2]
    eye = np.eye(4)
    K1 = A0
    K2 = Am @ (eye + 0.5 * h * K1)
    K3 = Am @ (eye + 0.5 * h * K2)
    K4 = A1 @ (eye + h * K3)
    Phi = eye + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)

    Y = np.empty((n + 1, 4, 2))
    Y[0] = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    y = Y[0]
    for k in range(n):
        y = Phi[k] @ y
        Y[k + 1] = y
    F = np.einsum("kj,kjm->km", A[::2, 3, :], Y)
    return ShootingResult(grid[::2], Y, F)


@dataclass(frozen=True)
class ConjugatePoint:
    c: float
    multiplicity: int


RANK_TOL = 1e-8
TANGENCY_TOL = 1e-10


def _classify(res: ShootingResult, length: float, window: float):
    s, W = res.s, res.wronskian()
    norms = np.sqrt(np.sum(res.Y[:, :2, :] ** 2, axis=(1, 2)))
    scale = np.maximum.accumulate(norms)
    h = float(s[1] - s[0])

    def ref(c):
        return scale[min(int(np.searchsorted(s, c)), len(s) - 1)]

    def W_at(c):
        return float(np.linalg.det(res.matrix_at(c)))

    def sv(c):
        return np.linalg.svd(res.matrix_at(c), compute_uv=False)

    simple: list[float] = []
    double: list[float] = []
    tangent: list[float] = []
    ambiguous: list[float] = []
    for k in range(1, len(s) - 1):
        if W[k] == 0.0:
            simple.append(float(s[k]))
        elif W[k] * W[k + 1] < 0:
            simple.append(optimize.brentq(W_at, s[k], s[k + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))
        elif W[k - 1] * W[k] > 0 and abs(W[k]) <= abs(W[k - 1]) and abs(W[k]) <= abs(W[k + 1]):
            # |W| dips without changing sign: either a rank-2 drop or a tangency
            if abs(W[k]) > 1e2 * TANGENCY_TOL * scale[k] ** 2:
                continue
            lo, hi = s[k - 1], s[k + 1]
            c2 = optimize.minimize_scalar(lambda c: sv(c)[0], bounds=(lo, hi), method="bounded",
                                          options={"xatol": 1e-13}).x
            if sv(c2)[0] <= RANK_TOL * ref(c2):
                double.append(float(c2))
                continue
            c1 = optimize.minimize_scalar(lambda c: sv(c)[1], bounds=(lo, hi), method="bounded",
                                          options={"xatol": 1e-13}).x
            if sv(c1)[1] <= RANK_TOL * ref(c1):
                tangent.append(float(c1))
            elif abs(W_at(c1)) <= TANGENCY_TOL * ref(c1) ** 2:
                ambiguous.append(float(c1))

    # rounding near a double zero can add sign changes; those belong to the rank-2 point
    for c in list(simple):
        lo, hi = max(c - 2 * h, s[0]), min(c + 2 * h, s[-1])
        c2 = optimize.minimize_scalar(lambda t: sv(t)[0], bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-13}).x
        if sv(c2)[0] <= RANK_TOL * ref(c2) and not any(abs(c2 - d) < 2 * h for d in double):
            double.append(float(c2))
    radius = max(4 * h, 1e-3 * window)
    points = [ConjugatePoint(c, 2) for c in double]
    for c in simple + tangent:
        if any(abs(c - d) < radius for d in double):
            continue
        if points and any(abs(c - p.c) < 1e-9 * max(1.0, c) for p in points):
            continue
        points.append(ConjugatePoint(float(c), 1))
    points = sorted((p for p in points if 0.0 < p.c < length), key=lambda p: p.c)
    return points, ambiguous


def conjugate_points(
    coeffs: JacobiCoefficients, length: float, step: Optional[float] = None, max_refinements: int = 4
) -> list[ConjugatePoint]:
    """Conjugate points in (0, length): zeros of det [[u_a, u_b], [u_a', u_b']].

    Multiplicity is the rank deficiency of that matrix (singular values below
    1e-8 of the running solution scale).  Multiplicity-2 points are double
    zeros of the determinant and are found as tangencies, not sign changes.
    """
    h = step or _default_step(coeffs)
    for _ in range(max_refinements + 1):
        res = shoot(coeffs, length, h)
        points, ambiguous = _classify(res, length, 2 * math.pi / max(coeffs.lam_max, 1e-12))
        if not ambiguous:
            return points
        h /= 2
    raise RootIsolationFailure(
        f"could not decide near-zero Wronskian minima at {ambiguous} after {max_refinements} refinements"
    )


def index(coeffs: JacobiCoefficients, length: float, step: Optional[float] = None) -> int:
    """Morse index on [0, length]: conjugate points counted with multiplicity."""
    return sum(p.multiplicity for p in conjugate_points(coeffs, length, step))


@dataclass
class VariationField:
    s: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    V3: np.ndarray
    V4: np.ndarray
    V5: np.ndarray


def reconstruct_variation(profile: IndicatrixProfile, trace: GeodesicTrace, v3: Callable, s=None) -> VariationField:
    """Full variation (V1..V5) from V3; v3(s) returns (V3, V3', V3'', V3''').

    s is measured from the start of the trace; defaults to the trace samples.
    """
    if trace.profile != profile:
        raise ProfileMismatch(f"trace was integrated for {trace.profile}, not {profile}")
    s = trace.s - trace.s[0] if s is None else np.asarray(s, dtype=float)
    st = trace.state_at(s + trace.s[0])
    lam = st[4]
    t = heisenberg_table(profile, st[3], lam)
    v, v1, v2, v3_ = (np.broadcast_to(np.asarray(a, dtype=float), s.shape) for a in v3(s))
    I, I4, I41, J1, J2, K, A1, A2, S0, S2 = t.I, t.I_4, t.I_41, t.J1, t.J2, t.K, t.A1, t.A2, t.S0, t.S2
    V1 = -lam * v
    V2 = v1 + I * lam * v
    V4 = (
        -v2
        - 2 * I * lam * v1
        + (-(2 * I**2 + I4) * lam**2 - (2 * I * J1 + 2 * J2) * lam + (A1 - I * A2 - 0.5 * I**2 * K)) * v
    )
    V5 = (
        -v3_
        - (2 * I * lam + J1) * v2
        + (-(4 * I**2 + 3 * I4 + 1) * lam**2 - (8 * I * J1 + 6 * J2) * lam
           + (A1 - 3 * I * A2 - 1.5 * I**2 * K - K)) * v1
        + (
            -(4 * I**3 + 6 * I * I4 + I) * lam**3
            - (12 * I**2 * J1 + 5 * I4 * J1 + I41 + 2 * I * t.J1_4 + 8 * I * J2 + 2 * t.J2_4 + J1) * lam**2
            + (-3 * I * K * I4 - 3 * A2 * I4 + 2 * t.A1_4 + I**2 * t.A1_4 - 2 * I * t.A2_4 + 4 * A1 * I
               + 2 * I**3 * A1 + 3 * A2 - 2 * I**3 * K - 8 * I * J1**2 - 8 * J1 * J2 - 1.5 * I * K
               + 3 * S0 + 4 * I**2 * S0) * lam
            + (t.A1_1 - I * t.A2_1 - 0.5 * I**2 * t.K_1 + A1 * J1 - 4 * I * A2 * J1 - 3 * A2 * J2
               - 2.5 * I**2 * J1 * K - 2 * I * J2 * K + S2)
        ) * v
    )
    return VariationField(s, V1, V2, v.copy(), V4, V5)


def _fd5(f: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central first derivative on interior points (two dropped at each end)."""
    return (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)


def vdiffeqs_residual(profile: IndicatrixProfile, trace: GeodesicTrace, field: VariationField) -> float:
    """Max residual of the four first-order equations linking V1..V5 along the trace."""
    s = field.s
    h = float(s[1] - s[0])
    if not np.allclose(np.diff(s), h, rtol=1e-9, atol=0):
        raise ValueError("variation must be sampled on a uniform grid")
    st = trace.state_at(s + trace.s[0])
    lam = st[4]
    t = heisenberg_table(profile, st[3], lam)
    I, J1, J2, K, A1, A2, S0, S2 = t.I, t.J1, t.J2, t.K, t.A1, t.A2, t.S0, t.S2
    V1, V2, V3, V4, V5 = field.V1, field.V2, field.V3, field.V4, field.V5
    rhs = [
        -lam * V2 - (J1 * lam + A2 + 0.5 * I * K) * V3,
        -I * lam * V2 + (-J2 * lam + A1) * V3 - V4,
        V2 - I * lam * V3,
        (lam**2 + 2 * J2 * lam + K) * V2 + (J1 * lam**2 + (A2 + 0.5 * I * K - S0) * lam - S2) * V3
        - J1 * V4 + V5,
    ]
    lhs = [_fd5(V, h) for V in (V1, V2, V3, V4)]
    return float(max(np.max(np.abs(l - np.broadcast_to(r, s.shape)[2:-2])) for l, r in zip(lhs, rhs)))


def bilinear_form(coeffs: JacobiCoefficients, f: Callable, g: Callable, length: float, n: int = 8192) -> float:
    """Integral of f J(g) over [0, length] by Simpson's rule; f, g return derivatives 0..4."""
    s = np.linspace(0.0, length, n + 1)
    return float(integrate.simpson(f(s)[0] * jacobi_apply(coeffs, g, s), x=s))
