"""Invariants of the adapted coframing and numerical checks of its structure equations.

Directional derivatives use one index set: f_k is the derivative along e_k, the
frame dual to (eta1, eta2, eta3, eta4); index 4 is the phi-direction.  Along a
geodesic lift on the extended bundle, e_1 is the geodesic flow, so f_1 = df/ds.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from math import pi, sqrt
from typing import Callable, Optional, Union

import numpy as np

from ._jets import Jet
from .errors import CaseMismatch, ConvexityViolation, SingularCoframe
from .indicatrix import IndicatrixProfile, torsion_I

__all__ = [
    "InvariantTable",
    "CoframeSample",
    "CASES",
    "heisenberg_I",
    "heisenberg_I_derivatives",
    "heisenberg_table",
    "heisenberg_coframe",
    "constant_I_coframe",
    "constant_I_table",
    "exterior_derivative",
    "structure_rhs",
    "structure_residual",
    "ObstructionReport",
    "constant_I_obstruction",
    "sample_structure_residuals",
]

CASES = ("hyperbolic", "oscillatory", "parabolic_plus", "parabolic_minus")


@dataclass(frozen=True)
class InvariantTable:
    I: float = 0.0
    K: float = 0.0
    A1: float = 0.0
    A2: float = 0.0
    J1: float = 0.0
    J2: float = 0.0
    S0: float = 0.0
    S1: float = 0.0
    S2: float = 0.0
    I_1: float = 0.0
    I_3: float = 0.0
    I_4: float = 0.0
    I_41: float = 0.0
    I_411: float = 0.0
    I_44: float = 0.0
    J1_1: float = 0.0
    J2_1: float = 0.0
    J1_4: float = 0.0
    J2_4: float = 0.0
    J1_41: float = 0.0
    J2_41: float = 0.0
    A1_1: float = 0.0
    A1_4: float = 0.0
    A1_41: float = 0.0
    A1_11: float = 0.0
    A2_1: float = 0.0
    A2_3: float = 0.0
    A2_4: float = 0.0
    A2_41: float = 0.0
    A2_11: float = 0.0
    K_1: float = 0.0
    K_3: float = 0.0
    K_11: float = 0.0
    S0_1: float = 0.0
    S0_4: float = 0.0
    S2_1: float = 0.0
    S2_4: float = 0.0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class CoframeSample:
    point: tuple[float, float, float, float]
    eta1: np.ndarray
    eta2: np.ndarray
    eta3: np.ndarray
    phi: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """Rows are the four forms in the cobasis (dx, dy, dz, dtheta)."""
        return np.vstack([self.eta1, self.eta2, self.eta3, self.phi])


def _check_convexity(r, r2, theta):
    conv = r * (r + r2)
    bad = np.asarray(conv) <= 0.0
    if np.any(bad):
        i = np.flatnonzero(np.ravel(bad))[0]
        raise ConvexityViolation(np.ravel(np.asarray(theta, float) + 0 * conv)[i], np.ravel(conv)[i])


def heisenberg_I(profile: IndicatrixProfile, theta):
    r, r1, r2, r3 = profile.derivatives(theta, 3)
    _check_convexity(r, r2, theta)
    out = torsion_I(r, r1, r2, r3)
    return float(out) if np.ndim(out) == 0 else out


def heisenberg_I_derivatives(profile: IndicatrixProfile, theta) -> tuple:
    """I and its successive phi-direction derivatives (I, I_4, I_44, I_444).

    phi = sqrt((r + r'')/r) dtheta, so each phi-derivative is sqrt(r/(r + r'')) d/dtheta.
    Computed with Taylor jets from exact derivatives of r up to sixth order.
    """
    d = profile.derivatives(theta, 6)
    _check_convexity(d[0], d[2], theta)
    r = Jet.from_derivatives(d)
    r1 = r.deriv()
    r2 = r1.deriv()
    r3 = r2.deriv()
    s = r + r2
    I = -0.5 * (r * r3 + 3.0 * r1 * r2 + 4.0 * r * r1) / (r.sqrt() * s * s.sqrt())
    g = (r / s).sqrt()
    I4 = g * I.deriv()
    I44 = g * I4.deriv()
    I444 = g * I44.deriv()
    return I.value(), I4.value(), I44.value(), I444.value()


def heisenberg_table(profile: IndicatrixProfile, theta, lam=0.0) -> InvariantTable:
    """Invariant table at fiber angle theta and multiplier lam.

    K, A, J, S vanish identically.  I depends on theta alone, so on the extended
    bundle its e_1-derivatives pick up the geodesic flow: I_1 = lam I_4,
    I_41 = lam I_44 and I_411 = lam^2 (I I_44 + I_444).  At lam = 0 only I,
    I_4 and I_44 are nonzero.
    """
    I, I4, I44, I444 = heisenberg_I_derivatives(profile, theta)
    lam = np.asarray(lam, dtype=float)
    scalar = np.ndim(I) == 0 and lam.ndim == 0
    conv = float if scalar else np.asarray
    return InvariantTable(
        I=conv(I),
        I_4=conv(I4),
        I_44=conv(I44),
        I_1=conv(lam * I4),
        I_41=conv(lam * I44),
        I_411=conv(lam**2 * (I * I44 + I444)),
    )


def heisenberg_coframe(profile: IndicatrixProfile, point) -> CoframeSample:
    x, y, z, th = (float(v) for v in point)
    r, r1, r2, _ = profile.derivatives(th, 3)
    _check_convexity(r, r2, th)
    c, s = np.cos(th), np.sin(th)
    w = sqrt(r * (r + r2))
    contact = np.array([-0.5 * y, 0.5 * x, 1.0, 0.0])
    return CoframeSample(
        point=(x, y, z, th),
        eta1=np.array([r * c - r1 * s, -(r * s + r1 * c), 0.0, 0.0]),
        eta2=np.array([w * s, w * c, 0.0, 0.0]),
        eta3=r ** 1.5 * sqrt(r + r2) * contact,
        phi=np.array([0.0, 0.0, 0.0, sqrt((r + r2) / r)]),
    )


def _require_case(I: float, case: str):
    if case not in CASES:
        raise CaseMismatch(f"unknown case {case!r}; expected one of {CASES}")
    ok = {
        "hyperbolic": I * I > 4.0,
        "oscillatory": I * I < 4.0,
        "parabolic_plus": I == 2.0,
        "parabolic_minus": I == -2.0,
    }[case]
    if not ok:
        raise CaseMismatch(f"I = {I} is inconsistent with case {case!r}")


def constant_I_coframe(I: float, case: str, point) -> CoframeSample:
    """Explicit coframes with constant I (and K = 0), integration constants set to 1."""
    I = float(I)
    _require_case(I, case)
    x, y, z, th = (float(v) for v in point)
    contact = np.array([-0.5 * y, 0.5 * x, 1.0, 0.0])
    phi = np.array([0.0, 0.0, 0.0, 1.0])
    if case == "hyperbolic":
        root = sqrt(I * I - 4.0)
        r1, r2 = 0.5 * (-I + root), 0.5 * (-I - root)
        e1, e2 = np.exp(r1 * th), np.exp(r2 * th)
        eta1 = np.array([e1, e2, 0.0, 0.0])
        eta2 = np.array([-r1 * e1, -r2 * e2, 0.0, 0.0])
        eta3 = np.exp(-I * th) * root * contact
    elif case == "oscillatory":
        r = 0.5 * sqrt(4.0 - I * I)
        c, s = np.cos(r * th), np.sin(r * th)
        damp = np.exp(-0.5 * I * th)
        eta1 = damp * np.array([c, s, 0.0, 0.0])
        # 2r below; the single-r version does not solve f' = -g, g' = f - I g
        eta2 = 0.5 * damp * np.array([I * c + 2 * r * s, I * s - 2 * r * c, 0.0, 0.0])
        eta3 = -r * np.exp(-I * th) * contact
    elif case == "parabolic_plus":
        e = np.exp(-th)
        eta1 = e * np.array([1.0 + th, -th, 0.0, 0.0])
        eta2 = e * np.array([th, 1.0 - th, 0.0, 0.0])
        eta3 = np.exp(-2.0 * th) * contact
    else:
        e = np.exp(th)
        eta1 = e * np.array([1.0 - th, -th, 0.0, 0.0])
        eta2 = e * np.array([th, 1.0 + th, 0.0, 0.0])
        eta3 = np.exp(2.0 * th) * contact
    return CoframeSample((x, y, z, th), eta1, eta2, eta3, phi)


def constant_I_table(I: float) -> InvariantTable:
    return InvariantTable(I=float(I))


def _wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.outer(a, b) - np.outer(b, a)


def structure_rhs(sample: CoframeSample, t: InvariantTable) -> np.ndarray:
    """Right-hand sides of the general structure equations as antisymmetric 4x4 arrays."""
    e1, e2, e3, ph = sample.eta1, sample.eta2, sample.eta3, sample.phi
    IK = t.I * t.K
    d1 = (
        _wedge(e2, ph)
        + t.A1 * _wedge(e2, e3)
        + (t.A2 + 0.5 * IK) * _wedge(e3, e1)
        + t.J1 * _wedge(e3, ph)
    )
    d2 = (
        -_wedge(e1, ph)
        + (t.A2 - 0.5 * IK) * _wedge(e2, e3)
        - t.A1 * _wedge(e3, e1)
        + t.J2 * _wedge(e3, ph)
        + t.I * _wedge(e2, ph)
    )
    d3 = _wedge(e1, e2) + t.I * _wedge(e3, ph)
    d4 = (
        t.S0 * _wedge(e3, ph)
        + t.S1 * _wedge(e2, e3)
        + t.S2 * _wedge(e3, e1)
        - t.J1 * _wedge(e1, ph)
        - 2.0 * t.J2 * _wedge(e2, ph)
        + t.K * _wedge(e1, e2)
    )
    return np.stack([d1, d2, d3, d4])


def exterior_derivative(coframe: Callable, point, fd_step: float = 1e-5) -> np.ndarray:
    """d of each form by central differences; result[a, i, j] is the dx^i ^ dx^j coefficient."""
    p = np.asarray(point, dtype=float)
    grad = np.empty((4, 4, 4))  # form, derivative direction, component
    for j in range(4):
        dp = np.zeros(4)
        dp[j] = fd_step
        plus = coframe(p + dp).matrix
        minus = coframe(p - dp).matrix
        grad[:, j, :] = (plus - minus) / (2.0 * fd_step)
    return grad - grad.transpose(0, 2, 1)


def structure_residual(
    coframe: Callable,
    table: Union[InvariantTable, Callable],
    point,
    fd_step: float = 1e-5,
) -> float:
    if not (1e-7 <= fd_step <= 1e-3):
        raise ValueError("fd_step must lie in [1e-7, 1e-3]")
    sample = coframe(np.asarray(point, dtype=float))
    M = sample.matrix
    if np.linalg.cond(M) > 1e12:
        raise SingularCoframe(f"coframe is not invertible at {tuple(point)}")
    t = table(point) if callable(table) else table
    lhs = exterior_derivative(coframe, point, fd_step)
    rhs = structure_rhs(sample, t)
    iu = np.triu_indices(4, 1)
    return float(np.max(np.abs((lhs - rhs)[:, iu[0], iu[1]])))


@dataclass(frozen=True)
class ObstructionReport:
    I: float
    fiber_average: float
    periodic: bool
    compatible: bool
    message: str


def constant_I_obstruction(I: float, case: str, point=(0.3, -0.2, 0.1, 0.4)) -> ObstructionReport:
    """Decide whether a constant-I coframe can come from a closed, strongly convex indicatrix.

    The fiber average of a constant I over one turn of phi = dtheta is 2*pi*I, and
    it must vanish for a genuine indicatrix.  Periodicity of the coframe in theta
    is checked as a second witness.
    """
    _require_case(float(I), case)
    avg = 2.0 * pi * float(I)
    p = np.asarray(point, dtype=float)
    shifted = p + np.array([0.0, 0.0, 0.0, 2.0 * pi])
    periodic = bool(np.allclose(
        constant_I_coframe(I, case, p).matrix, constant_I_coframe(I, case, shifted).matrix,
        rtol=1e-9, atol=1e-12,
    ))
    compatible = avg == 0.0 and periodic
    if compatible:
        msg = "constant I = 0 is compatible with a closed indicatrix"
    else:
        msg = (
            f"I = {I} has fiber average {avg:.6g} != 0 and the coframe is "
            f"{'periodic' if periodic else 'not periodic'} in theta; incompatible with "
            "a closed indicatrix"
        )
    return ObstructionReport(float(I), avg, periodic, compatible, msg)


def sample_structure_residuals(
    case: str,
    I: float = 0.0,
    profile: Optional[IndicatrixProfile] = None,
    count: int = 50,
    rng: Optional[np.random.Generator] = None,
    fd_step: float = 1e-5,
) -> np.ndarray:
    """Structure-equation residuals at random points.

    case is one of CASES (constant I, points drawn from the cube [-1, 1]^4) or
    "heisenberg" (the coframe of profile, theta drawn from [-pi, pi]).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    pts = rng.uniform(-1.0, 1.0, size=(count, 4))
    if case == "heisenberg":
        if profile is None:
            raise ValueError("the heisenberg case needs a profile")
        pts[:, 3] *= pi
        coframe = lambda p: heisenberg_coframe(profile, p)  # noqa: E731
        table = lambda p: heisenberg_table(profile, p[3])  # noqa: E731
    else:
        _require_case(float(I), case)
        coframe = lambda p: constant_I_coframe(I, case, p)  # noqa: E731
        table = constant_I_table(I)
    return np.array([structure_residual(coframe, table, p, fd_step) for p in pts])
