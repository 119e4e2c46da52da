"""Command-line entry point.

Exit codes: 0 success, 1 usage or config error, 2 domain error during the
computation, 3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import plotting
from .config import ConfigError, RunConfig
from .errors import SubFinslerError
from .geodesics import (
    IntegratorSettings,
    closed_form_deviation,
    integrate_geodesic,
    projection_closure,
    read_trace_csv,
    theta_period_arclength,
    write_trace_csv,
)
from .indicatrix import check_strong_convexity, rund_average
from .invariants import heisenberg_I_derivatives, sample_structure_residuals
from .jacobi import conjugate_points, jacobi_coefficients
from .oracle import (
    DiscreteHorizontalPath,
    dido_direct_search,
    dido_stationarity,
    finsler_length,
    read_loop_csv,
    write_loop_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subfinsler", description="Sub-Finsler geometry on the Heisenberg group.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [
        ("invariants", "tabulate I and I_4, the fiber average, and convexity"),
        ("geodesic", "integrate geodesics and write traces"),
        ("conjugate", "conjugate points and index along a geodesic"),
        ("verify", "run a verification suite (structure, conserved, oracle, dido)"),
        ("dido", "isoperimetric stationarity or direct search"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--svg", action="store_true", help="also write SVG plots")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--seed", type=_u64, default=None, help="override the config seed")
    return parser


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, str)) else f"{v:.10g}" for v in row])


def _trace_for(profile, ic, length: Optional[float], step: float = 1e-3, tolerance=None, margin: float = 0.0):
    if length is None:
        if ic.lam == 0:
            raise UsageError("lambda = 0 gives no theta period; set an explicit length")
        length = theta_period_arclength(profile, ic.theta, ic.lam)
    return integrate_geodesic(profile, ic.state(), IntegratorSettings(step, tolerance, length + margin))


def cmd_invariants(cfg: RunConfig, out: Path, svg: bool, seed: int) -> int:
    profile = cfg.metric
    report = check_strong_convexity(profile)
    if not report.ok:
        print(f"strong convexity fails at theta={report.argmin:.10g} (r(r + r'') = {report.min_value:.6g})",
              file=sys.stderr)
        return EXIT_DOMAIN
    n = cfg.section("invariants").grid
    theta = 2 * math.pi * np.arange(n) / n
    I, I4, _, _ = heisenberg_I_derivatives(profile, theta)
    _write_csv(out / "invariants.csv", ("theta", "I", "I4"), zip(theta, I, I4))
    print(f"{'theta':>12} {'I':>16} {'I_4':>16}")
    for row in zip(theta, I, I4):
        print(" ".join(f"{v:16.10g}" for v in row))
    print(f"fiber average of I: {rund_average(profile):.3e}")
    print(f"convexity: min r(r + r'') = {report.min_value:.10g} at theta = {report.argmin:.10g}")
    return EXIT_OK


def cmd_geodesic(cfg: RunConfig, out: Path, svg: bool, seed: int) -> int:
    profile = cfg.metric
    gc = cfg.section("geodesic")
    paths = []
    for i, ic in enumerate(gc.initial):
        trace = _trace_for(profile, ic, gc.length, gc.step, gc.tolerance)
        path = out / f"geodesic_{i}.csv"
        write_trace_csv(trace, path)
        paths.append(path)
        line = f"geodesic {i}: length {trace.length:.10g}, conserved drift {trace.conserved_drift():.3e}"
        if gc.length is None:
            c = projection_closure(_trace_for(profile, ic, None, gc.step, gc.tolerance, margin=0.5))
            line += f", closure gap {c.gap:.3e}, area {c.enclosed_area:.10g}, z gain {c.z_gain:.10g}"
        print(line)
    if svg:
        render_trace_svgs(paths, out)
    return EXIT_OK


def render_trace_svgs(csv_paths: Sequence[Path], out: Path) -> tuple[Path, Path]:
    """Projection and axonometric plots, computed from the CSV files alone."""
    data = [read_trace_csv(p) for p in csv_paths]
    xy, ax = out / "geodesic_xy.svg", out / "geodesic_3d.svg"
    xy.write_text(plotting.projection_svg(data))
    ax.write_text(plotting.axonometric_svg(data))
    return xy, ax


def cmd_conjugate(cfg: RunConfig, out: Path, svg: bool, seed: int) -> int:
    profile = cfg.metric
    cc = cfg.section("conjugate")
    trace = _trace_for(profile, cc.initial, cc.length, margin=1e-3)
    points = conjugate_points(jacobi_coefficients(profile, trace), cc.length, cc.step)
    _write_csv(out / "conjugate.csv", ("c", "multiplicity"), [(p.c, p.multiplicity) for p in points])
    for p in points:
        print(f"conjugate point c = {p.c:.10g}, multiplicity {p.multiplicity}")
    if not points:
        print("no conjugate points")
    print(f"index on [0, {cc.length:g}]: {sum(p.multiplicity for p in points)}")
    return EXIT_OK


def _default_initials(profile, vc):
    if vc.initial is not None:
        return vc.initial
    from .config import InitialCondition

    lam = 1.0 if profile.kind == "limacon" else 0.3
    return tuple(InitialCondition(theta=t, lam=lam) for t in (0.0, math.pi / 2, math.pi))


def cmd_verify(cfg: RunConfig, out: Path, svg: bool, seed: int) -> int:
    profile = cfg.metric
    vc = cfg.section("verify")
    tol = vc.threshold()
    rng = np.random.default_rng(seed)
    results: list[tuple[str, float]] = []
    if vc.suite == "structure":
        if vc.case == "heisenberg":
            r = sample_structure_residuals("heisenberg", profile=profile, count=vc.points, rng=rng,
                                           fd_step=vc.fd_step)
            results.append((f"heisenberg {profile.kind}", float(r.max())))
        else:
            for I in vc.I:
                r = sample_structure_residuals(vc.case, I, count=vc.points, rng=rng, fd_step=vc.fd_step)
                results.append((f"{vc.case} I={I:g}", float(r.max())))
    elif vc.suite == "conserved":
        from .config import InitialCondition

        inits = list(vc.initial or ())
        for _ in range(0 if vc.initial else vc.random_initial):
            x, y, z = rng.uniform(-1, 1, 3)
            lam = rng.uniform(0.1, 2.0) * rng.choice([-1.0, 1.0])
            inits.append(InitialCondition(x, y, z, rng.uniform(0, 2 * math.pi), lam))
        for ic in inits:
            trace = _trace_for(profile, ic, vc.length)
            results.append((f"theta0={ic.theta:.6g} lambda0={ic.lam:.6g}", trace.conserved_drift()))
    elif vc.suite == "oracle":
        for ic in _default_initials(profile, vc):
            trace = _trace_for(profile, ic, None)
            results.append((f"theta0={ic.theta:.6g} lambda0={ic.lam:.6g}", closed_form_deviation(trace)))
    else:
        for ic in _default_initials(profile, vc):
            trace = _trace_for(profile, ic, None, margin=0.5)
            rep = dido_stationarity(profile, trace, vc.perturbations, vc.epsilon, seed)
            results.append((f"theta0={ic.theta:.6g} lambda0={ic.lam:.6g}", rep.max_first_order_defect))
    bad = [(name, v) for name, v in results if not v < tol]
    for name, v in results:
        print(f"{'ok  ' if v < tol else 'FAIL'} {vc.suite} {name}: {v:.3e} (tolerance {tol:.1e})")
    if bad:
        print("verification failed: " + ", ".join(name for name, _ in bad), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_dido(cfg: RunConfig, out: Path, svg: bool, seed: int) -> int:
    profile = cfg.metric
    dc = cfg.section("dido")
    if dc.mode == "stationarity":
        for i, ic in enumerate(dc.initial):
            trace = _trace_for(profile, ic, None, margin=0.5)
            rep = dido_stationarity(profile, trace, dc.perturbations, dc.epsilon, seed, dc.nodes)
            print(f"loop {i}: length {rep.base_length:.10g}, area {rep.area:.10g}, "
                  f"max first-order defect {rep.max_first_order_defect:.3e}")
        return EXIT_OK
    ic = dc.initial[0]
    reference = None
    area = dc.area
    if area is None:
        trace = _trace_for(profile, ic, None, margin=0.5)
        reference = DiscreteHorizontalPath.from_trace(trace, 2048)
        area = abs(reference.signed_area)
    clockwise = dc.clockwise if dc.clockwise is not None else ic.lam > 0
    loop = dido_direct_search(profile, area, dc.node_count, clockwise)
    write_loop_csv(loop, out / "dido_loop.csv")
    print(f"direct search: area {area:.10g}, Finsler length {finsler_length(profile, loop):.10g}")
    if reference is not None:
        print(f"geodesic projection: Finsler length {finsler_length(profile, reference):.10g}")
    if svg:
        loop = read_loop_csv(out / "dido_loop.csv")
        (out / "dido_loop.svg").write_text(plotting.loop_svg([loop.nodes], "direct search"))
    return EXIT_OK


COMMANDS = {
    "invariants": cmd_invariants,
    "geodesic": cmd_geodesic,
    "conjugate": cmd_conjugate,
    "verify": cmd_verify,
    "dido": cmd_dido,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    seed = cfg.seed if args.seed is None else args.seed
    try:
        return COMMANDS[args.command](cfg, out, args.svg, seed)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SubFinslerError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
