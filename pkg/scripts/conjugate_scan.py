"""Index of a geodesic as a function of length.

usage: python3 scripts/conjugate_scan.py KIND [--B 0.5] [--theta 0] [--lam 1] [--length 20]
"""
import argparse

from subfinsler.geodesics import GeodesicState, IntegratorSettings, integrate_geodesic
from subfinsler.indicatrix import IndicatrixProfile
from subfinsler.jacobi import conjugate_points, jacobi_coefficients


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("kind", choices=["flat", "randers", "limacon"])
    p.add_argument("--B", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--length", type=float, default=20.0)
    args = p.parse_args(argv)
    profile = IndicatrixProfile.randers(args.B) if args.kind == "randers" else IndicatrixProfile(args.kind)
    trace = integrate_geodesic(profile, GeodesicState(theta=args.theta, lam=args.lam),
                               IntegratorSettings(max_arclength=args.length + 1e-3))
    index = 0
    print(f"{'c':>14} {'mult':>4} {'index':>5}")
    for pt in conjugate_points(jacobi_coefficients(profile, trace), args.length):
        index += pt.multiplicity
        print(f"{pt.c:14.8f} {pt.multiplicity:4d} {index:5d}")
    print(f"index on [0, {args.length:g}]: {index}")


if __name__ == "__main__":
    main()
