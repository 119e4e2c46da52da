"""Regenerate the geodesic figures (CSV and SVG) from the bundled configs.

usage: python3 scripts/reproduce_figures.py [output_dir]
"""
import sys
from pathlib import Path

from subfinsler.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(out_root: Path) -> int:
    worst = 0
    for name in ("figure1_randers", "figure2_flat", "figure3_limacon"):
        out = out_root / name
        print(f"== {name} -> {out}")
        worst = max(worst, main(["geodesic", "--config", str(CONFIGS / f"{name}.json"), "--out", str(out), "--svg"]))
    return worst


if __name__ == "__main__":
    sys.exit(run(Path(sys.argv[1] if len(sys.argv) > 1 else "figures")))
