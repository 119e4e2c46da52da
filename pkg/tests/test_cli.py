import csv
import json
import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from subfinsler.cli import main, render_trace_svgs
from subfinsler.geodesics import read_trace_csv

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(tmp_path, cfg, command, *extra):
    if isinstance(cfg, dict):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
    else:
        path = CONFIGS / cfg
    out = tmp_path / "out"
    return main([command, "--config", str(path), "--out", str(out), *extra]), out


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_invariants_flat(tmp_path):
    code, out = run(tmp_path, {"metric": {"kind": "flat"}}, "invariants")
    assert code == 0
    rows = read_rows(out / "invariants.csv")
    assert rows[0] == ["theta", "I", "I4"]
    assert len(rows) == 65
    assert all(float(r[1]) == 0.0 for r in rows[1:])


def test_invariants_randers(tmp_path, capsys):
    code, out = run(tmp_path, "invariants_randers.json", "invariants")
    assert code == 0
    data = np.array(read_rows(out / "invariants.csv")[1:], dtype=float)
    th = data[:, 0]
    assert np.allclose(data[:, 1], 1.5 * np.sin(th) / (2 * np.sqrt(1 + 0.5 * np.cos(th))), rtol=1e-9, atol=1e-9)  # theta is stored to 10 digits
    assert "fiber average" in capsys.readouterr().out


def test_invariants_convexity_failure(tmp_path, capsys):
    code, _ = run(tmp_path, {"metric": {"kind": "fourier", "a": [1, 0, 0, 0, 0.2]}}, "invariants")
    assert code == 2
    assert "theta=" in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"metric": {"kind": "flat"')
    assert main(["invariants", "--config", str(bad)]) == 1
    assert "invalid JSON" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [
    {"metric": {"kind": "flat"}, "colour": 1},
    {"metric": {"kind": "flat", "B": 1}},
    {"metric": {"kind": "flat"}, "geodesic": {"initial": {"theta": 0, "lam": 1}}},
    {"metric": {"kind": "flat"}, "verify": {"suite": "everything"}},
    {"metric": {"kind": "flat"}, "seed": -1},
    {"seed": 1},
])
def test_config_errors_are_usage_errors(tmp_path, cfg):
    assert run(tmp_path, cfg, "geodesic")[0] == 1


def test_missing_config_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["geodesic"])
    assert exc.value.code == 1


def test_bad_seed_flag(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, {"metric": {"kind": "flat"}}, "invariants", "--seed", "-3")
    assert exc.value.code == 1


def test_missing_config_file(tmp_path):
    assert main(["invariants", "--config", str(tmp_path / "nope.json")]) == 1


def test_straight_line_needs_length(tmp_path):
    cfg = {"metric": {"kind": "flat"}, "geodesic": {"initial": {"lambda": 0.0}}}
    assert run(tmp_path, cfg, "geodesic")[0] == 1
    cfg["geodesic"]["length"] = 3.0
    code, out = run(tmp_path, cfg, "geodesic")
    assert code == 0
    assert read_trace_csv(out / "geodesic_0.csv")[-1, 1] == pytest.approx(3.0)


def test_step_underflow_is_a_domain_error(tmp_path):
    cfg = {"metric": {"kind": "fourier", "a": [1, 0, 0, 0, 1 / 15]},
           "geodesic": {"initial": {"theta": 0.3, "lambda": -1}, "length": 20, "tolerance": 1e-10}}
    assert run(tmp_path, cfg, "geodesic")[0] == 2


def circle_fit(x, y):
    A = np.column_stack([x, y, np.ones_like(x)])
    (a, b, c), *_ = np.linalg.lstsq(A, x**2 + y**2, rcond=None)
    cx, cy = a / 2, b / 2
    R = math.sqrt(c + cx**2 + cy**2)
    return R, np.max(np.abs(np.hypot(x - cx, y - cy) - R))


def test_geodesic_figure1(tmp_path):
    code, out = run(tmp_path, "figure1_randers.json", "geodesic", "--svg")
    assert code == 0
    for i, th in enumerate((0.0, math.pi / 2, math.pi)):
        data = read_trace_csv(out / f"geodesic_{i}.csv")
        R, dev = circle_fit(data[:, 1], data[:, 2])
        assert R == pytest.approx(1 / (0.3 * math.sqrt((1 + 0.5 * math.cos(th)) ** 3)), rel=1e-7)
        assert dev < 1e-6
    for name in ("geodesic_xy.svg", "geodesic_3d.svg"):
        root = ET.parse(out / name).getroot()
        assert root.tag.endswith("svg")
        assert len([e for e in root if e.tag.endswith("polyline")]) == 3


def test_geodesic_figure2_flat(tmp_path):
    code, out = run(tmp_path, "figure2_flat.json", "geodesic")
    assert code == 0
    for f in sorted(out.glob("geodesic_*.csv")):
        data = read_trace_csv(f)
        R, dev = circle_fit(data[:, 1], data[:, 2])
        assert R == pytest.approx(1 / 0.3, rel=1e-8)


def test_geodesic_figure3_limacon_is_not_a_conic(tmp_path):
    code, out = run(tmp_path, "figure3_limacon.json", "geodesic")
    assert code == 0
    data = read_trace_csv(out / "geodesic_0.csv")
    x, y = data[:, 1], data[:, 2]
    # best general conic through the points leaves a clear residual
    M = np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
    sv = np.linalg.svd(M / np.linalg.norm(M, axis=0), compute_uv=False)
    assert sv[-1] / sv[0] > 1e-4
    _, dev = circle_fit(x, y)
    assert dev > 1e-2


def test_svg_is_a_pure_function_of_the_csv(tmp_path):
    code, out = run(tmp_path, "figure1_randers.json", "geodesic", "--svg")
    assert code == 0
    first = [(out / n).read_bytes() for n in ("geodesic_xy.svg", "geodesic_3d.svg")]
    again = tmp_path / "again"
    again.mkdir()
    render_trace_svgs(sorted(out.glob("geodesic_*.csv")), again)
    assert [(again / n).read_bytes() for n in ("geodesic_xy.svg", "geodesic_3d.svg")] == first


def test_runs_are_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert run(a, "figure3_limacon.json", "geodesic", "--svg")[0] == 0
    assert run(b, "figure3_limacon.json", "geodesic", "--svg")[0] == 0
    for f in sorted((a / "out").iterdir()):
        assert f.read_bytes() == (b / "out" / f.name).read_bytes()


def test_conjugate_flat_length_10(tmp_path, capsys):
    code, out = run(tmp_path, "conjugate_flat.json", "conjugate")
    assert code == 0
    rows = read_rows(out / "conjugate.csv")
    assert rows[0] == ["c", "multiplicity"]
    assert [float(r[0]) for r in rows[1:]] == pytest.approx([2 * math.pi, 8.986818916], abs=1e-8)
    assert [r[1] for r in rows[1:]] == ["1", "1"]
    assert "index on [0, 10]: 2" in capsys.readouterr().out


@pytest.mark.parametrize("lam,length", [(1.0, 6.0), (0.0, 100.0)])
def test_conjugate_none(tmp_path, capsys, lam, length):
    cfg = {"metric": {"kind": "flat"}, "conjugate": {"initial": {"lambda": lam}, "length": length}}
    code, out = run(tmp_path, cfg, "conjugate")
    assert code == 0
    assert read_rows(out / "conjugate.csv") == [["c", "multiplicity"]]
    assert ": 0" in capsys.readouterr().out


@pytest.mark.parametrize("cfg", ["verify_structure_hyperbolic.json", "verify_conserved_randers.json",
                                 "verify_oracle_limacon.json", "verify_dido_randers.json"])
def test_verify_suites_pass(tmp_path, capsys, cfg):
    code, _ = run(tmp_path, cfg, "verify")
    text = capsys.readouterr().out
    assert code == 0
    assert "FAIL" not in text and "ok" in text


def test_verify_heisenberg_structure(tmp_path):
    cfg = {"metric": {"kind": "limacon"}, "verify": {"suite": "structure"}}
    assert run(tmp_path, cfg, "verify")[0] == 0


def test_verify_failure_exit_code(tmp_path, capsys):
    cfg = {"metric": {"kind": "randers", "B": 0.5},
           "verify": {"suite": "oracle", "tolerance": 1e-15}}
    assert run(tmp_path, cfg, "verify")[0] == 3
    captured = capsys.readouterr()
    assert "FAIL" in captured.out and "verification failed" in captured.err


def test_verify_oracle_on_fourier_is_a_domain_error(tmp_path):
    cfg = {"metric": {"kind": "fourier", "a": [1, 0, 0.05]}, "verify": {"suite": "oracle"}}
    assert run(tmp_path, cfg, "verify")[0] == 2


def test_verify_seed_flag(tmp_path, capsys):
    cfg = {"metric": {"kind": "flat"}, "verify": {"suite": "conserved", "random_initial": 2, "length": 2.0}}
    run(tmp_path, cfg, "verify", "--seed", "11")
    a = capsys.readouterr().out
    run(tmp_path, cfg, "verify", "--seed", "11")
    b = capsys.readouterr().out
    run(tmp_path, cfg, "verify", "--seed", "12")
    c = capsys.readouterr().out
    assert a == b != c


def test_dido_stationarity(tmp_path, capsys):
    cfg = {"metric": {"kind": "randers", "B": 0.5}, "dido": {"initial": [{"lambda": 0.3}, {"theta": 1.0, "lambda": -0.5}]}}
    assert run(tmp_path, cfg, "dido")[0] == 0
    assert capsys.readouterr().out.count("max first-order defect") == 2


def test_dido_search(tmp_path):
    cfg = {"metric": {"kind": "flat"}, "dido": {"mode": "search", "area": math.pi, "node_count": 64}}
    code, out = run(tmp_path, cfg, "dido", "--svg")
    assert code == 0
    nodes = np.array(read_rows(out / "dido_loop.csv")[1:], dtype=float)
    assert nodes.shape == (64, 2)
    assert np.allclose(np.hypot(nodes[:, 0], nodes[:, 1]), np.hypot(*nodes[0]), rtol=1e-3)
    assert ET.parse(out / "dido_loop.svg").getroot().tag.endswith("svg")
