import csv
import json
import math

import numpy as np
import pytest

from planarks import cli, runs
from planarks.config import parse_config
from planarks.errors import NumericalFailure

BENCH = """
[device.layer.1]
thickness = 1
[particles]
N = 1
q = 1
[grid]
n = 200
"""

TWO_LAYER = """
[device.layer.1]
thickness = 0.5
mass = 1
eps = 1
[device.layer.2]
thickness = 0.5
mass = 2
eps = 3
band_offset = 4
[particles]
N = 2
[grid]
n = 100
"""


def write(tmp_path, text, name="dev.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_solve_round_trip(tmp_path):
    cfg = write(tmp_path, BENCH)
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    with open(tmp_path / "o" / "profile.csv") as fh:
        header = fh.readline().strip()
        first = fh.readline().strip().split(",")
    assert header == "x,u,phi,v_eff"
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    for key in ("mu", "eigenvalues", "occupations", "iterations", "converged", "residual_history"):
        assert key in summary
    assert summary["converged"] is True
    assert "margin" in summary["checks"]["apriori"]
    prof = runs.read_profile(tmp_path / "o" / "profile.csv")
    x, u, phi = prof["x"], prof["u"], prof["phi"]
    integral = float(np.sum(0.5 * np.diff(x) * (u[:-1] + u[1:])))
    assert abs(integral - 1) <= 1e-8
    assert integral == pytest.approx(summary["integral_u"], abs=1e-10)
    phi_l2 = math.sqrt(float(np.sum(0.5 * np.diff(x) * (phi[:-1] ** 2 + phi[1:] ** 2))))
    assert phi_l2 == pytest.approx(summary["phi_l2"], abs=1e-10)
    # 17 significant digits survive the text round trip exactly
    assert all(float(format(float(v), ".17g")) == float(v) for v in first)


def test_solve_is_deterministic(tmp_path):
    cfg = write(tmp_path, BENCH)
    for d in ("a", "b"):
        assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    for name in ("profile.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_decoupled_v_eff_is_band_offset(tmp_path):
    cfg = write(tmp_path, TWO_LAYER.replace("N = 2", "N = 2\nq = 0"))
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    prof = runs.read_profile(tmp_path / "o" / "profile.csv")
    device = parse_config(cfg.read_text()).device()
    assert np.array_equal(prof["v_eff"], device.band_offset_nodal)


def test_exit_codes(tmp_path, monkeypatch, capsys):
    bad = write(tmp_path, "[device.layer.1]\nthickness = 0.5\n", "bad.ini")
    assert cli.main(["solve", "--config", str(bad), "--out", str(tmp_path / "x")]) == 3
    assert "thickness" in capsys.readouterr().err
    slow = write(tmp_path, BENCH + "[scf]\nmax_iter = 2\n", "slow.ini")
    assert cli.main(["solve", "--config", str(slow), "--out", str(tmp_path / "s")]) == 2
    summary = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert summary["converged"] is False

    def boom(cfg):
        raise NumericalFailure("non-finite density")

    monkeypatch.setattr(runs, "solve_config", boom)
    good = write(tmp_path, BENCH)
    assert cli.main(["solve", "--config", str(good), "--out", str(tmp_path / "n")]) == 4


def read_sweep(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_single_point_sweep_matches_solve(tmp_path):
    cfg = write(tmp_path, BENCH)
    cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "solo")])
    cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "sw"), "--param", "N", "--values", "1"])
    for name in ("profile.csv", "summary.json"):
        assert (tmp_path / "solo" / name).read_bytes() == (tmp_path / "sw" / "point_000" / name).read_bytes()


def test_particle_sweep_mu_increasing(tmp_path):
    cfg = write(tmp_path, BENCH)
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "sw"),
                     "--param", "N", "--values", "1,2,3", "--workers", "2"]) == 0
    rows = read_sweep(tmp_path / "sw" / "sweep.csv")
    mu = [float(r["mu"]) for r in rows]
    assert mu[0] < mu[1] < mu[2]
    assert all(r["converged"] == "True" for r in rows)
    assert {"lambda_1", "lambda_5", "u_max", "iterations"} <= set(rows[0])


def test_parallel_sweep_equals_serial(tmp_path):
    cfg = write(tmp_path, BENCH)
    args = ["--param", "q", "--values", "0,0.5,1"]
    cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a"), *args])
    cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "b"), *args, "--workers", "3"])
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_temperature_sweep_distances(tmp_path):
    heavy = BENCH.replace("thickness = 1", "thickness = 1\nmass = 40")
    cfg = write(tmp_path, heavy)
    values = ",".join(str(2.0 ** -k) for k in range(0, 8))
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "t"),
                     "--param", "kT", "--values", values]) == 0
    rows = read_sweep(tmp_path / "t" / "sweep.csv")
    d = [float(r["dist_u_l1"]) for r in rows]
    tail = [x for x in d if x > 1e-8]
    assert len(tail) >= 3
    assert all(b < a for a, b in zip(tail, tail[1:]))


def test_sweep_records_failures(tmp_path):
    cfg = write(tmp_path, BENCH)
    code = cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "f"),
                     "--param", "xc.C", "--values", "1,-1"])
    rows = read_sweep(tmp_path / "f" / "sweep.csv")
    assert rows[0]["error"] == "" and rows[1]["error"] != ""
    assert code == 4


def test_invalid_sweep_parameter(tmp_path):
    cfg = write(tmp_path, BENCH)
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "f"),
                     "--param", "grid.spacing", "--values", "1"]) == 3


def test_verify_trace_only_runs_no_solves(tmp_path, monkeypatch):
    def forbidden(*a, **k):
        raise AssertionError("PDE solve in trace-only verification")

    monkeypatch.setattr(runs, "solve_scf", forbidden)
    monkeypatch.setattr(runs.DeviceConfig, "device", forbidden)
    cfg = parse_config(BENCH)
    report = runs.run_verify(cfg, ["trace"], seed=1, trials=20)
    assert report["checks"]["trace"]["status"] == "pass"
    assert "gamma" in report["constants"]


def test_verify_full_suite(tmp_path):
    cfg = write(tmp_path, BENCH)
    assert cli.main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v"),
                     "--seed", "3", "--trials", "15"]) == 0
    report = json.loads((tmp_path / "v" / "verify.json").read_text())
    assert report["all_passed"]
    assert set(report["checks"]) == set(runs.SUITES)
    for key in ("gamma", "M", "rho_v_min"):
        assert key in report["constants"]
    assert report["constants"]["gamma"] == pytest.approx(math.sqrt(2))
    for res in report["checks"].values():
        assert res["status"] in ("pass", "inconclusive", "fail")


def test_verify_unknown_check(tmp_path):
    cfg = write(tmp_path, BENCH)
    assert cli.main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v"), "--checks", "magic"]) == 3


def test_convergence_bare_well(tmp_path):
    cfg = parse_config(BENCH.replace("q = 1", "q = 0"))
    rows = runs.convergence_table(cfg, [250, 500, 1000, 2000])
    assert rows[0]["reference"] == "exact"
    e = [r["error_lambda_1"] for r in rows]
    assert all(3.8 < a / b < 4.2 for a, b in zip(e, e[1:]))
    assert all(r["order_lambda_1"] >= 1.9 for r in rows[1:])


def test_convergence_constant_fields_exact(tmp_path):
    cfg = parse_config(BENCH.replace("q = 1", "q = 0").replace("thickness = 1", "thickness = 1\ndoping = 3\neps = 2"))
    rows = runs.convergence_table(cfg, [10, 20, 40])
    assert all(r["phi_error_sup"] <= 1e-13 for r in rows)


def test_convergence_two_layer_density_order(tmp_path):
    cfg = parse_config(TWO_LAYER)
    rows = runs.convergence_table(cfg, [100, 200, 400, 800])
    assert rows[0]["reference"] == "richardson"
    orders = [r["density_order"] for r in rows[1:-1]]
    assert all(p >= 1.0 for p in orders)


def test_convergence_cli_writes_table(tmp_path):
    cfg = write(tmp_path, BENCH)
    assert cli.main(["convergence", "--config", str(cfg), "--out", str(tmp_path / "c"), "--ns", "50,100,200"]) == 0
    rows = read_sweep(tmp_path / "c" / "convergence.csv")
    assert [int(r["n"]) for r in rows] == [50, 100, 200]
