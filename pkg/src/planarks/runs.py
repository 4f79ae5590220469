"""Run orchestration and result files: solve, sweep, verify, convergence study."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import analysis
from .config import DeviceConfig
from .eigensolver import lowest_eigenvalues
from .errors import ConfigError
from .grid import integrate, norm_l1, norm_l2
from .operators import assemble_schrodinger
from .scf import Device, ScfResult, solve_scf
from .statistics import FermiDirac, ZeroTemperature

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_INVALID_CONFIG = 3
EXIT_NUMERICAL = 4

SWEEP_LEVELS = 5
SWEEPABLE = {"beta", "kt", "statistics.beta", "statistics.kt", "n", "particles.n",
             "q", "particles.q", "xc.c", "c"}
SUITES = ("bounds", "trace", "monotonicity", "apriori", "uniqueness", "distribution_limit")


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _jsonable(x):
    """Non-finite floats become strings so the summary stays strict JSON."""
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n")


def write_profile(path: Path, device: Device, result: ScfResult) -> None:
    x = device.grid.nodes
    with open(path, "w", newline="") as fh:
        fh.write("x,u,phi,v_eff\n")
        for row in zip(x, result.u, result.phi, result.v_eff):
            fh.write(",".join(_num(v) for v in row) + "\n")


def read_profile(path: str | Path) -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {k: data[:, i] for i, k in enumerate(("x", "u", "phi", "v_eff"))}


def _statistics_block(cfg: DeviceConfig) -> dict:
    if math.isinf(cfg.beta):
        return {"kind": "zero", "beta": None, "scale": cfg.scale}
    return {"kind": "fermi", "beta": cfg.beta, "scale": cfg.scale}


def summarize(cfg: DeviceConfig, device: Device, result: ScfResult) -> dict:
    grid = device.grid
    scf = cfg.scf_config()
    integral = integrate(grid, result.u)
    apriori = analysis.check_apriori(result, device, scf)
    checks = {
        "conservation": {
            "integral_u": integral,
            "error": abs(integral - cfg.n_particles),
            "passed": abs(integral - cfg.n_particles) <= 1e-8 * max(1.0, cfg.n_particles),
        },
        "nonnegative": {"min_u": float(result.u.min()), "passed": bool(result.u.min() >= 0)},
        "fixed_point": {
            "residual": result.fixed_point_residual,
            "tol_l1": cfg.tol_l1,
            "passed": result.fixed_point_residual <= 2 * cfg.tol_l1,
        },
        "truncation": {
            "tail_bound": result.occupation.tail_bound,
            "tail_tol": cfg.tail_tol,
            "passed": result.occupation.tail_bound <= cfg.tail_tol,
        },
        "apriori": {
            "lhs": apriori.lhs,
            "rhs": apriori.rhs,
            "margin": apriori.margin,
            "M": apriori.M,
            "gamma": apriori.gamma,
            "passed": apriori.passed,
        },
    }
    units = cfg.units
    return {
        "converged": result.converged,
        "iterations": result.iterations,
        "mu": result.mu,
        "eigenvalues": result.spectrum.eigenvalues,
        "occupations": result.occupation.occupations,
        "residual_history": result.residual_history,
        "fixed_point_residual": result.fixed_point_residual,
        "damping_final": result.damping,
        "n_particles": cfg.n_particles,
        "integral_u": integral,
        "phi_l2": norm_l2(grid, result.phi),
        "u_max": float(result.u.max()),
        "n_elements": grid.n_elements,
        "statistics": _statistics_block(cfg),
        "xc": None if cfg.xc is None else {"C": cfg.xc.C, "alpha": cfg.xc.alpha},
        "units": {
            "system": units.system,
            "length_nm": units.length_nm,
            "energy_unit_ev": units.energy_ev,
            "sheet_density_unit_m2": units.sheet_density,
        },
        "checks": checks,
    }


def solve_config(cfg: DeviceConfig) -> tuple[Device, ScfResult]:
    device = cfg.device()
    return device, solve_scf(device, cfg.distribution(), cfg.xc, cfg.scf_config())


def write_solution(cfg: DeviceConfig, out: Path, device: Device, result: ScfResult) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    write_profile(out / cfg.profile, device, result)
    summary = summarize(cfg, device, result)
    dump_json(summary, out / cfg.summary)
    return summary


def run_solve(cfg: DeviceConfig, out: str | Path) -> int:
    """Solve once and write the profile table and summary; returns an exit code."""
    device, result = solve_config(cfg)
    write_solution(cfg, Path(out), device, result)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


# -- sweeps ------------------------------------------------------------------

def _sweep_point(cfg: DeviceConfig, param: str, value: float, out: Path) -> dict:
    try:
        cfg = cfg.with_value(param, value)
        device, result = solve_config(cfg)
        write_solution(cfg, out, device, result)
    except Exception as exc:  # recorded per point, the sweep goes on
        return {"error": f"{type(exc).__name__}: {exc}"}
    lam = lowest_eigenvalues(
        assemble_schrodinger(device.grid, device.mass, result.v_eff),
        min(SWEEP_LEVELS, device.grid.n_nodes - 2),
    )
    return {
        "mu": result.mu,
        "lambdas": lam.tolist(),
        "u_max": float(result.u.max()),
        "iterations": result.iterations,
        "converged": result.converged,
        "u": result.u,
        "phi": result.phi,
        "error": "",
    }


def run_sweep(
    cfg: DeviceConfig,
    param: str,
    values: Sequence[float],
    out: str | Path,
    workers: int = 1,
) -> int:
    """Independent solves over ``values`` of one parameter plus an aggregate table.

    Temperature sweeps also report the L1 density and sup potential distances
    to the zero-temperature solution.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if param.lower() not in SWEEPABLE:
        raise ConfigError(f"cannot sweep {param!r}; choose from beta, kT, N, q, xc.C")
    n = len(values)
    dirs = [out / f"point_{i:03d}" for i in range(n)]
    args = ([cfg] * n, [param] * n, list(values), dirs)
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, *args))
    else:
        rows = list(map(_sweep_point, *args))

    thermal = param.lower() in ("beta", "kt", "statistics.beta", "statistics.kt")
    reference = None
    if thermal:
        try:
            reference = solve_config(replace(cfg, beta=math.inf))
        except Exception as exc:
            for r in rows:
                r["error"] = r.get("error") or f"reference failed: {exc}"

    header = ["index", "param", "value", "converged", "iterations", "mu"]
    header += [f"lambda_{k}" for k in range(1, SWEEP_LEVELS + 1)] + ["u_max"]
    if thermal:
        header += ["dist_u_l1", "dist_phi_sup"]
    header.append("error")
    status = EXIT_OK
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, (v, r) in enumerate(zip(values, rows)):
            if "mu" not in r:
                status = EXIT_NUMERICAL
                blank = [""] * (len(header) - 4)
                writer.writerow([i, param, _num(v)] + blank + [r["error"]])
                continue
            if not r["converged"]:
                status = EXIT_NOT_CONVERGED if status == EXIT_OK else status
            lam = r["lambdas"] + [math.nan] * (SWEEP_LEVELS - len(r["lambdas"]))
            row = [i, param, _num(v), r["converged"], r["iterations"], _num(r["mu"])]
            row += [_num(x) for x in lam] + [_num(r["u_max"])]
            if thermal:
                if reference is not None:
                    dev, ref = reference
                    row += [_num(norm_l1(dev.grid, r["u"] - ref.u)),
                            _num(np.max(np.abs(r["phi"] - ref.phi)))]
                else:
                    row += ["", ""]
            row.append(r["error"])
            writer.writerow(row)
    return status


# -- verification ------------------------------------------------------------

def _random_potential(device: Device, rng: np.random.Generator, l1: float) -> np.ndarray:
    """Piecewise-constant nodal potential with the given L1 norm."""
    pieces = rng.integers(1, 9)
    cuts = np.sort(rng.uniform(0, 1, pieces - 1))
    levels = rng.normal(size=pieces)
    v = levels[np.searchsorted(cuts, device.grid.nodes)]
    norm = norm_l1(device.grid, v)
    return v * (l1 / norm) if norm > 0 else v


def _alternate(f):
    return FermiDirac(1.0, f.scale) if isinstance(f, ZeroTemperature) else ZeroTemperature(f.scale)


def _verify_bounds(cfg, device, rng, trials):
    count = min(20, device.grid.n_nodes - 2)
    worst, statuses, rhos = math.inf, [], []
    for _ in range(trials):
        rep = analysis.check_eigenvalue_bounds(
            device, _random_potential(device, rng, rng.uniform(0, 5)), count
        )
        worst = min(worst, rep.worst_margin)
        statuses.append(rep.status)
        rhos.append(rep.rho_v)
    status = "fail" if "fail" in statuses else "inconclusive" if "inconclusive" in statuses else "pass"
    return {
        "status": status,
        "trials": trials,
        "levels": count,
        "worst_margin": worst,
        "m_bar": analysis.m_bar(device.mass),
        "rho_v_min": min(rhos),
        "rho_v_max": max(rhos),
    }


def _verify_trace(cfg, rng, trials):
    f0 = cfg.distribution()
    worst = 0.0
    for t in range(trials):
        dim = int(rng.integers(5, 51))
        d = rng.uniform(0, 4, dim)
        e = rng.normal(size=dim - 1)
        H = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        U, V = rng.normal(scale=2, size=dim), rng.normal(scale=2, size=dim)
        for f in (f0, _alternate(f0)):
            lhs, _, gap = analysis.check_trace_identity(H, U, V, f)
            worst = max(worst, gap / (1 + abs(lhs)))
    return {"status": "pass" if worst <= 1e-10 else "fail", "trials": trials,
            "worst_relative_gap": worst, "margin": 1e-10 - worst}


def _verify_monotonicity(cfg, device, rng, trials):
    scf = cfg.scf_config()
    worst = -math.inf
    for f in (cfg.distribution(), _alternate(cfg.distribution())):
        for _ in range(trials):
            U = _random_potential(device, rng, rng.uniform(0, 20))
            V = _random_potential(device, rng, rng.uniform(0, 20))
            val = analysis.check_monotonicity(device, U, V, f, scf.n_particles, scf.tail_tol)
            worst = max(worst, val / (1 + norm_l2(device.grid, U - V) ** 2))
    margin = 1e-8 - worst
    return {"status": analysis.classify(margin, 0.0), "trials": trials,
            "worst_scaled_integral": worst, "margin": margin}


def _verify_apriori(cfg, device):
    scf = cfg.scf_config()
    out = {}
    for f in (cfg.distribution(), _alternate(cfg.distribution())):
        result = solve_scf(device, f, cfg.xc, scf)
        rep = analysis.check_apriori(result, device, scf)
        key = "zero" if isinstance(f, ZeroTemperature) else f"beta={f.beta:g}"
        out[key] = {"lhs": rep.lhs, "rhs": rep.rhs, "margin": rep.margin,
                    "converged": result.converged}
    rhs, M, dual = analysis.apriori_rhs(device, scf)
    ok = all(v["margin"] >= 0 for v in out.values())
    same = len({v["rhs"] for v in out.values()}) == 1
    return {"status": "pass" if ok and same else "fail", "runs": out, "rhs": rhs,
            "M": M, "gamma": analysis.GAMMA, "doping_dual_norm": dual,
            "rhs_distribution_independent": same,
            "margin": min(v["margin"] for v in out.values())}


def _verify_uniqueness(cfg, device, seed):
    scf = cfg.scf_config()
    rep = analysis.check_uniqueness(device, cfg.distribution(), scf, starts=3, seed=seed)
    limit = 10 * scf.tol_l1
    ok = rep.all_converged and rep.max_distance <= limit
    return {"status": "pass" if ok else "fail", "max_distance": rep.max_distance,
            "limit": limit, "margin": limit - rep.max_distance,
            "all_converged": rep.all_converged, "xc_ignored": cfg.xc is not None}


def _verify_distribution_limit(cfg):
    betas = [2.0 ** k for k in range(21)]
    d = analysis.check_distribution_limit(betas, -1.0, cfg.scale)
    strict = all(b < a for a, b in zip(d, d[1:]))
    ok = strict and d[-1] <= 1e-3 * cfg.scale
    return {"status": "pass" if ok else "fail", "betas": betas, "distances": d,
            "strictly_decreasing": strict, "margin": 1e-3 * cfg.scale - d[-1]}


def run_verify(
    cfg: DeviceConfig,
    suites: Iterable[str] = SUITES,
    seed: int = 0,
    trials: int = 100,
) -> dict:
    """Run the selected checks; the report carries status and margin per check."""
    suites = list(suites)
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ConfigError(f"unknown check {sorted(unknown)[0]!r}; valid: {', '.join(SUITES)}")
    rng = np.random.default_rng(seed)
    needs_device = set(suites) - {"trace", "distribution_limit"}
    device = cfg.device() if needs_device else None
    checks = {}
    for name in suites:
        if name == "bounds":
            checks[name] = _verify_bounds(cfg, device, rng, trials)
        elif name == "trace":
            checks[name] = _verify_trace(cfg, rng, trials)
        elif name == "monotonicity":
            checks[name] = _verify_monotonicity(cfg, device, rng, trials)
        elif name == "apriori":
            checks[name] = _verify_apriori(cfg, device)
        elif name == "uniqueness":
            checks[name] = _verify_uniqueness(cfg, device, seed)
        else:
            checks[name] = _verify_distribution_limit(cfg)
    constants = {"gamma": analysis.GAMMA}
    if device is not None:
        constants["M"] = 0.5 * float(np.min(device.eps))
        constants["m_bar"] = analysis.m_bar(device.mass)
    if "bounds" in checks:
        constants["rho_v_min"] = checks["bounds"]["rho_v_min"]
    return {
        "seed": seed,
        "constants": constants,
        "checks": checks,
        "all_passed": all(c["status"] == "pass" for c in checks.values()),
    }


# -- convergence study -------------------------------------------------------

def _exact_levels(cfg: DeviceConfig, count: int):
    """Closed-form eigenvalues and potential when the device admits them."""
    if len(cfg.stack) != 1 or (cfg.q != 0 and cfg.n_particles != 0):
        return None
    layer = cfg.stack.layers[0]
    if cfg.xc is not None and cfg.xc.C != 0:
        return None
    l = np.arange(1, count + 1)
    return (l * math.pi) ** 2 / layer.mass + layer.band_offset


def _exact_phi(cfg: DeviceConfig, x: np.ndarray):
    """Electrostatic potential when it does not depend on the density (q = 0)."""
    if len(cfg.stack) != 1 or cfg.q != 0:
        return None
    layer = cfg.stack.layers[0]
    return cfg.phi0 + (cfg.phi1 - cfg.phi0) * x + layer.doping * x * (1 - x) / (2 * layer.eps)


def _order(e_coarse: float, e_fine: float, ratio: float) -> float:
    if e_coarse > 0 and e_fine > 0:
        return math.log(e_coarse / e_fine) / math.log(ratio)
    return math.nan


def convergence_table(cfg: DeviceConfig, ns: Sequence[int], levels: int = 3) -> list[dict]:
    """Eigenvalue and density errors per resolution.

    Eigenvalue errors are taken against the closed form when one exists,
    otherwise against a Richardson extrapolation (order 2) of the two finest
    levels. Observed orders from successive differences are always reported.
    """
    ns = [int(n) for n in ns]
    if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("convergence study needs an ascending list of at least two n")
    solved = []
    for n in ns:
        c = replace(cfg, n=n)
        device, result = solve_config(c)
        lam = lowest_eigenvalues(assemble_schrodinger(device.grid, device.mass, result.v_eff), levels)
        solved.append((device, result, lam))
    exact = _exact_levels(cfg, levels)
    finest = solved[-1][2]
    if exact is None:
        coarse, r = solved[-2][2], ns[-1] / ns[-2]
        reference, ref_kind = finest + (finest - coarse) / (r * r - 1), "richardson"
    else:
        reference, ref_kind = exact, "exact"
    rows = []
    for i, (n, (device, result, lam)) in enumerate(zip(ns, solved)):
        row = {"n": n, "reference": ref_kind, "converged": result.converged}
        err = np.abs(lam - reference)
        for k in range(levels):
            row[f"lambda_{k + 1}"] = float(lam[k])
            row[f"error_lambda_{k + 1}"] = float(err[k])
        if i > 0:
            prev_err = np.abs(solved[i - 1][2] - reference)
            row["order_lambda_1"] = _order(prev_err[0], err[0], n / ns[i - 1])
        else:
            row["order_lambda_1"] = math.nan
        # successive-difference order, independent of the reference
        if 0 < i < len(ns) - 1:
            d1 = abs(solved[i - 1][2][0] - lam[0])
            d2 = abs(lam[0] - solved[i + 1][2][0])
            row["diff_order_lambda_1"] = _order(d1, d2, n / ns[i - 1])
        else:
            row["diff_order_lambda_1"] = math.nan
        if i < len(ns) - 1:
            fine_dev, fine_res, _ = solved[i + 1]
            coarse_on_fine = np.interp(fine_dev.grid.nodes, device.grid.nodes, result.u)
            row["density_diff_l1"] = norm_l1(fine_dev.grid, coarse_on_fine - fine_res.u)
        else:
            row["density_diff_l1"] = math.nan
        phi = _exact_phi(cfg, device.grid.nodes)
        row["phi_error_sup"] = math.nan if phi is None else float(np.max(np.abs(result.phi - phi)))
        rows.append(row)
    for i in range(1, len(rows) - 1):
        rows[i]["density_order"] = _order(
            rows[i - 1]["density_diff_l1"], rows[i]["density_diff_l1"], ns[i] / ns[i - 1]
        )
    for i in (0, len(rows) - 1):
        rows[i]["density_order"] = math.nan
    return rows


def run_convergence_study(
    cfg: DeviceConfig, ns: Sequence[int], out: str | Path, levels: int = 3
) -> int:
    rows = convergence_table(cfg, ns, levels)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    keys = list(rows[0])
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    with open(out / "convergence.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(keys)
        for r in rows:
            writer.writerow([_num(r[k]) if isinstance(r.get(k), float) else r.get(k, "") for k in keys])
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NOT_CONVERGED
