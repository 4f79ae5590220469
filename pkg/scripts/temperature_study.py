"""Temperature continuation toward the zero-temperature solution.

Solves along beta = 2^0 ... 2^K (warm-started) and writes the L1 density and
sup potential distances to the zero-temperature solution, plus the weighted
distance between the distribution functions.

    python scripts/temperature_study.py --config configs/benchmark_well.ini --out out/temp
"""
import argparse
import csv
import math
from pathlib import Path

from planarks.analysis import check_distribution_limit
from planarks.config import load_config
from planarks.scf import temperature_continuation


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default="out/temperature")
    ap.add_argument("--kmax", type=int, default=20)
    args = ap.parse_args()

    cfg = load_config(args.config)
    betas = [2.0 ** k for k in range(args.kmax + 1)]
    cont = temperature_continuation(cfg.device(), betas + [math.inf], cfg.xc, cfg.scf_config(), cfg.scale)
    weighted = check_distribution_limit(betas, -1.0, cfg.scale) + [0.0]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "temperature.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["beta", "converged", "iterations", "mu", "dist_u_l1", "dist_phi_sup", "dist_f_weighted"])
        for b, r, du, dp, df in zip(cont.betas, cont.results, cont.distance_u, cont.distance_phi, weighted):
            w.writerow([b, r.converged, r.iterations, f"{r.mu:.17g}", f"{du:.17g}", f"{dp:.17g}", f"{df:.17g}"])
            print(f"beta={b:<10g} |u-u0|_1={du:.3e}  |phi-phi0|_inf={dp:.3e}  d_f={df:.3e}")


if __name__ == "__main__":
    main()
