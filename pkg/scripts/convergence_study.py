"""Grid refinement study for the lowest eigenvalues and the density.

    python scripts/convergence_study.py --config configs/benchmark_well.ini --ns 250,500,1000,2000
"""
import argparse

from planarks.config import load_config
from planarks.runs import convergence_table


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", required=True)
    ap.add_argument("--ns", default="250,500,1000,2000")
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args()

    cfg = load_config(args.config)
    rows = convergence_table(cfg, [int(n) for n in args.ns.split(",")], args.levels)
    print(f"reference: {rows[0]['reference']}")
    print(f"{'n':>6} {'lambda_1':>20} {'error':>11} {'order':>7} {'diff order':>10} {'|du|_1':>11} {'order':>7}")
    for r in rows:
        print(f"{r['n']:>6} {r['lambda_1']:>20.14f} {r['error_lambda_1']:>11.3e} {r['order_lambda_1']:>7.3f} "
              f"{r['diff_order_lambda_1']:>10.3f} {r['density_diff_l1']:>11.3e} {r['density_order']:>7.3f}")


if __name__ == "__main__":
    main()
