"""Run the numerical checks (bounds, trace identity, monotonicity, a priori
bound, uniqueness, distribution limit) and print a short report.

    python scripts/verify_theorems.py --config configs/benchmark_well.ini --seed 0
"""
import argparse
import json

from planarks.config import load_config
from planarks.runs import SUITES, run_verify, _jsonable


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", required=True)
    ap.add_argument("--checks", default=",".join(SUITES))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--json", action="store_true", help="print the full report")
    args = ap.parse_args()

    report = run_verify(load_config(args.config), args.checks.split(","), args.seed, args.trials)
    if args.json:
        print(json.dumps(_jsonable(report), indent=2, sort_keys=True))
        return
    print("constants:", ", ".join(f"{k}={v:.6g}" for k, v in report["constants"].items()))
    for name, res in report["checks"].items():
        margin = res.get("margin", res.get("worst_margin"))
        print(f"{name:<20} {res['status']:<13} margin {margin:.3e}")


if __name__ == "__main__":
    main()
