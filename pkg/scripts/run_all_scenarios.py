"""Run every registry scenario and write CSV (and optionally JSON) files.

    python scripts/run_all_scenarios.py --out results --json --jobs 4
"""

import argparse
import time

from qirec import scenarios as sc
from qirec.cli import summary_lines


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--json", action="store_true", help="also write JSON")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--grid", type=int, default=None, help="override the number of time points")
    args = parser.parse_args()

    for sid in sc.REGISTRY_IDS:
        cfg = sc.get_scenario(sid)
        if args.grid:
            cfg = sc.apply_overrides(cfg, [f"time_grid.n_points={args.grid}"])
        start = time.perf_counter()
        result = sc.run_scenario(cfg, jobs=args.jobs)
        paths = [sc.export(result, "csv", args.out)]
        if args.json:
            paths.append(sc.export(result, "json", args.out))
        print("\n".join(summary_lines(result)))
        print(f"-> {', '.join(paths)}  ({time.perf_counter() - start:.1f} s)\n")


if __name__ == "__main__":
    main()
