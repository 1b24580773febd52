"""Compare N_QI, BLP and RHP across the registry families and grid resolutions.

    python scripts/compare_witnesses.py --grids 100 200 400
"""

import argparse

import numpy as np

from qirec import scenarios as sc
from qirec.channels import is_cp_divisible
from qirec.witness import blp, n_qi, rhp


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--grids", type=int, nargs="+", default=[100, 200, 400])
    args = parser.parse_args()

    print(f"{'scenario':<24} {'points':>6} {'CP-div':>6} {'N_QI':>10} {'BLP':>10} {'RHP':>14}")
    for sid in sc.REGISTRY_IDS:
        cfg = sc.get_scenario(sid)
        family = sc.build_family(cfg.channel)
        for n in args.grids:
            grid = np.linspace(0, cfg.time_grid.t_max, n)
            divisible, _ = is_cp_divisible(family, grid)
            print(f"{sid:<24} {n:>6} {'yes' if divisible else 'no':>6} {n_qi(family, grid).value:10.6f} "
                  f"{blp(family, grid).value:10.6f} {rhp(family, grid).value:14.6f}")


if __name__ == "__main__":
    main()
