"""Annealing-time campaign over sizes: T_n and solved counts per ladder step.

Equivalent to running ``qwalk-gi qmc --n N`` for each size, collected into
one table. Defaults reproduce the desk-scale campaign (20 instances per
size, instance seeds 1000.., single-site moves).
"""

import argparse
import json

from qwalk_gi.graphs import random_instance
from qwalk_gi.qmc import QmcParams, annealing_time_campaign


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[6, 7, 8])
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--ladder", type=int, nargs="+", default=[1000, 2000, 4000, 8000])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--no-pt-restarts", type=int, default=0)
    ap.add_argument("--out", default="campaign")
    args = ap.parse_args()

    summary = {}
    for n in args.sizes:
        insts = [random_instance(n, 1000 + s) for s in range(args.count)]
        res = annealing_time_campaign(
            insts, QmcParams(seed=n), args.ladder, jobs=args.jobs, stop_at_first=False, no_pt_restarts=args.no_pt_restarts
        )
        res.write_csv(f"{args.out}_n{n}.csv")
        summary[n] = res.summary()
        print(n, json.dumps(res.summary()), flush=True)
    with open(f"{args.out}_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
