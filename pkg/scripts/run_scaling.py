#!/usr/bin/env python3
"""Measure single-epoch pretraining wall time as the joint graph grows,
both in total node count and in number of source datasets.

Example:
    python3 scripts/run_scaling.py --sizes 500,1000,2000 --datasets 1,2,4
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gcope.evalkit import runtime_scaling_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sizes", default="500,1000,2000",
                    help="total node counts to probe")
    ap.add_argument("--datasets", default="1,2,4",
                    help="source dataset counts to probe at the largest size")
    ap.add_argument("--batch-size", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sizes = [int(x) for x in args.sizes.split(",")]
    print("total nodes vs wall time (2 sources):")
    for n, t in runtime_scaling_probe(sizes, m=2, batch_size=args.batch_size,
                                      seed=args.seed):
        print(f"  N={n:>6}  {t:.3f}s")

    n_fixed = sizes[-1]
    print(f"source count vs wall time (N={n_fixed}):")
    for m in (int(x) for x in args.datasets.split(",")):
        (_, t), = runtime_scaling_probe([n_fixed], m=m,
                                        batch_size=args.batch_size,
                                        seed=args.seed)
        print(f"  M={m:>2}  {t:.3f}s")


if __name__ == "__main__":
    main()
