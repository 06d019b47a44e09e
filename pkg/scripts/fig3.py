#!/usr/bin/env python3
"""Prior-support study: support widths 120 and 170 degrees per target count.

The sweep runs once for each K in {2, 5, 8} (one sweep variable per
run), writing fig3-k{K}.csv next to each other.
"""

import argparse
import sys
from dataclasses import replace

from doabounds.config import build_config
from doabounds.experiment import run_experiment, write_csv

TARGET_COUNTS = (2, 5, 8)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-prefix", default="fig3",
                    help="output files are <prefix>-k{K}.csv")
    ap.add_argument("--seed", type=int, default=None,
                    help="master seed override")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    for k in TARGET_COUNTS:
        cfg = build_config({"scenario": {"num_targets": k}}, "fig3")
        cfg = replace(cfg, threads=args.threads,
                      output_path=f"{args.out_prefix}-k{k}.csv")
        if args.seed is not None:
            cfg = replace(cfg, simulation=replace(cfg.simulation,
                                                  seed=args.seed))
        table = run_experiment(cfg)
        write_csv(table, cfg.output_path)
        print(f"wrote {cfg.output_path} ({len(table.rows)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
