#!/usr/bin/env python3
"""Write one network drop (positions and gains) as JSON, for plotting."""

import argparse
import sys

from oossim.scenario import (
    GEOMETRY_STREAM,
    SystemConfig,
    block_rng,
    build_geometry,
    geometry_to_json,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--block", type=int, default=0)
    parser.add_argument("--out", help="output path (stdout if omitted)")
    args = parser.parse_args()

    cfg = SystemConfig(seed=args.seed)
    geo = build_geometry(cfg, block_rng(cfg.seed, args.block, GEOMETRY_STREAM))
    text = geometry_to_json(geo)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
