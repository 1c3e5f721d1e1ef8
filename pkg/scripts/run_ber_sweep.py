#!/usr/bin/env python3
"""Reproduce the reference uplink BER comparison.

Runs all five methods over the -10..0 dB uplink power grid with the
default network (4 APs x 4 antennas, 5 UEs, 2 interferers at -3 dB) and
writes results.csv / results.json. Pass --overloaded for the variant with
more interferers than antennas per AP.
"""

import argparse
import sys

from oossim.cli import main as cli_main
from oossim.experiments import overloaded_interferers_spec


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--trials", type=int, default=150)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--overloaded", action="store_true",
                        help="use the K_I > N interferer-overload variant")
    args = parser.parse_args()

    cli_args = [
        "run",
        "--out", args.out,
        "--trials", str(args.trials),
        "--seed", str(args.seed),
    ]
    if args.overloaded:
        spec = overloaded_interferers_spec()
        cli_args += [
            "--override", "cfg.K_I=5",
            "--override", f"methods={list(spec.methods)!r}".replace("'", '"'),
        ]
    return cli_main(cli_args)


if __name__ == "__main__":
    sys.exit(main())
