#!/usr/bin/env python3
"""Scaled-down state transfer (g_OM/2pi = 100 kHz, n_target = 1e4).

Writes trajectory.csv, observables.csv, wigner_*.csv and summary.json to
the output directory; runs in a few minutes.
"""

import sys

from framesim import cli


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "out/scaled_transfer"
    return cli.main(
        [
            "--scenario", "transfer",
            "--config", "configs/scaled_transfer.json",
            "--out", out,
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
