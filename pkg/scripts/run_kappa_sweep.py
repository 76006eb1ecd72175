#!/usr/bin/env python3
"""Mechanical-fidelity sweep over the cavity decay rate (scaled point).

Writes sweep.csv; parallelism capped by FRAMESIM_THREADS.
"""

import os
import sys

from framesim import protocol


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "out/sweep"
    os.makedirs(out_dir, exist_ok=True)
    base = protocol.scaled_config(P="1", dt_safety=0.8)
    kappas = [1e3, 5.6e3, 3.16e4, 1e5, 3.16e5, 1e6]
    points = [protocol.SweepPoint(k, 10e3) for k in kappas]
    rows = protocol.sweep(base, points)
    protocol.write_sweep_csv(os.path.join(out_dir, "sweep.csv"), rows)
    for r in rows:
        print(f"kappa {r['kappa_hz']:.3g} Hz -> F = {r['mech_fidelity']:.4f} {r['error']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
