#!/usr/bin/env python3
"""Full-scale state transfer: 1 us ring-up toward n ~ 1e6, 2.5 us transfer.

This is the slow reference target (tens of minutes to hours depending on
the machine); the CI-speed equivalent is scripts/run_scaled_transfer.py.
"""

import json
import sys
import time

from framesim import protocol


def main():
    p_state = sys.argv[1] if len(sys.argv) > 1 else "1"
    cfg = protocol.paper_scale_config(P=p_state)
    t0 = time.time()
    res = protocol.run_protocol(cfg)
    elapsed = time.time() - t0
    print(json.dumps({
        "P": p_state,
        "mech_fidelity": res.mech_fidelity,
        "n_cav_at_switch": res.n_cav_at_switch,
        "t_swap_s": res.t_swap,
        "runtime_s": elapsed,
    }, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
